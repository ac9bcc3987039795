//! Environments and the episode / occupancy sampling loops.
//!
//! An [`Environment`] is an immutable description of dynamics, true cost and
//! feature map. Every stochastic call takes the caller's random stream, so
//! rollouts are reproducible and can run on independent sub-streams.

mod bandit;
mod grid;
mod tabular;

use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

pub use bandit::{alternating_weights, LinearBandit};
pub use grid::{GridState, GridWorld, GRID_DIM, GRID_TRUE_WEIGHTS};
pub use tabular::{PolicyTable, TabularFeatures, TabularMdp};

use crate::linalg::{FeatVec, WeightVec};
use crate::policy::Policy;

/// Deterministic map `(state, action) → ℝ^d`.
pub trait FeatureMap<S>: Send + Sync {
    fn dim(&self) -> usize;

    fn num_actions(&self) -> usize;

    fn features(&self, state: &S, action: usize) -> FeatVec;

    /// Features of every action at `state`.
    fn all_actions(&self, state: &S) -> Vec<FeatVec> {
        (0..self.num_actions()).map(|a| self.features(state, a)).collect()
    }
}

pub type SharedFeatures<S> = Arc<dyn FeatureMap<S>>;

/// Affine map of raw costs into `[-1, 1]`: `(c - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostNormalizer {
    pub offset: f64,
    pub scale: f64,
}

impl CostNormalizer {
    pub const IDENTITY: CostNormalizer = CostNormalizer {
        offset: 0.0,
        scale: 1.0,
    };

    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.offset) / self.scale
    }
}

pub trait Environment: Send + Sync {
    type State: Clone + Debug + PartialEq + Send + Sync + 'static;

    fn feature_map(&self) -> SharedFeatures<Self::State>;

    fn initial_state(&self, rng: &mut dyn RngCore) -> Self::State;

    fn step(&self, state: &Self::State, action: usize, rng: &mut dyn RngCore) -> Self::State;

    /// Raw true cost.
    fn cost(&self, state: &Self::State, action: usize) -> f64;

    fn normalizer(&self) -> CostNormalizer {
        CostNormalizer::IDENTITY
    }

    /// Weights `w` with `φ(s,a)ᵀw` equal to the normalized true cost, when the
    /// cost is realizable in the features.
    fn true_cost_weights(&self) -> Option<WeightVec> {
        None
    }

    fn num_actions(&self) -> usize {
        self.feature_map().num_actions()
    }

    fn dim(&self) -> usize {
        self.feature_map().dim()
    }
}

/// One transition `(s_h, a_h, s_{h+1})` with the raw cost of `(s_h, a_h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step<S> {
    pub stage: usize,
    pub state: S,
    pub action: usize,
    pub next_state: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<S> {
    pub steps: Vec<Step<S>>,
}

impl<S: PartialEq> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Next state of every step equals the state of the following step.
    pub fn is_contiguous(&self) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[0].next_state == w[1].state && w[1].stage == w[0].stage + 1)
    }

    /// Undiscounted sum of the recorded raw costs.
    pub fn total_cost(&self) -> f64 {
        self.steps.iter().filter_map(|s| s.cost).sum()
    }
}

fn transition<E: Environment + ?Sized>(
    env: &E,
    policy: &dyn Policy<E::State>,
    state: &E::State,
    stage: usize,
    rng: &mut dyn RngCore,
) -> Step<E::State> {
    let action = policy.act(state, stage, rng);
    let next_state = env.step(state, action, rng);
    Step {
        stage,
        state: state.clone(),
        action,
        next_state,
        cost: Some(env.cost(state, action)),
    }
}

/// A fixed-length episode of `horizon` steps; the policy sees stage `0..horizon`.
pub fn sample_episode_finite<E: Environment + ?Sized>(
    env: &E,
    policy: &dyn Policy<E::State>,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Trajectory<E::State> {
    let mut state = env.initial_state(rng);
    let mut steps = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let step = transition(env, policy, &state, h, rng);
        state = step.next_state.clone();
        steps.push(step);
    }
    Trajectory { steps }
}

/// Episode terminated by a `Bernoulli(1-γ)` restart after each step, capped at
/// `max_len` steps.
pub fn sample_episode_discounted<E: Environment + ?Sized>(
    env: &E,
    policy: &dyn Policy<E::State>,
    gamma: f64,
    max_len: usize,
    rng: &mut dyn RngCore,
) -> Trajectory<E::State> {
    assert!((0.0..1.0).contains(&gamma), "discount must lie in [0, 1)");
    assert!(max_len >= 1);
    let mut state = env.initial_state(rng);
    let mut steps = Vec::new();
    loop {
        let h = steps.len();
        let step = transition(env, policy, &state, h, rng);
        state = step.next_state.clone();
        steps.push(step);
        let restart = rng.random::<f64>() < 1.0 - gamma;
        if restart || steps.len() >= max_len {
            break;
        }
    }
    Trajectory { steps }
}

/// One draw `(s, a, s')` whose `(s, a)` marginal is the discounted occupancy
/// measure of `policy` (up to the `max_len` truncation).
pub fn sample_occupancy<E: Environment + ?Sized>(
    env: &E,
    policy: &dyn Policy<E::State>,
    gamma: f64,
    max_len: usize,
    rng: &mut dyn RngCore,
) -> Step<E::State> {
    let mut traj = sample_episode_discounted(env, policy, gamma, max_len, rng);
    traj.steps.pop().expect("episodes have at least one step")
}

/// `⌈10 / (1 - γ)⌉`, the default cap on discounted episode length.
pub fn default_max_len(gamma: f64) -> usize {
    (10.0 / (1.0 - gamma)).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{TabularPolicy, UniformPolicy};
    use crate::seed::Seed;

    fn self_loop() -> TabularMdp {
        TabularMdp::one_hot(1, 1, vec![1.0], vec![1.0], vec![1.0]).unwrap()
    }

    #[test]
    fn finite_episode_length_and_contiguity() {
        let env = TabularMdp::random(4, 2, 3, &mut Seed(1).stream("env"));
        let pi = UniformPolicy::new(2);
        let mut rng = Seed(1).stream("roll");
        let t1 = sample_episode_finite(&env, &pi, 1, &mut rng);
        assert_eq!(t1.len(), 1);
        let t = sample_episode_finite(&env, &pi, 7, &mut rng);
        assert_eq!(t.len(), 7);
        assert!(t.is_contiguous());
    }

    #[test]
    fn finite_episode_is_reproducible() {
        let env = TabularMdp::random(4, 2, 3, &mut Seed(1).stream("env"));
        let pi = UniformPolicy::new(2);
        let a = sample_episode_finite(&env, &pi, 5, &mut Seed(9).stream("r"));
        let b = sample_episode_finite(&env, &pi, 5, &mut Seed(9).stream("r"));
        assert_eq!(a, b);
    }

    #[test]
    fn three_step_episode_matches_hand_simulation() {
        // deterministic ring: state s moves to (s + a + 1) mod 3
        let n = 3;
        let mut p = vec![0.0; n * 2 * n];
        for s in 0..n {
            for a in 0..2 {
                p[(s * 2 + a) * n + (s + a + 1) % n] = 1.0;
            }
        }
        let env = TabularMdp::one_hot(n, 2, p, vec![1.0, 0.0, 0.0], vec![0.0; n * 2]).unwrap();
        let pi = TabularPolicy::deterministic(&[vec![1, 0, 1], vec![0, 0, 0], vec![1, 1, 1]], 2);
        let t = sample_episode_finite(&env, &pi, 3, &mut Seed(0).stream("r"));
        // h=0: s=0, a=1 -> 2; h=1: s=2, a=0 -> 0; h=2: s=0, a=1 -> 2
        let visited: Vec<(usize, usize, usize)> =
            t.steps.iter().map(|s| (s.state, s.action, s.next_state)).collect();
        assert_eq!(visited, vec![(0, 1, 2), (2, 0, 0), (0, 1, 2)]);
    }

    #[test]
    fn discounted_length_edge_cases() {
        let env = self_loop();
        let pi = UniformPolicy::new(1);
        let mut rng = Seed(2).stream("r");
        for _ in 0..100 {
            assert_eq!(sample_episode_discounted(&env, &pi, 0.0, 50, &mut rng).len(), 1);
            assert_eq!(sample_episode_discounted(&env, &pi, 0.99, 1, &mut rng).len(), 1);
        }
    }

    #[test]
    fn discounted_mean_length_is_geometric() {
        let env = self_loop();
        let pi = UniformPolicy::new(1);
        let mut rng = Seed(5).stream("r");
        let n = 100_000;
        let total: usize = (0..n)
            .map(|_| sample_episode_discounted(&env, &pi, 0.9, 100_000, &mut rng).len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 10.0).abs() / 10.0 < 0.05, "mean length {mean}");
    }

    #[test]
    fn occupancy_draw_edge_cases() {
        let env = TabularMdp::random(3, 2, 2, &mut Seed(4).stream("env"));
        let pi = UniformPolicy::new(2);
        let mut a = Seed(8).stream("r");
        let mut b = Seed(8).stream("r");
        let step = sample_occupancy(&env, &pi, 0.0, 10, &mut a);
        let first = sample_episode_finite(&env, &pi, 1, &mut b);
        assert_eq!(step, first.steps[0]);

        let single = self_loop();
        let one = UniformPolicy::new(1);
        for _ in 0..50 {
            let s = sample_occupancy(&single, &one, 0.7, 100, &mut a);
            assert_eq!((s.state, s.action), (0, 0));
        }
    }
}
