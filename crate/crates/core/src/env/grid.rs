//! Continuous 2D gridworld on `[-1, 1]²`.
//!
//! The agent starts at `(-1, 1)` and should reach the low-cost corner
//! `(1, -1)` while avoiding the Gaussian bump at the origin. With probability
//! `σ` the action is ignored and the state is pushed towards the origin.

use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{CostNormalizer, Environment, FeatureMap, SharedFeatures};
use crate::linalg::{FeatVec, WeightVec};

pub const GRID_DIM: usize = 10;

/// Cost weights reproducing the closed-form cost exactly:
/// `(x-1)² + (y+1)² = x² + y² - 2x + 2y + 2`, with the constant carried by
/// the action one-hot block.
pub const GRID_TRUE_WEIGHTS: [f64; GRID_DIM] =
    [1.0, 1.0, -2.0, 2.0, 80.0, -100.0, 2.0, 2.0, 2.0, 2.0];

const ACTIONS: [[f64; 2]; 4] = [[0.01, 0.0], [0.0, 0.01], [-0.01, 0.0], [0.0, -0.01]];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub x: f64,
    pub y: f64,
}

impl GridState {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x: x.clamp(-1.0, 1.0),
            y: y.clamp(-1.0, 1.0),
        }
    }
}

fn bump(s: &GridState) -> f64 {
    (-8.0 * (s.x * s.x + s.y * s.y)).exp()
}

fn in_goal(s: &GridState) -> bool {
    (0.95..=1.0).contains(&s.x) && (-1.0..=-0.95).contains(&s.y)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GridFeatures;

impl FeatureMap<GridState> for GridFeatures {
    fn dim(&self) -> usize {
        GRID_DIM
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn features(&self, s: &GridState, action: usize) -> FeatVec {
        assert!(action < 4, "gridworld action {action} out of range");
        let mut phi = FeatVec::zeros(GRID_DIM);
        phi[0] = s.x * s.x;
        phi[1] = s.y * s.y;
        phi[2] = s.x;
        phi[3] = s.y;
        phi[4] = bump(s);
        phi[5] = if in_goal(s) { 1.0 } else { 0.0 };
        phi[6 + action] = 1.0;
        phi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    sigma: f64,
    action_scale: f64,
    start: GridState,
}

impl GridWorld {
    /// `sigma` is the probability of the adversarial drift; `action_scale`
    /// multiplies the nominal `a/10` displacement (1.0 reproduces it as written).
    pub fn new(sigma: f64, action_scale: f64) -> crate::Result<Self> {
        if !(0.0..=1.0).contains(&sigma) {
            return Err(crate::Error::invalid(format!("sigma must be a probability, got {sigma}")));
        }
        if !(action_scale > 0.0) {
            return Err(crate::Error::invalid("action scale must be positive"));
        }
        Ok(Self {
            sigma,
            action_scale,
            start: GridState::new(-1.0, 1.0),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn action_scale(&self) -> f64 {
        self.action_scale
    }

    /// Feature map as an action-index checked function.
    pub fn features_checked(s: &GridState, action: usize) -> crate::Result<FeatVec> {
        if action >= 4 {
            return Err(crate::Error::invalid(format!("gridworld action {action} out of range")));
        }
        Ok(GridFeatures.features(s, action))
    }

    /// Raw cost; independent of the action.
    pub fn raw_cost(s: &GridState) -> f64 {
        let goal = if in_goal(s) { 100.0 } else { 0.0 };
        (s.x - 1.0).powi(2) + (s.y + 1.0).powi(2) + 80.0 * bump(s) - goal
    }

    /// Transition given the branch outcome (`adversarial = true` with probability `σ`).
    pub fn transition(&self, s: &GridState, action: usize, adversarial: bool) -> GridState {
        if adversarial {
            let norm = (s.x * s.x + s.y * s.y).sqrt();
            if norm == 0.0 {
                return *s;
            }
            GridState::new(s.x - s.x / (10.0 * norm), s.y - s.y / (10.0 * norm))
        } else {
            let [dx, dy] = ACTIONS[action];
            let k = self.action_scale / 10.0;
            GridState::new(s.x + k * dx, s.y + k * dy)
        }
    }
}

impl Environment for GridWorld {
    type State = GridState;

    fn feature_map(&self) -> SharedFeatures<GridState> {
        Arc::new(GridFeatures)
    }

    fn initial_state(&self, _rng: &mut dyn RngCore) -> GridState {
        self.start
    }

    fn step(&self, s: &GridState, action: usize, rng: &mut dyn RngCore) -> GridState {
        let adversarial = rng.random::<f64>() < self.sigma;
        self.transition(s, action, adversarial)
    }

    fn cost(&self, s: &GridState, _action: usize) -> f64 {
        Self::raw_cost(s)
    }

    /// Raw costs lie in `[-100, 88]`; this maps that interval onto `[-1, 1]`.
    fn normalizer(&self) -> CostNormalizer {
        CostNormalizer {
            offset: -6.0,
            scale: 94.0,
        }
    }

    fn true_cost_weights(&self) -> Option<WeightVec> {
        let norm = self.normalizer();
        let mut w = WeightVec::from_column_slice(&GRID_TRUE_WEIGHTS);
        // the action block sums to one, so it absorbs the offset
        for a in 0..4 {
            w[6 + a] -= norm.offset;
        }
        Some(w / norm.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;
    use approx::assert_relative_eq;

    fn phi(x: f64, y: f64, a: usize) -> Vec<f64> {
        GridWorld::features_checked(&GridState::new(x, y), a)
            .unwrap()
            .iter()
            .copied()
            .collect()
    }

    #[test]
    fn feature_examples() {
        assert_eq!(phi(0.0, 0.0, 1), vec![0., 0., 0., 0., 1., 0., 0., 1., 0., 0.]);
        let e16 = (-16f64).exp();
        assert_eq!(phi(1.0, -1.0, 0), vec![1., 1., 1., -1., e16, 1., 1., 0., 0., 0.]);
        assert_eq!(phi(-1.0, 1.0, 3), vec![1., 1., -1., 1., e16, 0., 0., 0., 0., 1.]);
        assert!(GridWorld::features_checked(&GridState::new(0.0, 0.0), 4).is_err());
    }

    #[test]
    fn cost_examples() {
        assert_relative_eq!(GridWorld::raw_cost(&GridState::new(0.0, 0.0)), 82.0);
        assert_relative_eq!(
            GridWorld::raw_cost(&GridState::new(-1.0, 1.0)),
            8.0 + 80.0 * (-16f64).exp(),
            max_relative = 1e-15
        );
        assert!((GridWorld::raw_cost(&GridState::new(-1.0, 1.0)) - 8.000_009_003).abs() < 1e-9);
        assert!((GridWorld::raw_cost(&GridState::new(1.0, -1.0)) + 99.999_990_997).abs() < 1e-9);
    }

    #[test]
    fn linear_weights_reproduce_cost() {
        let env = GridWorld::new(0.1, 1.0).unwrap();
        let w = env.true_cost_weights().unwrap();
        let raw = WeightVec::from_column_slice(&GRID_TRUE_WEIGHTS);
        let mut rng = Seed(0).stream("g");
        for _ in 0..200 {
            let s = GridState::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            for a in 0..4 {
                let f = GridFeatures.features(&s, a);
                assert_relative_eq!(f.dot(&raw), GridWorld::raw_cost(&s), epsilon = 1e-9);
                let norm = env.normalizer().apply(GridWorld::raw_cost(&s));
                assert_relative_eq!(f.dot(&w), norm, epsilon = 1e-12);
                assert!((-1.0..=1.0).contains(&norm));
            }
        }
    }

    #[test]
    fn step_examples() {
        let env = GridWorld::new(0.0, 1.0).unwrap();
        let s = env.transition(&GridState::new(0.0, 0.0), 0, false);
        assert_relative_eq!(s.x, 0.001, max_relative = 1e-12);
        assert_eq!(s.y, 0.0);
        assert_eq!(env.transition(&GridState::new(1.0, 0.0), 0, false), GridState::new(1.0, 0.0));
        let adv = env.transition(&GridState::new(0.6, 0.8), 0, true);
        assert_relative_eq!(adv.x, 0.54, max_relative = 1e-12);
        assert_relative_eq!(adv.y, 0.72, max_relative = 1e-12);
        assert_eq!(env.transition(&GridState::new(0.0, 0.0), 2, true), GridState::new(0.0, 0.0));
    }

    #[test]
    fn steps_stay_in_the_arena() {
        let env = GridWorld::new(0.3, 50.0).unwrap();
        let mut rng = Seed(11).stream("g");
        let mut s = GridState::new(-1.0, 1.0);
        for _ in 0..5_000 {
            let a = rng.random_range(0..4);
            let next = env.step(&s, a, &mut rng);
            assert!(next.x.abs() <= 1.0 && next.y.abs() <= 1.0);
            s = next;
        }
        let calm = GridWorld::new(0.0, 1.0).unwrap();
        let inner = GridState::new(0.3, -0.2);
        for a in 0..4 {
            let n = calm.transition(&inner, a, false);
            let d = ((n.x - inner.x).powi(2) + (n.y - inner.y).powi(2)).sqrt();
            assert_relative_eq!(d, 0.001, max_relative = 1e-9);
        }
    }
}
