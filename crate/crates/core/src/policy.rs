//! Policy abstraction and the simple policy families (uniform, tabular,
//! mixtures, fixed-stage views).

use std::sync::Arc;

use rand::{Rng, RngCore};

/// A (possibly non-stationary) randomized policy. `stage` is the 0-based step
/// index inside the episode; stationary policies ignore it.
pub trait Policy<S>: Send + Sync {
    fn num_actions(&self) -> usize;

    fn action_probs(&self, state: &S, stage: usize) -> Vec<f64>;

    fn act(&self, state: &S, stage: usize, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.action_probs(state, stage), rng)
    }
}

pub type SharedPolicy<S> = Arc<dyn Policy<S>>;

/// Inverse-CDF draw from `probs`, consuming exactly one uniform.
pub fn sample_categorical(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the final cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

#[derive(Debug, Clone, Copy)]
pub struct UniformPolicy {
    n_actions: usize,
}

impl UniformPolicy {
    pub fn new(n_actions: usize) -> Self {
        Self { n_actions }
    }
}

impl<S> Policy<S> for UniformPolicy {
    fn num_actions(&self) -> usize {
        self.n_actions
    }

    fn action_probs(&self, _state: &S, _stage: usize) -> Vec<f64> {
        vec![1.0 / self.n_actions as f64; self.n_actions]
    }
}

/// The same action distribution at every state and stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedDistribution {
    probs: Vec<f64>,
}

impl FixedDistribution {
    pub fn new(probs: Vec<f64>) -> Self {
        assert!(!probs.is_empty());
        Self { probs }
    }
}

impl<S> Policy<S> for FixedDistribution {
    fn num_actions(&self) -> usize {
        self.probs.len()
    }

    fn action_probs(&self, _state: &S, _stage: usize) -> Vec<f64> {
        self.probs.clone()
    }
}

/// `probs[stage][state][action]` over a finite state space. A single stage
/// table is stationary; later stages reuse the last table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    tables: Vec<Vec<Vec<f64>>>,
}

impl TabularPolicy {
    pub fn stationary(table: Vec<Vec<f64>>) -> Self {
        Self { tables: vec![table] }
    }

    pub fn per_stage(tables: Vec<Vec<Vec<f64>>>) -> Self {
        assert!(!tables.is_empty(), "at least one stage table");
        Self { tables }
    }

    /// Deterministic policy from one action per state and stage.
    pub fn deterministic(actions: &[Vec<usize>], n_actions: usize) -> Self {
        let tables = actions
            .iter()
            .map(|stage| {
                stage
                    .iter()
                    .map(|&a| {
                        let mut row = vec![0.0; n_actions];
                        row[a] = 1.0;
                        row
                    })
                    .collect()
            })
            .collect();
        Self { tables }
    }

    pub fn stage_table(&self, stage: usize) -> &[Vec<f64>] {
        &self.tables[stage.min(self.tables.len() - 1)]
    }

    pub fn num_stages(&self) -> usize {
        self.tables.len()
    }
}

impl Policy<usize> for TabularPolicy {
    fn num_actions(&self) -> usize {
        self.tables[0][0].len()
    }

    fn action_probs(&self, state: &usize, stage: usize) -> Vec<f64> {
        self.stage_table(stage)[*state].clone()
    }
}

/// Plays `base` with probability `1 - mix` and a uniform action otherwise.
pub struct MixturePolicy<S> {
    base: SharedPolicy<S>,
    mix: f64,
}

impl<S> MixturePolicy<S> {
    pub fn new(base: SharedPolicy<S>, mix: f64) -> Self {
        Self { base, mix }
    }

    pub fn mix(&self) -> f64 {
        self.mix
    }
}

impl<S> Policy<S> for MixturePolicy<S> {
    fn num_actions(&self) -> usize {
        self.base.num_actions()
    }

    fn action_probs(&self, state: &S, stage: usize) -> Vec<f64> {
        let n = self.num_actions() as f64;
        self.base
            .action_probs(state, stage)
            .into_iter()
            .map(|p| (1.0 - self.mix) * p + self.mix / n)
            .collect()
    }
}

/// Evaluates `inner` at a fixed stage regardless of the step index, turning
/// one stage of a non-stationary policy into a stationary one.
pub struct FixedStage<S> {
    inner: SharedPolicy<S>,
    stage: usize,
}

impl<S> FixedStage<S> {
    pub fn new(inner: SharedPolicy<S>, stage: usize) -> Self {
        Self { inner, stage }
    }
}

impl<S> Policy<S> for FixedStage<S> {
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    fn action_probs(&self, state: &S, _stage: usize) -> Vec<f64> {
        self.inner.action_probs(state, self.stage)
    }
}
