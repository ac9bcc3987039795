//! Finite MDPs with explicit transition tensors, used as exact oracles.
//!
//! With one-hot features a tabular MDP is exactly linear, so values,
//! occupancy measures and feature expectations of any policy can be computed
//! in closed form and compared against the sampled estimates of the learners.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};

use super::{Environment, FeatureMap, SharedFeatures};
use crate::error::{Error, Result};
use crate::linalg::{argmin, FeatVec, WeightVec};
use crate::policy::{sample_categorical, Policy, TabularPolicy};

/// `table[state][action]` action probabilities.
pub type PolicyTable = Vec<Vec<f64>>;

#[derive(Debug, Clone)]
pub struct TabularFeatures {
    n_actions: usize,
    rows: Vec<FeatVec>,
}

impl FeatureMap<usize> for TabularFeatures {
    fn dim(&self) -> usize {
        self.rows[0].len()
    }

    fn num_actions(&self) -> usize {
        self.n_actions
    }

    fn features(&self, state: &usize, action: usize) -> FeatVec {
        self.rows[state * self.n_actions + action].clone()
    }
}

#[derive(Debug, Clone)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// `P(s' | s, a)` at `(s * A + a) * S + s'`.
    transitions: Vec<f64>,
    initial: Vec<f64>,
    cost: Vec<f64>,
    features: Arc<TabularFeatures>,
    true_weights: Option<WeightVec>,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        initial: Vec<f64>,
        cost: Vec<f64>,
        feature_rows: Vec<FeatVec>,
    ) -> Result<Self> {
        let n_sa = n_states * n_actions;
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("empty state or action space"));
        }
        if transitions.len() != n_sa * n_states {
            return Err(Error::DimensionMismatch {
                expected: n_sa * n_states,
                got: transitions.len(),
            });
        }
        if initial.len() != n_states {
            return Err(Error::DimensionMismatch {
                expected: n_states,
                got: initial.len(),
            });
        }
        if cost.len() != n_sa || feature_rows.len() != n_sa {
            return Err(Error::invalid("cost and feature tables need one entry per state-action pair"));
        }
        let d = feature_rows[0].len();
        if feature_rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("feature rows must share one dimension"));
        }
        for row in transitions.chunks(n_states).chain(std::iter::once(&initial[..])) {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("transition and initial rows must be distributions"));
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            transitions,
            initial,
            cost,
            features: Arc::new(TabularFeatures {
                n_actions,
                rows: feature_rows,
            }),
            true_weights: None,
        })
    }

    /// One-hot features `φ(s,a) = e_{(s,a)}`, `d = S·A`; the cost vector is its
    /// own weight vector.
    pub fn one_hot(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        initial: Vec<f64>,
        cost: Vec<f64>,
    ) -> Result<Self> {
        let n_sa = n_states * n_actions;
        let rows = (0..n_sa)
            .map(|i| {
                let mut e = FeatVec::zeros(n_sa);
                e[i] = 1.0;
                e
            })
            .collect();
        let weights = WeightVec::from_column_slice(&cost);
        let mut mdp = Self::new(n_states, n_actions, transitions, initial, cost, rows)?;
        mdp.true_weights = Some(weights);
        Ok(mdp)
    }

    /// Random one-hot MDP: every `(s, a)` moves to `branching` random successors
    /// with random probabilities; costs uniform in `[-1, 1]`; start state 0.
    pub fn random(n_states: usize, n_actions: usize, branching: usize, rng: &mut dyn RngCore) -> Self {
        let branching = branching.clamp(1, n_states);
        let mut transitions = vec![0.0; n_states * n_actions * n_states];
        for row in transitions.chunks_mut(n_states) {
            let mut weights = Vec::with_capacity(branching);
            for _ in 0..branching {
                let s2 = rng.random_range(0..n_states);
                let w: f64 = rng.random_range(0.1..1.0);
                weights.push((s2, w));
            }
            let total: f64 = weights.iter().map(|(_, w)| w).sum();
            for (s2, w) in weights {
                row[s2] += w / total;
            }
        }
        let mut initial = vec![0.0; n_states];
        initial[0] = 1.0;
        let cost = (0..n_states * n_actions)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Self::one_hot(n_states, n_actions, transitions, initial, cost).expect("valid by construction")
    }

    /// Replaces the initial-state distribution.
    pub fn with_initial(mut self, initial: Vec<f64>) -> Result<Self> {
        if initial.len() != self.n_states || (initial.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("initial distribution has the wrong shape"));
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn sa(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn cost_vector(&self) -> &[f64] {
        &self.cost
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = self.sa(s, a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    /// `(P V)(s, a) = Σ_{s'} P(s'|s,a) V(s')`.
    pub fn expected_next(&self, s: usize, a: usize, values: &[f64]) -> f64 {
        self.transition_row(s, a).iter().zip(values).map(|(p, v)| p * v).sum()
    }

    pub fn feature_rows(&self) -> &[FeatVec] {
        &self.features.rows
    }

    /// Cost vector `Φ w` over state-action pairs.
    pub fn costs_from_weights(&self, w: &WeightVec) -> Vec<f64> {
        self.features.rows.iter().map(|r| r.dot(w)).collect()
    }

    /// `Φᵀ d` for an occupancy vector over state-action pairs.
    pub fn feature_expectation(&self, occupancy: &[f64]) -> FeatVec {
        let mut acc = FeatVec::zeros(self.features.dim());
        for (row, &d) in self.features.rows.iter().zip(occupancy) {
            acc.axpy(d, row, 1.0);
        }
        acc
    }

    pub fn policy_table(&self, policy: &dyn Policy<usize>, stage: usize) -> PolicyTable {
        (0..self.n_states).map(|s| policy.action_probs(&s, stage)).collect()
    }

    pub fn policy_tables(&self, policy: &dyn Policy<usize>, horizon: usize) -> Vec<PolicyTable> {
        (0..horizon).map(|h| self.policy_table(policy, h)).collect()
    }

    fn policy_matrix(&self, pi: &PolicyTable) -> DMatrix<f64> {
        let n = self.n_states;
        let mut m = DMatrix::zeros(n, n);
        for s in 0..n {
            for a in 0..self.n_actions {
                let p = pi[s][a];
                if p == 0.0 {
                    continue;
                }
                for (s2, q) in self.transition_row(s, a).iter().enumerate() {
                    m[(s, s2)] += p * q;
                }
            }
        }
        m
    }

    fn policy_cost(&self, pi: &PolicyTable, cost: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n_states, |s, _| {
            (0..self.n_actions).map(|a| pi[s][a] * cost[self.sa(s, a)]).sum()
        })
    }

    /// Solves `V = c_π + γ P_π V`.
    pub fn exact_value(&self, pi: &PolicyTable, cost: &[f64], gamma: f64) -> Result<Vec<f64>> {
        let n = self.n_states;
        let system = DMatrix::identity(n, n) - self.policy_matrix(pi) * gamma;
        let rhs = self.policy_cost(pi, cost);
        let v = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular policy-evaluation system".into()))?;
        Ok(v.iter().copied().collect())
    }

    /// Solves `d = (1-γ) ν₀ + γ P_πᵀ d` and spreads the state occupancy over actions.
    pub fn exact_occupancy(&self, pi: &PolicyTable, gamma: f64) -> Result<Vec<f64>> {
        let n = self.n_states;
        let system = DMatrix::identity(n, n) - self.policy_matrix(pi).transpose() * gamma;
        let rhs = DVector::from_column_slice(&self.initial) * (1.0 - gamma);
        let ds = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular occupancy system".into()))?;
        let mut out = vec![0.0; self.n_pairs()];
        for s in 0..n {
            for a in 0..self.n_actions {
                out[self.sa(s, a)] = ds[s] * pi[s][a];
            }
        }
        Ok(out)
    }

    /// Backward recursion; returns `V_0 .. V_H` with `V_H = 0`.
    pub fn exact_value_finite(&self, pis: &[PolicyTable], costs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let horizon = pis.len();
        assert_eq!(costs.len(), horizon);
        let mut values = vec![vec![0.0; self.n_states]; horizon + 1];
        for h in (0..horizon).rev() {
            for s in 0..self.n_states {
                values[h][s] = (0..self.n_actions)
                    .map(|a| {
                        pis[h][s][a] * (costs[h][self.sa(s, a)] + self.expected_next(s, a, &values[h + 1]))
                    })
                    .sum();
            }
        }
        values
    }

    /// Stage occupancies `d_h(s, a)` for `h = 0 .. H-1`.
    pub fn exact_occupancy_finite(&self, pis: &[PolicyTable]) -> Vec<Vec<f64>> {
        let mut state_dist = self.initial.clone();
        let mut out = Vec::with_capacity(pis.len());
        for pi in pis {
            let mut d = vec![0.0; self.n_pairs()];
            let mut next = vec![0.0; self.n_states];
            for s in 0..self.n_states {
                for a in 0..self.n_actions {
                    let mass = state_dist[s] * pi[s][a];
                    d[self.sa(s, a)] = mass;
                    if mass == 0.0 {
                        continue;
                    }
                    for (s2, p) in self.transition_row(s, a).iter().enumerate() {
                        next[s2] += mass * p;
                    }
                }
            }
            out.push(d);
            state_dist = next;
        }
        out
    }

    /// Optimal deterministic per-stage policy (lowest-index ties) and its values.
    pub fn optimal_finite(&self, costs: &[Vec<f64>]) -> (TabularPolicy, Vec<Vec<f64>>) {
        let horizon = costs.len();
        let mut values = vec![vec![0.0; self.n_states]; horizon + 1];
        let mut actions = vec![vec![0usize; self.n_states]; horizon];
        for h in (0..horizon).rev() {
            for s in 0..self.n_states {
                let q: Vec<f64> = (0..self.n_actions)
                    .map(|a| costs[h][self.sa(s, a)] + self.expected_next(s, a, &values[h + 1]))
                    .collect();
                let best = argmin(&q);
                actions[h][s] = best;
                values[h][s] = q[best];
            }
        }
        (TabularPolicy::deterministic(&actions, self.n_actions), values)
    }

    /// Optimal stationary deterministic policy by policy iteration.
    pub fn optimal_discounted(&self, cost: &[f64], gamma: f64) -> Result<TabularPolicy> {
        let mut actions = vec![0usize; self.n_states];
        for _ in 0..10_000 {
            let table = TabularPolicy::deterministic(&[actions.clone()], self.n_actions);
            let v = self.exact_value(&table.stage_table(0).to_vec(), cost, gamma)?;
            let mut changed = false;
            for s in 0..self.n_states {
                let q: Vec<f64> = (0..self.n_actions)
                    .map(|a| cost[self.sa(s, a)] + gamma * self.expected_next(s, a, &v))
                    .collect();
                let best = argmin(&q);
                if q[best] < q[actions[s]] - 1e-12 {
                    actions[s] = best;
                    changed = true;
                }
            }
            if !changed {
                return Ok(table);
            }
        }
        Err(Error::Numerical("policy iteration did not converge".into()))
    }

    /// `Σ_s ν₀(s) V(s)`.
    pub fn start_value(&self, values: &[f64]) -> f64 {
        self.initial.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

impl Environment for TabularMdp {
    type State = usize;

    fn feature_map(&self) -> SharedFeatures<usize> {
        self.features.clone()
    }

    fn initial_state(&self, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.initial, rng)
    }

    fn step(&self, state: &usize, action: usize, rng: &mut dyn RngCore) -> usize {
        sample_categorical(self.transition_row(*state, action), rng)
    }

    fn cost(&self, state: &usize, action: usize) -> f64 {
        self.cost[self.sa(*state, action)]
    }

    fn true_cost_weights(&self) -> Option<WeightVec> {
        self.true_weights.clone()
    }
}
