use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{Environment, FeatureMap, SharedFeatures};
use crate::error::{Error, Result};
use crate::linalg::{softmax_dist, FeatVec, WeightVec};
use crate::policy::FixedDistribution;

/// Single-state linear bandit: action `a` has features `Φ[a]` and true cost
/// `Φ[a]ᵀ w_true`. Episodes have one step (`H = 1`, or `γ = 0`).
#[derive(Debug, Clone)]
pub struct LinearBandit {
    features: Arc<BanditFeatures>,
    w_true: WeightVec,
}

#[derive(Debug, Clone)]
pub struct BanditFeatures {
    rows: Vec<FeatVec>,
}

impl FeatureMap<()> for BanditFeatures {
    fn dim(&self) -> usize {
        self.rows[0].len()
    }

    fn num_actions(&self) -> usize {
        self.rows.len()
    }

    fn features(&self, _state: &(), action: usize) -> FeatVec {
        self.rows[action].clone()
    }
}

/// `w(i) = 0` for odd 1-based `i`, `1` otherwise: `[0, 1, 0, 1, ...]`.
pub fn alternating_weights(dim: usize) -> WeightVec {
    WeightVec::from_fn(dim, |j, _| if (j + 1) % 2 == 1 { 0.0 } else { 1.0 })
}

impl LinearBandit {
    pub fn new(rows: Vec<FeatVec>, w_true: WeightVec) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid("a bandit needs at least two actions"));
        }
        let d = w_true.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        if rows.iter().any(|r| r.iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid("bandit features must be finite"));
        }
        Ok(Self {
            features: Arc::new(BanditFeatures { rows }),
            w_true,
        })
    }

    /// Gaussian features `N(0, 1/d)` entrywise, so rows have unit norm on average.
    pub fn gaussian(n_actions: usize, dim: usize, w_true: WeightVec, rng: &mut dyn RngCore) -> Result<Self> {
        let scale = 1.0 / (dim as f64).sqrt();
        let rows = (0..n_actions)
            .map(|_| {
                FeatVec::from_fn(dim, |_, _| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * scale
                })
            })
            .collect();
        Self::new(rows, w_true)
    }

    pub fn w_true(&self) -> &WeightVec {
        &self.w_true
    }

    pub fn action_features(&self, action: usize) -> &FeatVec {
        &self.features.rows[action]
    }

    /// True cost of every action.
    pub fn costs(&self) -> Vec<f64> {
        self.features.rows.iter().map(|r| r.dot(&self.w_true)).collect()
    }

    /// Softmax over true costs, `p(a) ∝ exp(-c(a) / temperature)`.
    pub fn softmax_expert(&self, temperature: f64) -> Result<FixedDistribution> {
        if !(temperature > 0.0) {
            return Err(Error::invalid("softmax temperature must be positive"));
        }
        let logits: Vec<f64> = self.costs().iter().map(|c| -c / temperature).collect();
        Ok(FixedDistribution::new(softmax_dist(&logits)))
    }

    /// Expected true cost of an action distribution.
    pub fn expected_cost(&self, probs: &[f64]) -> f64 {
        self.costs().iter().zip(probs).map(|(c, p)| c * p).sum()
    }
}

impl Environment for LinearBandit {
    type State = ();

    fn feature_map(&self) -> SharedFeatures<()> {
        self.features.clone()
    }

    fn initial_state(&self, _rng: &mut dyn RngCore) {}

    fn step(&self, _state: &(), _action: usize, _rng: &mut dyn RngCore) {}

    fn cost(&self, _state: &(), action: usize) -> f64 {
        self.features.rows[action].dot(&self.w_true)
    }

    fn true_cost_weights(&self) -> Option<WeightVec> {
        Some(self.w_true.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;

    #[test]
    fn identity_features() {
        let rows = vec![FeatVec::from_column_slice(&[1.0, 0.0]), FeatVec::from_column_slice(&[0.0, 1.0])];
        let w = alternating_weights(2);
        assert_eq!(w, WeightVec::from_column_slice(&[0.0, 1.0]));
        let b = LinearBandit::new(rows.clone(), w).unwrap();
        assert_eq!(b.costs(), vec![0.0, 1.0]);
        let zero = LinearBandit::new(rows, WeightVec::zeros(2)).unwrap();
        assert_eq!(zero.costs(), vec![0.0, 0.0]);
    }

    #[test]
    fn costs_are_linear_in_weights() {
        let mut rng = Seed(1).stream("b");
        let w = alternating_weights(6);
        let b = LinearBandit::gaussian(5, 6, w.clone(), &mut rng).unwrap();
        let scaled = LinearBandit::new(b.features.rows.clone(), &w * 3.5).unwrap();
        for (c, s) in b.costs().iter().zip(scaled.costs()) {
            assert!((3.5 * c - s).abs() < 1e-12);
        }
    }
}
