use std::sync::Arc;

use crate::env::{FeatureMap, SharedFeatures};
use crate::linalg::{softmax_dist, ClipRange, CovStats, FeatVec, WeightVec};
use crate::policy::Policy;

/// Lazily evaluated optimistic Q estimate
/// `clip(φᵀw + γ φᵀv - β‖φ‖_{Λ⁻¹})`.
///
/// Finite-horizon estimates use `discount = 1` and the stage clip range.
#[derive(Debug, Clone)]
pub struct FunctionalQ {
    cost_w: WeightVec,
    value_v: WeightVec,
    discount: f64,
    combined: WeightVec,
    cov: Arc<CovStats>,
    beta: f64,
    clip: ClipRange,
}

impl FunctionalQ {
    pub fn new(
        cost_w: WeightVec,
        value_v: WeightVec,
        discount: f64,
        cov: Arc<CovStats>,
        beta: f64,
        clip: ClipRange,
    ) -> Self {
        let combined = &cost_w + &value_v * discount;
        Self {
            cost_w,
            value_v,
            discount,
            combined,
            cov,
            beta,
            clip,
        }
    }

    pub fn eval_phi(&self, phi: &FeatVec) -> f64 {
        self.clip.clip(phi.dot(&self.combined) - self.bonus_phi(phi))
    }

    pub fn eval<S>(&self, features: &dyn FeatureMap<S>, state: &S, action: usize) -> f64 {
        self.eval_phi(&features.features(state, action))
    }

    /// The unclipped value `φᵀw + γφᵀv - b`.
    pub fn raw_phi(&self, phi: &FeatVec) -> f64 {
        phi.dot(&self.combined) - self.bonus_phi(phi)
    }

    pub fn bonus_phi(&self, phi: &FeatVec) -> f64 {
        self.beta * self.cov.inv_quad(phi).sqrt()
    }

    pub fn cost_weights(&self) -> &WeightVec {
        &self.cost_w
    }

    pub fn value_weights(&self) -> &WeightVec {
        &self.value_v
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn combined(&self) -> &WeightVec {
        &self.combined
    }

    pub fn cov(&self) -> &Arc<CovStats> {
        &self.cov
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn clip_range(&self) -> ClipRange {
        self.clip
    }
}

/// The Q estimates of one batch at one stage. They share the covariance, so
/// the bonus is computed once and the clipped values are averaged.
#[derive(Debug, Clone)]
pub struct QStack {
    cov: Arc<CovStats>,
    beta: f64,
    clip: ClipRange,
    params: Vec<WeightVec>,
}

impl QStack {
    pub fn new(cov: Arc<CovStats>, beta: f64, clip: ClipRange) -> Self {
        Self {
            cov,
            beta,
            clip,
            params: Vec::new(),
        }
    }

    /// Adds a Q estimate; it must share this stack's covariance, bonus scale and clip.
    pub fn push(&mut self, q: &FunctionalQ) {
        debug_assert!(Arc::ptr_eq(&self.cov, q.cov()));
        self.params.push(q.combined().clone());
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Mean of the clipped evaluations `Q̄(s, a)`.
    pub fn mean_eval(&self, phi: &FeatVec) -> f64 {
        if self.params.is_empty() {
            return 0.0;
        }
        let b = self.beta * self.cov.inv_quad(phi).sqrt();
        let total: f64 = self.params.iter().map(|p| self.clip.clip(phi.dot(p) - b)).sum();
        total / self.params.len() as f64
    }
}

/// One policy-improvement epoch: a [`QStack`] per stage (one for discounted problems).
#[derive(Debug, Clone)]
pub struct Epoch {
    stages: Vec<QStack>,
}

impl Epoch {
    pub fn new(stages: Vec<QStack>) -> Self {
        assert!(!stages.is_empty());
        Self { stages }
    }

    pub fn stage(&self, stage: usize) -> &QStack {
        &self.stages[stage.min(self.stages.len() - 1)]
    }
}

/// Exponential-weights policy `π(a|s) ∝ exp(-η Σ_i Q̄⁽ⁱ⁾(s, a))`.
///
/// Stores the parameters of every epoch rather than a table, so it works on
/// continuous state spaces. Evaluation costs `O(epochs · τ · d · |A|)`.
pub struct ExpWeightsPolicy<S> {
    eta: f64,
    epochs: Vec<Arc<Epoch>>,
    features: SharedFeatures<S>,
}

impl<S> Clone for ExpWeightsPolicy<S> {
    fn clone(&self) -> Self {
        Self {
            eta: self.eta,
            epochs: self.epochs.clone(),
            features: self.features.clone(),
        }
    }
}

impl<S> ExpWeightsPolicy<S> {
    /// The uniform policy (no epochs).
    pub fn uniform(eta: f64, features: SharedFeatures<S>) -> Self {
        Self {
            eta,
            epochs: Vec::new(),
            features,
        }
    }

    pub fn with_epoch(&self, epoch: Epoch) -> Self {
        let mut next = self.clone();
        next.epochs.push(Arc::new(epoch));
        next
    }

    pub fn num_epochs(&self) -> usize {
        self.epochs.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `Σ_i Q̄⁽ⁱ⁾(s, a)` for every action.
    pub fn cumulative_q(&self, state: &S, stage: usize) -> Vec<f64> {
        let phis = self.features.all_actions(state);
        phis.iter()
            .map(|phi| self.epochs.iter().map(|e| e.stage(stage).mean_eval(phi)).sum())
            .collect()
    }
}

impl<S> Policy<S> for ExpWeightsPolicy<S> {
    fn num_actions(&self) -> usize {
        self.features.num_actions()
    }

    fn action_probs(&self, state: &S, stage: usize) -> Vec<f64> {
        if self.epochs.is_empty() || self.eta == 0.0 {
            let n = self.num_actions();
            return vec![1.0 / n as f64; n];
        }
        let logits: Vec<f64> = self
            .cumulative_q(state, stage)
            .into_iter()
            .map(|q| -self.eta * q)
            .collect();
        softmax_dist(&logits)
    }
}

/// Per-stage Q functions acted on greedily (`argmin`, lowest index on ties).
#[derive(Clone)]
pub struct GreedyPolicy<S> {
    stages: Vec<FunctionalQ>,
    features: SharedFeatures<S>,
}

impl<S> GreedyPolicy<S> {
    pub fn new(stages: Vec<FunctionalQ>, features: SharedFeatures<S>) -> Self {
        assert!(!stages.is_empty());
        Self { stages, features }
    }

    pub fn stage_q(&self, stage: usize) -> &FunctionalQ {
        &self.stages[stage.min(self.stages.len() - 1)]
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn greedy_action(&self, state: &S, stage: usize) -> usize {
        let q = self.stage_q(stage);
        let values: Vec<f64> = (0..self.features.num_actions())
            .map(|a| q.eval(self.features.as_ref(), state, a))
            .collect();
        crate::linalg::argmin(&values)
    }
}

impl<S> Policy<S> for GreedyPolicy<S> {
    fn num_actions(&self) -> usize {
        self.features.num_actions()
    }

    fn action_probs(&self, state: &S, stage: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.num_actions()];
        p[self.greedy_action(state, stage)] = 1.0;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Environment, TabularMdp};
    use crate::seed::Seed;

    #[test]
    fn empty_or_zero_step_policies_are_uniform() {
        let m = TabularMdp::random(3, 4, 2, &mut Seed(0).stream("m"));
        let fm = m.feature_map();
        let p = ExpWeightsPolicy::uniform(1.0, fm.clone());
        assert_eq!(p.action_probs(&1, 0), vec![0.25; 4]);

        let cov = Arc::new(CovStats::identity(12));
        let w = WeightVec::from_fn(12, |i, _| i as f64 / 12.0);
        let q = FunctionalQ::new(w, WeightVec::zeros(12), 1.0, cov.clone(), 0.5, ClipRange::finite_stage(2, 1));
        let mut stack = QStack::new(cov, 0.5, ClipRange::finite_stage(2, 1));
        stack.push(&q);
        let zero_eta = ExpWeightsPolicy::uniform(0.0, fm.clone()).with_epoch(Epoch::new(vec![stack.clone()]));
        assert_eq!(zero_eta.action_probs(&2, 0), vec![0.25; 4]);
        let active = ExpWeightsPolicy::uniform(2.0, fm).with_epoch(Epoch::new(vec![stack]));
        let probs = active.action_probs(&2, 0);
        // lower Q gets more mass
        assert!(probs[0] > probs[3]);
    }

    #[test]
    fn evaluations_respect_the_clip() {
        let cov = Arc::new(CovStats::identity(2));
        let w = WeightVec::from_column_slice(&[100.0, -100.0]);
        let q = FunctionalQ::new(w.clone(), w, 0.9, cov, 8.0, ClipRange::discounted(0.9));
        let hi = q.eval_phi(&FeatVec::from_column_slice(&[1.0, 0.0]));
        let lo = q.eval_phi(&FeatVec::from_column_slice(&[0.0, 1.0]));
        assert!((hi - 10.0).abs() < 1e-12);
        assert!((lo + 10.0).abs() < 1e-12);
    }
}
