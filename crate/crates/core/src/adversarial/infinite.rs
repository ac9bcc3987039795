use std::sync::Arc;

use rand::RngCore;

use super::cost_stream::CostStream;
use super::finite::{MdpeParams, RoundDiag};
use super::q::{Epoch, ExpWeightsPolicy, FunctionalQ, QStack};
use crate::env::{sample_occupancy, Environment, FeatureMap, SharedFeatures, Step};
use crate::error::{Error, Result};
use crate::linalg::{ClipRange, CovStats, FeatVec, WeightVec};
use crate::policy::Policy;

/// `τ` occupancy samples of one batch with the covariance `Λ^(j)` built from them.
pub struct InfiniteBatch<S> {
    gamma: f64,
    beta: f64,
    cov: Arc<CovStats>,
    phis: Vec<FeatVec>,
    next_phis: Vec<Vec<FeatVec>>,
    next_probs: Vec<Vec<f64>>,
    samples: Vec<Step<S>>,
}

impl<S: Clone> InfiniteBatch<S> {
    pub fn new(
        samples: Vec<Step<S>>,
        features: &dyn FeatureMap<S>,
        policy: &dyn Policy<S>,
        beta: f64,
        gamma: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!("discount {gamma} outside [0, 1)")));
        }
        let phis: Vec<FeatVec> = samples.iter().map(|s| features.features(&s.state, s.action)).collect();
        let next_phis = samples.iter().map(|s| features.all_actions(&s.next_state)).collect();
        let next_probs = samples.iter().map(|s| policy.action_probs(&s.next_state, 0)).collect();
        let cov = Arc::new(CovStats::build(features.dim(), phis.iter())?);
        Ok(Self {
            gamma,
            beta,
            cov,
            phis,
            next_phis,
            next_probs,
            samples,
        })
    }

    pub fn cov(&self) -> &Arc<CovStats> {
        &self.cov
    }

    pub fn samples(&self) -> &[Step<S>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean feature of the occupancy samples, an estimate of `Φᵀd^π`.
    pub fn mean_features(&self) -> FeatVec {
        let d = self.cov.dim();
        if self.phis.is_empty() {
            return FeatVec::zeros(d);
        }
        let sum = self.phis.iter().fold(FeatVec::zeros(d), |acc, p| acc + p);
        sum / self.phis.len() as f64
    }

    pub fn bonus_mass(&self) -> f64 {
        self.phis.iter().map(|p| self.beta * self.cov.inv_quad(p).sqrt()).sum()
    }

    /// `⟨π^(j)(·|s'), Q(s', ·)⟩` at every sample's next state.
    pub fn values_under_batch_policy(&self, q: &FunctionalQ) -> Vec<f64> {
        self.next_phis
            .iter()
            .zip(&self.next_probs)
            .map(|(phis, probs)| phis.iter().zip(probs).map(|(p, w)| w * q.eval_phi(p)).sum())
            .collect()
    }

    /// `⟨π(·|s'), Q(s', ·)⟩` at every sample's next state for another policy.
    pub fn values_under(&self, q: &FunctionalQ, policy: &dyn Policy<S>) -> Vec<f64> {
        self.samples
            .iter()
            .zip(&self.next_phis)
            .map(|(s, phis)| {
                let probs = policy.action_probs(&s.next_state, 0);
                phis.iter().zip(&probs).map(|(p, w)| w * q.eval_phi(p)).sum()
            })
            .collect()
    }

    pub fn clip_range(&self) -> ClipRange {
        ClipRange::discounted(self.gamma)
    }
}

/// One step of the discounted optimistic recursion:
/// `v = Λ⁻¹ Σ φ_i V(s'_i)`, `Q = clip(Φw + γΦv - b)`.
pub fn optimistic_eval_infinite<S: Clone>(
    batch: &InfiniteBatch<S>,
    cost_w: &WeightVec,
    prev_values: &[f64],
) -> Result<FunctionalQ> {
    if prev_values.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            got: prev_values.len(),
        });
    }
    let d = batch.cov.dim();
    if cost_w.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cost_w.len(),
        });
    }
    let mut rhs = WeightVec::zeros(d);
    for (phi, v) in batch.phis.iter().zip(prev_values) {
        rhs.axpy(*v, phi, 1.0);
    }
    Ok(FunctionalQ::new(
        cost_w.clone(),
        batch.cov.solve(&rhs),
        batch.gamma,
        batch.cov.clone(),
        batch.beta,
        batch.clip_range(),
    ))
}

/// Policy player of the discounted problem: collects a batch per epoch,
/// advances the optimistic recursion once per round and applies the
/// exponential-weights update at the end of each batch.
pub struct InfiniteLearner<S> {
    gamma: f64,
    beta: f64,
    tau: usize,
    max_len: usize,
    features: SharedFeatures<S>,
    policy: Arc<ExpWeightsPolicy<S>>,
    carried: Option<(FunctionalQ, Arc<ExpWeightsPolicy<S>>)>,
    batch: Option<InfiniteBatch<S>>,
    prev_values: Vec<f64>,
    stack: Option<QStack>,
}

impl<S: Clone> InfiniteLearner<S> {
    pub fn new(features: SharedFeatures<S>, gamma: f64, beta: f64, eta: f64, tau: usize, max_len: usize) -> Self {
        Self {
            gamma,
            beta,
            tau,
            max_len,
            policy: Arc::new(ExpWeightsPolicy::uniform(eta, features.clone())),
            features,
            carried: None,
            batch: None,
            prev_values: Vec::new(),
            stack: None,
        }
    }

    pub fn policy(&self) -> &Arc<ExpWeightsPolicy<S>> {
        &self.policy
    }

    pub fn batch(&self) -> Option<&InfiniteBatch<S>> {
        self.batch.as_ref()
    }

    /// Draws `τ` occupancy samples with the current policy and carries the
    /// last value estimate over to the new next states.
    pub fn begin_batch<E>(&mut self, env: &E, rng: &mut dyn RngCore) -> Result<&InfiniteBatch<S>>
    where
        E: Environment<State = S> + ?Sized,
    {
        let samples = (0..self.tau)
            .map(|_| sample_occupancy(env, self.policy.as_ref(), self.gamma, self.max_len, rng))
            .collect();
        let batch = InfiniteBatch::new(samples, self.features.as_ref(), self.policy.as_ref(), self.beta, self.gamma)?;
        self.prev_values = match &self.carried {
            None => vec![0.0; batch.len()],
            Some((q, producer)) => batch.values_under(q, producer.as_ref()),
        };
        self.stack = Some(QStack::new(batch.cov.clone(), self.beta, batch.clip_range()));
        self.batch = Some(batch);
        Ok(self.batch.as_ref().expect("batch just stored"))
    }

    /// One round of optimistic evaluation against `cost_w`.
    pub fn round(&mut self, cost_w: &WeightVec) -> Result<FunctionalQ> {
        let batch = self
            .batch
            .as_ref()
            .ok_or_else(|| Error::invalid("round called before begin_batch"))?;
        let q = optimistic_eval_infinite(batch, cost_w, &self.prev_values)?;
        self.prev_values = batch.values_under_batch_policy(&q);
        self.stack.as_mut().expect("stack exists with batch").push(&q);
        self.carried = Some((q.clone(), self.policy.clone()));
        Ok(q)
    }

    /// Exponential-weights update with the averaged Q of the finished batch.
    pub fn end_batch(&mut self) -> Result<Arc<ExpWeightsPolicy<S>>> {
        let stack = self
            .stack
            .take()
            .ok_or_else(|| Error::invalid("end_batch called without an open batch"))?;
        self.policy = Arc::new(self.policy.with_epoch(Epoch::new(vec![stack])));
        Ok(self.policy.clone())
    }
}

pub struct InfiniteRun<S> {
    pub policies: Vec<Arc<ExpWeightsPolicy<S>>>,
    pub round_batch: Vec<usize>,
    pub q: Vec<FunctionalQ>,
    pub samples: Vec<Step<S>>,
    pub diagnostics: Vec<RoundDiag>,
}

impl<S> InfiniteRun<S> {
    pub fn round_policy(&self, k: usize) -> &Arc<ExpWeightsPolicy<S>> {
        &self.policies[self.round_batch[k]]
    }

    pub fn rounds(&self) -> usize {
        self.round_batch.len()
    }
}

/// On-policy MDP-E for discounted adversarial linear MDPs.
pub fn mdpe_infinite_run<E: Environment>(
    env: &E,
    stream: &CostStream,
    params: MdpeParams,
    gamma: f64,
    max_len: usize,
    rng: &mut dyn RngCore,
) -> Result<InfiniteRun<E::State>> {
    params.validate()?;
    if stream.len() < params.rounds {
        return Err(Error::invalid(format!(
            "cost stream has {} rounds, K = {}",
            stream.len(),
            params.rounds
        )));
    }
    let mut learner = InfiniteLearner::new(env.feature_map(), gamma, params.beta, params.eta, params.tau, max_len);
    let mut run = InfiniteRun {
        policies: vec![learner.policy().clone()],
        round_batch: Vec::new(),
        q: Vec::new(),
        samples: Vec::new(),
        diagnostics: Vec::new(),
    };
    for j in 0..params.batches() {
        let batch = learner.begin_batch(env, rng)?;
        let bonus_mass = batch.bonus_mass();
        run.samples.extend(batch.samples().iter().cloned());
        let epochs = learner.policy().num_epochs();
        for i in 0..params.tau {
            let k = j * params.tau + i;
            run.q.push(learner.round(stream.stage(k, 0))?);
            run.round_batch.push(j);
            run.diagnostics.push(RoundDiag {
                round: k,
                batch: j,
                policy_epochs: epochs,
                bonus_mass,
            });
        }
        run.policies.push(learner.end_batch()?);
    }
    Ok(run)
}
