//! Expert construction, expert datasets, feature-expectation estimators and
//! the behavioral-cloning baseline.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adversarial::{FunctionalQ, GreedyPolicy};
use crate::env::{sample_episode_discounted, sample_episode_finite, Environment, FeatureMap, SharedFeatures, Step, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{argmin, softmax_dist, ClipRange, CovStats, FeatVec, WeightVec};
use crate::policy::{MixturePolicy, Policy, SharedPolicy};

/// Optimistic LSVI on the true (normalised) cost. Returns the greedy
/// per-stage policy computed from all `episodes` episodes of data.
pub fn train_expert_lsvi_ucb<E: Environment>(
    env: &E,
    horizon: usize,
    episodes: usize,
    beta: f64,
    rng: &mut dyn RngCore,
) -> Result<GreedyPolicy<E::State>> {
    if horizon == 0 || episodes == 0 {
        return Err(Error::invalid("horizon and episode count must be positive"));
    }
    let cost = env
        .true_cost_weights()
        .ok_or_else(|| Error::invalid("expert training needs an environment with linear true costs"))?;
    let fm = env.feature_map();
    let d = fm.dim();
    let mut covs = vec![CovStats::identity(d); horizon];
    let mut data: Vec<Vec<(FeatVec, Vec<FeatVec>)>> = vec![Vec::new(); horizon];
    let mut greedy = lsvi_backward(&covs, &data, &cost, beta, fm.clone());
    for _ in 0..episodes {
        let traj = sample_episode_finite(env, &greedy, horizon, rng);
        for step in traj.steps {
            let phi = fm.features(&step.state, step.action);
            covs[step.stage].push(&phi)?;
            data[step.stage].push((phi, fm.all_actions(&step.next_state)));
        }
        greedy = lsvi_backward(&covs, &data, &cost, beta, fm.clone());
    }
    Ok(greedy)
}

fn lsvi_backward<S>(
    covs: &[CovStats],
    data: &[Vec<(FeatVec, Vec<FeatVec>)>],
    cost: &WeightVec,
    beta: f64,
    fm: SharedFeatures<S>,
) -> GreedyPolicy<S> {
    let horizon = covs.len();
    let d = cost.len();
    let mut stages: Vec<FunctionalQ> = Vec::with_capacity(horizon);
    for h in (0..horizon).rev() {
        let cov = Arc::new(covs[h].clone());
        let value_v = match stages.last() {
            None => WeightVec::zeros(d),
            Some(next_q) => {
                let mut rhs = WeightVec::zeros(d);
                for (phi, next) in &data[h] {
                    let v = next.iter().map(|p| next_q.eval_phi(p)).fold(f64::INFINITY, f64::min);
                    rhs.axpy(v, phi, 1.0);
                }
                cov.solve(&rhs)
            }
        };
        stages.push(FunctionalQ::new(
            cost.clone(),
            value_v,
            1.0,
            cov,
            beta,
            ClipRange::finite_stage(horizon, h + 1),
        ));
    }
    stages.reverse();
    GreedyPolicy::new(stages, fm)
}

/// With probability `1 - mix` the expert's action, otherwise a uniform action.
pub fn make_stochastic_expert<S: 'static>(det_policy: SharedPolicy<S>, mix: f64) -> Result<MixturePolicy<S>> {
    if !(0.0..=1.0).contains(&mix) {
        return Err(Error::invalid(format!("mix must be a probability, got {mix}")));
    }
    Ok(MixturePolicy::new(det_policy, mix))
}

/// How expert trajectories are rolled out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetMode {
    /// Fixed length `horizon`, stage-indexed.
    Finite { horizon: usize },
    /// Geometric length: restart with probability `1 - γ` after each step.
    Discounted { gamma: f64, max_len: usize },
    /// Fixed length `len`, weighted by `γ^h` in the estimator.
    Truncated { gamma: f64, len: usize },
}

impl DatasetMode {
    pub fn gamma(&self) -> Option<f64> {
        match self {
            DatasetMode::Finite { .. } => None,
            DatasetMode::Discounted { gamma, .. } | DatasetMode::Truncated { gamma, .. } => Some(*gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertDataset<S> {
    pub mode: DatasetMode,
    pub trajectories: Vec<Trajectory<S>>,
}

impl<S> ExpertDataset<S> {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn num_steps(&self) -> usize {
        self.trajectories.iter().map(|t| t.steps.len()).sum()
    }

    /// Splits into the first `n_first` trajectories and the rest.
    pub fn split(self, n_first: usize) -> (Self, Self) {
        let mut first = self.trajectories;
        let second = first.split_off(n_first.min(first.len()));
        (
            Self {
                mode: self.mode,
                trajectories: first,
            },
            Self {
                mode: self.mode,
                trajectories: second,
            },
        )
    }
}

pub fn collect_expert_dataset<E: Environment>(
    env: &E,
    expert: &dyn Policy<E::State>,
    n_traj: usize,
    mode: DatasetMode,
    rng: &mut dyn RngCore,
) -> Result<ExpertDataset<E::State>> {
    if n_traj == 0 {
        return Err(Error::invalid("need at least one expert trajectory"));
    }
    let trajectories = (0..n_traj)
        .map(|_| match mode {
            DatasetMode::Finite { horizon } => sample_episode_finite(env, expert, horizon, rng),
            DatasetMode::Discounted { gamma, max_len } => sample_episode_discounted(env, expert, gamma, max_len, rng),
            DatasetMode::Truncated { len, .. } => sample_episode_finite(env, expert, len, rng),
        })
        .collect();
    Ok(ExpertDataset { mode, trajectories })
}

fn discounted_sum<S>(traj: &Trajectory<S>, fm: &dyn FeatureMap<S>, gamma: f64) -> FeatVec {
    let mut acc = FeatVec::zeros(fm.dim());
    let mut weight = 1.0;
    for step in &traj.steps {
        acc.axpy(weight, &fm.features(&step.state, step.action), 1.0);
        weight *= gamma;
    }
    acc
}

/// `(1-γ)/τ_E Σ_traj Σ_{h≥0} γ^h φ(s_h, a_h)`.
pub fn feat_exp_discounted<S>(ds: &ExpertDataset<S>, fm: &dyn FeatureMap<S>, gamma: f64) -> Result<FeatVec> {
    if ds.is_empty() {
        return Err(Error::invalid("empty expert dataset"));
    }
    let total = ds
        .trajectories
        .iter()
        .fold(FeatVec::zeros(fm.dim()), |acc, t| acc + discounted_sum(t, fm, gamma));
    Ok(total * ((1.0 - gamma) / ds.len() as f64))
}

/// Per-stage mean features `(1/τ_E) Σ_traj φ(s_h, a_h)` for `h = 0..H`.
pub fn feat_exp_per_stage<S>(ds: &ExpertDataset<S>, fm: &dyn FeatureMap<S>, horizon: usize) -> Result<Vec<FeatVec>> {
    if ds.is_empty() {
        return Err(Error::invalid("empty expert dataset"));
    }
    let mut out = vec![FeatVec::zeros(fm.dim()); horizon];
    for traj in &ds.trajectories {
        if traj.steps.len() != horizon {
            return Err(Error::invalid(format!(
                "finite-horizon estimator needs length-{horizon} trajectories, got {}",
                traj.steps.len()
            )));
        }
        for (h, step) in traj.steps.iter().enumerate() {
            out[h] += fm.features(&step.state, step.action);
        }
    }
    let n = ds.len() as f64;
    Ok(out.into_iter().map(|f| f / n).collect())
}

/// Split-dataset estimator: BC rollouts that stay inside the membership set
/// plus held-out expert trajectories that leave it. The first half of the
/// expert data (used to fit the BC policy) does not enter the estimate.
pub fn mimic_md_estimator<S>(
    held_out: &ExpertDataset<S>,
    bc_rollouts: &ExpertDataset<S>,
    membership: &dyn Fn(&S) -> bool,
    fm: &dyn FeatureMap<S>,
    gamma: f64,
) -> Result<FeatVec> {
    if held_out.is_empty() {
        return Err(Error::invalid("held-out expert split is empty"));
    }
    if bc_rollouts.is_empty() {
        return Err(Error::invalid("no BC rollouts supplied"));
    }
    let inside = |t: &Trajectory<S>| t.steps.iter().all(|s| membership(&s.state));
    let mut first = FeatVec::zeros(fm.dim());
    for t in bc_rollouts.trajectories.iter().filter(|t| inside(t)) {
        first += discounted_sum(t, fm, gamma);
    }
    let mut second = FeatVec::zeros(fm.dim());
    for t in held_out.trajectories.iter().filter(|t| !inside(t)) {
        second += discounted_sum(t, fm, gamma);
    }
    Ok((first / bc_rollouts.len() as f64 + second / held_out.len() as f64) * (1.0 - gamma))
}

/// Linear softmax policy `π(a|s) ∝ exp(-φ(s,a)ᵀθ)`.
pub struct SoftmaxLinearPolicy<S> {
    theta: WeightVec,
    features: SharedFeatures<S>,
}

impl<S> Clone for SoftmaxLinearPolicy<S> {
    fn clone(&self) -> Self {
        Self {
            theta: self.theta.clone(),
            features: self.features.clone(),
        }
    }
}

impl<S> SoftmaxLinearPolicy<S> {
    pub fn new(theta: WeightVec, features: SharedFeatures<S>) -> Self {
        Self { theta, features }
    }

    pub fn theta(&self) -> &WeightVec {
        &self.theta
    }

    pub fn greedy_action(&self, state: &S) -> usize {
        let scores: Vec<f64> = self.features.all_actions(state).iter().map(|p| p.dot(&self.theta)).collect();
        argmin(&scores)
    }
}

impl<S> Policy<S> for SoftmaxLinearPolicy<S> {
    fn num_actions(&self) -> usize {
        self.features.num_actions()
    }

    fn action_probs(&self, state: &S, _stage: usize) -> Vec<f64> {
        let logits: Vec<f64> = self
            .features
            .all_actions(state)
            .iter()
            .map(|p| -p.dot(&self.theta))
            .collect();
        softmax_dist(&logits)
    }
}

struct BcSample {
    phis: Vec<FeatVec>,
    action: usize,
}

fn bc_samples<S>(ds: &ExpertDataset<S>, fm: &dyn FeatureMap<S>) -> Vec<BcSample> {
    ds.trajectories
        .iter()
        .flat_map(|t| t.steps.iter())
        .map(|s| BcSample {
            phis: fm.all_actions(&s.state),
            action: s.action,
        })
        .collect()
}

fn bc_loss_and_grad(samples: &[BcSample], theta: &WeightVec) -> (f64, WeightVec) {
    let mut loss = 0.0;
    let mut grad = WeightVec::zeros(theta.len());
    for sample in samples {
        let logits: Vec<f64> = sample.phis.iter().map(|p| -p.dot(theta)).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        loss += log_z - logits[sample.action];
        let probs = softmax_dist(&logits);
        // d/dθ of φ_aᵀθ + log Σ_b exp(-φ_bᵀθ)
        grad += &sample.phis[sample.action];
        for (p, phi) in probs.iter().zip(&sample.phis) {
            grad.axpy(-p, phi, 1.0);
        }
    }
    let n = samples.len() as f64;
    (loss / n, grad / n)
}

/// Mean negative log-likelihood of the dataset's actions under `policy`.
pub fn bc_loss<S>(ds: &ExpertDataset<S>, policy: &SoftmaxLinearPolicy<S>) -> f64 {
    bc_loss_and_grad(&bc_samples(ds, policy.features.as_ref()), &policy.theta).0
}

/// Full-batch gradient descent on the mean negative log-likelihood from `θ = 0`.
pub fn behavioral_cloning<S>(
    ds: &ExpertDataset<S>,
    fm: SharedFeatures<S>,
    steps: usize,
    lr: f64,
) -> Result<SoftmaxLinearPolicy<S>> {
    if ds.num_steps() == 0 {
        return Err(Error::invalid("behavioral cloning needs at least one expert transition"));
    }
    let samples = bc_samples(ds, fm.as_ref());
    let mut theta = WeightVec::zeros(fm.dim());
    for _ in 0..steps {
        let (_, grad) = bc_loss_and_grad(&samples, &theta);
        theta.axpy(-lr, &grad, 1.0);
    }
    Ok(SoftmaxLinearPolicy::new(theta, fm))
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    format: String,
    mode: DatasetMode,
    trajectories: usize,
}

#[derive(Serialize, Deserialize)]
struct Record<S> {
    episode: usize,
    h: usize,
    state: S,
    action: usize,
    next_state: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<f64>,
}

const DATASET_FORMAT: &str = "ilarl-expert-dataset/1";

/// Line-delimited JSON: a header line, then one transition per line.
pub fn write_dataset<S: Serialize + Clone, W: Write>(ds: &ExpertDataset<S>, mut out: W) -> Result<()> {
    let header = DatasetHeader {
        format: DATASET_FORMAT.to_string(),
        mode: ds.mode,
        trajectories: ds.len(),
    };
    let json = |e: serde_json::Error| Error::Io(e.to_string());
    writeln!(out, "{}", serde_json::to_string(&header).map_err(json)?)?;
    for (episode, traj) in ds.trajectories.iter().enumerate() {
        for step in &traj.steps {
            let rec = Record {
                episode,
                h: step.stage,
                state: step.state.clone(),
                action: step.action,
                next_state: step.next_state.clone(),
                cost: step.cost,
            };
            writeln!(out, "{}", serde_json::to_string(&rec).map_err(json)?)?;
        }
    }
    Ok(())
}

pub fn read_dataset<S: DeserializeOwned, R: BufRead>(input: R) -> Result<ExpertDataset<S>> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::invalid("empty dataset file"))??;
    let header: DatasetHeader =
        serde_json::from_str(&first).map_err(|e| Error::invalid(format!("bad dataset header: {e}")))?;
    if header.format != DATASET_FORMAT {
        return Err(Error::invalid(format!("unknown dataset format {:?}", header.format)));
    }
    let mut trajectories: Vec<Trajectory<S>> = (0..header.trajectories).map(|_| Trajectory { steps: Vec::new() }).collect();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record<S> =
            serde_json::from_str(&line).map_err(|e| Error::invalid(format!("dataset line {}: {e}", i + 2)))?;
        let traj = trajectories
            .get_mut(rec.episode)
            .ok_or_else(|| Error::invalid(format!("dataset line {}: episode {} out of range", i + 2, rec.episode)))?;
        traj.steps.push(Step {
            stage: rec.h,
            state: rec.state,
            action: rec.action,
            next_state: rec.next_state,
            cost: rec.cost,
        });
    }
    Ok(ExpertDataset {
        mode: header.mode,
        trajectories,
    })
}
