use std::sync::Arc;

use rand::RngCore;
use serde::Serialize;

use super::cost_stream::CostStream;
use super::q::{Epoch, ExpWeightsPolicy, FunctionalQ, QStack};
use crate::env::{sample_episode_finite, Environment, FeatureMap, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{ClipRange, CovStats, FeatVec, WeightVec};
use crate::policy::Policy;

/// Per-stage regression data of one batch, with the batch policy's action
/// distribution cached at every next state.
pub struct FiniteBatch {
    horizon: usize,
    beta: f64,
    covs: Vec<Arc<CovStats>>,
    phis: Vec<Vec<FeatVec>>,
    // [stage][sample][action]
    next_phis: Vec<Vec<Vec<FeatVec>>>,
    next_probs: Vec<Vec<Vec<f64>>>,
}

impl FiniteBatch {
    pub fn new<S>(
        trajectories: &[Trajectory<S>],
        features: &dyn FeatureMap<S>,
        policy: &dyn Policy<S>,
        beta: f64,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        let d = features.dim();
        let mut phis = vec![Vec::new(); horizon];
        let mut next_phis = vec![Vec::new(); horizon];
        let mut next_probs = vec![Vec::new(); horizon];
        for traj in trajectories {
            for step in &traj.steps {
                let h = step.stage;
                if h >= horizon {
                    return Err(Error::invalid(format!("step stage {h} beyond horizon {horizon}")));
                }
                phis[h].push(features.features(&step.state, step.action));
                if h + 1 < horizon {
                    next_phis[h].push(features.all_actions(&step.next_state));
                    next_probs[h].push(policy.action_probs(&step.next_state, h + 1));
                }
            }
        }
        let covs = phis
            .iter()
            .map(|stage| CovStats::build(d, stage.iter()).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            horizon,
            beta,
            covs,
            phis,
            next_phis,
            next_probs,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cov(&self, stage: usize) -> &Arc<CovStats> {
        &self.covs[stage]
    }

    pub fn samples(&self, stage: usize) -> usize {
        self.phis[stage].len()
    }

    /// `Σ_h Σ_i b_h(φ_i)` over the batch data.
    pub fn bonus_mass(&self) -> f64 {
        self.phis
            .iter()
            .zip(&self.covs)
            .map(|(stage, cov)| stage.iter().map(|p| self.beta * cov.inv_quad(p).sqrt()).sum::<f64>())
            .sum()
    }

    /// Backward optimistic evaluation of the batch policy under per-stage costs.
    /// Returns `Q_h` for `h = 0..H`.
    pub fn evaluate(&self, costs: &[WeightVec]) -> Result<Vec<FunctionalQ>> {
        if costs.len() != self.horizon {
            return Err(Error::DimensionMismatch {
                expected: self.horizon,
                got: costs.len(),
            });
        }
        let d = self.covs[0].dim();
        let mut out: Vec<Option<FunctionalQ>> = vec![None; self.horizon];
        for h in (0..self.horizon).rev() {
            let value_v = if h + 1 == self.horizon {
                WeightVec::zeros(d)
            } else {
                let next_q = out[h + 1].as_ref().expect("later stage evaluated first");
                let mut rhs = WeightVec::zeros(d);
                for ((phi, next), probs) in self.phis[h].iter().zip(&self.next_phis[h]).zip(&self.next_probs[h]) {
                    let v: f64 = next.iter().zip(probs).map(|(np, p)| p * next_q.eval_phi(np)).sum();
                    rhs.axpy(v, phi, 1.0);
                }
                self.covs[h].solve(&rhs)
            };
            out[h] = Some(FunctionalQ::new(
                costs[h].clone(),
                value_v,
                1.0,
                self.covs[h].clone(),
                self.beta,
                ClipRange::finite_stage(self.horizon, h + 1),
            ));
        }
        Ok(out.into_iter().map(|q| q.expect("every stage evaluated")).collect())
    }
}

/// Optimistic evaluation of `policy` on freshly collected batch data.
pub fn optimistic_eval_finite<S>(
    trajectories: &[Trajectory<S>],
    costs: &[WeightVec],
    policy: &dyn Policy<S>,
    beta: f64,
    horizon: usize,
    features: &dyn FeatureMap<S>,
) -> Result<Vec<FunctionalQ>> {
    FiniteBatch::new(trajectories, features, policy, beta, horizon)?.evaluate(costs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdpeParams {
    pub rounds: usize,
    pub tau: usize,
    pub beta: f64,
    pub eta: f64,
}

impl MdpeParams {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.tau == 0 {
            return Err(Error::invalid("K and tau must be at least 1"));
        }
        if self.tau > self.rounds {
            return Err(Error::invalid(format!("tau = {} exceeds K = {}", self.tau, self.rounds)));
        }
        if !(self.beta >= 0.0) || !(self.eta >= 0.0) {
            return Err(Error::invalid("beta and eta must be non-negative"));
        }
        Ok(())
    }

    pub fn batches(&self) -> usize {
        self.rounds / self.tau
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundDiag {
    pub round: usize,
    pub batch: usize,
    /// Number of epochs of the policy that generated this round's data.
    pub policy_epochs: usize,
    pub bonus_mass: f64,
}

pub struct FiniteRun<S> {
    /// `policies[j]` is `π^(j)`; the last entry is the policy after the final update.
    pub policies: Vec<Arc<ExpWeightsPolicy<S>>>,
    pub round_batch: Vec<usize>,
    /// Per-round, per-stage optimistic Q estimates.
    pub q: Vec<Vec<FunctionalQ>>,
    pub trajectories: Vec<Trajectory<S>>,
    pub diagnostics: Vec<RoundDiag>,
}

impl<S> FiniteRun<S> {
    pub fn round_policy(&self, k: usize) -> &Arc<ExpWeightsPolicy<S>> {
        &self.policies[self.round_batch[k]]
    }

    pub fn rounds(&self) -> usize {
        self.round_batch.len()
    }
}

/// On-policy MDP-E for finite-horizon adversarial linear MDPs. Uses
/// `⌊K/τ⌋·τ` rounds of the stream; the remainder is dropped.
pub fn mdpe_finite_run<E: Environment>(
    env: &E,
    stream: &CostStream,
    params: MdpeParams,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<FiniteRun<E::State>> {
    params.validate()?;
    if stream.len() < params.rounds {
        return Err(Error::invalid(format!(
            "cost stream has {} rounds, K = {}",
            stream.len(),
            params.rounds
        )));
    }
    if stream.num_stages() != horizon {
        return Err(Error::DimensionMismatch {
            expected: horizon,
            got: stream.num_stages(),
        });
    }
    let fm = env.feature_map();
    let mut policy = Arc::new(ExpWeightsPolicy::uniform(params.eta, fm.clone()));
    let mut run = FiniteRun {
        policies: vec![policy.clone()],
        round_batch: Vec::new(),
        q: Vec::new(),
        trajectories: Vec::new(),
        diagnostics: Vec::new(),
    };
    for j in 0..params.batches() {
        let trajs: Vec<_> = (0..params.tau)
            .map(|_| sample_episode_finite(env, policy.as_ref(), horizon, rng))
            .collect();
        let batch = FiniteBatch::new(&trajs, fm.as_ref(), policy.as_ref(), params.beta, horizon)?;
        let bonus_mass = batch.bonus_mass();
        let mut stacks: Vec<QStack> = (0..horizon)
            .map(|h| QStack::new(batch.cov(h).clone(), params.beta, ClipRange::finite_stage(horizon, h + 1)))
            .collect();
        for i in 0..params.tau {
            let k = j * params.tau + i;
            let qs = batch.evaluate(stream.round(k))?;
            for (stack, q) in stacks.iter_mut().zip(&qs) {
                stack.push(q);
            }
            run.q.push(qs);
            run.round_batch.push(j);
            run.diagnostics.push(RoundDiag {
                round: k,
                batch: j,
                policy_epochs: policy.num_epochs(),
                bonus_mass,
            });
        }
        run.trajectories.extend(trajs);
        policy = Arc::new(policy.with_epoch(Epoch::new(stacks)));
        run.policies.push(policy.clone());
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversarial::{cost_stream_make, CostStreamKind};
    use crate::env::TabularMdp;
    use crate::seed::Seed;

    fn small_mdp() -> TabularMdp {
        TabularMdp::random(4, 2, 2, &mut Seed(3).stream("mdp"))
    }

    #[test]
    fn single_stage_is_clipped_cost_minus_bonus() {
        let m = small_mdp();
        let fm = m.feature_map();
        let pi = crate::policy::UniformPolicy::new(2);
        let mut rng = Seed(0).stream("r");
        let trajs: Vec<_> = (0..5).map(|_| sample_episode_finite(&m, &pi, 1, &mut rng)).collect();
        let w = WeightVec::from_fn(8, |i, _| 0.1 * i as f64);
        let qs = optimistic_eval_finite(&trajs, &[w.clone()], &pi, 0.7, 1, fm.as_ref()).unwrap();
        for s in 0..4 {
            for a in 0..2 {
                let phi = fm.features(&s, a);
                let expect = (phi.dot(&w) - qs[0].bonus_phi(&phi)).clamp(-1.0, 1.0);
                assert!((qs[0].eval_phi(&phi) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_cost_without_data_is_non_positive() {
        let m = small_mdp();
        let fm = m.feature_map();
        let pi = crate::policy::UniformPolicy::new(2);
        let qs = optimistic_eval_finite::<usize>(&[], &vec![WeightVec::zeros(8); 3], &pi, 0.5, 3, fm.as_ref()).unwrap();
        for (h, q) in qs.iter().enumerate() {
            for s in 0..4 {
                let phi = fm.features(&s, 1);
                let v = q.eval_phi(&phi);
                assert!(v <= 0.0);
                assert!(v.abs() <= (3 - h) as f64);
            }
        }
    }

    #[test]
    fn one_batch_means_one_update_and_runs_are_reproducible() {
        let m = small_mdp();
        let stream = cost_stream_make(
            &CostStreamKind::RandomWalk {
                start: WeightVec::from_element(8, 0.2),
                step: 0.2,
            },
            8,
            12,
            3,
            Seed(1),
        )
        .unwrap();
        let p = MdpeParams {
            rounds: 6,
            tau: 6,
            beta: 0.5,
            eta: 1.0,
        };
        let run = mdpe_finite_run(&m, &stream, p, 3, &mut Seed(2).stream("a")).unwrap();
        assert_eq!(run.policies.len(), 2);
        assert_eq!(run.policies[1].num_epochs(), 1);

        let p = MdpeParams { rounds: 11, tau: 3, ..p };
        let a = mdpe_finite_run(&m, &stream, p, 3, &mut Seed(2).stream("a")).unwrap();
        let b = mdpe_finite_run(&m, &stream, p, 3, &mut Seed(2).stream("a")).unwrap();
        assert_eq!(a.rounds(), 9);
        assert_eq!(a.diagnostics, b.diagnostics);
        assert_eq!(a.trajectories, b.trajectories);
        for d in &a.diagnostics {
            assert_eq!(d.policy_epochs, d.batch);
        }
        for s in 0..4 {
            assert_eq!(a.policies[3].action_probs(&s, 1), b.policies[3].action_probs(&s, 1));
        }
    }

    #[test]
    fn short_stream_is_rejected() {
        let m = small_mdp();
        let stream = cost_stream_make(&CostStreamKind::Fixed(WeightVec::zeros(8)), 8, 4, 2, Seed(0)).unwrap();
        let p = MdpeParams {
            rounds: 5,
            tau: 1,
            beta: 0.0,
            eta: 1.0,
        };
        assert!(mdpe_finite_run(&m, &stream, p, 2, &mut Seed(0).stream("a")).is_err());
    }
}
