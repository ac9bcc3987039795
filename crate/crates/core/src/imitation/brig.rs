use std::sync::Arc;

use rand::RngCore;

use super::cost_player::{ogd_cost_update, CostPlayerState, Projection};
use super::schedule::ScheduleParams;
use super::{draw_output_round, RunResult};
use crate::adversarial::{FunctionalQ, GreedyPolicy};
use crate::env::{sample_episode_finite, Environment};
use crate::error::{Error, Result};
use crate::eval::MetricTrace;
use crate::expert::{feat_exp_per_stage, ExpertDataset};
use crate::linalg::{ClipRange, CovStats, FeatVec, WeightVec};
use crate::policy::{SharedPolicy, UniformPolicy};

/// BRIG: one episode per round, per-stage OGD on box-constrained cost
/// weights, and a greedy best response to the next round's cost computed by
/// optimistic LSVI over all data so far.
pub fn brig_run<E>(
    env: &E,
    expert_ds: &ExpertDataset<E::State>,
    params: &ScheduleParams,
    rng: &mut dyn RngCore,
) -> Result<RunResult<E::State>>
where
    E: Environment,
{
    params.validate()?;
    let horizon = params
        .horizon
        .filter(|&h| h > 0)
        .ok_or_else(|| Error::invalid("BRIG needs a positive horizon"))?;
    let fm = env.feature_map();
    let d = fm.dim();
    let expert_feats = feat_exp_per_stage(expert_ds, fm.as_ref(), horizon)?;
    let mut players = vec![CostPlayerState::zeros(d, params.alpha, Projection::UnitBox); horizon];
    let mut covs = vec![CovStats::identity(d); horizon];
    // (φ(s,a), φ(s',·)) per stage
    let mut data: Vec<Vec<(FeatVec, Vec<FeatVec>)>> = vec![Vec::new(); horizon];
    let mut policy: SharedPolicy<E::State> = Arc::new(UniformPolicy::new(fm.num_actions()));
    let mut round_policies = Vec::with_capacity(params.rounds);
    let mut cost_weights = Vec::with_capacity(params.rounds);
    let mut trace = MetricTrace::new();
    for k in 0..params.rounds {
        let traj = sample_episode_finite(env, policy.as_ref(), horizon, rng);
        round_policies.push(policy.clone());
        cost_weights.push(players.iter().map(|p| p.w.clone()).collect::<Vec<_>>());
        let mut gap = 0.0;
        for step in &traj.steps {
            let h = step.stage;
            let phi = fm.features(&step.state, step.action);
            covs[h].push(&phi)?;
            players[h] = ogd_cost_update(&players[h], &expert_feats[h], &phi)?;
            gap += (&expert_feats[h] - &phi).norm();
            data[h].push((phi, fm.all_actions(&step.next_state)));
        }
        trace.push(k, "feature_gap", gap, None);

        let mut stages: Vec<FunctionalQ> = Vec::with_capacity(horizon);
        for h in (0..horizon).rev() {
            let cov = Arc::new(covs[h].clone());
            let value_v = match stages.last() {
                None => WeightVec::zeros(d),
                Some(next_q) => {
                    let mut rhs = WeightVec::zeros(d);
                    for (phi, next) in &data[h] {
                        // the greedy policy attains the minimum of Q
                        let v = next.iter().map(|p| next_q.eval_phi(p)).fold(f64::INFINITY, f64::min);
                        rhs.axpy(v, phi, 1.0);
                    }
                    cov.solve(&rhs)
                }
            };
            stages.push(FunctionalQ::new(
                players[h].w.clone(),
                value_v,
                1.0,
                cov,
                params.beta,
                ClipRange::finite_stage(horizon, h + 1),
            ));
        }
        stages.reverse();
        policy = Arc::new(GreedyPolicy::new(stages, fm.clone()));
    }
    let rounds = round_policies.len();
    Ok(RunResult {
        round_policies,
        cost_weights,
        output_round: draw_output_round(rounds, rng),
        episodes: rounds,
        trace,
    })
}
