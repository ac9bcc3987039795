use rand::RngCore;

use super::cost_player::{ogd_cost_update, CostPlayerState, Projection};
use super::schedule::ScheduleParams;
use super::{draw_output_round, RunResult};
use crate::adversarial::InfiniteLearner;
use crate::env::{default_max_len, Environment};
use crate::error::{Error, Result};
use crate::eval::MetricTrace;
use crate::expert::{feat_exp_discounted, ExpertDataset};
use crate::policy::SharedPolicy;

/// ILARL: OGD on the cost weights against the on-policy MDP-E learner.
///
/// Per batch `j`: `τ` occupancy samples with `π^(j)`; per round `k` in the
/// batch, the cost update uses the batch feature estimate while the optimistic
/// evaluation consumes the pre-update weights `w^k`; the batch ends with an
/// exponential-weights step.
pub fn ilarl_run<E>(
    env: &E,
    expert_ds: &ExpertDataset<E::State>,
    params: &ScheduleParams,
    rng: &mut dyn RngCore,
) -> Result<RunResult<E::State>>
where
    E: Environment,
{
    params.validate()?;
    let gamma = params
        .gamma
        .ok_or_else(|| Error::invalid("ILARL needs a discount factor"))?;
    let fm = env.feature_map();
    let expert_feat = feat_exp_discounted(expert_ds, fm.as_ref(), gamma)?;
    let max_len = params.max_len.unwrap_or_else(|| default_max_len(gamma));
    let mut learner = InfiniteLearner::new(fm.clone(), gamma, params.beta, params.eta, params.tau, max_len);
    let mut player = CostPlayerState::zeros(fm.dim(), params.alpha, Projection::Ball);
    let batches = params.rounds / params.tau;
    let mut round_policies: Vec<SharedPolicy<E::State>> = Vec::with_capacity(batches * params.tau);
    let mut cost_weights = Vec::with_capacity(batches * params.tau);
    let mut trace = MetricTrace::new();
    for j in 0..batches {
        let batch = learner.begin_batch(env, rng)?;
        let learner_feat = batch.mean_features();
        let bonus_mass = batch.bonus_mass();
        let policy: SharedPolicy<E::State> = learner.policy().clone();
        let first = j * params.tau;
        trace.push(first, "feature_gap", (&expert_feat - &learner_feat).norm(), None);
        trace.push(first, "bonus_mass", bonus_mass, None);
        for _ in 0..params.tau {
            round_policies.push(policy.clone());
            cost_weights.push(vec![player.w.clone()]);
            let next = ogd_cost_update(&player, &expert_feat, &learner_feat)?;
            learner.round(&player.w)?;
            player = next;
        }
        trace.push(first, "cost_norm", player.w.norm(), None);
        learner.end_batch()?;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TabularMdp;
    use crate::expert::{collect_expert_dataset, DatasetMode};
    use crate::policy::TabularPolicy;
    use crate::seed::Seed;

    fn params(rounds: usize, tau: usize) -> ScheduleParams {
        ScheduleParams {
            rounds,
            tau,
            eta: 1.0,
            alpha: 0.3,
            beta: 0.5,
            gamma: Some(0.8),
            horizon: None,
            tau_e: None,
            max_len: Some(100),
            formulas: vec![],
        }
    }

    fn setup() -> (TabularMdp, ExpertDataset<usize>) {
        let m = TabularMdp::random(4, 2, 2, &mut Seed(1).stream("m"));
        let expert = TabularPolicy::deterministic(&[vec![0, 1, 0, 1]], 2);
        let ds = collect_expert_dataset(
            &m,
            &expert,
            3,
            DatasetMode::Truncated { gamma: 0.8, len: 30 },
            &mut Seed(2).stream("e"),
        )
        .unwrap();
        (m, ds)
    }

    #[test]
    fn smallest_instance_runs() {
        let (m, ds) = setup();
        let r = ilarl_run(&m, &ds, &params(1, 1), &mut Seed(3).stream("a")).unwrap();
        assert_eq!(r.rounds(), 1);
        assert_eq!(r.output_round, 1);
        assert_eq!(r.episodes, 1);
        assert_eq!(r.cost_weights[0][0], crate::linalg::WeightVec::zeros(8));
    }

    #[test]
    fn runs_are_reproducible_and_weights_stay_in_the_ball() {
        let (m, ds) = setup();
        let a = ilarl_run(&m, &ds, &params(40, 5), &mut Seed(3).stream("a")).unwrap();
        let b = ilarl_run(&m, &ds, &params(40, 5), &mut Seed(3).stream("a")).unwrap();
        assert_eq!(a.cost_weights, b.cost_weights);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.output_round, b.output_round);
        for s in 0..4 {
            assert_eq!(a.last_policy().action_probs(&s, 0), b.last_policy().action_probs(&s, 0));
        }
        assert!(a.cost_weights.iter().all(|w| w[0].norm() <= 1.0 + 1e-12));
        assert!(ilarl_run(&m, &ds, &params(4, 5), &mut Seed(3).stream("a")).is_err());
    }
}
