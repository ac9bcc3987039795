//! Imitation drivers: the OGD cost player, ILARL (discounted), BRIG
//! (finite horizon) and theorem-derived hyperparameter schedules.

mod brig;
mod cost_player;
mod ilarl;
mod schedule;

pub use brig::brig_run;
pub use cost_player::{estimate_learner_feat, ogd_cost_update, CostPlayerState, Projection};
pub use ilarl::ilarl_run;
pub use schedule::{schedule_from_theorems, ScheduleEntry, ScheduleInputs, ScheduleKind, ScheduleParams};

use rand::{Rng, RngCore};

use crate::eval::MetricTrace;
use crate::linalg::WeightVec;
use crate::policy::SharedPolicy;

/// Everything an imitation run produced.
pub struct RunResult<S> {
    /// `π^k` for every played round.
    pub round_policies: Vec<SharedPolicy<S>>,
    /// `w^k` per round and stage (one stage in the discounted setting).
    pub cost_weights: Vec<Vec<WeightVec>>,
    /// 1-based round of the uniformly drawn output policy.
    pub output_round: usize,
    /// Environment episodes consumed.
    pub episodes: usize,
    pub trace: MetricTrace,
}

impl<S> RunResult<S> {
    pub fn rounds(&self) -> usize {
        self.round_policies.len()
    }

    pub fn output_policy(&self) -> &SharedPolicy<S> {
        &self.round_policies[self.output_round - 1]
    }

    pub fn last_policy(&self) -> &SharedPolicy<S> {
        self.round_policies.last().expect("runs have at least one round")
    }
}

fn draw_output_round(rounds: usize, rng: &mut dyn RngCore) -> usize {
    rng.random_range(1..=rounds)
}
