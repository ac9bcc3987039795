use serde::{Deserialize, Serialize};

use crate::env::{FeatureMap, Step};
use crate::error::{Error, Result};
use crate::linalg::{project_box, project_l2_ball, FeatVec, WeightVec};

/// Feasible set of the cost player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// `‖w‖₂ ≤ 1` (ILARL).
    Ball,
    /// `0 ≤ w ≤ 1` entrywise (BRIG).
    UnitBox,
}

impl Projection {
    pub fn apply(&self, w: &WeightVec) -> WeightVec {
        match self {
            Projection::Ball => project_l2_ball(w),
            Projection::UnitBox => project_box(w, 0.0, 1.0),
        }
    }

    pub fn contains(&self, w: &WeightVec) -> bool {
        match self {
            Projection::Ball => w.norm() <= 1.0 + 1e-12,
            Projection::UnitBox => w.iter().all(|x| (0.0..=1.0).contains(x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostPlayerState {
    pub w: WeightVec,
    pub alpha: f64,
    pub projection: Projection,
}

impl CostPlayerState {
    pub fn zeros(dim: usize, alpha: f64, projection: Projection) -> Self {
        Self {
            w: WeightVec::zeros(dim),
            alpha,
            projection,
        }
    }
}

/// `w' = Π[w - α (expert_feat - learner_feat)]`.
pub fn ogd_cost_update(state: &CostPlayerState, expert_feat: &FeatVec, learner_feat: &FeatVec) -> Result<CostPlayerState> {
    let d = state.w.len();
    for f in [expert_feat, learner_feat] {
        if f.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: f.len() });
        }
    }
    let step = &state.w - (expert_feat - learner_feat) * state.alpha;
    Ok(CostPlayerState {
        w: state.projection.apply(&step),
        alpha: state.alpha,
        projection: state.projection,
    })
}

/// Mean feature over a batch of occupancy samples.
pub fn estimate_learner_feat<S>(samples: &[Step<S>], fm: &dyn FeatureMap<S>) -> Result<FeatVec> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot estimate learner features from an empty batch"));
    }
    let sum = samples
        .iter()
        .fold(FeatVec::zeros(fm.dim()), |acc, s| acc + fm.features(&s.state, s.action));
    Ok(sum / samples.len() as f64)
}
