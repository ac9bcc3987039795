use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{project_l2_ball, WeightVec};
use crate::seed::Seed;

/// How the adversarial cost weights are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum CostStreamKind {
    /// The same weights every round.
    Fixed(WeightVec),
    /// `w ← Π_ball(w + step · u)` with `u` uniform on the unit sphere, one walk per stage.
    RandomWalk { start: WeightVec, step: f64 },
    /// Explicit per-round weights (shared by every stage).
    Scripted(Vec<WeightVec>),
}

/// Cost weights `w^k_h` for rounds `k = 0..K` and stages `h = 0..stages`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostStream {
    rounds: Vec<Vec<WeightVec>>,
}

impl CostStream {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn round(&self, k: usize) -> &[WeightVec] {
        &self.rounds[k]
    }

    pub fn stage(&self, k: usize, h: usize) -> &WeightVec {
        &self.rounds[k][h]
    }

    pub fn num_stages(&self) -> usize {
        self.rounds.first().map_or(0, Vec::len)
    }

    pub fn from_rounds(rounds: Vec<Vec<WeightVec>>) -> Result<Self> {
        for w in rounds.iter().flatten() {
            if w.norm() > 1.0 + 1e-12 {
                return Err(Error::invalid("cost weights must lie in the unit ball"));
            }
        }
        Ok(Self { rounds })
    }
}

pub fn cost_stream_make(
    kind: &CostStreamKind,
    dim: usize,
    rounds: usize,
    stages: usize,
    seed: Seed,
) -> Result<CostStream> {
    if stages == 0 {
        return Err(Error::invalid("a cost stream needs at least one stage"));
    }
    let check = |w: &WeightVec| -> Result<()> {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
        if w.norm() > 1.0 + 1e-12 {
            return Err(Error::invalid(format!("cost weights with norm {} exceed 1", w.norm())));
        }
        Ok(())
    };
    let out = match kind {
        CostStreamKind::Fixed(w) => {
            check(w)?;
            vec![vec![w.clone(); stages]; rounds]
        }
        CostStreamKind::Scripted(list) => {
            if list.len() < rounds {
                return Err(Error::invalid(format!(
                    "scripted stream has {} rounds, {} requested",
                    list.len(),
                    rounds
                )));
            }
            for w in list {
                check(w)?;
            }
            list[..rounds].iter().map(|w| vec![w.clone(); stages]).collect()
        }
        CostStreamKind::RandomWalk { start, step } => {
            if start.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: start.len(),
                });
            }
            let mut rng = seed.stream("cost-stream");
            let mut current = vec![project_l2_ball(start); stages];
            let mut out = Vec::with_capacity(rounds);
            for _ in 0..rounds {
                out.push(current.clone());
                for w in current.iter_mut() {
                    let dir = WeightVec::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
                    let norm = dir.norm();
                    if norm > 0.0 {
                        *w = project_l2_ball(&(&*w + dir * (*step / norm)));
                    }
                }
            }
            out
        }
    };
    Ok(CostStream { rounds: out })
}
