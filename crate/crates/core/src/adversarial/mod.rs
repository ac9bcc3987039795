//! Online learning in adversarial linear MDPs: optimistic policy evaluation
//! with batched exponential-weights policy improvement, for finite-horizon
//! and discounted problems.

mod cost_stream;
mod finite;
mod infinite;
mod q;

pub use cost_stream::{cost_stream_make, CostStream, CostStreamKind};
pub use finite::{mdpe_finite_run, optimistic_eval_finite, FiniteBatch, FiniteRun, MdpeParams, RoundDiag};
pub use infinite::{mdpe_infinite_run, optimistic_eval_infinite, InfiniteBatch, InfiniteLearner, InfiniteRun};
pub use q::{Epoch, ExpWeightsPolicy, FunctionalQ, GreedyPolicy, QStack};
