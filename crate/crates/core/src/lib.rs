//! Imitation learning via adversarial online RL in linear MDPs.
//!
//! The crate contains the environments (continuous gridworld, linear bandit,
//! tabular MDPs with exact dynamic-programming oracles), the online policy
//! player for adversarial costs, the imitation drivers ILARL and BRIG, the
//! expert and behavioral-cloning baselines, and evaluation helpers.

pub mod adversarial;
pub mod env;
pub mod error;
pub mod eval;
pub mod expert;
pub mod imitation;
pub mod linalg;
pub mod policy;
pub mod seed;

pub use error::{Error, Result};
pub use linalg::{ClipRange, CovStats, FeatVec, WeightVec};
pub use policy::{Policy, SharedPolicy};
pub use seed::Seed;
