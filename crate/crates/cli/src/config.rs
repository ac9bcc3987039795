//! Experiment configuration: one TOML document per run.
//!
//! Every block rejects unknown keys, and every numeric hyperparameter is
//! spelled out. The only implicit values are documented on the field.

use serde::{Deserialize, Serialize};

use ilarl_core::eval::ValueMode;
use ilarl_core::expert::DatasetMode;
use ilarl_core::imitation::ScheduleKind;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    /// Root for run directories; the CLI `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub env: EnvConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert: Option<ExpertConfig>,
    /// Learners run in order on the same environment and expert data.
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgorithmConfig>,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    /// Continuous gridworld; a move displaces the agent by `a/10 · action_scale`.
    Gridworld { sigma: f64, action_scale: f64 },
    /// Gaussian features `N(0, 1/d)` and true weights `[0, 1, 0, 1, ...]`.
    /// Without `env_seed` the instance is drawn from the run seed.
    Bandit {
        n_actions: usize,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        env_seed: Option<u64>,
    },
    /// Random one-hot tabular MDP; each pair reaches `branching` successors.
    Tabular {
        n_states: usize,
        n_actions: usize,
        branching: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        env_seed: Option<u64>,
    },
}

impl EnvConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            EnvConfig::Gridworld { .. } => "gridworld",
            EnvConfig::Bandit { .. } => "bandit",
            EnvConfig::Tabular { .. } => "tabular",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertConfig {
    pub policy: ExpertPolicyConfig,
    /// Probability of replacing the expert action by a uniform one.
    pub mix: f64,
    /// Number of expert trajectories `τ_E`.
    pub n_traj: usize,
    pub dataset: DatasetMode,
    /// Read the dataset from a JSONL file instead of collecting it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpertPolicyConfig {
    /// Greedy policy of LSVI-UCB trained on the true cost. The training seed
    /// is fixed so every run seed imitates the same expert. `stationary`
    /// plays the first-stage policy at every step (discounted learners).
    Lsvi {
        horizon: usize,
        episodes: usize,
        beta: f64,
        train_seed: u64,
        stationary: bool,
    },
    /// Bandit only: `p(a) ∝ exp(-c(a) / temperature)`.
    Softmax { temperature: f64 },
}

/// Hyperparameters derived from a regret-bound schedule; replaces the explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    pub beta_const: f64,
    pub delta: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamConfig {
    /// Per-stage random walk on the unit ball; `start = None` is the zero vector.
    RandomWalk {
        step: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<Vec<f64>>,
    },
    Fixed { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    Ilarl {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        rounds: usize,
        gamma: f64,
        #[serde(flatten)]
        params: Hyper,
        /// Rollout cap for occupancy draws; `None` is `⌈10/(1-γ)⌉`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_len: Option<usize>,
    },
    Brig {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        rounds: usize,
        horizon: usize,
        #[serde(flatten)]
        params: Hyper,
    },
    Bc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        steps: usize,
        lr: f64,
    },
    MdpeFinite {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        rounds: usize,
        horizon: usize,
        stream: StreamConfig,
        #[serde(flatten)]
        params: Hyper,
    },
    MdpeInfinite {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        rounds: usize,
        gamma: f64,
        max_len: usize,
        stream: StreamConfig,
        #[serde(flatten)]
        params: Hyper,
    },
    /// Runs MDP-E for `β = c · order` over `beta_consts` (order `dH` or
    /// `d/(1-γ)`) and counts violations of the optimism sandwich.
    OptimismSweep {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        rounds: usize,
        tau: usize,
        eta: f64,
        setting: SweepSetting,
        stream: StreamConfig,
        beta_consts: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSetting {
    Finite { horizon: usize },
    Infinite { gamma: f64, max_len: usize },
}

/// Explicit hyperparameters, or a schedule that derives them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
}

impl AlgorithmConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            AlgorithmConfig::Ilarl { .. } => "ilarl",
            AlgorithmConfig::Brig { .. } => "brig",
            AlgorithmConfig::Bc { .. } => "bc",
            AlgorithmConfig::MdpeFinite { .. } => "mdpe_finite",
            AlgorithmConfig::MdpeInfinite { .. } => "mdpe_infinite",
            AlgorithmConfig::OptimismSweep { .. } => "optimism_sweep",
        }
    }

    /// Metric prefix and summary key.
    pub fn label(&self) -> String {
        let label = match self {
            AlgorithmConfig::Ilarl { label, .. }
            | AlgorithmConfig::Brig { label, .. }
            | AlgorithmConfig::Bc { label, .. }
            | AlgorithmConfig::MdpeFinite { label, .. }
            | AlgorithmConfig::MdpeInfinite { label, .. }
            | AlgorithmConfig::OptimismSweep { label, .. } => label,
        };
        label.clone().unwrap_or_else(|| self.kind().to_string())
    }

    fn rounds_mut(&mut self) -> Option<&mut usize> {
        match self {
            AlgorithmConfig::Ilarl { rounds, .. }
            | AlgorithmConfig::Brig { rounds, .. }
            | AlgorithmConfig::MdpeFinite { rounds, .. }
            | AlgorithmConfig::MdpeInfinite { rounds, .. }
            | AlgorithmConfig::OptimismSweep { rounds, .. } => Some(rounds),
            AlgorithmConfig::Bc { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Monte-Carlo episodes per evaluated policy (gridworld only; bandit and
    /// tabular values are exact).
    pub n_eval: usize,
    /// Episodes for the expert and uniform reference returns.
    pub n_reference: usize,
    /// Evaluate every `cadence` rounds; `None` evaluates whenever the policy
    /// can change (every `τ` rounds, every round for BRIG).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cadence: Option<usize>,
    /// Fraction of final evaluated policies averaged into the `last` summary.
    pub last_fraction: f64,
    pub mode: ValueMode,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.experiment.is_empty() {
            return bad("experiment name is empty".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one [[algorithm]] block is required".into());
        }
        let mut labels: Vec<String> = self.algorithms.iter().map(|a| a.label()).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("algorithm labels must be unique; set `label` to tell them apart".into());
        }
        if self.eval.n_eval == 0 || self.eval.n_reference == 0 {
            return bad("n_eval and n_reference must be positive".into());
        }
        if !(self.eval.last_fraction > 0.0 && self.eval.last_fraction <= 1.0) {
            return bad(format!("last_fraction must lie in (0, 1], got {}", self.eval.last_fraction));
        }
        match &self.env {
            EnvConfig::Gridworld { sigma, action_scale } => {
                if !(0.0..=1.0).contains(sigma) || !(*action_scale > 0.0) {
                    return bad("gridworld needs sigma in [0, 1] and a positive action_scale".into());
                }
            }
            EnvConfig::Bandit { n_actions, dim, .. } => {
                if *n_actions < 2 || *dim == 0 {
                    return bad("bandit needs at least two actions and a positive dimension".into());
                }
            }
            EnvConfig::Tabular {
                n_states,
                n_actions,
                branching,
                ..
            } => {
                if *n_states == 0 || *n_actions == 0 || *branching == 0 {
                    return bad("tabular sizes must be positive".into());
                }
            }
        }
        let imitation = self
            .algorithms
            .iter()
            .any(|a| matches!(a, AlgorithmConfig::Ilarl { .. } | AlgorithmConfig::Brig { .. } | AlgorithmConfig::Bc { .. }));
        if imitation {
            let Some(expert) = &self.expert else {
                return bad("imitation learners need an [expert] block".into());
            };
            if expert.n_traj == 0 || !(0.0..=1.0).contains(&expert.mix) {
                return bad("expert needs n_traj >= 1 and mix in [0, 1]".into());
            }
            if matches!(self.env, EnvConfig::Tabular { .. }) {
                return bad("imitation learners run on the gridworld or the bandit".into());
            }
        }
        for alg in &self.algorithms {
            let (AlgorithmConfig::MdpeFinite { .. } | AlgorithmConfig::MdpeInfinite { .. } | AlgorithmConfig::OptimismSweep { .. }) = alg else {
                continue;
            };
            if !matches!(self.env, EnvConfig::Tabular { .. }) {
                return bad(format!("{} needs the tabular environment (exact regret oracle)", alg.kind()));
            }
        }
        Ok(())
    }

    /// Shrinks every budget so the run finishes in seconds.
    pub fn smoke(mut self) -> Self {
        for alg in &mut self.algorithms {
            let cap = match alg {
                AlgorithmConfig::Brig { .. } => 20,
                AlgorithmConfig::OptimismSweep { tau, .. } => 2 * *tau,
                AlgorithmConfig::Ilarl { params, .. } => 4 * params.tau.unwrap_or(5),
                _ => 64,
            };
            if let Some(rounds) = alg.rounds_mut() {
                *rounds = (*rounds).min(cap);
            }
            if let AlgorithmConfig::Ilarl { params, rounds, .. } = alg {
                if let Some(tau) = params.tau.as_mut() {
                    *tau = (*tau).min(*rounds);
                }
            }
            if let AlgorithmConfig::Bc { steps, .. } = alg {
                *steps = (*steps).min(50);
            }
        }
        if let Some(ExpertConfig {
            policy: ExpertPolicyConfig::Lsvi { episodes, .. },
            ..
        }) = &mut self.expert
        {
            *episodes = (*episodes).min(30);
        }
        self.eval.n_eval = self.eval.n_eval.min(10);
        self.eval.n_reference = self.eval.n_reference.min(50);
        self
    }
}
