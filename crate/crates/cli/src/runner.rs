//! Wires a configuration to environments, experts and learners, and collects
//! metric traces and a run summary.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::Serialize;

use ilarl_core::adversarial::{
    cost_stream_make, mdpe_finite_run, mdpe_infinite_run, CostStream, CostStreamKind, GreedyPolicy, MdpeParams,
};
use ilarl_core::env::{Environment, GridState, GridWorld, LinearBandit, TabularMdp, alternating_weights};
use ilarl_core::eval::{
    exact_regret_discounted, exact_regret_finite, loglog_slope, mc_true_value, normalized_return, optimism_check_finite,
    optimism_check_infinite, Estimate, MetricRow, MetricTrace,
};
use ilarl_core::expert::{behavioral_cloning, collect_expert_dataset, make_stochastic_expert, read_dataset, train_expert_lsvi_ucb, DatasetMode, ExpertDataset};
use ilarl_core::imitation::{brig_run, ilarl_run, schedule_from_theorems, RunResult, ScheduleInputs, ScheduleKind, ScheduleParams};
use ilarl_core::policy::{FixedStage, Policy, SharedPolicy, UniformPolicy};
use ilarl_core::seed::StreamRng;
use ilarl_core::{Seed, WeightVec};

use crate::config::{
    AlgorithmConfig, EnvConfig, ExperimentConfig, ExpertConfig, ExpertPolicyConfig, Hyper, StreamConfig, SweepSetting,
};
use crate::CliError;

/// Per-learner results. Fields that do not apply stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episodes: Option<usize>,
    /// Normalized return of the uniformly drawn round policy (canonical output).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_return_out: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_round: Option<usize>,
    /// Diagnostics, not the algorithm's output: the last evaluated policy, the
    /// mean over the final `last_fraction` of evaluations, and the best one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_return_last: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_return_tail_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_return_best: Option<f64>,
    /// Mean of `V^π - V^E` (true cost) over evaluated rounds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_suboptimality: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds_played: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimism: Option<Vec<OptimismEntry>>,
    /// Smallest swept constant with zero violations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrated_beta_const: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrated_beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimismEntry {
    pub beta_const: f64,
    pub beta: f64,
    pub checked: usize,
    pub violations: usize,
    pub max_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    /// Hyperparameters actually used, per learner.
    pub schedule: BTreeMap<String, ScheduleParams>,
    pub normalized_return_out: Option<f64>,
    pub regret_final: Option<f64>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret_loglog_slope: Option<f64>,
    pub algorithms: BTreeMap<String, AlgorithmSummary>,
}

/// True-cost values (lower is better) of the expert and the uniform policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub expert_value: f64,
    pub uniform_value: f64,
}

pub struct Outcome {
    pub trace: MetricTrace,
    pub summary: Summary,
}

/// Runs every learner of the configuration; reads the expert dataset file if
/// one is configured, writes nothing.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    execute_with(cfg, &ExpertCache::default())
}

/// As [`execute`], reusing experts already trained into `cache`.
pub fn execute_with(cfg: &ExperimentConfig, cache: &ExpertCache) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let seed = Seed(cfg.seed);
    let mut acc = Accumulator::default();
    let mut reference = None;
    match &cfg.env {
        EnvConfig::Gridworld { sigma, action_scale } => {
            let env = GridWorld::new(*sigma, *action_scale)?;
            let expert = cfg.expert.as_ref().ok_or_else(|| CliError::Config("missing [expert]".into()))?;
            let policy = gridworld_expert(&env, expert, cache)?;
            let mode = cfg.eval.mode;
            let judge = |pi: &dyn Policy<GridState>, n: usize, rng: &mut StreamRng| mc_true_value(&env, pi, mode, n, rng);
            reference = Some(imitate(&env, &judge, policy, expert, cfg, &mut acc)?);
        }
        EnvConfig::Bandit { n_actions, dim, env_seed } => {
            let env_seed = env_seed.map(Seed).unwrap_or(seed);
            let env = LinearBandit::gaussian(*n_actions, *dim, alternating_weights(*dim), &mut env_seed.stream("env"))?;
            let judge = |pi: &dyn Policy<()>, _n: usize, _rng: &mut StreamRng| {
                Ok(Estimate {
                    mean: env.expected_cost(&pi.action_probs(&(), 0)),
                    stderr: 0.0,
                })
            };
            if let Some(expert) = &cfg.expert {
                let policy: SharedPolicy<()> = match &expert.policy {
                    ExpertPolicyConfig::Softmax { temperature } => Arc::new(env.softmax_expert(*temperature)?),
                    ExpertPolicyConfig::Lsvi {
                        horizon,
                        episodes,
                        beta,
                        train_seed,
                        ..
                    } => Arc::new(train_expert_lsvi_ucb(&env, *horizon, *episodes, *beta, &mut Seed(*train_seed).stream("expert"))?),
                };
                let policy: SharedPolicy<()> = Arc::new(make_stochastic_expert(policy, expert.mix)?);
                reference = Some(imitate(&env, &judge, policy, expert, cfg, &mut acc)?);
            }
        }
        EnvConfig::Tabular {
            n_states,
            n_actions,
            branching,
            env_seed,
        } => {
            let env_seed = env_seed.map(Seed).unwrap_or(seed);
            let mdp = TabularMdp::random(*n_states, *n_actions, *branching, &mut env_seed.stream("env"));
            for alg in &cfg.algorithms {
                online(&mdp, alg, seed, &mut acc)?;
            }
        }
    }
    let regret_points: Vec<(f64, f64)> = cfg
        .algorithms
        .iter()
        .filter_map(|a| {
            let s = acc.summaries.get(&a.label())?;
            Some((s.rounds_played? as f64, s.regret_final?))
        })
        .collect();
    let regret_loglog_slope = if regret_points.len() >= 2 {
        loglog_slope(&regret_points).ok()
    } else {
        None
    };
    let primary = cfg
        .algorithms
        .iter()
        .filter(|a| matches!(a, AlgorithmConfig::Ilarl { .. } | AlgorithmConfig::Brig { .. }))
        .chain(cfg.algorithms.iter().filter(|a| matches!(a, AlgorithmConfig::Bc { .. })))
        .find_map(|a| acc.summaries.get(&a.label())?.normalized_return_out);
    let regret_final = cfg
        .algorithms
        .iter()
        .rev()
        .find_map(|a| acc.summaries.get(&a.label())?.regret_final);
    let summary = Summary {
        experiment: cfg.experiment.clone(),
        seed: cfg.seed,
        schedule: acc.schedules,
        normalized_return_out: primary,
        regret_final,
        wall_time_s: start.elapsed().as_secs_f64(),
        reference,
        regret_loglog_slope,
        algorithms: acc.summaries,
    };
    Ok(Outcome {
        trace: merge_by_round(acc.rows),
        summary,
    })
}

/// Name of the seed-suffixed run directory.
pub fn run_dir_name(cfg: &ExperimentConfig) -> String {
    format!("{}_seed{}", cfg.experiment, cfg.seed)
}

/// Executes and writes `config.json`, `traces.csv` and `summary.json` into
/// `<out_root>/<experiment>_seed<N>/`.
pub fn run_experiment(cfg: &ExperimentConfig, out_root: &Path) -> Result<(PathBuf, Summary), CliError> {
    run_experiment_with(cfg, out_root, &ExpertCache::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, out_root: &Path, cache: &ExpertCache) -> Result<(PathBuf, Summary), CliError> {
    let outcome = execute_with(cfg, cache)?;
    let dir = out_root.join(run_dir_name(cfg));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    crate::output::write_json(&dir.join("config.json"), cfg)?;
    crate::output::write_trace_csv(&dir.join("traces.csv"), &outcome.trace)?;
    crate::output::write_json(&dir.join("summary.json"), &outcome.summary)?;
    Ok((dir, outcome.summary))
}

#[derive(Default)]
struct Accumulator {
    rows: Vec<MetricRow>,
    summaries: BTreeMap<String, AlgorithmSummary>,
    schedules: BTreeMap<String, ScheduleParams>,
}

/// Rows of one learner, in any round order.
#[derive(Default)]
struct Rows(Vec<MetricRow>);

impl Rows {
    fn push(&mut self, round: usize, metric: &str, value: f64, stderr: Option<f64>) {
        self.0.push(MetricRow {
            round,
            metric: metric.to_string(),
            value,
            stderr,
        });
    }
}

/// Stable sort by round: within a round, learners keep configuration order.
fn merge_by_round(mut rows: Vec<MetricRow>) -> MetricTrace {
    rows.sort_by_key(|r| r.round);
    let mut out = MetricTrace::new();
    for r in rows {
        out.push(r.round, &r.metric, r.value, r.stderr);
    }
    out
}

/// Trained gridworld experts keyed by environment and training settings.
/// Training is deterministic in its inputs, so sharing a cache between runs
/// changes wall time only. Each caller owns its cache.
#[derive(Default)]
pub struct ExpertCache(Mutex<HashMap<String, Arc<GreedyPolicy<GridState>>>>);

fn gridworld_expert(env: &GridWorld, expert: &ExpertConfig, cache: &ExpertCache) -> Result<SharedPolicy<GridState>, CliError> {
    let ExpertPolicyConfig::Lsvi {
        horizon,
        episodes,
        beta,
        train_seed,
        stationary,
    } = &expert.policy
    else {
        return Err(CliError::Config("the gridworld expert must be trained with LSVI-UCB (kind = \"lsvi\")".into()));
    };
    let key = format!("{env:?}|{horizon}|{episodes}|{beta}|{train_seed}");
    let cached = cache.0.lock().expect("expert cache poisoned").get(&key).cloned();
    let greedy = match cached {
        Some(g) => g,
        None => {
            let g = Arc::new(train_expert_lsvi_ucb(env, *horizon, *episodes, *beta, &mut Seed(*train_seed).stream("expert"))?);
            cache.0.lock().expect("expert cache poisoned").insert(key, g.clone());
            g
        }
    };
    let det: SharedPolicy<GridState> = if *stationary {
        Arc::new(FixedStage::new(greedy, 0))
    } else {
        greedy
    };
    Ok(Arc::new(make_stochastic_expert(det, expert.mix)?))
}

fn load_or_collect<E>(env: &E, expert: &dyn Policy<E::State>, cfg: &ExpertConfig, seed: Seed) -> Result<ExpertDataset<E::State>, CliError>
where
    E: Environment,
    E::State: DeserializeOwned,
{
    match &cfg.dataset_path {
        Some(path) => {
            let path = Path::new(path);
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            let ds = read_dataset(BufReader::new(file))?;
            if ds.mode != cfg.dataset {
                return Err(CliError::Config(format!(
                    "dataset file {} has mode {:?}, config says {:?}",
                    path.display(),
                    ds.mode,
                    cfg.dataset
                )));
            }
            Ok(ds)
        }
        None => Ok(collect_expert_dataset(env, expert, cfg.n_traj, cfg.dataset, &mut seed.stream("expert-data"))?),
    }
}

fn hyper_params(
    hyper: &Hyper,
    rounds: usize,
    inputs: impl FnOnce(ScheduleKind, f64, f64, f64) -> ScheduleInputs,
    needs: &[&str],
) -> Result<ScheduleParams, CliError> {
    if let Some(s) = &hyper.schedule {
        if hyper.tau.is_some() || hyper.eta.is_some() || hyper.alpha.is_some() || hyper.beta.is_some() {
            return Err(CliError::Config("give either a schedule or explicit tau/eta/alpha/beta, not both".into()));
        }
        return Ok(schedule_from_theorems(s.kind, &inputs(s.kind, s.beta_const, s.delta, s.eps))?);
    }
    let missing: Vec<&str> = needs
        .iter()
        .copied()
        .filter(|n| match *n {
            "tau" => hyper.tau.is_none(),
            "eta" => hyper.eta.is_none(),
            "alpha" => hyper.alpha.is_none(),
            "beta" => hyper.beta.is_none(),
            _ => false,
        })
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Config(format!("missing hyperparameters: {}", missing.join(", "))));
    }
    Ok(ScheduleParams {
        rounds,
        tau: hyper.tau.unwrap_or(1),
        eta: hyper.eta.unwrap_or(0.0),
        alpha: hyper.alpha.unwrap_or(0.0),
        beta: hyper.beta.unwrap_or(0.0),
        gamma: None,
        horizon: None,
        tau_e: None,
        max_len: None,
        formulas: Vec::new(),
    })
}

type Judge<'a, S> = dyn Fn(&dyn Policy<S>, usize, &mut StreamRng) -> ilarl_core::Result<Estimate> + 'a;

/// Runs the imitation learners; returns the reference values.
fn imitate<E>(
    env: &E,
    judge: &Judge<'_, E::State>,
    expert_policy: SharedPolicy<E::State>,
    expert_cfg: &ExpertConfig,
    cfg: &ExperimentConfig,
    acc: &mut Accumulator,
) -> Result<Reference, CliError>
where
    E: Environment,
    E::State: DeserializeOwned,
{
    let seed = Seed(cfg.seed);
    let ds = load_or_collect(env, expert_policy.as_ref(), expert_cfg, seed)?;
    let mut ref_rng = seed.stream("reference");
    let expert_value = judge(expert_policy.as_ref(), cfg.eval.n_reference, &mut ref_rng)?.mean;
    let uniform_value = judge(&UniformPolicy::new(env.num_actions()), cfg.eval.n_reference, &mut ref_rng)?.mean;
    let reference = Reference {
        expert_value,
        uniform_value,
    };
    let score = |v: f64| normalized_return(-v, -expert_value, -uniform_value);
    let n_actions = env.num_actions();
    let dim = env.dim();
    for alg in &cfg.algorithms {
        let label = alg.label();
        let mut trace = Rows::default();
        let mut summary = AlgorithmSummary {
            kind: alg.kind().to_string(),
            ..Default::default()
        };
        let mut eval_rng = seed.stream(&format!("{label}/eval"));
        let (run, params): (RunResult<E::State>, ScheduleParams) = match alg {
            AlgorithmConfig::Bc { steps, lr, .. } => {
                let bc = behavioral_cloning(&ds, env.feature_map(), *steps, *lr)?;
                let est = judge(&bc, cfg.eval.n_eval, &mut eval_rng)?;
                let nr = score(est.mean)?;
                trace.push(0, &format!("{label}/normalized_return"), nr, Some(est.stderr / (uniform_value - expert_value).abs()));
                trace.push(0, &format!("{label}/suboptimality"), est.mean - expert_value, Some(est.stderr));
                summary.normalized_return_out = Some(nr);
                summary.normalized_return_last = Some(nr);
                summary.mean_suboptimality = Some(est.mean - expert_value);
                summary.episodes = Some(0);
                acc.rows.extend(trace.0);
                acc.summaries.insert(label, summary);
                continue;
            }
            AlgorithmConfig::Ilarl {
                rounds,
                gamma,
                params,
                max_len,
                ..
            } => {
                if let DatasetMode::Discounted { gamma: g, .. } | DatasetMode::Truncated { gamma: g, .. } = ds.mode {
                    if g != *gamma {
                        return Err(CliError::Config(format!("expert data uses gamma {g}, ILARL uses {gamma}")));
                    }
                }
                let mut p = hyper_params(
                    params,
                    *rounds,
                    |_, c, delta, eps| ScheduleInputs {
                        rounds: *rounds,
                        dim,
                        n_actions,
                        horizon: None,
                        gamma: Some(*gamma),
                        delta,
                        eps,
                        beta_const: c,
                    },
                    &["tau", "eta", "alpha", "beta"],
                )?;
                p.gamma = Some(*gamma);
                p.max_len = *max_len;
                let run = ilarl_run(env, &ds, &p, &mut seed.stream(&label))?;
                (run, p)
            }
            AlgorithmConfig::Brig {
                rounds, horizon, params, ..
            } => {
                let mut p = hyper_params(
                    params,
                    *rounds,
                    |_, c, delta, eps| ScheduleInputs {
                        rounds: *rounds,
                        dim,
                        n_actions,
                        horizon: Some(*horizon),
                        gamma: None,
                        delta,
                        eps,
                        beta_const: c,
                    },
                    &["alpha", "beta"],
                )?;
                p.tau = 1;
                p.eta = 0.0;
                p.horizon = Some(*horizon);
                let run = brig_run(env, &ds, &p, &mut seed.stream(&label))?;
                (run, p)
            }
            other => {
                return Err(CliError::Config(format!("{} cannot run on the {} environment", other.kind(), cfg.env.kind())));
            }
        };
        let cadence = cfg.eval.cadence.unwrap_or(params.tau).max(1);
        let mut scores = Vec::new();
        let mut subopt = Vec::new();
        for k in (0..run.rounds()).step_by(cadence) {
            let est = judge(run.round_policies[k].as_ref(), cfg.eval.n_eval, &mut eval_rng)?;
            let nr = score(est.mean)?;
            trace.push(k, &format!("{label}/normalized_return"), nr, Some(est.stderr / (uniform_value - expert_value).abs()));
            trace.push(k, &format!("{label}/suboptimality"), est.mean - expert_value, Some(est.stderr));
            scores.push(nr);
            subopt.push(est.mean - expert_value);
        }
        let tail = ((scores.len() as f64 * cfg.eval.last_fraction).ceil() as usize).clamp(1, scores.len());
        let out = judge(run.output_policy().as_ref(), cfg.eval.n_eval, &mut eval_rng)?;
        summary.normalized_return_out = Some(score(out.mean)?);
        summary.output_round = Some(run.output_round);
        summary.normalized_return_last = scores.last().copied();
        summary.normalized_return_tail_mean = Some(scores[scores.len() - tail..].iter().sum::<f64>() / tail as f64);
        summary.normalized_return_best = scores.iter().copied().reduce(f64::max);
        summary.mean_suboptimality = Some(subopt.iter().sum::<f64>() / subopt.len() as f64);
        summary.episodes = Some(run.episodes);
        summary.rounds = Some(run.rounds());
        for row in run.trace.rows() {
            trace.push(row.round, &format!("{label}/{}", row.metric), row.value, row.stderr);
        }
        acc.rows.extend(trace.0);
        acc.summaries.insert(label.clone(), summary);
        acc.schedules.insert(label, params);
    }
    Ok(reference)
}

fn make_stream(cfg: &StreamConfig, dim: usize, rounds: usize, stages: usize, seed: Seed) -> Result<CostStream, CliError> {
    let kind = match cfg {
        StreamConfig::RandomWalk { step, start } => CostStreamKind::RandomWalk {
            start: match start {
                Some(v) => WeightVec::from_column_slice(v),
                None => WeightVec::zeros(dim),
            },
            step: *step,
        },
        StreamConfig::Fixed { weights } => CostStreamKind::Fixed(WeightVec::from_column_slice(weights)),
    };
    Ok(cost_stream_make(&kind, dim, rounds, stages, seed.child("cost-stream"))?)
}

/// Summed cost tables of the played rounds, per stage.
fn summed_costs(mdp: &TabularMdp, stream: &CostStream, rounds: usize) -> Vec<Vec<f64>> {
    let mut sum = vec![vec![0.0; mdp.n_pairs()]; stream.num_stages()];
    for k in 0..rounds {
        for (h, w) in stream.round(k).iter().enumerate() {
            for (acc, c) in sum[h].iter_mut().zip(mdp.costs_from_weights(w)) {
                *acc += c;
            }
        }
    }
    sum
}

/// Adversarial online learning on a tabular MDP with exact regret.
fn online(mdp: &TabularMdp, alg: &AlgorithmConfig, seed: Seed, acc: &mut Accumulator) -> Result<(), CliError> {
    let label = alg.label();
    let d = mdp.n_pairs();
    let n_actions = mdp.n_actions();
    let mut trace = Rows::default();
    let mut summary = AlgorithmSummary {
        kind: alg.kind().to_string(),
        ..Default::default()
    };
    let mut rng = seed.stream(&label);
    match alg {
        AlgorithmConfig::MdpeFinite {
            rounds,
            horizon,
            stream,
            params,
            ..
        } => {
            let mut p = hyper_params(
                params,
                *rounds,
                |_, c, delta, eps| ScheduleInputs {
                    rounds: *rounds,
                    dim: d,
                    n_actions,
                    horizon: Some(*horizon),
                    gamma: None,
                    delta,
                    eps,
                    beta_const: c,
                },
                &["tau", "eta", "beta"],
            )?;
            p.horizon = Some(*horizon);
            let stream = make_stream(stream, d, *rounds, *horizon, seed)?;
            let mdpe = MdpeParams {
                rounds: *rounds,
                tau: p.tau,
                beta: p.beta,
                eta: p.eta,
            };
            let run = mdpe_finite_run(mdp, &stream, mdpe, *horizon, &mut rng)?;
            let played = run.rounds();
            let tables: Vec<_> = run.policies.iter().map(|pi| mdp.policy_tables(pi.as_ref(), *horizon)).collect();
            let policies: Vec<_> = run.round_batch.iter().map(|&j| tables[j].clone()).collect();
            let costs: Vec<Vec<Vec<f64>>> = (0..played)
                .map(|k| stream.round(k).iter().map(|w| mdp.costs_from_weights(w)).collect())
                .collect();
            let (best, _) = mdp.optimal_finite(&summed_costs(mdp, &stream, played));
            let regret = exact_regret_finite(mdp, &policies, &costs, &mdp.policy_tables(&best, *horizon))?;
            for (k, r) in regret.cumulative.iter().enumerate() {
                trace.push(k, &format!("{label}/regret"), *r, None);
            }
            for diag in run.diagnostics.iter().step_by(p.tau) {
                trace.push(diag.round, &format!("{label}/bonus_mass"), diag.bonus_mass, None);
            }
            summary.rounds = Some(*rounds);
            summary.rounds_played = Some(played);
            summary.episodes = Some(run.trajectories.len());
            summary.regret_final = Some(regret.total());
            acc.schedules.insert(label.clone(), p);
        }
        AlgorithmConfig::MdpeInfinite {
            rounds,
            gamma,
            max_len,
            stream,
            params,
            ..
        } => {
            let mut p = hyper_params(
                params,
                *rounds,
                |_, c, delta, eps| ScheduleInputs {
                    rounds: *rounds,
                    dim: d,
                    n_actions,
                    horizon: None,
                    gamma: Some(*gamma),
                    delta,
                    eps,
                    beta_const: c,
                },
                &["tau", "eta", "beta"],
            )?;
            p.gamma = Some(*gamma);
            p.max_len = Some(*max_len);
            let stream = make_stream(stream, d, *rounds, 1, seed)?;
            let mdpe = MdpeParams {
                rounds: *rounds,
                tau: p.tau,
                beta: p.beta,
                eta: p.eta,
            };
            let run = mdpe_infinite_run(mdp, &stream, mdpe, *gamma, *max_len, &mut rng)?;
            let played = run.rounds();
            let tables: Vec<_> = run.policies.iter().map(|pi| mdp.policy_table(pi.as_ref(), 0)).collect();
            let policies: Vec<_> = run.round_batch.iter().map(|&j| tables[j].clone()).collect();
            let costs: Vec<Vec<f64>> = (0..played).map(|k| mdp.costs_from_weights(stream.stage(k, 0))).collect();
            let best = mdp.optimal_discounted(&summed_costs(mdp, &stream, played)[0], *gamma)?;
            let regret = exact_regret_discounted(mdp, &policies, &costs, &best.stage_table(0).to_vec(), *gamma)?;
            for (k, r) in regret.cumulative.iter().enumerate() {
                trace.push(k, &format!("{label}/regret"), *r, None);
            }
            summary.rounds = Some(*rounds);
            summary.rounds_played = Some(played);
            summary.episodes = Some(run.samples.len());
            summary.regret_final = Some(regret.total());
            acc.schedules.insert(label.clone(), p);
        }
        AlgorithmConfig::OptimismSweep {
            rounds,
            tau,
            eta,
            setting,
            stream,
            beta_consts,
            ..
        } => {
            let mut entries = Vec::new();
            for (i, &c) in beta_consts.iter().enumerate() {
                let params = |beta| MdpeParams {
                    rounds: *rounds,
                    tau: *tau,
                    beta,
                    eta: *eta,
                };
                let mut run_rng = seed.stream(&format!("{label}/{i}"));
                let (beta, report) = match setting {
                    SweepSetting::Finite { horizon } => {
                        let beta = c * (d * horizon) as f64;
                        let s = make_stream(stream, d, *rounds, *horizon, seed)?;
                        let run = mdpe_finite_run(mdp, &s, params(beta), *horizon, &mut run_rng)?;
                        (beta, optimism_check_finite(mdp, &run, 1e-9))
                    }
                    SweepSetting::Infinite { gamma, max_len } => {
                        let beta = c * d as f64 / (1.0 - gamma);
                        let s = make_stream(stream, d, *rounds, 1, seed)?;
                        let run = mdpe_infinite_run(mdp, &s, params(beta), *gamma, *max_len, &mut run_rng)?;
                        (beta, optimism_check_infinite(mdp, &run, *gamma, 1e-9))
                    }
                };
                trace.push(i, &format!("{label}/beta"), beta, None);
                trace.push(i, &format!("{label}/violations"), report.violations as f64, None);
                trace.push(i, &format!("{label}/max_excess"), report.max_excess, None);
                entries.push(OptimismEntry {
                    beta_const: c,
                    beta,
                    checked: report.checked,
                    violations: report.violations,
                    max_excess: report.max_excess,
                });
            }
            let calibrated = entries.iter().find(|e| e.violations == 0);
            summary.calibrated_beta_const = calibrated.map(|e| e.beta_const);
            summary.calibrated_beta = calibrated.map(|e| e.beta);
            summary.rounds = Some(*rounds);
            summary.optimism = Some(entries);
        }
        other => {
            return Err(CliError::Config(format!("{} cannot run on the tabular environment", other.kind())));
        }
    }
    acc.rows.extend(trace.0);
    acc.summaries.insert(label, summary);
    Ok(())
}
