//! Metrics and ground-truth oracles: Monte-Carlo values, normalised return,
//! exact tabular regret and log-log slope fits.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::adversarial::{FiniteRun, InfiniteRun};
use crate::env::{Environment, PolicyTable, TabularMdp};
use crate::error::{Error, Result};
use crate::linalg::WeightVec;
use crate::policy::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub round: usize,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Ordered `(round, metric, value, stderr)` records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTrace {
    rows: Vec<MetricRow>,
}

impl MetricTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row. Panics if the round goes backwards or the value is not finite.
    pub fn push(&mut self, round: usize, metric: &str, value: f64, stderr: Option<f64>) {
        assert!(value.is_finite(), "metric {metric} at round {round} is not finite");
        if let Some(last) = self.rows.last() {
            assert!(round >= last.round, "metric rounds must be non-decreasing");
        }
        self.rows.push(MetricRow {
            round,
            metric: metric.to_string(),
            value,
            stderr,
        });
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    pub fn series(&self, metric: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| (r.round, r.value))
            .collect()
    }

    pub fn last(&self, metric: &str) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.metric == metric).map(|r| r.value)
    }

    pub fn extend(&mut self, other: MetricTrace) {
        for r in other.rows {
            self.push(r.round, &r.metric, r.value, r.stderr);
        }
    }
}

/// How a Monte-Carlo value estimate accumulates cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueMode {
    /// Sum over a fixed horizon.
    Finite { horizon: usize },
    /// Undiscounted sum along episodes restarted with probability `1 - γ`.
    Geometric { gamma: f64, max_len: usize },
    /// `Σ_{h<len} γ^h c_h` along fixed-length episodes.
    Discounted { gamma: f64, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Mean episode cost and its standard error.
pub fn mc_value<E: Environment>(
    env: &E,
    policy: &dyn Policy<E::State>,
    cost: &dyn Fn(&E::State, usize) -> f64,
    mode: ValueMode,
    n_episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<Estimate> {
    if n_episodes == 0 {
        return Err(Error::invalid("need at least one evaluation episode"));
    }
    let mut totals = Vec::with_capacity(n_episodes);
    for _ in 0..n_episodes {
        let mut state = env.initial_state(rng);
        let mut total = 0.0;
        match mode {
            ValueMode::Finite { horizon } => {
                for h in 0..horizon {
                    let a = policy.act(&state, h, rng);
                    total += cost(&state, a);
                    state = env.step(&state, a, rng);
                }
            }
            ValueMode::Geometric { gamma, max_len } => {
                for h in 0..max_len.max(1) {
                    let a = policy.act(&state, h, rng);
                    total += cost(&state, a);
                    state = env.step(&state, a, rng);
                    if rng.random::<f64>() < 1.0 - gamma {
                        break;
                    }
                }
            }
            ValueMode::Discounted { gamma, len } => {
                let mut weight = 1.0;
                for h in 0..len {
                    let a = policy.act(&state, h, rng);
                    total += weight * cost(&state, a);
                    weight *= gamma;
                    state = env.step(&state, a, rng);
                }
            }
        }
        totals.push(total);
    }
    Ok(mean_and_stderr(&totals))
}

/// `mc_value` with the environment's normalised true cost.
pub fn mc_true_value<E: Environment>(
    env: &E,
    policy: &dyn Policy<E::State>,
    mode: ValueMode,
    n_episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<Estimate> {
    let norm = env.normalizer();
    mc_value(env, policy, &|s, a| norm.apply(env.cost(s, a)), mode, n_episodes, rng)
}

pub fn mean_and_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Estimate { mean, stderr: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate {
        mean,
        stderr: (var / n).sqrt(),
    }
}

/// `(J_π - J_uniform) / (J_expert - J_uniform)` for returns `J` (negative costs).
pub fn normalized_return(j_pi: f64, j_expert: f64, j_uniform: f64) -> Result<f64> {
    let denom = j_expert - j_uniform;
    if denom.abs() < 1e-12 {
        return Err(Error::invalid("expert and uniform returns coincide"));
    }
    Ok((j_pi - j_uniform) / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrace {
    pub per_round: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretTrace {
    fn from_rounds(per_round: Vec<f64>) -> Self {
        let cumulative = per_round
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect();
        Self { per_round, cumulative }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// `Σ_k V^{π^k}(c^k) - V^{π*}(c^k)` from the start distribution, per-stage
/// policies and per-stage cost vectors for every round.
pub fn exact_regret_finite(
    mdp: &TabularMdp,
    policies: &[Vec<PolicyTable>],
    costs: &[Vec<Vec<f64>>],
    comparator: &[PolicyTable],
) -> Result<RegretTrace> {
    if policies.len() != costs.len() {
        return Err(Error::DimensionMismatch {
            expected: costs.len(),
            got: policies.len(),
        });
    }
    let per_round = policies
        .iter()
        .zip(costs)
        .map(|(pi, c)| {
            let v = mdp.exact_value_finite(pi, c);
            let v_star = mdp.exact_value_finite(comparator, c);
            mdp.start_value(&v[0]) - mdp.start_value(&v_star[0])
        })
        .collect();
    Ok(RegretTrace::from_rounds(per_round))
}

/// `Σ_k ⟨c^k, d^{π^k} - d^{π*}⟩` with normalised discounted occupancies.
pub fn exact_regret_discounted(
    mdp: &TabularMdp,
    policies: &[PolicyTable],
    costs: &[Vec<f64>],
    comparator: &PolicyTable,
    gamma: f64,
) -> Result<RegretTrace> {
    if policies.len() != costs.len() {
        return Err(Error::DimensionMismatch {
            expected: costs.len(),
            got: policies.len(),
        });
    }
    let d_star = mdp.exact_occupancy(comparator, gamma)?;
    let mut per_round = Vec::with_capacity(policies.len());
    for (pi, c) in policies.iter().zip(costs) {
        let d = mdp.exact_occupancy(pi, gamma)?;
        per_round.push(c.iter().zip(d.iter().zip(&d_star)).map(|(c, (a, b))| c * (a - b)).sum());
    }
    Ok(RegretTrace::from_rounds(per_round))
}

/// One round of the imitation-regret decomposition with exact occupancies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretSplit {
    /// `⟨c_true, d^π - d^E⟩`.
    pub total: f64,
    /// `⟨Φw, d^π - d^E⟩`, the policy player's share.
    pub policy: f64,
    /// `⟨w_true - w, Φᵀd^π - Φᵀd^E⟩`, the cost player's share.
    pub cost: f64,
}

/// Splits the true-cost gap of `pi` against `expert` for the cost weights `w`.
pub fn regret_split(
    mdp: &TabularMdp,
    pi: &PolicyTable,
    expert: &PolicyTable,
    w: &WeightVec,
    w_true: &WeightVec,
    gamma: f64,
) -> Result<RegretSplit> {
    let d_pi = mdp.exact_occupancy(pi, gamma)?;
    let d_e = mdp.exact_occupancy(expert, gamma)?;
    let diff: Vec<f64> = d_pi.iter().zip(&d_e).map(|(a, b)| a - b).collect();
    let inner = |c: &[f64]| c.iter().zip(&diff).map(|(c, x)| c * x).sum::<f64>();
    let feat_gap = mdp.feature_expectation(&d_pi) - mdp.feature_expectation(&d_e);
    Ok(RegretSplit {
        total: inner(&mdp.costs_from_weights(w_true)),
        policy: inner(&mdp.costs_from_weights(w)),
        cost: (w_true - w).dot(&feat_gap),
    })
}

/// Violations of the optimism sandwich `-2b ≤ Q - c - P V ≤ 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OptimismReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest amount by which either side is exceeded (0 when none is).
    pub max_excess: f64,
}

impl OptimismReport {
    fn record(&mut self, gap: f64, bonus: f64, tol: f64) {
        self.checked += 1;
        let excess = gap.max(-2.0 * bonus - gap);
        if excess > tol {
            self.violations += 1;
        }
        self.max_excess = self.max_excess.max(excess.max(0.0));
    }
}

/// Checks every `(s, a, h, k)` of a finite-horizon MDP-E run on a tabular MDP,
/// with `P` exact and `V^k_{h+1}` the batch policy's value of the estimated
/// `Q^k_{h+1}`.
pub fn optimism_check_finite(mdp: &TabularMdp, run: &FiniteRun<usize>, tol: f64) -> OptimismReport {
    let fm = mdp.feature_map();
    let n_s = mdp.n_states();
    let n_a = mdp.n_actions();
    let mut report = OptimismReport::default();
    for (k, qs) in run.q.iter().enumerate() {
        let policy = run.round_policy(k);
        let horizon = qs.len();
        let mut next_v = vec![0.0; n_s];
        for h in (0..horizon).rev() {
            let q = &qs[h];
            let q_table: Vec<Vec<f64>> = (0..n_s)
                .map(|s| (0..n_a).map(|a| q.eval_phi(&fm.features(&s, a))).collect())
                .collect();
            for s in 0..n_s {
                for a in 0..n_a {
                    let phi = fm.features(&s, a);
                    let gap = q_table[s][a] - phi.dot(q.cost_weights()) - mdp.expected_next(s, a, &next_v);
                    report.record(gap, q.bonus_phi(&phi), tol);
                }
            }
            next_v = (0..n_s)
                .map(|s| policy.action_probs(&s, h).iter().zip(&q_table[s]).map(|(p, q)| p * q).sum())
                .collect();
        }
    }
    report
}

/// Discounted counterpart: `Q^{k+1} - c^k - γ P V^k`, where `V^k` evaluates the
/// previous round's Q with the policy of the batch that produced it.
pub fn optimism_check_infinite(mdp: &TabularMdp, run: &InfiniteRun<usize>, gamma: f64, tol: f64) -> OptimismReport {
    let fm = mdp.feature_map();
    let n_s = mdp.n_states();
    let n_a = mdp.n_actions();
    let mut report = OptimismReport::default();
    let mut prev_v = vec![0.0; n_s];
    for (k, q) in run.q.iter().enumerate() {
        let policy = run.round_policy(k);
        let q_table: Vec<Vec<f64>> = (0..n_s)
            .map(|s| (0..n_a).map(|a| q.eval_phi(&fm.features(&s, a))).collect())
            .collect();
        for s in 0..n_s {
            for a in 0..n_a {
                let phi = fm.features(&s, a);
                let gap = q_table[s][a] - phi.dot(q.cost_weights()) - gamma * mdp.expected_next(s, a, &prev_v);
                report.record(gap, q.bonus_phi(&phi), tol);
            }
        }
        prev_v = (0..n_s)
            .map(|s| policy.action_probs(&s, 0).iter().zip(&q_table[s]).map(|(p, q)| p * q).sum())
            .collect();
    }
    report
}

/// Least-squares slope of `log value` against `log K`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("slope fit needs at least two points"));
    }
    if points.iter().any(|&(k, v)| !(k > 0.0) || !(v > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive coordinates"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope fit needs distinct K values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
