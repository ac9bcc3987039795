//! Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Runs the shipped presets at full budget where a criterion names one.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use ilarl_cli::presets::{preset, preset_names};
use ilarl_cli::{execute, execute_with, run_experiment, ExpertCache, Summary};
use ilarl_core::env::{sample_episode_discounted, Environment, TabularMdp};
use ilarl_core::eval::regret_split;
use ilarl_core::expert::{collect_expert_dataset, feat_exp_discounted, DatasetMode};
use ilarl_core::imitation::{ogd_cost_update, schedule_from_theorems, CostPlayerState, Projection, ScheduleInputs, ScheduleKind};
use ilarl_core::policy::{TabularPolicy, UniformPolicy};
use ilarl_core::{FeatVec, Seed, WeightVec};

type Check = Result<(bool, String), String>;

fn main() -> ExitCode {
    let criteria: [(&str, f64, fn() -> Check); 8] = [
        ("optimism sandwich", 120.0, optimism),
        ("sublinear adversarial regret", 600.0, regret),
        ("ILARL on the gridworld", 900.0, gridworld),
        ("BRIG vs ILARL on the bandit", 120.0, bandit),
        ("OGD regret bound", 60.0, ogd),
        ("expert concentration", 120.0, concentration),
        ("regret decomposition identity", 60.0, decomposition),
        ("determinism and episode lengths", f64::INFINITY, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok((pass, detail)) if secs <= *limit => (pass, detail),
            Ok((_, detail)) => (false, format!("{detail}; over the {limit:.0} s budget")),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {}. {name}: {detail} ({secs:.1} s)", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(name: &str, seed: u64) -> Result<Summary, String> {
    let mut cfg = preset(name).map_err(|e| e.to_string())?;
    cfg.seed = seed;
    execute(&cfg).map(|o| o.summary).map_err(|e| e.to_string())
}

fn optimism() -> Check {
    let s = run("optimism_check", 0)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for label in ["finite", "infinite"] {
        let alg = &s.algorithms[label];
        match (alg.calibrated_beta_const, alg.calibrated_beta) {
            (Some(c), Some(beta)) => {
                let checked = alg.optimism.as_ref().map_or(0, |o| o[0].checked);
                parts.push(format!("{label}: zero violations over {checked} checks from c = {c} (beta = {beta:.2})"));
            }
            _ => {
                pass = false;
                parts.push(format!("{label}: violations at every swept beta"));
            }
        }
    }
    Ok((pass, parts.join("; ")))
}

fn regret() -> Check {
    let s = run("tabular_regret_sweep", 0)?;
    let mut points: Vec<(usize, usize, f64)> = s
        .algorithms
        .values()
        .filter_map(|a| Some((a.rounds?, a.rounds_played?, a.regret_final?)))
        .collect();
    points.sort_by_key(|p| p.0);
    let ratios: Vec<f64> = points.iter().map(|(_, n, r)| r / *n as f64).collect();
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    let slope = s.regret_loglog_slope.ok_or("no slope")?;
    let listing: Vec<String> = points
        .iter()
        .zip(&ratios)
        .map(|((k, n, r), q)| format!("K={k} ({n} played) regret {r:.1} per-round {q:.3}"))
        .collect();
    Ok((
        slope <= 0.9 && decreasing && points.len() == 4,
        format!("slope {slope:.3} (<= 0.9), per-round regret decreasing: {decreasing}; {}", listing.join(", ")),
    ))
}

fn gridworld() -> Check {
    let cache = ExpertCache::default();
    let mut passed = 0;
    let mut parts = Vec::new();
    for seed in 0..5 {
        let mut cfg = preset("fig1_tauE1").map_err(|e| e.to_string())?;
        cfg.seed = seed;
        let s = execute_with(&cfg, &cache).map_err(|e| e.to_string())?.summary;
        let ilarl = &s.algorithms["ilarl"];
        let tail = ilarl.normalized_return_tail_mean.ok_or("no ILARL evaluation")?;
        let bc = s.algorithms["bc"].normalized_return_out.ok_or("no BC evaluation")?;
        let episodes = ilarl.episodes.unwrap_or(usize::MAX);
        let ok = tail >= 0.8 && tail > bc && episodes <= 400;
        passed += ok as usize;
        parts.push(format!("seed {seed}: ILARL {tail:.3} BC {bc:.3}{}", if ok { "" } else { " x" }));
    }
    Ok((passed >= 4, format!("{passed}/5 seeds with last-20% >= 0.8 and above BC in <= 400 trajectories; {}", parts.join(", "))))
}

fn bandit() -> Check {
    let mut passed = 0;
    let mut parts = Vec::new();
    for seed in 0..5 {
        let s = run("bandit_brig_vs_ilarl", seed)?;
        let brig = s.algorithms["brig"].mean_suboptimality.ok_or("no BRIG evaluation")?;
        let ilarl = s.algorithms["ilarl"].mean_suboptimality.ok_or("no ILARL evaluation")?;
        passed += (brig <= ilarl) as usize;
        parts.push(format!("seed {seed}: BRIG {brig:.4} ILARL {ilarl:.4}"));
    }
    Ok((passed >= 4, format!("BRIG suboptimality <= ILARL on {passed}/5 seeds at K=500; {}", parts.join(", "))))
}

fn unit_disk(rng: &mut impl Rng) -> FeatVec {
    loop {
        let v = FeatVec::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        if v.norm() <= 1.0 {
            return v;
        }
    }
}

fn ogd() -> Check {
    let k = 400;
    let alpha = 1.0 / (2.0 * (k as f64).sqrt());
    let bound = 1.0 / (2.0 * alpha) + 2.0 * alpha * k as f64;
    let grid: Vec<WeightVec> = (-100..=100)
        .flat_map(|i| (-100..=100).map(move |j| WeightVec::from_column_slice(&[i as f64 / 100.0, j as f64 / 100.0])))
        .filter(|w| w.norm() <= 1.0)
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for seq in 0..20 {
        let mut rng = Seed(seq).stream("ogd");
        // half the sequences drift in a fixed direction, half are i.i.d.
        let drift = if seq % 2 == 0 { unit_disk(&mut rng) } else { FeatVec::zeros(2) };
        let mut player = CostPlayerState::zeros(2, alpha, Projection::Ball);
        let mut played = 0.0;
        let mut total = FeatVec::zeros(2);
        for _ in 0..k {
            let expert = ilarl_core::linalg::project_l2_ball(&(unit_disk(&mut rng) * 0.5 + &drift * 0.5));
            let learner = unit_disk(&mut rng);
            let g = &expert - &learner;
            played += player.w.dot(&g);
            total += &g;
            player = ogd_cost_update(&player, &expert, &learner).map_err(|e| e.to_string())?;
        }
        let best = grid.iter().map(|w| w.dot(&total)).fold(f64::INFINITY, f64::min);
        worst = worst.max(played - best);
    }
    Ok((worst <= bound, format!("largest regret {worst:.3} over 20 sequences vs bound {bound:.1}")))
}

fn concentration() -> Check {
    let (d, gamma, eps, delta) = (8, 0.9, 0.2, 0.1);
    let p = schedule_from_theorems(
        ScheduleKind::ExpertConcentration,
        &ScheduleInputs {
            rounds: 1,
            dim: d,
            n_actions: 2,
            horizon: None,
            gamma: Some(gamma),
            delta,
            eps,
            beta_const: 1.0,
        },
    )
    .map_err(|e| e.to_string())?;
    let n_e = p.tau_e.ok_or("no sample size")?;
    let len = p.max_len.ok_or("no truncation")?;
    let mdp = TabularMdp::random(4, 2, 2, &mut Seed(0).stream("mdp"));
    let mut rng = Seed(1).stream("policy");
    let table: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let p: f64 = rng.random_range(0.1..0.9);
            vec![p, 1.0 - p]
        })
        .collect();
    let expert = TabularPolicy::stationary(table.clone());
    let exact = mdp.feature_expectation(&mdp.exact_occupancy(&table, gamma).map_err(|e| e.to_string())?);
    let fm = mdp.feature_map();
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for rep in 0..200u64 {
        let ds = collect_expert_dataset(&mdp, &expert, n_e, DatasetMode::Truncated { gamma, len }, &mut Seed(rep).stream("data"))
            .map_err(|e| e.to_string())?;
        let est = feat_exp_discounted(&ds, fm.as_ref(), gamma).map_err(|e| e.to_string())?;
        let err = (&est - &exact).amax();
        worst = worst.max(err);
        within += (err <= eps) as usize;
    }
    let freq = within as f64 / 200.0;
    Ok((
        freq >= 1.0 - delta,
        format!("n_E = {n_e}, truncation {len}: {within}/200 within {eps} (need >= {:.0}%), largest error {worst:.3}", 100.0 * (1.0 - delta)),
    ))
}

fn random_table(n_states: usize, n_actions: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n_states)
        .map(|_| {
            let row: Vec<f64> = (0..n_actions).map(|_| rng.random_range(0.01..1.0)).collect();
            let z: f64 = row.iter().sum();
            row.into_iter().map(|x| x / z).collect()
        })
        .collect()
}

fn decomposition() -> Check {
    let (n_s, n_a, d, gamma) = (5, 3, 6, 0.9);
    let mut rng = Seed(0).stream("decomposition");
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let transitions: Vec<f64> = random_table(n_s * n_a, n_s, &mut rng).concat();
        let rows: Vec<FeatVec> = (0..n_s * n_a).map(|_| FeatVec::from_fn(d, |_, _| rng.random_range(-1.0..1.0))).collect();
        let mut initial = vec![0.0; n_s];
        initial[0] = 1.0;
        let mdp = TabularMdp::new(n_s, n_a, transitions, initial, vec![0.0; n_s * n_a], rows).map_err(|e| e.to_string())?;
        let pi = random_table(n_s, n_a, &mut rng);
        let expert = random_table(n_s, n_a, &mut rng);
        let ball = |rng: &mut ilarl_core::seed::StreamRng| {
            ilarl_core::linalg::project_l2_ball(&WeightVec::from_fn(d, |_, _| rng.random_range(-1.0..1.0)))
        };
        let w = ball(&mut rng);
        let w_true = ball(&mut rng);
        let split = regret_split(&mdp, &pi, &expert, &w, &w_true, gamma).map_err(|e| e.to_string())?;
        // independent value of <c_true, d^pi - d^E> from the Bellman solution
        let c_true = mdp.costs_from_weights(&w_true);
        let v = |t: &Vec<Vec<f64>>| -> Result<f64, String> {
            let values = mdp.exact_value(t, &c_true, gamma).map_err(|e| e.to_string())?;
            Ok((1.0 - gamma) * mdp.start_value(&values))
        };
        let total = v(&pi)? - v(&expert)?;
        worst = worst.max((split.policy + split.cost - total).abs()).max((split.total - total).abs());
    }
    Ok((worst <= 1e-8, format!("largest residual {worst:.2e} over 100 random (policy, cost) pairs (<= 1e-8)")))
}

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut identical = 0;
    let names = preset_names();
    for name in &names {
        let cfg = preset(name).map_err(|e| e.to_string())?.smoke();
        let (da, _) = run_experiment(&cfg, a.path()).map_err(|e| e.to_string())?;
        let (db, _) = run_experiment(&cfg, b.path()).map_err(|e| e.to_string())?;
        let read = |p: std::path::PathBuf| std::fs::read(p.join("traces.csv")).map_err(|e| e.to_string());
        identical += (read(da)? == read(db)?) as usize;
    }
    let mdp = TabularMdp::random(1, 1, 1, &mut Seed(0).stream("mdp"));
    let mut lengths = Vec::new();
    let mut lengths_ok = true;
    for gamma in [0.5, 0.9] {
        let mut rng = Seed(0).stream("lengths");
        let n = 100_000;
        let total: usize = (0..n)
            .map(|_| sample_episode_discounted(&mdp, &UniformPolicy::new(mdp.num_actions()), gamma, 100_000, &mut rng).len())
            .sum();
        let mean = total as f64 / n as f64;
        let target = 1.0 / (1.0 - gamma);
        lengths_ok &= (mean - target).abs() <= 0.05 * target;
        lengths.push(format!("gamma {gamma}: mean {mean:.3} vs {target:.1}"));
    }
    Ok((
        identical == names.len() && lengths_ok,
        format!("{identical}/{} presets byte-identical under smoke re-runs; {}", names.len(), lengths.join(", ")),
    ))
}
