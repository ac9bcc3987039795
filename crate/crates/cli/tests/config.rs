use ilarl_cli::config::{AlgorithmConfig, EnvConfig};
use ilarl_cli::presets::{preset, preset_names, preset_text};
use ilarl_cli::{CliError, ExperimentConfig};

#[test]
fn every_preset_round_trips_through_toml() {
    for name in preset_names() {
        let cfg = preset(name).unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg, "{name}");
        assert_eq!(cfg.experiment, name);
    }
}

#[test]
fn unknown_keys_are_rejected_at_every_level() {
    let base = preset_text("fig1_tauE1").unwrap();
    let cases = [
        ("seed = 0", "seed = 0\ncolour = 1"),
        ("sigma = 0.1", "sigma = 0.1\nsgima = 0.1"),
        ("n_traj = 1", "n_traj = 1\nn_trajs = 1"),
        ("stationary = true", "stationary = true\nstationnary = true"),
        ("len = 200", "len = 200\nlength = 200"),
        ("lr = 0.5", "lr = 0.5\nlearning_rate = 0.5"),
        ("beta = 8.0\n\n[[algorithm]]", "beta = 8.0\nbetta = 8.0\n\n[[algorithm]]"),
        ("last_fraction = 0.2", "last_fraction = 0.2\nlast = 0.2"),
        ("max_len = 10000", "max_len = 10000\nmaxlen = 1"),
    ];
    for (from, to) in cases {
        assert!(base.contains(from), "{from}");
        let text = base.replacen(from, to, 1);
        match ExperimentConfig::from_toml(&text) {
            Err(CliError::Config(msg)) => assert!(msg.contains("unknown field"), "{msg}"),
            other => panic!("{to}: expected rejection, got {other:?}", other = other.map(|c| c.experiment)),
        }
    }
}

#[test]
fn preset_contents_match_their_experiments() {
    let fig1 = preset("fig1_tauE1").unwrap();
    assert!(matches!(fig1.env, EnvConfig::Gridworld { sigma, .. } if sigma == 0.1));
    let expert = fig1.expert.as_ref().unwrap();
    assert_eq!((expert.n_traj, expert.mix), (1, 0.5));
    let AlgorithmConfig::Ilarl { params, rounds, .. } = &fig1.algorithms[0] else {
        panic!("first learner is ILARL")
    };
    assert_eq!((params.tau, params.eta, params.beta, *rounds), (Some(5), Some(1.0), Some(8.0), 400));
    assert_eq!(preset("fig1_tauE2").unwrap().expert.unwrap().n_traj, 2);

    let fig3 = preset("fig3_sigma0").unwrap();
    assert!(matches!(fig3.env, EnvConfig::Gridworld { sigma, .. } if sigma == 0.0));
    let expert = fig3.expert.unwrap();
    assert_eq!((expert.n_traj, expert.mix), (1, 0.0));

    let bandit = preset("bandit_brig_vs_ilarl").unwrap();
    assert_eq!(bandit.expert.unwrap().n_traj, 10);
    assert!(bandit
        .algorithms
        .iter()
        .any(|a| matches!(a, AlgorithmConfig::Brig { horizon: 1, .. })));
}

#[test]
fn unknown_preset_lists_the_valid_names() {
    let err = preset("fig9").unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, CliError::UnknownPreset { .. }));
    for name in preset_names() {
        assert!(msg.contains(name), "{msg}");
    }
}

#[test]
fn invalid_combinations_are_rejected() {
    let base = preset_text("fig1_tauE1").unwrap();
    let no_expert = base
        .split("[expert]")
        .next()
        .unwrap()
        .to_string()
        + &base[base.find("[[algorithm]]").unwrap()..];
    assert!(ExperimentConfig::from_toml(&no_expert).is_err());
    let bad_fraction = base.replace("last_fraction = 0.2", "last_fraction = 0.0");
    assert!(ExperimentConfig::from_toml(&bad_fraction).is_err());
    let both = base.replace(
        "beta = 8.0\n\n[[algorithm]]",
        "beta = 8.0\n\n[algorithm.schedule]\nkind = \"ilarl\"\nbeta_const = 1.0\ndelta = 0.1\neps = 0.1\n\n[[algorithm]]",
    );
    let cfg = ExperimentConfig::from_toml(&both).unwrap().smoke();
    assert!(ilarl_cli::execute(&cfg).is_err());
    let tabular_mdpe = preset_text("tabular_regret_sweep").unwrap().replace("kind = \"tabular\"\nn_states = 12\nn_actions = 4\nbranching = 3", "kind = \"bandit\"\nn_actions = 4\ndim = 2");
    assert!(ExperimentConfig::from_toml(&tabular_mdpe).is_err());
}
