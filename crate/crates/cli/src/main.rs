use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ilarl_cli::presets::{preset, preset_names};
use ilarl_cli::{run_experiment, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ilarl", version, about = "Run imitation-learning and adversarial-MDP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file or a named preset.
    Run(RunArgs),
    /// Print the names of the built-in presets.
    ListPresets,
    /// Parse and check a configuration file without running it.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Root directory for run outputs (default: the config's output_dir, else `runs`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shrink every budget for a quick end-to-end check.
    #[arg(long)]
    smoke: bool,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    ExperimentConfig::from_toml(&text)
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.smoke {
        cfg = cfg.smoke();
    }
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let (dir, summary) = run_experiment(&cfg, &out)?;
    println!("{}", dir.display());
    match summary.normalized_return_out {
        Some(nr) => println!("normalized_return_out = {nr:.4}"),
        None => {
            if let Some(r) = summary.regret_final {
                println!("regret_final = {r:.4}");
            }
        }
    }
    println!("wall_time_s = {:.2}", summary.wall_time_s);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ListPresets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
        Command::Validate { config } => load(&config).map(|cfg| println!("{}: ok", cfg.experiment)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
