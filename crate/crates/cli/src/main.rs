use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sgad::{Command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "sgad", version, about = "Score-guided anomaly detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; run `i` uses `seed + i`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of runs.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Training dynamics on a synthetic family.
    Simulate(Common),
    /// Full pipeline with repeated, reshuffled splits.
    Evaluate(Common),
    /// Two-parameter grid of evaluations.
    Sweep(Common),
    /// AUC-ROC across training anomaly rates.
    Rate(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Evaluate(a) => (Command::Evaluate, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Rate(a) => (Command::Rate, a),
    };
    let result = ExperimentConfig::load(&args.config).and_then(|mut cfg| {
        Overrides {
            out: args.out,
            seed: args.seed,
            runs: args.runs,
        }
        .apply(&mut cfg);
        cfg.validate()?;
        sgad::run(command, &cfg)
    });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let err = anyhow::Error::from(e);
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
