//! Experiment runner for score-guided anomaly detection: simulation
//! dynamics, repeated evaluation, hyperparameter grids and anomaly-rate
//! robustness, each writing plain-text reports and plot-ready CSV files.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
mod fsio;
pub mod seeds;

use std::path::{Path, PathBuf};

pub use artifact::{Aggregate, CommandKind, MeanStd, RunArtifact, RunRecord};
pub use commands::{
    cmd_evaluate, cmd_rate_robustness, cmd_simulate, cmd_sweep, RateResult, RateRow, SweepCell,
    SweepResult,
};
pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use fsio::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Evaluate,
    Sweep,
    Rate,
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.schedule.seed = seed;
        }
        if let Some(runs) = self.runs {
            cfg.schedule.n_runs = runs;
        }
    }
}

/// Runs `command` and writes its artifact directory; returns a short summary.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<String> {
    let dir: &Path = &cfg.output.dir;
    match command {
        Command::Simulate | Command::Evaluate => {
            let art = if command == Command::Simulate {
                cmd_simulate(cfg)?
            } else {
                cmd_evaluate(cfg)?
            };
            art.write(dir)?;
            let a = art.aggregate;
            Ok(format!(
                "{} runs: auc_roc {:.4} ± {:.4}, auc_pr {:.4} ± {:.4}, ks {:.4} ± {:.4} -> {}",
                art.runs.len(),
                a.auc_roc.mean,
                a.auc_roc.std,
                a.auc_pr.mean,
                a.auc_pr.std,
                a.ks.mean,
                a.ks.std,
                dir.display()
            ))
        }
        Command::Sweep => {
            let res = cmd_sweep(cfg)?;
            res.write(dir, cfg)?;
            Ok(format!("{} grid cells -> {}", res.cells.len(), dir.display()))
        }
        Command::Rate => {
            let res = cmd_rate_robustness(cfg)?;
            res.write(dir, cfg)?;
            let failed = res.rows.iter().filter(|r| r.error.is_some()).count();
            Ok(format!(
                "{} rate rows ({failed} rejected) -> {}",
                res.rows.len(),
                dir.display()
            ))
        }
    }
}
