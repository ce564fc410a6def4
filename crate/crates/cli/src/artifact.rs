//! In-memory results of a command and their on-disk layout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgad_core::metrics::EvalReport;
use sgad_core::model::{checkpoint_to_string, TrainTrace};
use sgad_core::SgaeModel;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::fsio::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Simulate,
    Evaluate,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Evaluate => "evaluate",
        }
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub auc_roc: MeanStd,
    pub auc_pr: MeanStd,
    pub ks: MeanStd,
}

impl Aggregate {
    pub fn of(reports: &[&EvalReport]) -> Self {
        let pick = |f: fn(&EvalReport) -> f64| MeanStd::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        Self {
            auc_roc: pick(|r| r.auc_roc),
            auc_pr: pick(|r| r.auc_pr),
            ks: pick(|r| r.ks),
        }
    }
}

/// One seeded run: its metrics, training trace, test scores and model.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub report: EvalReport,
    pub trace: TrainTrace,
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub model: SgaeModel,
    /// Relative to the artifact directory.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub command: CommandKind,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub aggregate: Aggregate,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl RunArtifact {
    pub fn new(command: CommandKind, config: ExperimentConfig, runs: Vec<RunRecord>) -> Self {
        let reports: Vec<&EvalReport> = runs.iter().map(|r| &r.report).collect();
        let aggregate = Aggregate::of(&reports);
        Self {
            command,
            config,
            runs,
            aggregate,
        }
    }

    /// `key = value` summary: aggregates first, then every run's metrics.
    pub fn report_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command = {}", self.command.as_str());
        let _ = writeln!(out, "runs = {}", self.runs.len());
        for (name, m) in [
            ("auc_roc", self.aggregate.auc_roc),
            ("auc_pr", self.aggregate.auc_pr),
            ("ks", self.aggregate.ks),
        ] {
            let _ = writeln!(out, "{name}.mean = {}", m.mean);
            let _ = writeln!(out, "{name}.std = {}", m.std);
        }
        for run in &self.runs {
            let _ = writeln!(out, "\n[run.{}]", run.index);
            let _ = writeln!(out, "seed = {}", run.seed);
            let _ = writeln!(out, "best_epoch = {}", run.trace.best_epoch);
            if let Some(p) = &run.checkpoint {
                let _ = writeln!(out, "checkpoint = {}", p.display());
            }
            out.push_str(&run.report.to_text());
        }
        out
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("run,epoch,train_loss,val_loss,s0,s1,s2,s3,monitor_auc\n");
        for run in &self.runs {
            for e in &run.trace.epochs {
                let s = e.score_diffs.map(|d| d.0).unwrap_or([None; 4]);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    run.index,
                    e.epoch,
                    e.train_loss,
                    opt(e.val_loss),
                    opt(s[0]),
                    opt(s[1]),
                    opt(s[2]),
                    opt(s[3]),
                    opt(e.monitor_auc)
                );
            }
        }
        out
    }

    pub fn scores_csv(&self) -> String {
        let mut out = String::from("run,sample_id,score,label\n");
        for run in &self.runs {
            for (i, (s, l)) in run.scores.iter().zip(&run.labels).enumerate() {
                let _ = writeln!(out, "{},{i},{s},{l}", run.index);
            }
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("run,bin,lower,upper,normal,abnormal\n");
        for run in &self.runs {
            let h = &run.report.histogram;
            for b in 0..h.normal.len() {
                let _ = writeln!(
                    out,
                    "{},{b},{},{},{},{}",
                    run.index,
                    h.edges[b],
                    h.edges[b + 1],
                    h.normal[b],
                    h.abnormal[b]
                );
            }
        }
        out
    }

    /// Writes `config.toml`, `report.txt`, `trace.csv`, `scores.csv`,
    /// `histogram.csv` and one checkpoint per run into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("config.toml"), self.config.to_toml()?.as_bytes())?;
        write_atomic(&dir.join("report.txt"), self.report_text().as_bytes())?;
        write_atomic(&dir.join("trace.csv"), self.trace_csv().as_bytes())?;
        write_atomic(&dir.join("scores.csv"), self.scores_csv().as_bytes())?;
        write_atomic(&dir.join("histogram.csv"), self.histogram_csv().as_bytes())?;
        for run in &self.runs {
            if let Some(rel) = &run.checkpoint {
                write_atomic(&dir.join(rel), checkpoint_to_string(&run.model)?.as_bytes())?;
            }
        }
        Ok(())
    }
}
