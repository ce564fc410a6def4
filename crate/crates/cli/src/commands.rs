//! The four experiment protocols. Each returns its results in memory; the
//! `write` methods persist them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use sgad_core::data::tabular::{prepare_encoded, EncodedTable};
use sgad_core::data::{
    generate_synthetic, inject_noise, load_csv, partition_fields, split_dataset, subsample_anomaly_rate,
};
use sgad_core::metrics::EvalReport;
use sgad_core::model::{train, Variant};
use sgad_core::{LabeledDataset, SgaeModel};

use crate::artifact::{CommandKind, MeanStd, RunArtifact, RunRecord};
use crate::config::{Axis, DataSection, ExperimentConfig, Manifest, ModelSection};
use crate::error::{CliError, Result};
use crate::fsio::write_atomic;
use crate::seeds;

struct Splits {
    train: LabeledDataset,
    val: LabeledDataset,
    test: LabeledDataset,
}

/// Trains one model and scores the test split.
fn fit_and_score(
    cfg: &ExperimentConfig,
    model_cfg: &ModelSection,
    run: usize,
    seed: u64,
    data: &Splits,
    monitor: bool,
) -> Result<RunRecord> {
    let dim = data.train.dim();
    let arch = model_cfg.architecture(dim, cfg.is_synthetic());
    let model = SgaeModel::new(dim, &arch, model_cfg.loss(), seed)?;
    let schedule = cfg.schedule.schedule(seed);
    let outcome = train(
        model,
        &data.train.features,
        Some(&data.val.features),
        &schedule,
        monitor.then_some(&data.test),
    )?;
    let scores = outcome.model.predict_scores(&data.test.features)?;
    let report = EvalReport::compute(
        &scores,
        &data.test.labels,
        data.test.field_id.as_deref(),
        cfg.output.histogram_bins,
    )?;
    info!(
        "run {run} (seed {seed}, {}): auc_roc {:.4} auc_pr {:.4} ks {:.4}",
        model_cfg.variant, report.auc_roc, report.auc_pr, report.ks
    );
    Ok(RunRecord {
        index: run,
        seed,
        report,
        trace: outcome.trace,
        scores,
        labels: data.test.labels.clone(),
        model: outcome.model,
        checkpoint: cfg
            .output
            .checkpoints
            .then(|| PathBuf::from(format!("checkpoints/run_{run:03}.json"))),
    })
}

/// Independent train, validation and test draws per run; S0..S3 and AUC are
/// traced on the test set every epoch.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<RunArtifact> {
    cfg.validate()?;
    let DataSection::Synthetic(syn) = &cfg.data else {
        return Err(CliError::config("simulate needs a synthetic data section"));
    };
    let mut runs = Vec::with_capacity(cfg.schedule.n_runs);
    for run in 0..cfg.schedule.n_runs {
        let seed = seeds::run_seed(cfg.schedule.seed, run);
        let draw = |purpose| -> Result<LabeledDataset> {
            let ds = generate_synthetic(&syn.spec(seeds::derive(seed, purpose)))?;
            Ok(partition_fields(&ds, syn.mu_normal, syn.sigma)?)
        };
        let data = Splits {
            train: draw(seeds::TRAIN_DATA)?,
            val: draw(seeds::VAL_DATA)?,
            test: draw(seeds::TEST_DATA)?,
        };
        runs.push(fit_and_score(cfg, &cfg.model, run, seed, &data, true)?);
    }
    Ok(RunArtifact::new(CommandKind::Simulate, cfg.clone(), runs))
}

/// Data loaded once per command; splits are redrawn per run.
enum Source {
    Synthetic,
    Table {
        encoded: EncodedTable,
        split: sgad_core::data::SplitFractions,
        noise: (f64, f64),
    },
}

fn load_source(cfg: &ExperimentConfig) -> Result<Source> {
    match &cfg.data {
        DataSection::Synthetic(_) => Ok(Source::Synthetic),
        DataSection::Csv(csv) => {
            let manifest = Manifest::load(&csv.manifest)?;
            let table = load_csv(&manifest.path, &manifest.spec)?;
            let encoded = sgad_core::data::encode(&table, &manifest.spec)?;
            info!(
                "loaded {} rows, {} features from {}",
                encoded.dataset.len(),
                encoded.dataset.dim(),
                manifest.path.display()
            );
            Ok(Source::Table {
                encoded,
                split: manifest.spec.split,
                noise: (manifest.spec.noise_sample_rate, manifest.spec.noise_feature_rate),
            })
        }
    }
}

fn native_rate(cfg: &ExperimentConfig, source: &Source) -> f64 {
    match (source, &cfg.data) {
        (Source::Table { encoded, .. }, _) => encoded.dataset.anomaly_rate(),
        (Source::Synthetic, DataSection::Synthetic(syn)) => {
            let spec = syn.spec(0);
            spec.n_anomalies() as f64 / spec.n_samples as f64
        }
        (Source::Synthetic, DataSection::Csv(_)) => unreachable!("source follows the data section"),
    }
}

/// Split for one run. Tables are standardised with training statistics;
/// synthetic families stay on their generated scale, as in simulate. Noise
/// comes later.
fn split_for_run(cfg: &ExperimentConfig, source: &Source, seed: u64) -> Result<(Splits, (f64, f64))> {
    let split_seed = seeds::derive(seed, seeds::SPLIT);
    match (source, &cfg.data) {
        (Source::Table { encoded, split, noise }, _) => {
            let prepared = prepare_encoded(encoded, split, split_seed)?;
            let splits = Splits {
                train: prepared.train,
                val: prepared.val,
                test: prepared.test,
            };
            Ok((splits, *noise))
        }
        (Source::Synthetic, DataSection::Synthetic(syn)) => {
            let ds = generate_synthetic(&syn.spec(seeds::derive(seed, seeds::DATASET)))?;
            let ds = partition_fields(&ds, syn.mu_normal, syn.sigma)?;
            let (train, val, test) = split_dataset(&ds, &syn.split, split_seed)?;
            Ok((Splits { train, val, test }, (syn.noise_sample_rate, syn.noise_feature_rate)))
        }
        (Source::Synthetic, DataSection::Csv(_)) => unreachable!("source follows the data section"),
    }
}

fn add_noise(mut data: Splits, noise: (f64, f64), seed: u64) -> Result<Splits> {
    let (noisy, cells) = inject_noise(&data.train, noise.0, noise.1, seeds::derive(seed, seeds::NOISE))?;
    if !cells.is_empty() {
        info!("swap noise replaced {} training cells", cells.len());
    }
    data.train = noisy;
    Ok(data)
}

fn evaluate_with(cfg: &ExperimentConfig, source: &Source) -> Result<RunArtifact> {
    let mut runs = Vec::with_capacity(cfg.schedule.n_runs);
    for run in 0..cfg.schedule.n_runs {
        let seed = seeds::run_seed(cfg.schedule.seed, run);
        let (splits, noise) = split_for_run(cfg, source, seed)?;
        let data = add_noise(splits, noise, seed)?;
        runs.push(fit_and_score(cfg, &cfg.model, run, seed, &data, false)?);
    }
    Ok(RunArtifact::new(CommandKind::Evaluate, cfg.clone(), runs))
}

/// Load, preprocess, split, inject noise, train, score the test split;
/// splits are redrawn for every run.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<RunArtifact> {
    cfg.validate()?;
    let source = load_source(cfg)?;
    evaluate_with(cfg, &source)
}

/// One grid cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub x: f64,
    pub y: f64,
    pub artifact: RunArtifact,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub x: Axis,
    pub y: Axis,
    /// Row-major over `y` then `x`.
    pub cells: Vec<SweepCell>,
}

/// Runs `evaluate` for every `(x, y)` pair of the configured grid.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::config("sweep needs a [sweep] section"))?;
    let source = load_source(cfg)?;
    let mut cells = Vec::new();
    for &y in &sweep.y.values {
        for &x in &sweep.x.values {
            let mut cell_cfg = cfg.clone();
            cell_cfg.sweep = None;
            sweep.x.param.apply(&mut cell_cfg.model, x);
            sweep.y.param.apply(&mut cell_cfg.model, y);
            cell_cfg.model.loss().validate()?;
            info!("sweep cell {}={x} {}={y}", sweep.x.param.as_str(), sweep.y.param.as_str());
            cells.push(SweepCell {
                x,
                y,
                artifact: evaluate_with(&cell_cfg, &source)?,
            });
        }
    }
    Ok(SweepResult {
        x: sweep.x.clone(),
        y: sweep.y.clone(),
        cells,
    })
}

impl SweepResult {
    pub fn cell(&self, x: f64, y: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.x == x && c.y == y)
    }

    /// Mean AUC-ROC matrix: one row per `y` value, one column per `x` value.
    pub fn heatmap_csv(&self) -> String {
        let mut out = format!("{}\\{}", self.y.param.as_str(), self.x.param.as_str());
        for x in &self.x.values {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
        for &y in &self.y.values {
            let _ = write!(out, "{y}");
            for &x in &self.x.values {
                let m = self.cell(x, y).map_or(f64::NAN, |c| c.artifact.aggregate.auc_roc.mean);
                let _ = write!(out, ",{m}");
            }
            out.push('\n');
        }
        out
    }

    pub fn report_text(&self) -> String {
        let mut out = String::from("command = sweep\n");
        let _ = writeln!(out, "x = {}", self.x.param.as_str());
        let _ = writeln!(out, "y = {}", self.y.param.as_str());
        for c in &self.cells {
            let a = &c.artifact.aggregate;
            let _ = writeln!(
                out,
                "cell.{}.{}.auc_roc.mean = {}\ncell.{}.{}.auc_roc.std = {}",
                c.x, c.y, a.auc_roc.mean, c.x, c.y, a.auc_roc.std
            );
        }
        out
    }

    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<()> {
        write_atomic(&dir.join("config.toml"), config.to_toml()?.as_bytes())?;
        write_atomic(&dir.join("heatmap.csv"), self.heatmap_csv().as_bytes())?;
        write_atomic(&dir.join("report.txt"), self.report_text().as_bytes())?;
        for c in &self.cells {
            let name = format!("{}={}_{}={}", self.x.param.as_str(), c.x, self.y.param.as_str(), c.y);
            c.artifact.write(&dir.join("cells").join(name))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub rate: f64,
    pub variant: Variant,
    /// Test AUC-ROC per run.
    pub auc_roc: Vec<f64>,
    pub error: Option<String>,
}

impl RateRow {
    pub fn summary(&self) -> Option<MeanStd> {
        (self.error.is_none() && !self.auc_roc.is_empty()).then(|| MeanStd::of(&self.auc_roc))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub native_rate: f64,
    pub rows: Vec<RateRow>,
}

/// Trains every configured variant with the training split's anomalies
/// thinned to each rate. Validation and test splits keep the native rate.
pub fn cmd_rate_robustness(cfg: &ExperimentConfig) -> Result<RateResult> {
    cfg.validate()?;
    let rate_cfg = cfg
        .rate
        .as_ref()
        .ok_or_else(|| CliError::config("rate needs a [rate] section"))?;
    let source = load_source(cfg)?;
    let native = native_rate(cfg, &source);

    let mut rows: Vec<RateRow> = rate_cfg
        .rates
        .iter()
        .flat_map(|&rate| {
            rate_cfg.variants.iter().map(move |&variant| RateRow {
                rate,
                variant,
                auc_roc: Vec::new(),
                error: (rate > native + 1e-12)
                    .then(|| format!("rate {rate} exceeds the native anomaly rate {native:.6}")),
            })
        })
        .collect();

    for run in 0..cfg.schedule.n_runs {
        let seed = seeds::run_seed(cfg.schedule.seed, run);
        let (splits, noise) = split_for_run(cfg, &source, seed)?;
        for &rate in &rate_cfg.rates {
            if rate > native + 1e-12 {
                continue;
            }
            // The native rate keeps the split untouched; below it, the split's
            // own rate (which can sit a hair under native) caps the target.
            let train = if (rate - native).abs() <= 1e-12 {
                splits.train.clone()
            } else {
                let target = rate.min(splits.train.anomaly_rate());
                subsample_anomaly_rate(&splits.train, target, seeds::derive(seed, seeds::SUBSAMPLE))?
            };
            let thinned = Splits {
                train,
                val: splits.val.clone(),
                test: splits.test.clone(),
            };
            let data = add_noise(thinned, noise, seed)?;
            for &variant in &rate_cfg.variants {
                let model_cfg = ModelSection {
                    variant,
                    ..cfg.model.clone()
                };
                let rec = fit_and_score(cfg, &model_cfg, run, seed, &data, false)?;
                let row = rows
                    .iter_mut()
                    .find(|r| r.rate == rate && r.variant == variant)
                    .expect("row exists for every rate and variant");
                row.auc_roc.push(rec.report.auc_roc);
            }
        }
    }
    Ok(RateResult {
        native_rate: native,
        rows,
    })
}

impl RateResult {
    /// Max minus min of the mean AUC-ROC over the successful rates of `variant`.
    pub fn spread(&self, variant: Variant) -> Option<f64> {
        let means: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.variant == variant)
            .filter_map(|r| r.summary().map(|m| m.mean))
            .collect();
        if means.is_empty() {
            return None;
        }
        let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = means.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max - min)
    }

    pub fn rates_csv(&self) -> String {
        let mut out = String::from("rate,variant,auc_roc_mean,auc_roc_std,runs,error\n");
        for r in &self.rows {
            let (mean, std) = r
                .summary()
                .map_or((String::new(), String::new()), |m| (m.mean.to_string(), m.std.to_string()));
            let _ = writeln!(
                out,
                "{},{},{mean},{std},{},{}",
                r.rate,
                r.variant,
                r.auc_roc.len(),
                r.error.as_deref().unwrap_or("")
            );
        }
        out
    }

    pub fn report_text(&self) -> String {
        let mut out = String::from("command = rate\n");
        let _ = writeln!(out, "native_rate = {}", self.native_rate);
        let mut variants: Vec<Variant> = Vec::new();
        for r in &self.rows {
            if !variants.contains(&r.variant) {
                variants.push(r.variant);
            }
        }
        for v in variants {
            if let Some(s) = self.spread(v) {
                let _ = writeln!(out, "{v}.auc_roc.spread = {s}");
            }
        }
        out
    }

    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<()> {
        write_atomic(&dir.join("config.toml"), config.to_toml()?.as_bytes())?;
        write_atomic(&dir.join("rates.csv"), self.rates_csv().as_bytes())?;
        write_atomic(&dir.join("report.txt"), self.report_text().as_bytes())
    }
}
