//! Experiment configuration: a TOML document with `model`, `data`,
//! `schedule` and `output` sections, plus `sweep` or `rate` for the commands
//! that need them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgad_core::data::{PreprocessSpec, SplitFractions, SyntheticFamily, SyntheticSpec};
use sgad_core::model::{Architecture, EpsilonMode, Schedule, SgLossConfig, Variant};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelSection,
    pub data: DataSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `simulation` for synthetic data, `tabular` for CSV data.
    #[default]
    Auto,
    Simulation,
    Tabular,
    /// Widths from `encoder` and `scorer`.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub variant: Variant,
    pub lambda_se: f64,
    pub lambda_a: f64,
    pub a: f64,
    pub mu0: f64,
    pub eps_p: f64,
    pub preset: Preset,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub encoder: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scorer: Vec<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let l = SgLossConfig::default();
        Self {
            variant: l.variant,
            lambda_se: l.lambda_se,
            lambda_a: l.lambda_a,
            a: l.a,
            mu0: l.mu0,
            eps_p: l.eps_p,
            preset: Preset::Auto,
            encoder: Vec::new(),
            scorer: Vec::new(),
        }
    }
}

impl ModelSection {
    pub fn loss(&self) -> SgLossConfig {
        SgLossConfig {
            lambda_se: self.lambda_se,
            lambda_a: self.lambda_a,
            a: self.a,
            mu0: self.mu0,
            eps_p: self.eps_p,
            variant: self.variant,
        }
    }

    pub fn architecture(&self, input_dim: usize, synthetic: bool) -> Architecture {
        match self.preset {
            Preset::Custom => Architecture {
                encoder: self.encoder.clone(),
                scorer: self.scorer.clone(),
            },
            Preset::Simulation => Architecture::simulation(input_dim),
            Preset::Tabular => Architecture::tabular(input_dim),
            Preset::Auto if synthetic => Architecture::simulation(input_dim),
            Preset::Auto => Architecture::tabular(input_dim),
        }
    }

    fn validate(&self) -> Result<()> {
        self.loss().validate()?;
        match self.preset {
            Preset::Custom => Architecture {
                encoder: self.encoder.clone(),
                scorer: self.scorer.clone(),
            }
            .validate()?,
            _ if !self.encoder.is_empty() || !self.scorer.is_empty() => {
                return Err(CliError::config("encoder/scorer widths need preset = \"custom\""));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSection {
    Synthetic(SyntheticSection),
    Csv(CsvSection),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub family: SyntheticFamily,
    pub mu_normal: f64,
    pub mu_abnormal: f64,
    pub sigma: f64,
    pub n_samples: usize,
    pub anomaly_ratio: f64,
    /// Used by `evaluate`, `sweep` and `rate`.
    pub noise_sample_rate: f64,
    pub noise_feature_rate: f64,
    pub split: SplitFractions,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let s = SyntheticSpec::new(SyntheticFamily::Gauss1d, 0);
        let p = PreprocessSpec::default();
        Self {
            family: s.family,
            mu_normal: s.mu_normal,
            mu_abnormal: s.mu_abnormal,
            sigma: s.sigma,
            n_samples: s.n_samples,
            anomaly_ratio: s.anomaly_ratio,
            noise_sample_rate: p.noise_sample_rate,
            noise_feature_rate: p.noise_feature_rate,
            split: p.split,
        }
    }
}

impl SyntheticSection {
    pub fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            family: self.family,
            mu_normal: self.mu_normal,
            mu_abnormal: self.mu_abnormal,
            sigma: self.sigma,
            n_samples: self.n_samples,
            anomaly_ratio: self.anomaly_ratio,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSection {
    /// TOML manifest: `path` to the CSV plus preprocessing fields.
    pub manifest: PathBuf,
}

/// A parsed dataset manifest with `path` resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub path: PathBuf,
    pub spec: PreprocessSpec,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut table: toml::Table = text.parse().map_err(|source| CliError::Parse {
            path: path.to_owned(),
            source,
        })?;
        let csv = match table.remove("path") {
            Some(toml::Value::String(s)) => PathBuf::from(s),
            _ => {
                return Err(CliError::config(format!(
                    "{}: manifest needs a string `path`",
                    path.display()
                )))
            }
        };
        let spec: PreprocessSpec = toml::Value::Table(table)
            .try_into()
            .map_err(|source| CliError::Parse {
                path: path.to_owned(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let csv = if csv.is_relative() { base.join(csv) } else { csv };
        Ok(Self { path: csv, spec })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub n_runs: usize,
    pub epsilon_mode: EpsilonMode,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let s = Schedule::default();
        Self {
            epochs: s.epochs,
            batch_size: s.batch_size,
            learning_rate: s.learning_rate,
            seed: s.seed,
            n_runs: 1,
            epsilon_mode: s.epsilon_mode,
        }
    }
}

impl ScheduleSection {
    pub fn schedule(&self, seed: u64) -> Schedule {
        Schedule {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            learning_rate: self.learning_rate,
            epsilon_mode: self.epsilon_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub histogram_bins: usize,
    pub checkpoints: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("sgad-out"),
            histogram_bins: sgad_core::metrics::DEFAULT_HISTOGRAM_BINS,
            checkpoints: true,
        }
    }
}

/// Loss hyperparameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    EpsP,
    A,
    LambdaSe,
    LambdaA,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::EpsP => "eps_p",
            SweepParam::A => "a",
            SweepParam::LambdaSe => "lambda_se",
            SweepParam::LambdaA => "lambda_a",
        }
    }

    pub fn apply(self, model: &mut ModelSection, value: f64) {
        match self {
            SweepParam::EpsP => model.eps_p = value,
            SweepParam::A => model.a = value,
            SweepParam::LambdaSe => model.lambda_se = value,
            SweepParam::LambdaA => model.lambda_a = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// A two-parameter grid: `{eps_p, a}` or `{lambda_se, lambda_a}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub x: Axis,
    pub y: Axis,
}

impl SweepSection {
    fn validate(&self) -> Result<()> {
        use SweepParam::*;
        let pair = [self.x.param, self.y.param];
        let ok = matches!(pair, [EpsP, A] | [A, EpsP] | [LambdaSe, LambdaA] | [LambdaA, LambdaSe]);
        if !ok {
            return Err(CliError::config(
                "a sweep grid pairs eps_p with a, or lambda_se with lambda_a",
            ));
        }
        if self.x.values.is_empty() || self.y.values.is_empty() {
            return Err(CliError::config("sweep grid is empty"));
        }
        if self.x.values.iter().chain(&self.y.values).any(|v| !v.is_finite()) {
            return Err(CliError::config("sweep values must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub rates: Vec<f64>,
    #[serde(default = "RateSection::default_variants")]
    pub variants: Vec<Variant>,
}

impl RateSection {
    fn default_variants() -> Vec<Variant> {
        vec![Variant::Original, Variant::PlainAe]
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| CliError::Parse {
            path: origin.to_owned(),
            source,
        })
    }

    /// Reads a config; a relative CSV manifest path is resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text, path)?;
        if let DataSection::Csv(csv) = &mut cfg.data {
            if csv.manifest.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                csv.manifest = base.join(&csv.manifest);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks everything that can be checked before any data is touched,
    /// including that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let s = &self.schedule;
        if s.n_runs == 0 {
            return Err(CliError::config("n_runs must be at least 1"));
        }
        s.schedule(s.seed).validate()?;
        if self.output.histogram_bins == 0 {
            return Err(CliError::config("histogram_bins must be at least 1"));
        }
        match &self.data {
            DataSection::Synthetic(syn) => {
                syn.spec(0).validate()?;
                syn.split.validate()?;
                for r in [syn.noise_sample_rate, syn.noise_feature_rate] {
                    if !(0.0..=1.0).contains(&r) {
                        return Err(CliError::config("noise rates must lie in [0, 1]"));
                    }
                }
            }
            DataSection::Csv(csv) => {
                let manifest = Manifest::load(&csv.manifest)?;
                manifest.spec.validate()?;
                if !manifest.path.is_file() {
                    return Err(CliError::config(format!(
                        "dataset {} does not exist",
                        manifest.path.display()
                    )));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        if let Some(rate) = &self.rate {
            if rate.rates.is_empty() || rate.variants.is_empty() {
                return Err(CliError::config("rate section needs rates and variants"));
            }
            if rate.rates.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
                return Err(CliError::config("rates must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self.data, DataSection::Synthetic(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_synthetic_uses_defaults() {
        let cfg = parse("[data]\nsource = \"synthetic\"\nfamily = \"polar2d_ring\"\n").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.model.loss(), SgLossConfig::default());
        assert_eq!(cfg.schedule.epochs, 100);
        assert_eq!(cfg.schedule.batch_size, 1024);
        match &cfg.data {
            DataSection::Synthetic(s) => {
                assert_eq!(s.family, SyntheticFamily::Polar2dRing);
                assert_eq!(s.n_samples, 10_000);
            }
            DataSection::Csv(_) => panic!(),
        }
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = parse(
            "[model]\nvariant = \"plain_ae\"\na = 8.0\n[data]\nsource = \"synthetic\"\nsigma = 0.5\n\
             [schedule]\nn_runs = 3\n[sweep]\nx = { param = \"eps_p\", values = [0.7, 0.8] }\n\
             y = { param = \"a\", values = [5.0] }\n",
        )
        .unwrap();
        let back = parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(parse("[data]\nsource = \"synthetic\"\nsigmaa = 1.0\n").is_err());
        assert!(parse("[data]\nsource = \"parquet\"\n").is_err());
        let zero_runs = parse("[data]\nsource = \"synthetic\"\n[schedule]\nn_runs = 0\n").unwrap();
        assert!(zero_runs.validate().is_err());
        let bad_pair = parse(
            "[data]\nsource = \"synthetic\"\n[sweep]\nx = { param = \"eps_p\", values = [0.8] }\n\
             y = { param = \"lambda_a\", values = [18.0] }\n",
        )
        .unwrap();
        assert!(bad_pair.validate().is_err());
        let empty = parse(
            "[data]\nsource = \"synthetic\"\n[sweep]\nx = { param = \"eps_p\", values = [] }\n\
             y = { param = \"a\", values = [6.0] }\n",
        )
        .unwrap();
        assert!(matches!(empty.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn missing_manifest_fails_validation() {
        let cfg = parse("[data]\nsource = \"csv\"\nmanifest = \"/no/such/manifest.toml\"\n").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Io { .. })));
    }

    #[test]
    fn manifest_path_is_relative_to_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.toml");
        fs::write(&m, "path = \"data.csv\"\nnumeric_columns = [\"x\"]\nlabel_column = \"y\"\n").unwrap();
        let manifest = Manifest::load(&m).unwrap();
        assert_eq!(manifest.path, dir.path().join("data.csv"));
        assert_eq!(manifest.spec.label_column, "y");
        fs::write(&m, "path = \"data.csv\"\nnumeric_columns = [\"x\"]\nbogus = 1\n").unwrap();
        assert!(Manifest::load(&m).is_err());
    }
}
