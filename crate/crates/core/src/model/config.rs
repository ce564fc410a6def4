use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which loss family the model trains with and what it reports as a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Learned scalar score guided by the reconstruction error.
    Original,
    /// No scorer; the regulariser acts on the reconstruction error itself.
    Recon,
    /// Scorer emits (mean, std) matched to N(0, 1) on the normal branch.
    Normal,
    /// As `Normal`, with (mean, std) read as the log-space parameters.
    Lognormal,
    /// Plain autoencoder, reconstruction loss only.
    PlainAe,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Original,
        Variant::Recon,
        Variant::Normal,
        Variant::Lognormal,
        Variant::PlainAe,
    ];

    pub fn has_scorer(self) -> bool {
        matches!(self, Variant::Original | Variant::Normal | Variant::Lognormal)
    }

    /// Width of the scorer's output head.
    pub fn scorer_outputs(self) -> usize {
        match self {
            Variant::Normal | Variant::Lognormal => 2,
            _ => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Recon => "recon",
            Variant::Normal => "normal",
            Variant::Lognormal => "lognormal",
            Variant::PlainAe => "plain_ae",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown variant `{s}`")))
    }
}

/// Hyperparameters of the score-guided loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgLossConfig {
    /// Weight of the score-guided term against the reconstruction loss.
    pub lambda_se: f64,
    /// Weight of the hinge on suspected anomalies.
    pub lambda_a: f64,
    /// Target score suspected anomalies are pushed above.
    pub a: f64,
    /// Target score for obvious-normal samples.
    pub mu0: f64,
    /// Quantile of the reconstruction errors used as the branch threshold.
    pub eps_p: f64,
    pub variant: Variant,
}

impl Default for SgLossConfig {
    fn default() -> Self {
        Self {
            lambda_se: 0.01,
            lambda_a: 18.0,
            a: 6.0,
            mu0: 0.01,
            eps_p: 0.8,
            variant: Variant::Original,
        }
    }
}

impl SgLossConfig {
    pub fn with_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.lambda_se, self.lambda_a, self.a, self.mu0, self.eps_p]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("loss hyperparameters must be finite"));
        }
        if self.lambda_se < 0.0 || self.lambda_a < 0.0 {
            return Err(Error::config("lambda_se and lambda_a must be non-negative"));
        }
        if self.a <= 0.0 || self.mu0 <= 0.0 {
            return Err(Error::config("a and mu0 must be positive"));
        }
        if self.mu0 >= self.a {
            return Err(Error::config(format!("mu0 ({}) must be below a ({})", self.mu0, self.a)));
        }
        if !(self.eps_p > 0.0 && self.eps_p < 1.0) {
            return Err(Error::config(format!("eps_p must lie in (0, 1), got {}", self.eps_p)));
        }
        Ok(())
    }
}

/// Hidden widths of the encoder (last entry is the latent size) and the
/// scorer (the 1- or 2-wide head is appended per variant). The decoder
/// mirrors the encoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub encoder: Vec<usize>,
    pub scorer: Vec<usize>,
}

impl Architecture {
    /// Widths for tabular data chosen from the input dimension.
    pub fn tabular(input_dim: usize) -> Self {
        let encoder = if input_dim <= 30 {
            vec![20]
        } else if input_dim <= 60 {
            vec![40, 20]
        } else {
            vec![80, 40, 20]
        };
        Self {
            encoder,
            scorer: vec![20, 10],
        }
    }

    /// Widths used by the simulation study: 20 for 1-D data, (64, 20) otherwise.
    pub fn simulation(input_dim: usize) -> Self {
        let encoder = if input_dim <= 1 { vec![20] } else { vec![64, 20] };
        Self {
            encoder,
            scorer: vec![20],
        }
    }

    pub fn latent_dim(&self) -> usize {
        *self.encoder.last().expect("validated architecture")
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() {
            return Err(Error::config("encoder needs at least one layer"));
        }
        if self.encoder.iter().chain(&self.scorer).any(|&w| w == 0) {
            return Err(Error::config("layer widths must be positive"));
        }
        Ok(())
    }
}
