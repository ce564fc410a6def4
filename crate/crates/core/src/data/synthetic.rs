//! Synthetic datasets for the transition-field simulation.
//!
//! Each family draws a radius from `N(mu_class, sigma^2)`, with anomalies
//! sitting at a larger mean than normal rows, and maps it to coordinates:
//!
//! - `gauss1d`: the radius itself is the single feature.
//! - `polar2d_ring`: `theta ~ U(0, 2pi)`, emitted as `(r cos theta, r sin theta)`.
//! - `polar2d_curve`: `theta ~ U(pi/2, 5pi/2)`, emitted along a spiral as
//!   `(r theta cos theta / theta_max, r theta sin theta / theta_max)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticFamily {
    Gauss1d,
    Polar2dRing,
    Polar2dCurve,
}

impl SyntheticFamily {
    pub const ALL: [SyntheticFamily; 3] = [
        SyntheticFamily::Gauss1d,
        SyntheticFamily::Polar2dRing,
        SyntheticFamily::Polar2dCurve,
    ];

    pub fn dim(self) -> usize {
        match self {
            SyntheticFamily::Gauss1d => 1,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SyntheticFamily::Gauss1d => "gauss1d",
            SyntheticFamily::Polar2dRing => "polar2d_ring",
            SyntheticFamily::Polar2dCurve => "polar2d_curve",
        }
    }
}

impl fmt::Display for SyntheticFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntheticFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown synthetic family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: SyntheticFamily,
    pub mu_normal: f64,
    pub mu_abnormal: f64,
    pub sigma: f64,
    pub n_samples: usize,
    pub anomaly_ratio: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 10,000 rows, one anomaly per nine normal rows, radii N(1, 0.25^2) vs N(2, 0.25^2).
    pub fn new(family: SyntheticFamily, seed: u64) -> Self {
        Self {
            family,
            mu_normal: 1.0,
            mu_abnormal: 2.0,
            sigma: 0.25,
            n_samples: 10_000,
            anomaly_ratio: 0.1,
            seed,
        }
    }

    pub fn n_anomalies(&self) -> usize {
        (self.anomaly_ratio * self.n_samples as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma must be positive"));
        }
        if !(self.mu_abnormal > self.mu_normal) {
            return Err(Error::config("mu_abnormal must exceed mu_normal"));
        }
        if !(self.anomaly_ratio > 0.0 && self.anomaly_ratio < 1.0) {
            return Err(Error::config("anomaly_ratio must lie in (0, 1)"));
        }
        if self.n_samples == 0 {
            return Err(Error::config("n_samples must be positive"));
        }
        Ok(())
    }
}

const CURVE_THETA_MIN: f64 = 0.5 * PI;
const CURVE_THETA_MAX: f64 = 2.5 * PI;

fn place<R: Rng>(family: SyntheticFamily, r: f64, rng: &mut R, out: &mut Vec<f64>) {
    match family {
        SyntheticFamily::Gauss1d => out.push(r),
        SyntheticFamily::Polar2dRing => {
            let theta = rng.sample(Uniform::new(0.0, 2.0 * PI));
            out.extend([r * theta.cos(), r * theta.sin()]);
        }
        SyntheticFamily::Polar2dCurve => {
            let theta = rng.sample(Uniform::new(CURVE_THETA_MIN, CURVE_THETA_MAX));
            let k = r * theta / CURVE_THETA_MAX;
            out.extend([k * theta.cos(), k * theta.sin()]);
        }
    }
}

/// Draws a labelled dataset with exactly `round(anomaly_ratio * n_samples)`
/// anomalies, rows in shuffled order, radii recorded for field partitioning.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_samples;
    let n_anom = spec.n_anomalies();
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i >= n - n_anom)).collect();
    labels.shuffle(&mut rng);

    let normal = Normal::new(spec.mu_normal, spec.sigma).map_err(|e| Error::config(e.to_string()))?;
    let abnormal = Normal::new(spec.mu_abnormal, spec.sigma).map_err(|e| Error::config(e.to_string()))?;
    let dim = spec.family.dim();
    let mut values = Vec::with_capacity(n * dim);
    let mut radius = Vec::with_capacity(n);
    for &label in &labels {
        let r = if label == 1 {
            abnormal.sample(&mut rng)
        } else {
            normal.sample(&mut rng)
        };
        radius.push(r);
        place(spec.family, r, &mut rng, &mut values);
    }

    let mut ds = LabeledDataset::new(DataMatrix::from_vec(n, dim, values)?, labels)?;
    ds.radius = Some(radius);
    Ok(ds)
}
