//! The loss family: reconstruction loss, the branch threshold, the hinge-based
//! score guidance term and its Gaussian (KL) counterpart.
//!
//! Every sample falls in exactly one branch: obvious-normal when its
//! reconstruction error is strictly below the threshold, suspected-abnormal
//! otherwise.

use serde::{Deserialize, Serialize};

use super::config::SgLossConfig;
use crate::error::{Error, Result};
use crate::numerics::DataMatrix;

/// Forward results for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSampleForward {
    pub z: Vec<f64>,
    pub x_tilde: Vec<f64>,
    /// Anomaly score. For the Gaussian variants this is the learned mean; for
    /// the scorer-free variants it equals `recon_error`.
    pub s: f64,
    /// Learned standard deviation, Gaussian variants only.
    pub s_sigma: Option<f64>,
    pub recon_error: f64,
}

impl PerSampleForward {
    /// A bare sample carrying only what the losses look at.
    pub fn scored(recon_error: f64, s: f64) -> Self {
        Self {
            z: Vec::new(),
            x_tilde: Vec::new(),
            s,
            s_sigma: None,
            recon_error,
        }
    }

    pub fn gaussian(recon_error: f64, mu: f64, sigma: f64) -> Self {
        Self {
            s_sigma: Some(sigma),
            ..Self::scored(recon_error, mu)
        }
    }
}

/// Branch of the score-guided regulariser a sample falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Normal,
    Abnormal,
}

#[inline]
pub fn branch(recon_error: f64, eps: f64) -> Branch {
    if recon_error < eps {
        Branch::Normal
    } else {
        Branch::Abnormal
    }
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean over rows of `||x_i - x~_i||_2` (not squared).
pub fn reconstruction_loss(batch: &DataMatrix, reconstructions: &DataMatrix) -> Result<f64> {
    if batch.shape() != reconstructions.shape() {
        return Err(Error::dim(format!(
            "batch {:?} vs reconstructions {:?}",
            batch.shape(),
            reconstructions.shape()
        )));
    }
    if batch.rows() == 0 {
        return Err(Error::input("empty batch"));
    }
    let total: f64 = batch
        .iter_rows()
        .zip(reconstructions.iter_rows())
        .map(|(x, r)| euclidean_distance(x, r))
        .sum();
    Ok(total / batch.rows() as f64)
}

/// Rank of the threshold in the sorted errors, 1-based: `ceil(eps_p * n)`.
///
/// A tolerance of 1e-9 absorbs products such as `0.7 * 10` landing a hair
/// above an integer.
pub(crate) fn threshold_rank(n: usize, eps_p: f64) -> usize {
    ((eps_p * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Threshold as the `ceil(eps_p * n)`-th smallest reconstruction error.
///
/// With this convention samples strictly below the returned value take the
/// normal branch, so ties at the threshold (and a fully tied batch) land in
/// the abnormal branch.
pub fn epsilon_from_percentile(recon_errors: &[f64], eps_p: f64) -> Result<f64> {
    if recon_errors.is_empty() {
        return Err(Error::input("cannot take a percentile of no errors"));
    }
    if !(eps_p > 0.0 && eps_p < 1.0) {
        return Err(Error::input(format!("eps_p must lie in (0, 1), got {eps_p}")));
    }
    if recon_errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::input("non-finite reconstruction error"));
    }
    let k = threshold_rank(recon_errors.len(), eps_p);
    let mut sorted = recon_errors.to_vec();
    let (_, kth, _) = sorted.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

#[inline]
pub(crate) fn normal_term(s: f64, mu0: f64) -> f64 {
    (s - mu0).abs()
}

#[inline]
pub(crate) fn hinge_term(s: f64, a: f64) -> f64 {
    (a - s).max(0.0)
}

/// Subgradient of `|s - mu0|`, zero at the kink.
#[inline]
pub(crate) fn normal_term_grad(s: f64, mu0: f64) -> f64 {
    if s > mu0 {
        1.0
    } else if s < mu0 {
        -1.0
    } else {
        0.0
    }
}

/// Subgradient of `max(0, a - s)`, zero at the kink.
#[inline]
pub(crate) fn hinge_term_grad(s: f64, a: f64) -> f64 {
    if s < a {
        -1.0
    } else {
        0.0
    }
}

/// Mean per-sample score-guided regulariser (without the outer `lambda_se`).
pub fn score_guided_loss(samples: &[PerSampleForward], eps: f64, cfg: &SgLossConfig) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let total: f64 = samples
        .iter()
        .map(|p| match branch(p.recon_error, eps) {
            Branch::Normal => normal_term(p.s, cfg.mu0),
            Branch::Abnormal => cfg.lambda_a * hinge_term(p.s, cfg.a),
        })
        .sum();
    total / samples.len() as f64
}

/// `lambda_normal * L_normal + lambda_abnormal * L_abnormal`, where both
/// parts are sums over their branch divided by the full sample count and
/// neither carries `lambda_a`.
pub fn decomposed_loss(
    samples: &[PerSampleForward],
    eps: f64,
    cfg: &SgLossConfig,
    lambda_normal: f64,
    lambda_abnormal: f64,
) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let n = samples.len() as f64;
    let (mut normal, mut abnormal) = (0.0, 0.0);
    for p in samples {
        match branch(p.recon_error, eps) {
            Branch::Normal => normal += normal_term(p.s, cfg.mu0),
            Branch::Abnormal => abnormal += hinge_term(p.s, cfg.a),
        }
    }
    lambda_normal * (normal / n) + lambda_abnormal * (abnormal / n)
}

/// `KL(N(mu, sigma^2) || N(0, 1))`.
#[inline]
pub(crate) fn gaussian_kl(mu: f64, sigma: f64) -> f64 {
    -sigma.ln() + 0.5 * (sigma * sigma + mu * mu) - 0.5
}

/// Score guidance for the Gaussian variants: KL to the standard normal on the
/// normal branch, hinge on the mean otherwise.
pub fn kl_score_loss(samples: &[PerSampleForward], eps: f64, cfg: &SgLossConfig) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (i, p) in samples.iter().enumerate() {
        let sigma = p
            .s_sigma
            .ok_or_else(|| Error::input(format!("sample {i} carries no sigma")))?;
        if !(sigma > 0.0) {
            return Err(Error::input(format!(
                "sample {i}: sigma must be positive, got {sigma}"
            )));
        }
        total += match branch(p.recon_error, eps) {
            Branch::Normal => gaussian_kl(p.s, sigma),
            Branch::Abnormal => cfg.lambda_a * hinge_term(p.s, cfg.a),
        };
    }
    Ok(total / samples.len() as f64)
}

#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
