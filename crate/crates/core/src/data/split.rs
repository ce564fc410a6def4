use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};

/// Train / validation / test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::config("split fractions must be positive"));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("split fractions must sum to 1"));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes; val and test are rounded, train takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let val = ((n as f64 * self.val).round() as usize).min(n);
        let test = ((n as f64 * self.test).round() as usize).min(n - val);
        (n - val - test, val, test)
    }
}

/// Unstratified random split by shuffled indices, deterministic under `seed`.
pub fn split_indices(n: usize, fractions: &SplitFractions, seed: u64) -> Result<[Vec<usize>; 3]> {
    fractions.validate()?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_val, _) = fractions.sizes(n);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok([idx, val, test])
}

pub fn split_dataset(
    dataset: &LabeledDataset,
    fractions: &SplitFractions,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let [train, val, test] = split_indices(dataset.len(), fractions, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&val), dataset.subset(&test)))
}

/// Anomalies to keep so that `k / (n_normal + k)` is closest to `target_rate`.
pub fn anomalies_for_rate(n_normal: usize, target_rate: f64) -> usize {
    (target_rate * n_normal as f64 / (1.0 - target_rate)).round() as usize
}

/// Drops anomalies uniformly at random until the anomaly rate matches
/// `target_rate` to within one sample. Normal rows and row order are kept.
pub fn subsample_anomaly_rate(train: &LabeledDataset, target_rate: f64, seed: u64) -> Result<LabeledDataset> {
    if !(0.0..1.0).contains(&target_rate) {
        return Err(Error::input(format!("target rate {target_rate} outside [0, 1)")));
    }
    let current = train.anomaly_rate();
    if target_rate > current + 1e-12 {
        return Err(Error::input(format!(
            "target anomaly rate {target_rate} exceeds current rate {current:.6}"
        )));
    }
    let anomalies: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == 1).collect();
    let n_normal = train.len() - anomalies.len();
    let keep = anomalies_for_rate(n_normal, target_rate).min(anomalies.len());

    let mut chosen = anomalies;
    chosen.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    chosen.truncate(keep);
    let mut keep_mask = vec![false; train.len()];
    for i in chosen {
        keep_mask[i] = true;
    }
    let rows: Vec<usize> = (0..train.len())
        .filter(|&i| train.labels[i] == 0 || keep_mask[i])
        .collect();
    Ok(train.subset(&rows))
}
