use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabeledDataset;
use crate::error::{Error, Result};

/// One corrupted cell: `row`'s value in `col` was replaced by `donor`'s.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwappedCell {
    pub row: usize,
    pub col: usize,
    pub donor: usize,
}

/// Swap noise on the training split: `round(sample_rate * n_normal)` normal
/// rows each get `round(feature_rate * dim)` cells replaced by the same
/// column's value from another random row. Labels are untouched.
pub fn inject_noise(
    train: &LabeledDataset,
    sample_rate: f64,
    feature_rate: f64,
    seed: u64,
) -> Result<(LabeledDataset, Vec<SwappedCell>)> {
    if !(0.0..=1.0).contains(&sample_rate) || !(0.0..=1.0).contains(&feature_rate) {
        return Err(Error::input("noise rates must lie in [0, 1]"));
    }
    let normals: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == 0).collect();
    let n_rows = (sample_rate * normals.len() as f64).round() as usize;
    let dim = train.dim();
    let n_cols = (feature_rate * dim as f64).round() as usize;
    let mut out = train.clone();
    let mut log = Vec::new();
    if n_rows == 0 || n_cols == 0 || train.len() < 2 {
        return Ok((out, log));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = sample(&mut rng, normals.len(), n_rows);
    for pos in picked.iter() {
        let row = normals[pos];
        for col in sample(&mut rng, dim, n_cols).iter() {
            // uniform over every other row
            let mut donor = rng.gen_range(0..train.len() - 1);
            if donor >= row {
                donor += 1;
            }
            out.features.set(row, col, train.features.get(donor, col));
            log.push(SwappedCell { row, col, donor });
        }
    }
    Ok((out, log))
}
