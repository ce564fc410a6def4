use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean anomaly score minus mean normal score inside each of the four
/// fields. A field lacking either class has no value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreDiffs(pub [Option<f64>; 4]);

impl ScoreDiffs {
    pub fn get(&self, field: usize) -> Option<f64> {
        self.0[field]
    }
}

pub fn score_difference(scores: &[f64], labels: &[u8], field_id: &[u8]) -> Result<ScoreDiffs> {
    if scores.len() != labels.len() || scores.len() != field_id.len() {
        return Err(Error::dim("scores, labels and field ids differ in length"));
    }
    let mut sums = [[0.0f64; 2]; 4];
    let mut counts = [[0usize; 2]; 4];
    for ((&s, &l), &f) in scores.iter().zip(labels).zip(field_id) {
        if f > 3 || l > 1 {
            return Err(Error::input(format!("field {f} / label {l} out of range")));
        }
        sums[f as usize][l as usize] += s;
        counts[f as usize][l as usize] += 1;
    }
    let mut out = [None; 4];
    for f in 0..4 {
        if counts[f][0] > 0 && counts[f][1] > 0 {
            out[f] = Some(sums[f][1] / counts[f][1] as f64 - sums[f][0] / counts[f][0] as f64);
        }
    }
    Ok(ScoreDiffs(out))
}
