use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Score counts per class over shared equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    /// `n_bins + 1` edges spanning the score range.
    pub edges: Vec<f64>,
    pub normal: Vec<usize>,
    pub abnormal: Vec<usize>,
}

impl ScoreHistogram {
    pub fn n_bins(&self) -> usize {
        self.normal.len()
    }
}

/// Bins span `[min, max]` of all scores; the last bin is closed on the right.
/// When every score is equal all mass lands in the first bin.
pub fn histogram(scores: &[f64], labels: &[u8], n_bins: usize) -> Result<ScoreHistogram> {
    if n_bins == 0 {
        return Err(Error::input("need at least one bin"));
    }
    if scores.len() != labels.len() {
        return Err(Error::dim("scores and labels differ in length"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::input("non-finite score"));
    }
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let (lo, hi) = if scores.is_empty() { (0.0, 0.0) } else { (lo, hi) };
    let width = (hi - lo) / n_bins as f64;
    let edges = (0..=n_bins)
        .map(|i| if i == n_bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut normal = vec![0; n_bins];
    let mut abnormal = vec![0; n_bins];
    for (&s, &l) in scores.iter().zip(labels) {
        let bin = if width > 0.0 {
            (((s - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        };
        if l == 1 {
            abnormal[bin] += 1;
        } else {
            normal[bin] += 1;
        }
    }
    Ok(ScoreHistogram {
        edges,
        normal,
        abnormal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conservation() {
        let s = [0.0, 0.1, 0.5, 0.9, 1.0, 0.3, 0.7];
        let l = [0, 0, 1, 1, 1, 0, 0];
        for bins in [1, 2, 5, 50] {
            let h = histogram(&s, &l, bins).unwrap();
            assert_eq!(h.normal.iter().sum::<usize>(), 4);
            assert_eq!(h.abnormal.iter().sum::<usize>(), 3);
            assert_eq!(h.edges.len(), bins + 1);
        }
        let one = histogram(&s, &l, 1).unwrap();
        assert_eq!((one.normal[0], one.abnormal[0]), (4, 3));
    }

    #[test]
    fn degenerate_range() {
        let h = histogram(&[2.0; 5], &[0, 1, 0, 1, 0], 4).unwrap();
        assert_eq!(h.normal, vec![3, 0, 0, 0]);
        assert_eq!(h.abnormal, vec![2, 0, 0, 0]);
        assert!(histogram(&[1.0], &[0], 0).is_err());
    }
}
