use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{auc_pr, auc_roc, histogram, ks_statistic, score_difference, ScoreDiffs, ScoreHistogram};
use crate::error::Result;

/// Metrics of one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub ks: f64,
    pub score_diffs: Option<ScoreDiffs>,
    pub histogram: ScoreHistogram,
}

pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

impl EvalReport {
    pub fn compute(scores: &[f64], labels: &[u8], field_id: Option<&[u8]>, n_bins: usize) -> Result<Self> {
        let (normal, abnormal): (Vec<_>, Vec<_>) = scores
            .iter()
            .zip(labels)
            .partition(|(_, &l)| l == 0);
        let normal: Vec<f64> = normal.into_iter().map(|(s, _)| *s).collect();
        let abnormal: Vec<f64> = abnormal.into_iter().map(|(s, _)| *s).collect();
        Ok(Self {
            auc_roc: auc_roc(scores, labels)?,
            auc_pr: auc_pr(scores, labels)?,
            ks: ks_statistic(&normal, &abnormal)?,
            score_diffs: field_id
                .map(|f| score_difference(scores, labels, f))
                .transpose()?,
            histogram: histogram(scores, labels, n_bins)?,
        })
    }

    /// `key = value` lines with stable key names.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "auc_roc = {}", self.auc_roc);
        let _ = writeln!(out, "auc_pr = {}", self.auc_pr);
        let _ = writeln!(out, "ks = {}", self.ks);
        match &self.score_diffs {
            Some(d) => {
                let parts: Vec<String> = d
                    .0
                    .iter()
                    .map(|v| v.map_or_else(|| "nan".to_owned(), |x| x.to_string()))
                    .collect();
                let _ = writeln!(out, "score_diffs = [{}]", parts.join(", "));
            }
            None => {
                let _ = writeln!(out, "score_diffs = []");
            }
        }
        let join = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        let edges: Vec<String> = self.histogram.edges.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "histogram.edges = [{}]", edges.join(", "));
        let _ = writeln!(out, "histogram.normal = [{}]", join(&self.histogram.normal));
        let _ = writeln!(out, "histogram.abnormal = [{}]", join(&self.histogram.abnormal));
        out
    }
}
