//! Evaluation metrics for anomaly scores.

mod fields;
mod histogram;
mod ks;
mod ranking;
mod report;

pub use fields::{score_difference, ScoreDiffs};
pub use histogram::{histogram, ScoreHistogram};
pub use ks::ks_statistic;
pub use ranking::{auc_pr, auc_roc};
pub use report::{EvalReport, DEFAULT_HISTOGRAM_BINS};
