//! Unsupervised anomaly detection with a score-guided autoencoder.
//!
//! An autoencoder learns to reconstruct the data while a small scoring
//! network, fed the latent code, learns an anomaly score. Samples whose
//! reconstruction error sits below a quantile threshold are treated as
//! obvious-normal and their score is pulled toward a small target `mu0`;
//! the rest are suspected anomalies whose score is pushed above `a` with a
//! hinge. Labels are only ever used for evaluation.
//!
//! Modules:
//! - [`numerics`]: matrices, dense layers, backprop, Adam.
//! - [`model`]: the model, its loss variants, training and checkpoints.
//! - [`data`]: synthetic generators, field partitioning, CSV preprocessing.
//! - [`metrics`]: AUC-ROC, AUC-PR, KS statistic, per-field score gaps.

pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numerics;

pub use data::{LabeledDataset, SyntheticFamily, SyntheticSpec};
pub use error::{Error, Result};
pub use metrics::EvalReport;
pub use model::{Architecture, Schedule, SgLossConfig, SgaeModel, TrainTrace, Variant};
pub use numerics::DataMatrix;
