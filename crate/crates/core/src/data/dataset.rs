use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DataMatrix;

/// Features with per-row anomaly labels (1 = anomaly).
///
/// Labels exist for evaluation; no training loss reads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: DataMatrix,
    pub labels: Vec<u8>,
    /// Region index in `0..=3`, set by [`crate::data::partition_fields`].
    pub field_id: Option<Vec<u8>>,
    /// Radial coordinate of each row, recorded by the synthetic generators.
    pub radius: Option<Vec<f64>>,
}

impl LabeledDataset {
    pub fn new(features: DataMatrix, labels: Vec<u8>) -> Result<Self> {
        let ds = Self {
            features,
            labels,
            field_id: None,
            radius: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        if self.labels.len() != n {
            return Err(Error::dim(format!("{} labels for {n} rows", self.labels.len())));
        }
        if self.labels.iter().any(|&l| l > 1) {
            return Err(Error::input("labels must be 0 or 1"));
        }
        if let Some(f) = &self.field_id {
            if f.len() != n || f.iter().any(|&v| v > 3) {
                return Err(Error::input("field ids must be in 0..=3, one per row"));
            }
        }
        if self.radius.as_ref().is_some_and(|r| r.len() != n) {
            return Err(Error::dim("radius length differs from row count"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn n_anomalies(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn anomaly_rate(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.n_anomalies() as f64 / self.len() as f64
        }
    }

    /// Rows at `indices`, in order, with every per-row annotation carried along.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            field_id: self
                .field_id
                .as_ref()
                .map(|f| indices.iter().map(|&i| f[i]).collect()),
            radius: self
                .radius
                .as_ref()
                .map(|r| indices.iter().map(|&i| r[i]).collect()),
        }
    }
}
