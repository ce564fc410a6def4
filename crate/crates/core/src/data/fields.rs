use super::LabeledDataset;
use crate::error::{Error, Result};

/// Field index of a radius against the boundaries `mu + sigma`, `mu + 2 sigma`,
/// `mu + 3 sigma`; intervals are closed on the left.
pub fn field_of(r: f64, mu: f64, sigma: f64) -> u8 {
    if r < mu + sigma {
        0
    } else if r < mu + 2.0 * sigma {
        1
    } else if r < mu + 3.0 * sigma {
        2
    } else {
        3
    }
}

/// Tags each row with its field (0 obvious-normal, 1-2 transition, 3
/// obvious-abnormal) from the recorded radius.
pub fn partition_fields(dataset: &LabeledDataset, mu: f64, sigma: f64) -> Result<LabeledDataset> {
    let radius = dataset
        .radius
        .as_ref()
        .ok_or_else(|| Error::input("dataset has no radius metadata to partition"))?;
    if !(sigma > 0.0) {
        return Err(Error::input("sigma must be positive"));
    }
    let mut out = dataset.clone();
    out.field_id = Some(radius.iter().map(|&r| field_of(r, mu, sigma)).collect());
    Ok(out)
}
