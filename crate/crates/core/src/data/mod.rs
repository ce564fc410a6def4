//! Synthetic generators, field partitioning and the tabular pipeline.

mod dataset;
mod fields;
mod noise;
mod split;
mod synthetic;
pub mod tabular;

pub use dataset::LabeledDataset;
pub use fields::{field_of, partition_fields};
pub use noise::{inject_noise, SwappedCell};
pub use split::{
    anomalies_for_rate, split_dataset, split_indices, subsample_anomaly_rate, SplitFractions,
};
pub use synthetic::{generate_synthetic, SyntheticFamily, SyntheticSpec};
pub use tabular::{
    encode, load_csv, preprocess, read_csv, PreparedData, PreprocessSpec, RawTable, Standardizer,
};
