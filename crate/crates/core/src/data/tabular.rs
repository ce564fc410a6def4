//! CSV ingestion and preprocessing for tabular datasets: de-duplication,
//! missing-row removal, one-hot encoding, a train/val/test split and
//! standardisation with training-split statistics.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::split::{split_indices, SplitFractions};
use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::DataMatrix;

const MISSING_TOKENS: [&str; 5] = ["", "NA", "N/A", "NaN", "?"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSpec {
    pub numeric_columns: Vec<String>,
    pub categorical_columns: Vec<String>,
    pub label_column: String,
    /// Label values meaning "anomaly". When empty, any non-zero number does.
    pub anomaly_labels: Vec<String>,
    pub drop_duplicates: bool,
    pub drop_missing: bool,
    pub noise_sample_rate: f64,
    pub noise_feature_rate: f64,
    pub split: SplitFractions,
    pub seed: u64,
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        Self {
            numeric_columns: Vec::new(),
            categorical_columns: Vec::new(),
            label_column: "label".to_owned(),
            anomaly_labels: Vec::new(),
            drop_duplicates: true,
            drop_missing: true,
            noise_sample_rate: 0.01,
            noise_feature_rate: 0.05,
            split: SplitFractions::default(),
            seed: 0,
        }
    }
}

impl PreprocessSpec {
    pub fn validate(&self) -> Result<()> {
        if self.numeric_columns.is_empty() && self.categorical_columns.is_empty() {
            return Err(Error::config("no feature columns declared"));
        }
        for r in [self.noise_sample_rate, self.noise_feature_rate] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config("noise rates must lie in [0, 1]"));
            }
        }
        let mut seen = HashSet::new();
        for c in self.numeric_columns.iter().chain(&self.categorical_columns) {
            if !seen.insert(c) || *c == self.label_column {
                return Err(Error::config(format!("column `{c}` declared twice")));
            }
        }
        self.split.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    /// Every cell of the record as read, used for duplicate detection.
    pub cells: Vec<String>,
    pub numeric: Vec<Option<f64>>,
    pub categorical: Vec<Option<String>>,
    pub label: Option<String>,
}

impl RawRow {
    pub fn has_missing(&self) -> bool {
        self.label.is_none()
            || self.numeric.iter().any(Option::is_none)
            || self.categorical.iter().any(Option::is_none)
    }
}

/// Declared columns of a CSV file, typed, one entry per record.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub numeric_columns: Vec<String>,
    pub categorical_columns: Vec<String>,
    pub rows: Vec<RawRow>,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    MISSING_TOKENS.iter().any(|m| t.eq_ignore_ascii_case(m))
}

fn parse_numeric(cell: &str) -> Option<f64> {
    if is_missing(cell) {
        return None;
    }
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_csv(path: impl AsRef<Path>, spec: &PreprocessSpec) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, spec)
}

/// Reads CSV (header row, comma separated, quotes allowed) from any reader.
pub fn read_csv<R: std::io::Read>(reader: R, spec: &PreprocessSpec) -> Result<RawTable> {
    spec.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    let find = |name: &String| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))
    };
    let num_idx = spec.numeric_columns.iter().map(find).collect::<Result<Vec<_>>>()?;
    let cat_idx = spec.categorical_columns.iter().map(find).collect::<Result<Vec<_>>>()?;
    let label_idx = find(&spec.label_column)?;

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        rows.push(RawRow {
            cells: record.iter().map(str::to_owned).collect(),
            numeric: num_idx.iter().map(|&i| parse_numeric(cell(i))).collect(),
            categorical: cat_idx
                .iter()
                .map(|&i| (!is_missing(cell(i))).then(|| cell(i).trim().to_owned()))
                .collect(),
            label: (!is_missing(cell(label_idx))).then(|| cell(label_idx).trim().to_owned()),
        });
    }
    Ok(RawTable {
        numeric_columns: spec.numeric_columns.clone(),
        categorical_columns: spec.categorical_columns.clone(),
        rows,
    })
}

/// Removes exact duplicate records, keeping the first occurrence.
pub fn drop_duplicate_rows(table: &mut RawTable) -> usize {
    let before = table.rows.len();
    let mut seen = HashSet::new();
    table.rows.retain(|r| seen.insert(r.cells.clone()));
    before - table.rows.len()
}

/// Features before standardisation, with column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTable {
    pub dataset: LabeledDataset,
    pub feature_names: Vec<String>,
    /// True for columns that came from a numeric source column.
    pub numeric_mask: Vec<bool>,
}

fn parse_label(raw: &str, spec: &PreprocessSpec) -> Result<u8> {
    if !spec.anomaly_labels.is_empty() {
        return Ok(u8::from(spec.anomaly_labels.iter().any(|a| a == raw)));
    }
    raw.parse::<f64>()
        .map(|v| u8::from(v != 0.0))
        .map_err(|_| Error::input(format!("label `{raw}` is not numeric; set anomaly_labels")))
}

/// Filters rows per `spec` and expands categoricals to one-hot columns.
///
/// Numeric columns come first in declared order, then each categorical's
/// indicator columns with categories sorted. The vocabulary is taken from the
/// whole filtered table. Remaining missing numeric cells (only possible with
/// `drop_missing = false`) are filled with the column mean; missing
/// categoricals get their own `<missing>` category.
pub fn encode(table: &RawTable, spec: &PreprocessSpec) -> Result<EncodedTable> {
    let mut table = table.clone();
    if spec.drop_duplicates {
        let dropped = drop_duplicate_rows(&mut table);
        if dropped > 0 {
            log::info!("dropped {dropped} duplicate rows");
        }
    }
    if spec.drop_missing {
        table.rows.retain(|r| !r.has_missing());
    } else {
        table.rows.retain(|r| r.label.is_some());
    }
    if table.rows.is_empty() {
        return Err(Error::input("no rows left after filtering"));
    }

    let n_num = table.numeric_columns.len();
    let vocab: Vec<Vec<String>> = (0..table.categorical_columns.len())
        .map(|c| {
            table
                .rows
                .iter()
                .map(|r| r.categorical[c].clone().unwrap_or_else(|| "<missing>".to_owned()))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();

    let mut feature_names: Vec<String> = table.numeric_columns.clone();
    let mut numeric_mask = vec![true; n_num];
    for (c, cats) in vocab.iter().enumerate() {
        for cat in cats {
            feature_names.push(format!("{}={}", table.categorical_columns[c], cat));
            numeric_mask.push(false);
        }
    }
    let dim = feature_names.len();

    let means: Vec<f64> = (0..n_num)
        .map(|j| {
            let vals: Vec<f64> = table.rows.iter().filter_map(|r| r.numeric[j]).collect();
            if vals.is_empty() {
                0.0
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        })
        .collect();

    let mut values = Vec::with_capacity(table.rows.len() * dim);
    let mut labels = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        for j in 0..n_num {
            values.push(row.numeric[j].unwrap_or(means[j]));
        }
        for (c, cats) in vocab.iter().enumerate() {
            let v = row.categorical[c].as_deref().unwrap_or("<missing>");
            values.extend(cats.iter().map(|cat| if cat == v { 1.0 } else { 0.0 }));
        }
        labels.push(parse_label(row.label.as_deref().unwrap_or_default(), spec)?);
    }
    let features = DataMatrix::from_vec(table.rows.len(), dim, values)?;
    Ok(EncodedTable {
        dataset: LabeledDataset::new(features, labels)?,
        feature_names,
        numeric_mask,
    })
}

/// Per-column affine map `(x - mean) / std` fitted on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; zero marks a constant column.
    pub std: Vec<f64>,
    pub mask: Vec<bool>,
}

impl Standardizer {
    /// Fits on `data`, touching only columns where `mask` is true.
    pub fn fit(data: &DataMatrix, mask: &[bool]) -> Result<Self> {
        if mask.len() != data.cols() {
            return Err(Error::dim("standardizer mask length differs from column count"));
        }
        if data.rows() == 0 {
            return Err(Error::input("cannot fit a standardizer on no rows"));
        }
        let n = data.rows() as f64;
        let mean: Vec<f64> = data.column_sums().into_iter().map(|s| s / n).collect();
        let mut var = vec![0.0; data.cols()];
        for row in data.iter_rows() {
            for (j, v) in row.iter().enumerate() {
                var[j] += (v - mean[j]) * (v - mean[j]);
            }
        }
        let std: Vec<f64> = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Self {
            mean,
            std,
            mask: mask.to_vec(),
        })
    }

    pub fn apply(&self, data: &DataMatrix) -> Result<DataMatrix> {
        if data.cols() != self.mean.len() {
            return Err(Error::dim("standardizer fitted on a different column count"));
        }
        let mut out = data.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            for j in 0..row.len() {
                if !self.mask[j] {
                    continue;
                }
                row[j] = if self.std[j] > 0.0 {
                    (row[j] - self.mean[j]) / self.std[j]
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.std.len())
            .filter(|&j| self.mask[j] && self.std[j] == 0.0)
            .collect()
    }
}

/// Train, validation and test splits ready for training.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub train: LabeledDataset,
    pub val: LabeledDataset,
    pub test: LabeledDataset,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
}

/// Encodes, splits with `split_seed`, and standardises numeric columns with
/// training-split statistics.
pub fn preprocess(table: &RawTable, spec: &PreprocessSpec, split_seed: u64) -> Result<PreparedData> {
    spec.validate()?;
    let encoded = encode(table, spec)?;
    prepare_encoded(&encoded, &spec.split, split_seed)
}

pub fn prepare_encoded(encoded: &EncodedTable, split: &SplitFractions, split_seed: u64) -> Result<PreparedData> {
    let ds = &encoded.dataset;
    let [tr, va, te] = split_indices(ds.len(), split, split_seed)?;
    let (mut train, mut val, mut test) = (ds.subset(&tr), ds.subset(&va), ds.subset(&te));
    let standardizer = Standardizer::fit(&train.features, &encoded.numeric_mask)?;
    for j in standardizer.constant_columns() {
        warn!(
            "column `{}` is constant on the training split; scaled to 0",
            encoded.feature_names[j]
        );
    }
    train.features = standardizer.apply(&train.features)?;
    val.features = standardizer.apply(&val.features)?;
    test.features = standardizer.apply(&test.features)?;
    Ok(PreparedData {
        train,
        val,
        test,
        feature_names: encoded.feature_names.clone(),
        standardizer,
    })
}
