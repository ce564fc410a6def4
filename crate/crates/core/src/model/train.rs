//! Mini-batch training: shuffle, forward, loss, backprop and an Adam step per
//! batch, with the epoch of lowest validation loss kept as the result.

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::epsilon_from_percentile;
use super::sgae::SgaeModel;
use super::Variant;
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics::{auc_roc, score_difference, ScoreDiffs};
use crate::numerics::{AdamState, DataMatrix, DEFAULT_LEARNING_RATE};

const SHUFFLE_STREAM: u64 = 2;

/// How often the branch threshold is recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    /// From each mini-batch's own reconstruction errors.
    #[default]
    PerBatch,
    /// Once per epoch, from the whole training set before the first batch.
    PerEpoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub epsilon_mode: EpsilonMode,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 1024,
            seed: 0,
            learning_rate: DEFAULT_LEARNING_RATE,
            epsilon_mode: EpsilonMode::PerBatch,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub score_diffs: Option<ScoreDiffs>,
    pub monitor_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainTrace {
    pub fn first(&self) -> Option<&EpochRecord> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SgaeModel,
    pub trace: TrainTrace,
}

fn observe(model: &SgaeModel, monitor: &LabeledDataset) -> Result<(Option<ScoreDiffs>, Option<f64>)> {
    let scores = model.predict_scores(&monitor.features)?;
    let diffs = monitor
        .field_id
        .as_ref()
        .map(|f| score_difference(&scores, &monitor.labels, f))
        .transpose()?;
    let auc = auc_roc(&scores, &monitor.labels).ok();
    Ok((diffs, auc))
}

/// Trains `model` on the rows of `train`.
///
/// `val` drives model selection: the parameters after the epoch with the
/// lowest validation total loss are returned (the final ones when `val` is
/// `None`). `monitor` only feeds the trace; its labels never reach a loss.
pub fn train(
    mut model: SgaeModel,
    train: &DataMatrix,
    val: Option<&DataMatrix>,
    schedule: &Schedule,
    monitor: Option<&LabeledDataset>,
) -> Result<TrainOutcome> {
    schedule.validate()?;
    let n = train.rows();
    if n == 0 {
        return Err(Error::input("empty training set"));
    }
    if train.cols() != model.input_dim() {
        return Err(Error::dim(format!(
            "training data has {} columns, model expects {}",
            train.cols(),
            model.input_dim()
        )));
    }
    let batch_size = if schedule.batch_size > n {
        warn!("batch size {} exceeds {n} rows; using one full batch", schedule.batch_size);
        n
    } else {
        schedule.batch_size
    };

    let mut adam = AdamState::new(&model.param_shapes(), schedule.learning_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = TrainTrace::default();
    let mut best: Option<(f64, SgaeModel)> = None;
    let uses_eps = model.variant() != Variant::PlainAe;

    for epoch in 1..=schedule.epochs {
        order.shuffle(&mut rng);
        let epoch_eps = match schedule.epsilon_mode {
            EpsilonMode::PerEpoch if uses_eps => {
                let errors = model.reconstruction_errors(train)?;
                Some(epsilon_from_percentile(&errors, model.config().eps_p)?)
            }
            _ => None,
        };

        let mut weighted = 0.0;
        for (b, idx) in order.chunks(batch_size).enumerate() {
            let batch = train.select_rows(idx);
            let (loss, grads) = model.loss_and_grads(&batch, epoch_eps)?;
            if !loss.total.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    value: loss.total,
                });
            }
            weighted += loss.total * idx.len() as f64;
            let grad_slices = grads.slices();
            adam.update(&mut model.param_slices_mut(), &grad_slices)?;
        }
        let train_loss = weighted / n as f64;

        let val_loss = val.map(|v| model.total_loss(v)).transpose()?;
        if let Some(v) = val_loss {
            if !v.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: usize::MAX,
                    value: v,
                });
            }
        }
        let (score_diffs, monitor_auc) = match monitor {
            Some(m) => observe(&model, m)?,
            None => (None, None),
        };
        trace.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            score_diffs,
            monitor_auc,
        });

        match val_loss {
            Some(v) if best.as_ref().map_or(true, |(b, _)| v < *b) => {
                best = Some((v, model.clone()));
                trace.best_epoch = epoch;
            }
            Some(_) => {}
            None => trace.best_epoch = epoch,
        }
    }

    let model = match best {
        Some((_, m)) => m,
        None => model,
    };
    Ok(TrainOutcome { model, trace })
}
