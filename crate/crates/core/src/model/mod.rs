//! Score-guided autoencoder, its loss family and the training loop.

mod checkpoint;
mod config;
pub mod loss;
mod sgae;
mod sgm;
mod train;

pub use checkpoint::{checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint};
pub use config::{Architecture, SgLossConfig, Variant};
pub use loss::{
    decomposed_loss, epsilon_from_percentile, kl_score_loss, reconstruction_loss,
    score_guided_loss, Branch, PerSampleForward,
};
pub use sgae::{LossBreakdown, ModelGrads, SgaeModel};
pub use sgm::{RepresentationLearner, ScoreGuided};
pub use train::{train, EpochRecord, EpsilonMode, Schedule, TrainOutcome, TrainTrace};
