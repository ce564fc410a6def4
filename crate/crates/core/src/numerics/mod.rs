//! Dense matrices, fully connected networks and the Adam optimizer.
//!
//! Everything is `f64` and deterministic for a given seed.

mod adam;
mod matrix;
mod network;

pub use adam::{AdamState, DEFAULT_LEARNING_RATE};
pub use matrix::DataMatrix;
pub use network::{Activation, DenseLayer, ForwardCache, LayerGrads, MlpNetwork, NetworkGrads};
