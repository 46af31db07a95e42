//! Encoder f, predictor h, and the checkpoint format.

mod checkpoint;
mod config;
mod network;

pub use checkpoint::{Checkpoint, CheckpointHeader, TensorEntry, TensorKind, CHECKPOINT_FORMAT, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{inverse_softplus, EncoderConfig, ModelConfig};
pub use network::{
    initial_kappa, split_rows, Bound, Inference, Mode, Network, ParameterStore, PredictionVars, StatsUpdates, BN_EPS,
    BN_MOMENTUM, KAPPA_BIAS,
};
