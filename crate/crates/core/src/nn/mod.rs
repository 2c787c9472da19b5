//! LSTM encoder–decoder forecaster with hand-written backpropagation.

mod adam;
mod loss;
mod lstm;
mod model_file;
mod network;
mod spec;
mod train;
mod weights;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::mae_loss;
pub use lstm::{cell_backward, cell_forward, lstm_forward, StepCache};
pub use model_file::{ModelFile, MODEL_FORMAT_VERSION};
pub use network::{backward, forward, seq2seq_forward, ForwardCache, ForwardPass, Mode};
pub use spec::{Architecture, ModelSpec};
pub use train::{evaluate_mae, predict, train, train_from, EpochRecord, TrainConfig, TrainTrace, WindowSet};
pub use weights::{DenseParams, LstmParams, NetworkWeights};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("horizon must be at least 1")]
    HorizonZero,
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("backward called without a cached forward pass")]
    MissingCache,
    #[error("non-finite gradient; update refused")]
    NonFiniteGradient,
    #[error("no training data")]
    NoData,
    #[error("loss diverged in epoch {epoch}")]
    DivergedLoss { epoch: usize, trace: TrainTrace },
    #[error("model file: {0}")]
    Format(String),
}
