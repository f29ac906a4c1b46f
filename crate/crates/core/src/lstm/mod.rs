//! Two-layer LSTM action classifier trained from scratch.

mod adam;
mod network;
mod params;
mod report;
mod serialize;
mod train;

use thiserror::Error;

pub use adam::Adam;
pub use network::{
    argmax, dropout_mask, loss, softmax, ForwardCache, ForwardPass, Mode, CLASSES, PROB_FLOOR,
};
pub use params::{
    Architecture, Gate, LstmLayerParams, LstmModel, LstmParams, OutputParams, TENSOR_NAMES,
};
pub use report::{evaluate, Averages, ClassMetrics, ClassificationReport};
pub use serialize::{
    load_model, read_model, save_model, write_model, MODEL_FORMAT, MODEL_FORMAT_VERSION,
};
pub use train::{
    dataset_metrics, fit, split_train_validation, train, EpochRecord, TrainConfig, TrainOutcome,
};

#[derive(Debug, Error)]
pub enum LstmError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("model format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}
