use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("sequence of length {len} exceeds the model limit {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("target id {target} at position {position} is outside the allowed set")]
    MaskedTarget { position: usize, target: u32 },

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("no room to generate: prompt has {prompt} tokens, limit {limit}")]
    LengthExceeded { prompt: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Core(#[from] treemath_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
