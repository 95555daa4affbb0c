//! Tree-aware input embeddings, a small decoder-only transformer with text
//! and math output heads, masked training, and constrained generation.

pub mod checkpoint;
pub mod config;
pub mod embed;
pub mod error;
pub mod generate;
pub mod net;
pub mod ops;
pub mod optim;
pub mod params;
pub mod train;

pub use config::{Ablation, ModelConfig, OptimConfig, TrainConfig};
pub use error::{ModelError, Result};
pub use net::Model;
pub use checkpoint::Checkpoint;
pub use generate::{GenerateConfig, Generation, Strategy};
pub use train::{LogEntry, StopReason, TrainState, Trainer};
