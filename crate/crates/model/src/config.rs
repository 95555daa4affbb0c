//! Model, optimizer and ablation settings.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_seq: usize,
    /// Hidden width of the math-embedding correction network.
    pub phi_hidden: usize,
    /// Scale of the correction network's output layer at init.
    pub phi_init_scale: f64,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 128,
            n_layers: 4,
            n_heads: 4,
            d_ff: 512,
            max_seq: 1024,
            phi_hidden: 128,
            phi_init_scale: 1e-3,
            init_std: 0.02,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// A configuration small enough to train in minutes on one CPU core.
    pub fn desk() -> ModelConfig {
        ModelConfig {
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            d_ff: 256,
            max_seq: 256,
            phi_hidden: 64,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::Config(m.to_owned()));
        if self.d_model == 0 || self.n_heads == 0 || self.n_layers == 0 || self.d_ff == 0 || self.phi_hidden == 0 {
            return bad("sizes must be positive");
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return bad("d_model must be divisible by n_heads");
        }
        if self.max_seq == 0 || self.max_seq > 1024 {
            return bad("max_seq must be in 1..=1024");
        }
        Ok(())
    }
}

/// Switches for the ablations: tree-position embeddings, type embeddings,
/// text-linked math embeddings, and number sub-trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    pub tree_positions: bool,
    pub type_embeddings: bool,
    pub shared_embeddings: bool,
    pub number_trees: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation {
            tree_positions: true,
            type_embeddings: true,
            shared_embeddings: true,
            number_trees: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub grad_accum: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-2,
            batch_size: 4,
            grad_accum: 4,
        }
    }
}

impl OptimConfig {
    /// The fine-tuning learning rate used with a pre-trained base model.
    pub fn fine_tune_preset() -> OptimConfig {
        OptimConfig {
            lr: 1e-5,
            ..OptimConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Optional cap on optimizer steps.
    pub max_steps: Option<usize>,
    pub seed: u64,
    /// Write a training-log record every this many optimizer steps.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 20,
            patience: 2,
            max_steps: None,
            seed: 0,
            log_every: 10,
        }
    }
}
