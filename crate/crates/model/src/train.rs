//! Training loop: shuffled mini-batches with gradient accumulation, AdamW,
//! and early stopping on validation per-token loss.
//!
//! Per-example gradients are computed in parallel against the read-only
//! model and summed in example order, so results do not depend on the
//! thread count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{OptimConfig, TrainConfig};
use crate::error::{ModelError, Result};
use crate::net::Model;
use crate::optim::AdamW;
use crate::params::Params;
use treemath_core::encode::EncodedSequence;

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: usize,
    pub epoch: usize,
    /// Per-token loss of the optimizer step, or of the epoch for
    /// validation entries.
    pub loss: f64,
    pub lr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_loss: Option<f64>,
}

/// Everything needed to resume training exactly where it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub epoch: usize,
    /// Examples of the current epoch already consumed.
    pub cursor: usize,
    pub step: usize,
    pub optim: AdamW,
    pub best_val: Option<f64>,
    pub best_params: Option<Params>,
    pub bad_epochs: usize,
    pub stopped: bool,
}

impl TrainState {
    pub fn new(model: &Model) -> TrainState {
        TrainState {
            epoch: 0,
            cursor: 0,
            step: 0,
            optim: AdamW::new(&model.params),
            best_val: None,
            best_params: None,
            bad_epochs: 0,
            stopped: false,
        }
    }
}

/// Why [`Trainer::fit`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EarlyStopped,
    MaxEpochs,
    MaxSteps,
}

pub struct Trainer {
    pub optim: OptimConfig,
    pub train: TrainConfig,
    pub state: TrainState,
}

/// Deterministic example order for one epoch.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Summed loss, token count and summed gradients over `batch`.
pub fn batch_gradients(model: &Model, batch: &[&EncodedSequence]) -> Result<(f64, usize, Params)> {
    let parts: Vec<(f64, usize, Params)> = batch
        .par_iter()
        .map(|seq| model.loss_and_grad(seq))
        .collect::<Result<_>>()?;
    let mut grads = model.params.zeros_like();
    let (mut loss, mut count) = (0.0, 0);
    for (l, c, g) in &parts {
        loss += l;
        count += c;
        grads.add_assign(g);
    }
    Ok((loss, count, grads))
}

/// Per-token loss over a set of sequences.
pub fn per_token_loss(model: &Model, seqs: &[EncodedSequence]) -> Result<f64> {
    let parts: Vec<(f64, usize)> = seqs.par_iter().map(|s| model.loss(s)).collect::<Result<_>>()?;
    let (loss, count) = parts.iter().fold((0.0, 0), |(l, c), (a, b)| (l + a, c + b));
    Ok(if count == 0 { 0.0 } else { loss / count as f64 })
}

impl Trainer {
    pub fn new(model: &Model, optim: OptimConfig, train: TrainConfig) -> Trainer {
        Trainer {
            optim,
            train,
            state: TrainState::new(model),
        }
    }

    /// One optimizer step on `batch`, with the gradient normalized per
    /// token. Returns the per-token loss.
    pub fn step(&mut self, model: &mut Model, batch: &[&EncodedSequence]) -> Result<f64> {
        let (loss, count, mut grads) = batch_gradients(model, batch)?;
        let count = count.max(1) as f64;
        let loss = loss / count;
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { step: self.state.step });
        }
        grads.scale(1.0 / count);
        self.state.optim.update(&self.optim, &mut model.params, &grads);
        self.state.step += 1;
        Ok(loss)
    }

    fn examples_per_step(&self) -> usize {
        (self.optim.batch_size * self.optim.grad_accum).max(1)
    }

    /// Trains until early stopping, `max_epochs` or `max_steps`. `on_log`
    /// receives every log entry; `on_epoch` runs after each completed epoch
    /// and on a step-limit stop, typically to write a checkpoint. On return
    /// the model holds the best parameters seen on validation, if any.
    pub fn fit(
        &mut self,
        model: &mut Model,
        train: &[EncodedSequence],
        val: &[EncodedSequence],
        on_log: &mut dyn FnMut(&LogEntry),
        on_epoch: &mut dyn FnMut(&Model, &Trainer) -> Result<()>,
    ) -> Result<StopReason> {
        let per_step = self.examples_per_step();
        let reason = loop {
            if self.state.stopped {
                break StopReason::EarlyStopped;
            }
            if self.state.epoch >= self.train.max_epochs {
                break StopReason::MaxEpochs;
            }
            let order = epoch_order(train.len(), self.train.seed, self.state.epoch);
            let mut hit_limit = false;
            while self.state.cursor < order.len() {
                if self.train.max_steps.is_some_and(|m| self.state.step >= m) {
                    hit_limit = true;
                    break;
                }
                let end = (self.state.cursor + per_step).min(order.len());
                let batch: Vec<&EncodedSequence> = order[self.state.cursor..end].iter().map(|&i| &train[i]).collect();
                let loss = self.step(model, &batch)?;
                self.state.cursor = end;
                if self.train.log_every > 0 && self.state.step.is_multiple_of(self.train.log_every) {
                    on_log(&LogEntry {
                        step: self.state.step,
                        epoch: self.state.epoch,
                        loss,
                        lr: self.optim.lr,
                        val_loss: None,
                    });
                }
            }
            if hit_limit {
                on_epoch(model, self)?;
                break StopReason::MaxSteps;
            }
            self.end_epoch(model, val, on_log)?;
            on_epoch(model, self)?;
        };
        if let Some(best) = &self.state.best_params {
            model.params = best.clone();
        }
        Ok(reason)
    }

    fn end_epoch(&mut self, model: &Model, val: &[EncodedSequence], on_log: &mut dyn FnMut(&LogEntry)) -> Result<()> {
        let epoch = self.state.epoch;
        self.state.epoch += 1;
        self.state.cursor = 0;
        if val.is_empty() {
            return Ok(());
        }
        let val_loss = per_token_loss(model, val)?;
        on_log(&LogEntry {
            step: self.state.step,
            epoch,
            loss: val_loss,
            lr: self.optim.lr,
            val_loss: Some(val_loss),
        });
        if self.state.best_val.is_none_or(|b| val_loss < b) {
            self.state.best_val = Some(val_loss);
            self.state.best_params = Some(model.params.clone());
            self.state.bad_epochs = 0;
        } else {
            self.state.bad_epochs += 1;
            if self.state.bad_epochs >= self.train.patience {
                self.state.stopped = true;
            }
        }
        Ok(())
    }
}
