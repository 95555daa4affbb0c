//! AdamW with decoupled weight decay.

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use crate::config::OptimConfig;
use crate::params::{Params, StoredTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub step: usize,
    pub m: Params,
    pub v: Params,
}

/// Serializable optimizer moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: usize,
    pub m: Vec<StoredTensor>,
    pub v: Vec<StoredTensor>,
}

impl AdamW {
    pub fn new(params: &Params) -> AdamW {
        AdamW {
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    /// One update of `params` from `grads`.
    pub fn update(&mut self, cfg: &OptimConfig, params: &mut Params, grads: &Params) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for i in 0..params.tensors.len() {
            let decay = if params.specs[i].decay { cfg.weight_decay } else { 0.0 };
            Zip::from(&mut params.tensors[i])
                .and(&mut self.m.tensors[i])
                .and(&mut self.v.tensors[i])
                .and(&grads.tensors[i])
                .for_each(|w, m, v, &g| {
                    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                    let update = (*m / bc1) / ((*v / bc2).sqrt() + cfg.eps);
                    *w -= cfg.lr * (update + decay * *w);
                });
        }
    }

    pub fn to_state(&self) -> AdamState {
        AdamState {
            step: self.step,
            m: self.m.to_stored(),
            v: self.v.to_stored(),
        }
    }

    pub fn from_state(params: &Params, state: AdamState) -> crate::error::Result<AdamW> {
        Ok(AdamW {
            step: state.step,
            m: Params::from_stored(&params.specs, state.m)?,
            v: Params::from_stored(&params.specs, state.v)?,
        })
    }
}
