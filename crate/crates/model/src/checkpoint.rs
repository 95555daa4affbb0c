//! Checkpoint files.
//!
//! Layout: the magic `TMCK`, a little-endian `u32` version, a `u64` header
//! length, a JSON header, then every tensor as little-endian `f64` in row
//! major order. Tensors are stored bit-exactly so a resumed run continues
//! with identical losses.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Ablation, ModelConfig, OptimConfig, TrainConfig};
use crate::error::{ModelError, Result};
use crate::net::Model;
use crate::optim::AdamW;
use crate::params::Params;
use crate::train::{TrainState, Trainer};
use treemath_core::vocab::{Vocab, VocabFile};

const MAGIC: &[u8; 4] = b"TMCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    ablation: Ablation,
    vocab: VocabFile,
    training: Option<TrainingHeader>,
    #[serde(default)]
    metadata: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainingHeader {
    optim: OptimConfig,
    train: TrainConfig,
    epoch: usize,
    cursor: usize,
    step: usize,
    adam_step: usize,
    best_val: Option<f64>,
    has_best: bool,
    bad_epochs: usize,
    stopped: bool,
}

/// A model and, optionally, the state of the run that produced it.
pub struct Checkpoint {
    pub model: Model,
    pub trainer: Option<Trainer>,
    /// Free-form text stored by the caller, such as the run configuration.
    pub metadata: Option<String>,
}

fn write_params(out: &mut impl Write, p: &Params) -> std::io::Result<()> {
    for t in &p.tensors {
        for v in t.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_params(input: &mut impl Read, like: &Params) -> Result<Params> {
    let mut p = like.zeros_like();
    let mut buf = [0u8; 8];
    for t in &mut p.tensors {
        for v in t.iter_mut() {
            input
                .read_exact(&mut buf)
                .map_err(|e| ModelError::Checkpoint(format!("truncated tensor data: {e}")))?;
            *v = f64::from_le_bytes(buf);
        }
    }
    Ok(p)
}

/// Writes `model` and, if given, the trainer state and caller metadata.
pub fn save(path: &Path, model: &Model, trainer: Option<&Trainer>, metadata: Option<&str>) -> Result<()> {
    let header = Header {
        config: model.config.clone(),
        ablation: model.ablation,
        vocab: model.vocab.to_file(),
        training: trainer.map(|t| TrainingHeader {
            optim: t.optim.clone(),
            train: t.train.clone(),
            epoch: t.state.epoch,
            cursor: t.state.cursor,
            step: t.state.step,
            adam_step: t.state.optim.step,
            best_val: t.state.best_val,
            has_best: t.state.best_params.is_some(),
            bad_epochs: t.state.bad_epochs,
            stopped: t.state.stopped,
        }),
        metadata: metadata.map(str::to_owned),
    };
    let json = serde_json::to_vec(&header).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    // Write to a sibling file first so a crash never leaves a torn checkpoint.
    let tmp = path.with_extension("tmp");
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(json.len() as u64).to_le_bytes())?;
        out.write_all(&json)?;
        write_params(&mut out, &model.params)?;
        if let Some(t) = trainer {
            write_params(&mut out, &t.state.optim.m)?;
            write_params(&mut out, &t.state.optim.v)?;
            if let Some(best) = &t.state.best_params {
                write_params(&mut out, best)?;
            }
        }
        out.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a checkpoint written by [`save`].
pub fn load(path: &Path) -> Result<Checkpoint> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Checkpoint("not a checkpoint file".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    input.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    let vocab = Vocab::from_file(header.vocab)?;
    let mut model = Model::new(header.config, header.ablation, vocab)?;
    model.params = read_params(&mut input, &model.params)?;
    let trainer = match header.training {
        None => None,
        Some(h) => {
            let m = read_params(&mut input, &model.params)?;
            let v = read_params(&mut input, &model.params)?;
            let best_params = if h.has_best {
                Some(read_params(&mut input, &model.params)?)
            } else {
                None
            };
            Some(Trainer {
                optim: h.optim,
                train: h.train,
                state: TrainState {
                    epoch: h.epoch,
                    cursor: h.cursor,
                    step: h.step,
                    optim: AdamW { step: h.adam_step, m, v },
                    best_val: h.best_val,
                    best_params,
                    bad_epochs: h.bad_epochs,
                    stopped: h.stopped,
                },
            })
        }
    };
    if input.read(&mut [0u8; 1])? != 0 {
        return Err(ModelError::Checkpoint("trailing bytes after tensor data".into()));
    }
    Ok(Checkpoint {
        model,
        trainer,
        metadata: header.metadata,
    })
}
