//! Constrained generation: greedy, beam search and top-k sampling.
//!
//! Every step restricts the next token to the automaton's allowed set,
//! further narrowed to tokens after which the open formula can still be
//! closed and the sequence ended within the remaining length budget. Any
//! model therefore emits complete, well-formed formulas.

use std::collections::HashMap;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::MathTable;
use crate::error::{ModelError, Result};
use crate::net::{masked_log_softmax, KvCache, Model};
use treemath_core::decoder::{DecoderState, TokenMask};
use treemath_core::encode::{tag_for, EncodedSequence};
use treemath_core::vocab::{IdKind, Vocab, EOS_ID};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    Beam { width: usize },
    TopK { k: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub strategy: Strategy,
    /// Most new tokens to emit, end-of-sequence included.
    pub max_len: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            strategy: Strategy::Beam { width: 3 },
            max_len: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    /// Prompt followed by the generated tokens.
    pub sequence: EncodedSequence,
    pub prompt_len: usize,
    pub log_prob: f64,
}

impl Generation {
    /// Generated ids, without the prompt or the end-of-sequence token.
    pub fn continuation(&self) -> &[u32] {
        let ids = &self.sequence.ids[self.prompt_len..];
        ids.strip_suffix(&[EOS_ID]).unwrap_or(ids)
    }
}

#[derive(Clone)]
struct Beam {
    seq: EncodedSequence,
    state: DecoderState,
    cache: KvCache,
    logits: Array1<f64>,
    log_prob: f64,
}

/// Allowed ids after which the sequence can still finish within
/// `remaining` tokens, counting the token itself.
pub fn feasible_next(state: &DecoderState, vocab: &Vocab, remaining: usize) -> TokenMask {
    let allowed = state.allowed_next(vocab);
    let mut cost: HashMap<IdKind, usize> = HashMap::new();
    let keep: Vec<u32> = allowed
        .iter()
        .filter(|&id| {
            if id == EOS_ID {
                return remaining >= 1;
            }
            let kind = vocab.id_kind(id).expect("mask ids are valid");
            let c = *cost.entry(kind).or_insert_with(|| {
                state.step(id, vocab).expect("allowed id steps").tokens_to_close()
            });
            c < remaining
        })
        .collect();
    TokenMask::from_ids(&keep)
}

impl Model {
    /// Continues `prompt` under `cfg`. The prompt must be non-empty.
    pub fn generate(&self, prompt: &EncodedSequence, cfg: &GenerateConfig) -> Result<Generation> {
        let limit = self.config.max_seq.min(prompt.len() + cfg.max_len);
        if prompt.is_empty() || prompt.len() >= limit {
            return Err(ModelError::LengthExceeded {
                prompt: prompt.len(),
                limit,
            });
        }
        let state = prompt.replay(&self.vocab)?;
        if state.tokens_to_close() > limit - prompt.len() {
            return Err(ModelError::LengthExceeded {
                prompt: prompt.len(),
                limit,
            });
        }
        let table = self.math_table();
        let mut cache = self.kv_cache();
        let logits = self.extend(&mut cache, prompt, &table)?;
        let start = Beam {
            seq: prompt.clone(),
            state,
            cache,
            logits: logits.row(logits.nrows() - 1).to_owned(),
            log_prob: 0.0,
        };
        let best = match cfg.strategy {
            Strategy::Greedy => self.beam_search(start, 1, limit, &table)?,
            Strategy::Beam { width } => self.beam_search(start, width.max(1), limit, &table)?,
            Strategy::TopK { k, seed } => self.sample(start, k.max(1), seed, limit, &table)?,
        };
        Ok(Generation {
            sequence: best.seq,
            prompt_len: prompt.len(),
            log_prob: best.log_prob,
        })
    }

    fn candidates(&self, beam: &Beam, limit: usize) -> Vec<(u32, f64)> {
        let mask = feasible_next(&beam.state, &self.vocab, limit - beam.seq.len());
        masked_log_softmax(beam.logits.view(), &mask)
    }

    /// Appends `id` to a beam, running the model unless it ends the sequence.
    fn push(&self, mut beam: Beam, id: u32, lp: f64, table: &MathTable) -> Result<Beam> {
        let kind = self.vocab.id_kind(id).ok_or(treemath_core::Error::UnknownId(id))?;
        let position = beam.state.next_position().cloned();
        beam.state.advance(id, &self.vocab)?;
        beam.seq.push(id, position.clone(), tag_for(kind));
        beam.log_prob += lp;
        if id != EOS_ID {
            let mut step = EncodedSequence::default();
            step.push(id, position, tag_for(kind));
            let logits = self.extend(&mut beam.cache, &step, table)?;
            beam.logits = logits.row(0).to_owned();
        }
        Ok(beam)
    }

    fn beam_search(&self, start: Beam, width: usize, limit: usize, table: &MathTable) -> Result<Beam> {
        let mut alive = vec![start];
        let mut finished: Vec<Beam> = Vec::new();
        while !alive.is_empty() {
            let mut scored: Vec<(f64, usize, u32, f64)> = Vec::new();
            for (bi, beam) in alive.iter().enumerate() {
                let mut cands = self.candidates(beam, limit);
                cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                cands.truncate(width);
                scored.extend(cands.into_iter().map(|(id, lp)| (beam.log_prob + lp, bi, id, lp)));
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            scored.truncate(width);
            let mut next = Vec::with_capacity(width);
            for (_, bi, id, lp) in scored {
                let beam = self.push(alive[bi].clone(), id, lp, table)?;
                if id == EOS_ID {
                    finished.push(beam);
                } else {
                    next.push(beam);
                }
            }
            alive = next;
            let best_finished = finished.iter().map(|b| b.log_prob).fold(f64::NEG_INFINITY, f64::max);
            let best_alive = alive.iter().map(|b| b.log_prob).fold(f64::NEG_INFINITY, f64::max);
            if finished.len() >= width && best_finished >= best_alive {
                break;
            }
        }
        // Log-probabilities only fall, so the best finished beam wins.
        let mut best: Option<Beam> = None;
        for beam in finished {
            if best.as_ref().is_none_or(|b| beam.log_prob > b.log_prob) {
                best = Some(beam);
            }
        }
        Ok(best.expect("the length budget forces every beam to finish"))
    }

    fn sample(&self, start: Beam, k: usize, seed: u64, limit: usize, table: &MathTable) -> Result<Beam> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut beam = start;
        loop {
            let mut cands = self.candidates(&beam, limit);
            cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            cands.truncate(k);
            let weights: Vec<f64> = cands.iter().map(|c| c.1.exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = cands.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            let (id, lp) = cands[pick];
            beam = self.push(beam, id, lp, table)?;
            if id == EOS_ID {
                return Ok(beam);
            }
        }
    }
}
