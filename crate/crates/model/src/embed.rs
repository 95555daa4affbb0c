//! Input embeddings: token, sequence position, tree position and type.
//!
//! Math tokens with a text rendering are embedded as the mean of the text
//! embeddings of that rendering plus a small learned correction. Specials
//! have their own table. Tree positions are encoded as fixed-length bit
//! vectors and projected by a learned matrix.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use crate::error::{ModelError, Result};
use crate::net::Model;
use crate::ops::{gelu, gelu_grad};
use crate::params::Params;
use treemath_core::encode::EncodedSequence;
use treemath_core::token::MathToken;
use treemath_core::tree::{TreePosition, MAX_DEPTH};
use treemath_core::vocab::{Vocab, SPECIALS};

/// Bits per path entry; covers sibling indices 0..64.
pub const BITS: usize = 6;
pub const DEPTH_SLOTS: usize = MAX_DEPTH;
pub const BIN_LEN: usize = 2 * BITS * DEPTH_SLOTS;

/// Indices of the ones in `bin(p)`. Entry `k` of the path fills slot `k`:
/// each of its 6 bits, most significant first, becomes a one-hot pair.
pub fn active_bits(p: &TreePosition) -> Result<Vec<usize>> {
    p.check_caps()?;
    let mut out = Vec::with_capacity(p.depth() * BITS);
    for (k, &entry) in p.entries().iter().enumerate() {
        for b in 0..BITS {
            let bit = (entry >> (BITS - 1 - b)) & 1;
            out.push(k * 2 * BITS + 2 * b + bit as usize);
        }
    }
    Ok(out)
}

/// The fixed-length bit vector `bin(p)`; unused depth slots are zero.
pub fn bin_encode(p: &TreePosition) -> Result<Vec<u8>> {
    let mut v = vec![0u8; BIN_LEN];
    for i in active_bits(p)? {
        v[i] = 1;
    }
    Ok(v)
}

/// Text ids of each non-special math token's rendering, by local math id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MathLinks {
    pub text_ids: Vec<Vec<u32>>,
}

impl MathLinks {
    pub fn new(vocab: &Vocab) -> MathLinks {
        let text_ids = (SPECIALS.len() as u32..vocab.math.size())
            .map(|local| {
                let token = vocab.math.local_token(local).expect("local id in range");
                let rendering = Vocab::text_rendering(&token).expect("non-special token has a rendering");
                vocab.text.tokenize(rendering)
            })
            .collect();
        MathLinks { text_ids }
    }
}

/// Embeddings of every math id, with what the backward pass needs.
#[derive(Debug, Clone)]
pub struct MathTable {
    /// Rows for local ids `5..M` (specials excluded).
    pub out: Array2<f64>,
    tbar: Option<Array2<f64>>,
    pre: Option<Array2<f64>>,
    hidden: Option<Array2<f64>>,
}

impl Model {
    /// Mean text embedding of each linked math token.
    fn text_average(&self) -> Array2<f64> {
        let text = &self.params.tensors[self.layout.text_emb];
        let mut tbar = Array2::zeros((self.links.text_ids.len(), self.config.d_model));
        for (mut row, ids) in tbar.rows_mut().into_iter().zip(&self.links.text_ids) {
            for &id in ids {
                row += &text.row(id as usize);
            }
            row /= ids.len() as f64;
        }
        tbar
    }

    pub fn math_table(&self) -> MathTable {
        let p = &self.params.tensors;
        match (self.layout.phi, self.layout.math_emb) {
            (Some(phi), _) => {
                let tbar = self.text_average();
                let pre = tbar.dot(&p[phi.w1]) + p[phi.b1].row(0);
                let hidden = pre.mapv(gelu);
                let out = &tbar + &hidden.dot(&p[phi.w2]) + p[phi.b2].row(0);
                MathTable {
                    out,
                    tbar: Some(tbar),
                    pre: Some(pre),
                    hidden: Some(hidden),
                }
            }
            (None, Some(free)) => MathTable {
                out: p[free].clone(),
                tbar: None,
                pre: None,
                hidden: None,
            },
            (None, None) => unreachable!("layout always has one math embedding source"),
        }
    }

    /// Backpropagates row gradients of the math table into the parameters.
    pub fn math_table_backward(&self, table: &MathTable, d_out: &Array2<f64>, grads: &mut Params) {
        let p = &self.params.tensors;
        match (self.layout.phi, self.layout.math_emb) {
            (Some(phi), _) => {
                let (tbar, pre, hidden) = (
                    table.tbar.as_ref().unwrap(),
                    table.pre.as_ref().unwrap(),
                    table.hidden.as_ref().unwrap(),
                );
                grads.tensors[phi.w2] += &hidden.t().dot(d_out);
                grads.tensors[phi.b2].row_mut(0).add_assign(&d_out.sum_axis(Axis(0)));
                let d_hidden = d_out.dot(&p[phi.w2].t());
                let d_pre = &d_hidden * &pre.mapv(gelu_grad);
                grads.tensors[phi.w1] += &tbar.t().dot(&d_pre);
                grads.tensors[phi.b1].row_mut(0).add_assign(&d_pre.sum_axis(Axis(0)));
                let d_tbar = d_out + &d_pre.dot(&p[phi.w1].t());
                let d_text = &mut grads.tensors[self.layout.text_emb];
                for (row, ids) in d_tbar.rows().into_iter().zip(&self.links.text_ids) {
                    let k = ids.len() as f64;
                    for &id in ids {
                        d_text.row_mut(id as usize).scaled_add(1.0 / k, &row);
                    }
                }
            }
            (None, Some(free)) => grads.tensors[free] += d_out,
            (None, None) => unreachable!(),
        }
    }

    /// Embedding row of a unified id.
    pub fn token_embedding<'a>(&'a self, id: u32, table: &'a MathTable) -> ArrayView1<'a, f64> {
        let t = self.vocab.text_size();
        if id < t {
            return self.params.tensors[self.layout.text_emb].row(id as usize);
        }
        let local = (id - t) as usize;
        if local < SPECIALS.len() {
            self.params.tensors[self.layout.special_emb].row(local)
        } else {
            table.out.row(local - SPECIALS.len())
        }
    }

    /// Embedding of a single math token, or `None` if it has no id.
    pub fn math_token_embed(&self, token: &MathToken) -> Option<Array1<f64>> {
        let id = self.vocab.math_token_id(token)?;
        let table = self.math_table();
        Some(self.token_embedding(id, &table).to_owned())
    }

    /// `W bin(p)`, or zero when tree positions are disabled.
    pub fn tree_pos_embed(&self, p: &TreePosition) -> Result<Array1<f64>> {
        let mut out = Array1::zeros(self.config.d_model);
        if let Some(w) = self.layout.tree_w {
            let w = &self.params.tensors[w];
            for i in active_bits(p)? {
                out += &w.row(i);
            }
        }
        Ok(out)
    }

    /// Sum of token, sequence-position, tree-position and type embeddings
    /// for the items `offset..offset + ids.len()` of a sequence.
    pub fn embed_rows(&self, seq: &EncodedSequence, offset: usize, table: &MathTable) -> Result<Array2<f64>> {
        let len = seq.len();
        if offset + len > self.config.max_seq {
            return Err(ModelError::SequenceTooLong {
                len: offset + len,
                max: self.config.max_seq,
            });
        }
        let p = &self.params.tensors;
        let mut x = p[self.layout.pos_emb].slice(s![offset..offset + len, ..]).to_owned();
        for (i, mut row) in x.rows_mut().into_iter().enumerate() {
            row += &self.token_embedding(seq.ids[i], table);
            if let Some(te) = self.layout.type_emb {
                row += &p[te].row(seq.tags[i].index());
            }
            if let (Some(w), Some(pos)) = (self.layout.tree_w, &seq.positions[i]) {
                for b in active_bits(pos)? {
                    row += &p[w].row(b);
                }
            }
        }
        Ok(x)
    }

    pub fn sequence_embed(&self, seq: &EncodedSequence) -> Result<Array2<f64>> {
        let table = self.math_table();
        self.embed_rows(seq, 0, &table)
    }

    /// Scatters `dx` into the embedding tables; math-token rows are
    /// collected in `d_table` for [`Model::math_table_backward`].
    pub fn embed_backward(&self, seq: &EncodedSequence, dx: &Array2<f64>, d_table: &mut Array2<f64>, grads: &mut Params) {
        let t = self.vocab.text_size();
        let l = &self.layout;
        grads.tensors[l.pos_emb]
            .slice_mut(s![..seq.len(), ..])
            .add_assign(dx);
        for (i, row) in dx.rows().into_iter().enumerate() {
            let id = seq.ids[i];
            if id < t {
                grads.tensors[l.text_emb].row_mut(id as usize).add_assign(&row);
            } else {
                let local = (id - t) as usize;
                if local < SPECIALS.len() {
                    grads.tensors[l.special_emb].row_mut(local).add_assign(&row);
                } else {
                    d_table.row_mut(local - SPECIALS.len()).add_assign(&row);
                }
            }
            if let Some(te) = l.type_emb {
                grads.tensors[te].row_mut(seq.tags[i].index()).add_assign(&row);
            }
            if let (Some(w), Some(pos)) = (l.tree_w, &seq.positions[i]) {
                for b in active_bits(pos).expect("positions were checked in the forward pass") {
                    grads.tensors[w].row_mut(b).add_assign(&row);
                }
            }
        }
    }
}

use std::ops::AddAssign;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_five_expands_msb_first() {
        let bits = bin_encode(&TreePosition(vec![5])).unwrap();
        let pairs: Vec<(u8, u8)> = (0..BITS).map(|b| (bits[2 * b], bits[2 * b + 1])).collect();
        assert_eq!(pairs, [(1, 0), (1, 0), (1, 0), (0, 1), (1, 0), (0, 1)]);
        assert!(bits[2 * BITS..].iter().all(|&b| b == 0));
    }

    #[test]
    fn root_is_all_zero() {
        let bits = bin_encode(&TreePosition::root()).unwrap();
        assert_eq!(bits.len(), 384);
        assert!(bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn two_entries_fill_two_slots() {
        let bits = bin_encode(&TreePosition(vec![1, 3])).unwrap();
        assert_eq!(bits.iter().filter(|&&b| b == 1).count(), 12);
        assert!(bits[24..].iter().all(|&b| b == 0));
        // Independent expansion: each entry as a 6-character binary string.
        let mut expected = vec![0u8; 384];
        for (k, e) in [1u8, 3].iter().enumerate() {
            for (b, c) in format!("{e:06b}").chars().enumerate() {
                expected[k * 12 + 2 * b + usize::from(c == '1')] = 1;
            }
        }
        assert_eq!(bits, expected);
    }

    #[test]
    fn caps_are_enforced() {
        assert!(bin_encode(&TreePosition(vec![64])).is_err());
        assert!(bin_encode(&TreePosition(vec![0; 33])).is_err());
        assert!(bin_encode(&TreePosition(vec![63; 32])).is_ok());
    }

    #[test]
    fn injective_on_short_paths() {
        let mut seen = std::collections::HashSet::new();
        for a in 0..64u8 {
            assert!(seen.insert(bin_encode(&TreePosition(vec![a])).unwrap()));
            for b in [0u8, 1, 17, 63] {
                assert!(seen.insert(bin_encode(&TreePosition(vec![a, b])).unwrap()));
            }
        }
        assert!(seen.insert(bin_encode(&TreePosition::root()).unwrap()));
    }
}
