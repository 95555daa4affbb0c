//! A small pre-norm decoder-only transformer with separate text and math
//! output heads whose logits are concatenated over the unified id space.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use crate::config::{Ablation, ModelConfig};
use crate::embed::{MathLinks, MathTable};
use crate::error::{ModelError, Result};
use crate::ops::{gelu, gelu_grad, layer_norm, layer_norm_backward, LnCache};
use crate::params::{BlockIds, Layout, Params};
use treemath_core::decoder::{DecoderState, TokenMask};
use treemath_core::encode::EncodedSequence;
use treemath_core::vocab::Vocab;

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub ablation: Ablation,
    pub vocab: Vocab,
    pub layout: Layout,
    pub params: Params,
    pub links: MathLinks,
}

struct BlockCache {
    ln1: LnCache,
    h1: Array2<f64>,
    qkv: Array2<f64>,
    probs: Vec<Array2<f64>>,
    att: Array2<f64>,
    ln2: LnCache,
    h2: Array2<f64>,
    fc_pre: Array2<f64>,
    fc_act: Array2<f64>,
}

/// Activations kept from a forward pass for backpropagation.
pub struct ForwardCache {
    table: MathTable,
    blocks: Vec<BlockCache>,
    lnf: LnCache,
    hf: Array2<f64>,
}

impl Model {
    pub fn new(config: ModelConfig, ablation: Ablation, vocab: Vocab) -> Result<Model> {
        config.validate()?;
        let (layout, params) = Params::init(
            &config,
            ablation,
            vocab.text_size() as usize,
            vocab.math.size() as usize,
        );
        Ok(Model {
            links: MathLinks::new(&vocab),
            config,
            ablation,
            vocab,
            layout,
            params,
        })
    }

    /// Rebuilds a model around stored parameters.
    pub fn with_params(config: ModelConfig, ablation: Ablation, vocab: Vocab, params: Params) -> Result<Model> {
        let mut model = Model::new(config, ablation, vocab)?;
        model.params = Params::from_stored(&model.params.specs, params.to_stored())?;
        Ok(model)
    }

    /// Width of the logits: text ids then math ids.
    pub fn vocab_size(&self) -> usize {
        self.vocab.size()
    }

    fn head_dim(&self) -> usize {
        self.config.d_model / self.config.n_heads
    }

    pub fn forward(&self, seq: &EncodedSequence) -> Result<Array2<f64>> {
        Ok(self.forward_cached(seq)?.0)
    }

    pub fn forward_cached(&self, seq: &EncodedSequence) -> Result<(Array2<f64>, ForwardCache)> {
        if seq.ids.len() != seq.positions.len() || seq.ids.len() != seq.tags.len() {
            return Err(ModelError::ShapeMismatch("ids, positions and tags differ in length".into()));
        }
        let table = self.math_table();
        let mut x = self.embed_rows(seq, 0, &table)?;
        let mut blocks = Vec::with_capacity(self.layout.blocks.len());
        for b in &self.layout.blocks {
            let (next, cache) = self.block_forward(b, x);
            blocks.push(cache);
            x = next;
        }
        let p = &self.params.tensors;
        let (hf, lnf) = layer_norm(x.view(), p[self.layout.lnf_g].row(0), p[self.layout.lnf_b].row(0));
        let logits = self.heads(hf.view());
        Ok((logits, ForwardCache { table, blocks, lnf, hf }))
    }

    fn heads(&self, hf: ArrayView2<f64>) -> Array2<f64> {
        let p = &self.params.tensors;
        let l = &self.layout;
        let text = hf.dot(&p[l.text_head]) + p[l.text_head_b].row(0);
        let math = hf.dot(&p[l.math_head]) + p[l.math_head_b].row(0);
        concatenate(Axis(1), &[text.view(), math.view()]).expect("rows agree")
    }

    fn block_forward(&self, b: &BlockIds, x: Array2<f64>) -> (Array2<f64>, BlockCache) {
        let p = &self.params.tensors;
        let d = self.config.d_model;
        let dh = self.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let n = x.nrows();

        let (h1, ln1) = layer_norm(x.view(), p[b.ln1_g].row(0), p[b.ln1_b].row(0));
        let qkv = h1.dot(&p[b.qkv_w]) + p[b.qkv_b].row(0);
        let mut att = Array2::zeros((n, d));
        let mut probs = Vec::with_capacity(self.config.n_heads);
        for h in 0..self.config.n_heads {
            let q = qkv.slice(s![.., h * dh..(h + 1) * dh]);
            let k = qkv.slice(s![.., d + h * dh..d + (h + 1) * dh]);
            let v = qkv.slice(s![.., 2 * d + h * dh..2 * d + (h + 1) * dh]);
            let mut scores = q.dot(&k.t()) * scale;
            causal_softmax(&mut scores, 0);
            att.slice_mut(s![.., h * dh..(h + 1) * dh]).assign(&scores.dot(&v));
            probs.push(scores);
        }
        let x_mid = &x + &(att.dot(&p[b.proj_w]) + p[b.proj_b].row(0));
        let (h2, ln2) = layer_norm(x_mid.view(), p[b.ln2_g].row(0), p[b.ln2_b].row(0));
        let fc_pre = h2.dot(&p[b.fc_w]) + p[b.fc_b].row(0);
        let fc_act = fc_pre.mapv(gelu);
        let out = &x_mid + &(fc_act.dot(&p[b.fc2_w]) + p[b.fc2_b].row(0));
        let cache = BlockCache {
            ln1,
            h1,
            qkv,
            probs,
            att,
            ln2,
            h2,
            fc_pre,
            fc_act,
        };
        (out, cache)
    }

    /// Gradients of all parameters given the gradient of the logits.
    pub fn backward(&self, seq: &EncodedSequence, cache: &ForwardCache, dlogits: &Array2<f64>) -> Params {
        let mut grads = self.params.zeros_like();
        let p = &self.params.tensors;
        let l = &self.layout;
        let t = self.vocab.text_size() as usize;
        let d_text = dlogits.slice(s![.., ..t]);
        let d_math = dlogits.slice(s![.., t..]);
        grads.tensors[l.text_head] += &cache.hf.t().dot(&d_text);
        grads.tensors[l.text_head_b].row_mut(0).add_assign(&d_text.sum_axis(Axis(0)));
        grads.tensors[l.math_head] += &cache.hf.t().dot(&d_math);
        grads.tensors[l.math_head_b].row_mut(0).add_assign(&d_math.sum_axis(Axis(0)));
        let dhf = d_text.dot(&p[l.text_head].t()) + d_math.dot(&p[l.math_head].t());

        let (dg, db) = two_rows(&mut grads, l.lnf_g, l.lnf_b);
        let mut dx = layer_norm_backward(dhf.view(), &cache.lnf, p[l.lnf_g].row(0), dg, db);
        for (b, bc) in l.blocks.iter().zip(&cache.blocks).rev() {
            dx = self.block_backward(b, bc, dx, &mut grads);
        }
        let mut d_table = Array2::zeros(cache.table.out.raw_dim());
        self.embed_backward(seq, &dx, &mut d_table, &mut grads);
        self.math_table_backward(&cache.table, &d_table, &mut grads);
        grads
    }

    fn block_backward(&self, b: &BlockIds, c: &BlockCache, d_out: Array2<f64>, grads: &mut Params) -> Array2<f64> {
        let p = &self.params.tensors;
        let d = self.config.d_model;
        let dh = self.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();

        // MLP branch.
        grads.tensors[b.fc2_w] += &c.fc_act.t().dot(&d_out);
        grads.tensors[b.fc2_b].row_mut(0).add_assign(&d_out.sum_axis(Axis(0)));
        let d_act = d_out.dot(&p[b.fc2_w].t());
        let d_pre = &d_act * &c.fc_pre.mapv(gelu_grad);
        grads.tensors[b.fc_w] += &c.h2.t().dot(&d_pre);
        grads.tensors[b.fc_b].row_mut(0).add_assign(&d_pre.sum_axis(Axis(0)));
        let dh2 = d_pre.dot(&p[b.fc_w].t());
        let (dg, db) = two_rows(grads, b.ln2_g, b.ln2_b);
        let mut d_mid = layer_norm_backward(dh2.view(), &c.ln2, p[b.ln2_g].row(0), dg, db);
        d_mid += &d_out;

        // Attention branch.
        grads.tensors[b.proj_w] += &c.att.t().dot(&d_mid);
        grads.tensors[b.proj_b].row_mut(0).add_assign(&d_mid.sum_axis(Axis(0)));
        let d_att = d_mid.dot(&p[b.proj_w].t());
        let mut d_qkv = Array2::zeros(c.qkv.raw_dim());
        for h in 0..self.config.n_heads {
            let cols = |base: usize| s![.., base + h * dh..base + (h + 1) * dh];
            let q = c.qkv.slice(cols(0));
            let k = c.qkv.slice(cols(d));
            let v = c.qkv.slice(cols(2 * d));
            let probs = &c.probs[h];
            let dy = d_att.slice(cols(0));
            d_qkv.slice_mut(cols(2 * d)).assign(&probs.t().dot(&dy));
            let dp = dy.dot(&v.t());
            let mut ds = probs * &dp;
            let row_sums = ds.sum_axis(Axis(1));
            for (i, mut row) in ds.rows_mut().into_iter().enumerate() {
                row.scaled_add(-row_sums[i], &probs.row(i));
            }
            ds *= scale;
            d_qkv.slice_mut(cols(0)).assign(&ds.dot(&k));
            d_qkv.slice_mut(cols(d)).assign(&ds.t().dot(&q));
        }
        grads.tensors[b.qkv_w] += &c.h1.t().dot(&d_qkv);
        grads.tensors[b.qkv_b].row_mut(0).add_assign(&d_qkv.sum_axis(Axis(0)));
        let dh1 = d_qkv.dot(&p[b.qkv_w].t());
        let (dg, db) = two_rows(grads, b.ln1_g, b.ln1_b);
        let mut dx = layer_norm_backward(dh1.view(), &c.ln1, p[b.ln1_g].row(0), dg, db);
        dx += &d_mid;
        dx
    }

    /// Summed masked cross-entropy of next-token prediction over `seq`,
    /// the number of predicted tokens, and the gradient of the sum.
    pub fn loss_and_grad(&self, seq: &EncodedSequence) -> Result<(f64, usize, Params)> {
        let masks = target_masks(seq, &self.vocab)?;
        let (logits, cache) = self.forward_cached(seq)?;
        let targets = &seq.ids[1..];
        let (loss, dlogits) = masked_loss_sum(logits.view(), targets, &masks)?;
        let grads = self.backward(seq, &cache, &dlogits);
        Ok((loss, targets.len(), grads))
    }

    /// Summed masked loss and predicted-token count, without gradients.
    pub fn loss(&self, seq: &EncodedSequence) -> Result<(f64, usize)> {
        let masks = target_masks(seq, &self.vocab)?;
        let logits = self.forward(seq)?;
        let targets = &seq.ids[1..];
        let (loss, _) = masked_loss_sum(logits.view(), targets, &masks)?;
        Ok((loss, targets.len()))
    }
}

/// Mutable views of two single-row tensors at once.
fn two_rows(grads: &mut Params, a: usize, b: usize) -> (ndarray::ArrayViewMut1<'_, f64>, ndarray::ArrayViewMut1<'_, f64>) {
    assert!(a < b);
    let (lo, hi) = grads.tensors.split_at_mut(b);
    (lo[a].row_mut(0), hi[0].row_mut(0))
}

/// In-place softmax of attention scores where row `i` is the query at
/// absolute position `offset + i` and may see keys `0..=offset + i`.
fn causal_softmax(scores: &mut Array2<f64>, offset: usize) {
    for (i, mut row) in scores.rows_mut().into_iter().enumerate() {
        let visible = offset + i + 1;
        let max = row.iter().take(visible).cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (j, v) in row.iter_mut().enumerate() {
            if j < visible {
                *v = (*v - max).exp();
                sum += *v;
            } else {
                *v = 0.0;
            }
        }
        row /= sum;
    }
}

/// Allowed-id masks for predicting `seq.ids[i + 1]` from the prefix
/// ending at `i`. Errors if a target falls outside its mask.
pub fn target_masks(seq: &EncodedSequence, vocab: &Vocab) -> Result<Vec<TokenMask>> {
    let mut state = DecoderState::new();
    let mut masks = Vec::with_capacity(seq.len().saturating_sub(1));
    for (i, &id) in seq.ids.iter().enumerate() {
        if i > 0 {
            let mask = state.allowed_next(vocab);
            if !mask.contains(id) {
                return Err(ModelError::MaskedTarget {
                    position: i - 1,
                    target: id,
                });
            }
            masks.push(mask);
        }
        state.advance(id, vocab)?;
    }
    Ok(masks)
}

/// Log-probabilities over the allowed ids of one logits row; disallowed
/// ids are treated as having logit minus infinity.
pub fn masked_log_softmax(row: ndarray::ArrayView1<f64>, mask: &TokenMask) -> Vec<(u32, f64)> {
    let max = mask.iter().map(|id| row[id as usize]).fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + mask.iter().map(|id| (row[id as usize] - max).exp()).sum::<f64>().ln();
    mask.iter().map(|id| (id, row[id as usize] - log_z)).collect()
}

/// Sum over rows of `-log softmax_masked(logits[i])[targets[i]]`, and its
/// gradient with respect to the logits.
pub fn masked_loss_sum(logits: ArrayView2<f64>, targets: &[u32], masks: &[TokenMask]) -> Result<(f64, Array2<f64>)> {
    if targets.len() != masks.len() || targets.len() > logits.nrows() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} targets, {} masks, {} logit rows",
            targets.len(),
            masks.len(),
            logits.nrows()
        )));
    }
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut total = 0.0;
    for (i, (&target, mask)) in targets.iter().zip(masks).enumerate() {
        if !mask.contains(target) {
            return Err(ModelError::MaskedTarget { position: i, target });
        }
        for (id, lp) in masked_log_softmax(logits.row(i), mask) {
            let prob = lp.exp();
            if id == target {
                total -= lp;
                grad[[i, id as usize]] = prob - 1.0;
            } else {
                grad[[i, id as usize]] = prob;
            }
        }
    }
    Ok((total, grad))
}

/// Mean masked cross-entropy over the given rows.
pub fn masked_loss(logits: ArrayView2<f64>, targets: &[u32], masks: &[TokenMask]) -> Result<f64> {
    let (sum, _) = masked_loss_sum(logits, targets, masks)?;
    Ok(if targets.is_empty() { 0.0 } else { sum / targets.len() as f64 })
}

/// Keys and values of every processed token, for incremental decoding.
#[derive(Debug, Clone)]
pub struct KvCache {
    pub len: usize,
    keys: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
}

impl Model {
    pub fn kv_cache(&self) -> KvCache {
        KvCache {
            len: 0,
            keys: vec![Vec::new(); self.config.n_layers],
            values: vec![Vec::new(); self.config.n_layers],
        }
    }

    /// Runs the tokens of `chunk` after those already in `cache`, returning
    /// one logits row per new token.
    pub fn extend(&self, cache: &mut KvCache, chunk: &EncodedSequence, table: &MathTable) -> Result<Array2<f64>> {
        let p = &self.params.tensors;
        let d = self.config.d_model;
        let dh = self.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let offset = cache.len;
        let mut x = self.embed_rows(chunk, offset, table)?;
        for (li, b) in self.layout.blocks.iter().enumerate() {
            let (h1, _) = layer_norm(x.view(), p[b.ln1_g].row(0), p[b.ln1_b].row(0));
            let qkv = h1.dot(&p[b.qkv_w]) + p[b.qkv_b].row(0);
            for row in qkv.rows() {
                cache.keys[li].extend(row.slice(s![d..2 * d]).iter());
                cache.values[li].extend(row.slice(s![2 * d..]).iter());
            }
            let total = offset + chunk.len();
            let keys = ArrayView2::from_shape((total, d), &cache.keys[li]).expect("cache shape");
            let values = ArrayView2::from_shape((total, d), &cache.values[li]).expect("cache shape");
            let mut att = Array2::zeros((chunk.len(), d));
            for h in 0..self.config.n_heads {
                let cols = s![.., h * dh..(h + 1) * dh];
                let q = qkv.slice(cols);
                let mut scores = q.dot(&keys.slice(cols).t()) * scale;
                causal_softmax(&mut scores, offset);
                att.slice_mut(cols).assign(&scores.dot(&values.slice(cols)));
            }
            let x_mid = &x + &(att.dot(&p[b.proj_w]) + p[b.proj_b].row(0));
            let (h2, _) = layer_norm(x_mid.view(), p[b.ln2_g].row(0), p[b.ln2_b].row(0));
            let act = (h2.dot(&p[b.fc_w]) + p[b.fc_b].row(0)).mapv(gelu);
            x = &x_mid + &(act.dot(&p[b.fc2_w]) + p[b.fc2_b].row(0));
        }
        cache.len += chunk.len();
        let (hf, _) = layer_norm(x.view(), p[self.layout.lnf_g].row(0), p[self.layout.lnf_b].row(0));
        Ok(self.heads(hf.view()))
    }
}

use std::ops::AddAssign;
