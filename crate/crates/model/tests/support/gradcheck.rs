//! Central finite-difference gradient checks, shared by the model tests
//! and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use treemath_core::encode::{encode, EncodedSequence};
use treemath_core::vocab::{MathVocab, TextVocab};
use treemath_core::{segment_regions, NormalizeOptions, Vocab};
use treemath_model::{Ablation, Model, ModelConfig};

pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        d_model: 16,
        n_layers: 1,
        n_heads: 2,
        d_ff: 32,
        max_seq: 64,
        phi_hidden: 16,
        seed: 3,
        ..ModelConfig::default()
    }
}

pub fn sample(vocab: &Vocab) -> EncodedSequence {
    let doc = "Let $velocity=9.8t+ab^2$ grow and $x$.";
    let seq = segment_regions(doc, vocab, NormalizeOptions::default()).unwrap();
    let mut enc = encode(&seq, vocab).unwrap();
    enc.push_eos();
    enc
}

/// Max relative error between analytic and numeric gradients over sampled
/// entries of every tensor, using a fourth-order central difference.
/// Returns the worst relative error per tensor.
pub fn check(model: &mut Model, seq: &EncodedSequence, per_tensor: usize) -> Vec<(String, f64)> {
    let (_, _, grads) = model.loss_and_grad(seq).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-3;
    let mut report = Vec::new();
    for ti in 0..model.params.tensors.len() {
        let n = model.params.tensors[ti].len();
        // The largest analytic entries plus random ones.
        let analytic: Vec<f64> = grads.tensors[ti].iter().copied().collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| analytic[b].abs().total_cmp(&analytic[a].abs()));
        let mut picks: Vec<usize> = order.into_iter().take(per_tensor / 2).collect();
        picks.extend((0..per_tensor / 2).map(|_| rng.random_range(0..n)));

        let mut worst: f64 = 0.0;
        for idx in picks {
            let at = |m: &mut Model, delta: f64| {
                let flat = m.params.tensors[ti].as_slice_mut().unwrap();
                let orig = flat[idx];
                flat[idx] = orig + delta;
                let loss = m.loss(seq).unwrap().0;
                m.params.tensors[ti].as_slice_mut().unwrap()[idx] = orig;
                loss
            };
            let numeric = (-at(model, 2.0 * h) + 8.0 * at(model, h) - 8.0 * at(model, -h) + at(model, -2.0 * h))
                / (12.0 * h);
            let a = analytic[idx];
            // Summation roundoff in the loss is about 1e-11; the floor keeps
            // exactly-zero gradients from dividing noise by noise.
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            let rel = (a - numeric).abs() / denom;
            worst = worst.max(rel);
        }
        report.push((model.params.specs[ti].name.clone(), worst));
    }
    report
}

pub fn assert_close(report: &[(String, f64)]) {
    for (name, err) in report {
        assert!(*err < 1e-4, "{name}: relative error {err:e}");
    }
}

/// The full model used by the checks, with the correction network scaled
/// up so its gradients are far from zero.
pub fn full_model() -> (Model, EncodedSequence) {
    let vocab = Vocab::new(TextVocab::from_words(["Let", " grow", "velocity"]).unwrap(), MathVocab::default());
    let seq = sample(&vocab);
    let mut model = Model::new(tiny_config(), Ablation::default(), vocab).unwrap();
    let phi = model.layout.phi.unwrap();
    model.params.tensors[phi.w2].mapv_inplace(|x| x * 100.0);
    (model, seq)
}

/// Tensors the checks must cover.
pub const REQUIRED: [&str; 7] = ["tree_w", "phi.w1", "phi.w2", "type_emb", "special_emb", "text_head", "math_head"];
