//! Named parameter tensors and their layout.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Ablation, ModelConfig};
use crate::embed::BIN_LEN;
use crate::error::{ModelError, Result};
use treemath_core::token::TypeTag;
use treemath_core::vocab::SPECIALS;

/// Parameter indices of one transformer block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIds {
    pub ln1_g: usize,
    pub ln1_b: usize,
    pub qkv_w: usize,
    pub qkv_b: usize,
    pub proj_w: usize,
    pub proj_b: usize,
    pub ln2_g: usize,
    pub ln2_b: usize,
    pub fc_w: usize,
    pub fc_b: usize,
    pub fc2_w: usize,
    pub fc2_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiIds {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

/// Where each tensor lives in [`Params::tensors`]. Optional entries depend
/// on the ablation switches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub text_emb: usize,
    pub special_emb: usize,
    /// Free math embeddings, present when text-linked embeddings are off.
    pub math_emb: Option<usize>,
    pub phi: Option<PhiIds>,
    pub pos_emb: usize,
    pub type_emb: Option<usize>,
    pub tree_w: Option<usize>,
    pub blocks: Vec<BlockIds>,
    pub lnf_g: usize,
    pub lnf_b: usize,
    pub text_head: usize,
    pub text_head_b: usize,
    pub math_head: usize,
    pub math_head_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    Normal,
    Zeros,
    Ones,
    /// Normal with the correction network's small output scale.
    PhiOut,
    /// Normal with standard deviation `1 / sqrt(rows)`.
    FanIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Whether decoupled weight decay applies.
    pub decay: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub specs: Vec<TensorSpec>,
    pub tensors: Vec<Array2<f64>>,
}

struct Builder {
    specs: Vec<TensorSpec>,
    inits: Vec<Init>,
}

impl Builder {
    fn add(&mut self, name: impl Into<String>, rows: usize, cols: usize, init: Init, decay: bool) -> usize {
        self.specs.push(TensorSpec {
            name: name.into(),
            rows,
            cols,
            decay,
        });
        self.inits.push(init);
        self.specs.len() - 1
    }
}

/// Builds the layout for a model over `text_size` text ids and `math_size`
/// math ids.
fn build(cfg: &ModelConfig, ablation: Ablation, text_size: usize, math_size: usize) -> (Layout, Builder) {
    let d = cfg.d_model;
    let mut b = Builder {
        specs: Vec::new(),
        inits: Vec::new(),
    };
    let text_emb = b.add("text_emb", text_size, d, Init::Normal, false);
    let special_emb = b.add("special_emb", SPECIALS.len(), d, Init::Normal, false);
    let (math_emb, phi) = if ablation.shared_embeddings {
        let h = cfg.phi_hidden;
        let phi = PhiIds {
            w1: b.add("phi.w1", d, h, Init::FanIn, true),
            b1: b.add("phi.b1", 1, h, Init::Zeros, false),
            w2: b.add("phi.w2", h, d, Init::PhiOut, true),
            b2: b.add("phi.b2", 1, d, Init::Zeros, false),
        };
        (None, Some(phi))
    } else {
        let free = math_size - SPECIALS.len();
        (Some(b.add("math_emb", free, d, Init::Normal, false)), None)
    };
    let pos_emb = b.add("pos_emb", cfg.max_seq, d, Init::Normal, false);
    let type_emb = ablation
        .type_embeddings
        .then(|| b.add("type_emb", TypeTag::COUNT, d, Init::Normal, false));
    let tree_w = ablation
        .tree_positions
        .then(|| b.add("tree_w", BIN_LEN, d, Init::Normal, true));
    let blocks = (0..cfg.n_layers)
        .map(|l| {
            let n = |s: &str| format!("block{l}.{s}");
            BlockIds {
                ln1_g: b.add(n("ln1_g"), 1, d, Init::Ones, false),
                ln1_b: b.add(n("ln1_b"), 1, d, Init::Zeros, false),
                qkv_w: b.add(n("qkv_w"), d, 3 * d, Init::Normal, true),
                qkv_b: b.add(n("qkv_b"), 1, 3 * d, Init::Zeros, false),
                proj_w: b.add(n("proj_w"), d, d, Init::Normal, true),
                proj_b: b.add(n("proj_b"), 1, d, Init::Zeros, false),
                ln2_g: b.add(n("ln2_g"), 1, d, Init::Ones, false),
                ln2_b: b.add(n("ln2_b"), 1, d, Init::Zeros, false),
                fc_w: b.add(n("fc_w"), d, cfg.d_ff, Init::Normal, true),
                fc_b: b.add(n("fc_b"), 1, cfg.d_ff, Init::Zeros, false),
                fc2_w: b.add(n("fc2_w"), cfg.d_ff, d, Init::Normal, true),
                fc2_b: b.add(n("fc2_b"), 1, d, Init::Zeros, false),
            }
        })
        .collect();
    let layout = Layout {
        text_emb,
        special_emb,
        math_emb,
        phi,
        pos_emb,
        type_emb,
        tree_w,
        blocks,
        lnf_g: b.add("lnf_g", 1, d, Init::Ones, false),
        lnf_b: b.add("lnf_b", 1, d, Init::Zeros, false),
        text_head: b.add("text_head", d, text_size, Init::Normal, true),
        text_head_b: b.add("text_head_b", 1, text_size, Init::Zeros, false),
        math_head: b.add("math_head", d, math_size, Init::Normal, true),
        math_head_b: b.add("math_head_b", 1, math_size, Init::Zeros, false),
    };
    (layout, b)
}

impl Layout {
    pub fn new(cfg: &ModelConfig, ablation: Ablation, text_size: usize, math_size: usize) -> Layout {
        build(cfg, ablation, text_size, math_size).0
    }
}

/// Standard normal sample via Box-Muller.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

impl Params {
    /// Deterministic initialization from `cfg.seed`.
    pub fn init(cfg: &ModelConfig, ablation: Ablation, text_size: usize, math_size: usize) -> (Layout, Params) {
        let (layout, b) = build(cfg, ablation, text_size, math_size);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let tensors = b
            .specs
            .iter()
            .zip(&b.inits)
            .map(|(s, init)| {
                let std = match init {
                    Init::Normal => cfg.init_std,
                    Init::PhiOut => cfg.phi_init_scale,
                    Init::FanIn => 1.0 / (s.rows as f64).sqrt(),
                    Init::Zeros => return Array2::zeros((s.rows, s.cols)),
                    Init::Ones => return Array2::ones((s.rows, s.cols)),
                };
                Array2::from_shape_simple_fn((s.rows, s.cols), || std * normal(&mut rng))
            })
            .collect();
        (layout, Params { specs: b.specs, tensors })
    }

    pub fn zeros_like(&self) -> Params {
        Params {
            specs: self.specs.clone(),
            tensors: self.tensors.iter().map(|t| Array2::zeros(t.raw_dim())).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn add_assign(&mut self, other: &Params) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            *a += b;
        }
    }

    pub fn scale(&mut self, k: f64) {
        for t in &mut self.tensors {
            t.mapv_inplace(|x| x * k);
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn to_stored(&self) -> Vec<StoredTensor> {
        self.specs
            .iter()
            .zip(&self.tensors)
            .map(|(s, t)| StoredTensor {
                spec: s.clone(),
                data: t.iter().copied().collect(),
            })
            .collect()
    }

    /// Rebuilds tensors, checking names and shapes against `expected`.
    pub fn from_stored(expected: &[TensorSpec], stored: Vec<StoredTensor>) -> Result<Params> {
        if expected.len() != stored.len() {
            return Err(ModelError::Checkpoint(format!(
                "expected {} tensors, found {}",
                expected.len(),
                stored.len()
            )));
        }
        let mut tensors = Vec::with_capacity(stored.len());
        for (want, got) in expected.iter().zip(stored) {
            if want.name != got.spec.name || want.rows != got.spec.rows || want.cols != got.spec.cols {
                return Err(ModelError::Checkpoint(format!(
                    "tensor {} ({}x{}) does not match {} ({}x{})",
                    got.spec.name, got.spec.rows, got.spec.cols, want.name, want.rows, want.cols
                )));
            }
            let t = Array2::from_shape_vec((want.rows, want.cols), got.data)
                .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
            tensors.push(t);
        }
        Ok(Params {
            specs: expected.to_vec(),
            tensors,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTensor {
    #[serde(flatten)]
    pub spec: TensorSpec,
    pub data: Vec<f64>,
}
