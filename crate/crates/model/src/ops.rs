//! Row-wise numeric kernels with hand-written backward passes.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

pub const LN_EPS: f64 = 1e-5;
const GELU_A: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_C: f64 = 0.044_715;

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_A * (x + GELU_C * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_A * (x + GELU_C * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_A * (1.0 + 3.0 * GELU_C * x * x)
}

/// Normalized rows and their reciprocal standard deviations.
pub struct LnCache {
    pub xhat: Array2<f64>,
    pub rstd: Array1<f64>,
}

pub fn layer_norm(x: ArrayView2<f64>, g: ArrayView1<f64>, b: ArrayView1<f64>) -> (Array2<f64>, LnCache) {
    let d = x.ncols() as f64;
    let mut xhat = x.to_owned();
    let mut rstd = Array1::zeros(x.nrows());
    for (mut row, r) in xhat.rows_mut().into_iter().zip(rstd.iter_mut()) {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        *r = 1.0 / (var + LN_EPS).sqrt();
        let s = *r;
        row.mapv_inplace(|v| v * s);
    }
    let y = &xhat * &g + b;
    (y, LnCache { xhat, rstd })
}

/// Returns dx and accumulates into dg, db.
pub fn layer_norm_backward(
    dy: ArrayView2<f64>,
    cache: &LnCache,
    g: ArrayView1<f64>,
    mut dg: ndarray::ArrayViewMut1<f64>,
    mut db: ndarray::ArrayViewMut1<f64>,
) -> Array2<f64> {
    dg += &(&dy * &cache.xhat).sum_axis(Axis(0));
    db += &dy.sum_axis(Axis(0));
    let d = dy.ncols() as f64;
    let dxhat = &dy * &g;
    let mut dx = Array2::zeros(dy.raw_dim());
    for (i, mut out) in dx.rows_mut().into_iter().enumerate() {
        let dh = dxhat.row(i);
        let xh = cache.xhat.row(i);
        let mean_dh = dh.sum() / d;
        let mean_dh_xh = dh.dot(&xh) / d;
        let r = cache.rstd[i];
        for j in 0..out.len() {
            out[j] = r * (dh[j] - mean_dh - xh[j] * mean_dh_xh);
        }
    }
    dx
}

/// Adds a bias row to every row.
pub fn add_bias(mut x: Array2<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    x += &b;
    x
}
