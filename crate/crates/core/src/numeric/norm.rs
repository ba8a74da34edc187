//! Per-row layer normalization.

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Cached intermediates for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache {
    xhat: DenseMatrix,
    inv_std: Vec<f64>,
}

/// Normalize each row to zero mean / unit variance (epsilon inside the square
/// root), then apply the per-column affine `gain * xhat + bias`.
pub fn layer_norm_forward(
    x: &DenseMatrix,
    gain: &[f64],
    bias: &[f64],
) -> Result<(DenseMatrix, LayerNormCache)> {
    let d = x.cols();
    if gain.len() != d || bias.len() != d {
        return Err(Error::shape(format!(
            "layer_norm gain/bias length {}/{} vs row length {}",
            gain.len(),
            bias.len(),
            d
        )));
    }
    let mut out = DenseMatrix::zeros(x.rows(), d);
    let mut xhat = DenseMatrix::zeros(x.rows(), d);
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std.push(is);
        for c in 0..d {
            let xh = (row[c] - mean) * is;
            xhat.set(r, c, xh);
            out.set(r, c, gain[c] * xh + bias[c]);
        }
    }
    Ok((out, LayerNormCache { xhat, inv_std }))
}

/// Backward pass. Returns the input gradient and accumulates gain/bias
/// gradients into the provided slices.
pub fn layer_norm_backward(
    cache: &LayerNormCache,
    gain: &[f64],
    d_out: &DenseMatrix,
    d_gain: &mut [f64],
    d_bias: &mut [f64],
) -> DenseMatrix {
    let (rows, d) = cache.xhat.shape();
    debug_assert_eq!(d_out.shape(), (rows, d));
    let mut d_x = DenseMatrix::zeros(rows, d);
    for r in 0..rows {
        let xhat = cache.xhat.row(r);
        let g_row = d_out.row(r);
        // d_xhat = d_out * gain; the row gradient follows from mean/var terms:
        // d_x = inv_std * (d_xhat - mean(d_xhat) - xhat * mean(d_xhat . xhat))
        let mut mean_dxh = 0.0;
        let mut mean_dxh_xh = 0.0;
        for c in 0..d {
            let dxh = g_row[c] * gain[c];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xhat[c];
            d_gain[c] += g_row[c] * xhat[c];
            d_bias[c] += g_row[c];
        }
        mean_dxh /= d as f64;
        mean_dxh_xh /= d as f64;
        let is = cache.inv_std[r];
        let out_row = d_x.row_mut(r);
        for c in 0..d {
            let dxh = g_row[c] * gain[c];
            out_row[c] = is * (dxh - mean_dxh - xhat[c] * mean_dxh_xh);
        }
    }
    d_x
}
