//! Primitive operations of the convolution-pooling module, each with its
//! hand-derived backward pass.

use crate::error::Result;
use crate::numeric::{Activation, DenseMatrix, SparseMatrix};

/// How a pooled node set collapses into one fixed-width vector: the first
/// half aggregates per column (mean or sum), the second half is the
/// column-wise max.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutMode {
    MeanMax,
    SumMax,
}

/// One graph convolution: activation(adj_norm * h * weight). `adj_norm`
/// must be the self-loop normalized adjacency of the graph `h` lives on.
pub fn gcn_layer(
    adj_norm: &SparseMatrix,
    h: &DenseMatrix,
    weight: &DenseMatrix,
    activation: Activation,
) -> Result<DenseMatrix> {
    let projected = h.matmul(weight)?;
    let aggregated = adj_norm.spmm(&projected)?;
    Ok(activation.forward(&aggregated))
}

/// Node scores: activation(adj_norm * h_conv * weight) with a single output
/// column, returned as one scalar per node.
pub fn attention_scores(
    adj_norm: &SparseMatrix,
    h_conv: &DenseMatrix,
    weight: &DenseMatrix,
    activation: Activation,
) -> Result<Vec<f64>> {
    let aggregated = adj_norm.spmm(h_conv)?;
    let pre = aggregated.matmul(weight)?;
    Ok(pre.values().iter().map(|&v| activation.apply(v)).collect())
}

/// Indices of the `ceil(rate * n)` highest-scoring nodes (at least one),
/// ties broken towards the lower node index, returned sorted ascending.
pub fn top_select(scores: &[f64], rate: f64) -> Vec<usize> {
    let n = scores.len();
    if n == 0 {
        return Vec::new();
    }
    // Tiny slack so that a product like 0.7 * 10 that lands a hair above
    // the exact integer does not get rounded up one node too far.
    let keep = (((rate * n as f64) - 1e-9).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
            .then(a.cmp(&b))
    });
    let mut idx: Vec<usize> = order.into_iter().take(keep).collect();
    idx.sort_unstable();
    idx
}

/// Restrict features and edges to the selected nodes: row `r` of the
/// returned feature matrix is `h[idx[r]] * scores[idx[r]]`, and the edge
/// list is the induced subgraph with nodes renumbered to 0..idx.len().
pub fn pool_subgraph(
    h: &DenseMatrix,
    edges: &[(usize, usize)],
    scores: &[f64],
    idx: &[usize],
) -> (DenseMatrix, Vec<(usize, usize)>) {
    let mut h_sub = DenseMatrix::zeros(idx.len(), h.cols());
    for (r, &orig) in idx.iter().enumerate() {
        let s = scores[orig];
        for (dst, &src) in h_sub.row_mut(r).iter_mut().zip(h.row(orig)) {
            *dst = src * s;
        }
    }
    let mut position = vec![usize::MAX; h.rows()];
    for (r, &orig) in idx.iter().enumerate() {
        position[orig] = r;
    }
    let mut sub_edges: Vec<(usize, usize)> = edges
        .iter()
        .filter_map(|&(a, b)| {
            let (pa, pb) = (position[a], position[b]);
            (pa != usize::MAX && pb != usize::MAX).then(|| (pa.min(pb), pa.max(pb)))
        })
        .collect();
    sub_edges.sort_unstable();
    sub_edges.dedup();
    (h_sub, sub_edges)
}

/// Collapse pooled node features: aggregate (mean or sum) per column,
/// concatenated with the column-wise max. Also returns, per column, the row
/// that held the max (first row on ties) for the backward pass.
pub fn readout(h_sub: &DenseMatrix, mode: ReadoutMode) -> (Vec<f64>, Vec<usize>) {
    let (n, d) = h_sub.shape();
    assert!(n >= 1, "readout needs at least one node");
    let mut out = vec![0.0; 2 * d];
    let mut argmax = vec![0usize; d];
    for c in 0..d {
        let mut acc = 0.0;
        let mut best = f64::NEG_INFINITY;
        for r in 0..n {
            let v = h_sub.get(r, c);
            acc += v;
            if v > best {
                best = v;
                argmax[c] = r;
            }
        }
        out[c] = match mode {
            ReadoutMode::MeanMax => acc / n as f64,
            ReadoutMode::SumMax => acc,
        };
        out[d + c] = best;
    }
    (out, argmax)
}

/// Scatter the readout gradient back onto the pooled node features.
pub fn readout_backward(
    n: usize,
    d: usize,
    argmax: &[usize],
    d_out: &[f64],
    mode: ReadoutMode,
) -> DenseMatrix {
    debug_assert_eq!(d_out.len(), 2 * d);
    let mut d_h = DenseMatrix::zeros(n, d);
    let share = match mode {
        ReadoutMode::MeanMax => 1.0 / n as f64,
        ReadoutMode::SumMax => 1.0,
    };
    for c in 0..d {
        let g = d_out[c] * share;
        for r in 0..n {
            d_h.row_mut(r)[c] += g;
        }
        d_h.row_mut(argmax[c])[c] += d_out[d + c];
    }
    d_h
}
