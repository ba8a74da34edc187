//! Heterogeneous-network model: input projection + layer-normalized feature
//! refiner, shared edge attention over both relations, residual propagation
//! layers, and a sigmoid output head. Forward passes record every
//! intermediate needed by the hand-derived backward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::network::HeteroNetwork;
use crate::error::{Error, Result};
use crate::ingest::FeatureTable;
use crate::numeric::{
    layer_norm_backward, layer_norm_forward, sigmoid, Activation, DenseMatrix, LayerNormCache,
    Param, SparseMatrix,
};
use crate::ontology::Branch;
use crate::serial::{branch_tag, parse_branch_tag, push_activation, read_activation, Reader};

/// Flat parameter layout indices. Per-layer propagation weights start at
/// [`P_PROP_BASE`]; the output head follows them.
const P_W_EMBED: usize = 0;
const P_B_EMBED: usize = 1;
const P_W_MLP: usize = 2;
const P_B_MLP: usize = 3;
const P_LN_GAIN: usize = 4;
const P_LN_BIAS: usize = 5;
const P_ATTN: usize = 6;
const P_W_ATTN: usize = 7;
const P_PROP_BASE: usize = 8;

/// Architecture description of the network model.
#[derive(Debug, Clone, PartialEq)]
pub struct PropMeta {
    pub branch: Branch,
    /// Width of the per-protein input feature rows.
    pub input_dim: usize,
    /// Hidden width shared by the refiner, attention, and propagation layers.
    pub d3: usize,
    /// Output label count.
    pub n_labels: usize,
    /// Number of residual propagation layers (0 skips propagation entirely).
    pub layers: usize,
    /// Dropout rate in the input projection and refiner (training only).
    pub dropout: f64,
    /// Negative slope of the leaky rectifier inside edge attention.
    pub leaky_slope: f64,
    /// Activation used by the refiner and the propagation layers.
    pub activation: Activation,
    /// When set, each edge's logit additionally receives the natural log of
    /// its base weight (self-loops count as weight 1), so stronger edges
    /// start with proportionally larger attention.
    pub weighted_logits: bool,
}

impl PropMeta {
    pub fn from_config(
        branch: Branch,
        input_dim: usize,
        n_labels: usize,
        cfg: &super::PropConfig,
    ) -> PropMeta {
        PropMeta {
            branch,
            input_dim,
            d3: cfg.d3,
            n_labels,
            layers: cfg.layers,
            dropout: cfg.dropout,
            leaky_slope: cfg.leaky_slope,
            activation: cfg.activation,
            weighted_logits: cfg.weighted_logits,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input width must be at least 1".to_string()));
        }
        if self.d3 == 0 {
            return Err(Error::Config("hidden width must be at least 1".to_string()));
        }
        if self.n_labels == 0 {
            return Err(Error::Config("at least one output label is required".to_string()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config(format!(
                "leaky slope must be in (0, 1), got {}",
                self.leaky_slope
            )));
        }
        Ok(())
    }

    pub(crate) fn prop_index(&self, layer: usize) -> usize {
        P_PROP_BASE + layer
    }

    pub(crate) fn w_out_index(&self) -> usize {
        P_PROP_BASE + self.layers
    }

    pub(crate) fn b_out_index(&self) -> usize {
        P_PROP_BASE + self.layers + 1
    }

    fn param_count(&self) -> usize {
        P_PROP_BASE + self.layers + 2
    }

    fn param_shape(&self, i: usize) -> (usize, usize) {
        match i {
            P_W_EMBED => (self.input_dim, self.d3),
            P_B_EMBED | P_B_MLP | P_LN_GAIN | P_LN_BIAS => (1, self.d3),
            P_W_MLP | P_W_ATTN => (self.d3, self.d3),
            P_ATTN => (1, 2 * self.d3),
            _ if i < self.w_out_index() => (self.d3, self.d3),
            _ if i == self.w_out_index() => (self.d3, self.n_labels),
            _ => (1, self.n_labels),
        }
    }

    fn is_bias(&self, i: usize) -> bool {
        i == P_B_EMBED || i == P_B_MLP || i == P_LN_BIAS || i == self.b_out_index()
    }

    fn is_gain(&self, i: usize) -> bool {
        i == P_LN_GAIN
    }
}

/// The trainable model: metadata plus a flat parameter list (projection,
/// refiner, normalization, attention, per-layer propagation weights, head).
#[derive(Debug, Clone)]
pub struct PropModel {
    pub meta: PropMeta,
    pub(crate) params: Vec<Param>,
}

impl PropModel {
    /// Fresh model: weights uniform in ±sqrt(6 / (fan_in + fan_out)),
    /// normalization gains one, biases zero, all from the given seed.
    pub fn init(meta: PropMeta, seed: u64) -> Result<PropModel> {
        meta.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(meta.param_count());
        for i in 0..meta.param_count() {
            let (rows, cols) = meta.param_shape(i);
            let values = if meta.is_bias(i) {
                vec![0.0; rows * cols]
            } else if meta.is_gain(i) {
                vec![1.0; rows * cols]
            } else {
                let limit = (6.0 / (rows + cols) as f64).sqrt();
                (0..rows * cols)
                    .map(|_| rng.gen_range(-limit..limit))
                    .collect()
            };
            params.push(Param::new(values));
        }
        Ok(PropModel { meta, params })
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    /// Serialize to the versioned binary checkpoint format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.push(branch_tag(self.meta.branch));
        for v in [
            self.meta.input_dim,
            self.meta.d3,
            self.meta.n_labels,
            self.meta.layers,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.meta.dropout.to_le_bytes());
        out.extend_from_slice(&self.meta.leaky_slope.to_le_bytes());
        push_activation(&mut out, self.meta.activation);
        out.push(u8::from(self.meta.weighted_logits));
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for (i, p) in self.params.iter().enumerate() {
            let (rows, cols) = self.meta.param_shape(i);
            out.extend_from_slice(&(rows as u32).to_le_bytes());
            out.extend_from_slice(&(cols as u32).to_le_bytes());
            for &v in &p.value {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PropModel> {
        let mut r = Reader::new(bytes);
        let magic = r.take(4)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::Format(format!(
                "bad checkpoint magic {magic:?}, expected {CHECKPOINT_MAGIC:?}"
            )));
        }
        let branch = parse_branch_tag(r.u8()?)?;
        let input_dim = r.u32()? as usize;
        let d3 = r.u32()? as usize;
        let n_labels = r.u32()? as usize;
        let layers = r.u32()? as usize;
        let dropout = r.f64()?;
        let leaky_slope = r.f64()?;
        let activation = read_activation(&mut r)?;
        let weighted_logits = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(Error::Format(format!("unknown weighted-logit tag {other}"))),
        };
        let meta = PropMeta {
            branch,
            input_dim,
            d3,
            n_labels,
            layers,
            dropout,
            leaky_slope,
            activation,
            weighted_logits,
        };
        meta.validate()?;
        let count = r.u32()? as usize;
        if count != meta.param_count() {
            return Err(Error::Format(format!(
                "checkpoint stores {count} tensors, architecture needs {}",
                meta.param_count()
            )));
        }
        let mut params = Vec::with_capacity(count);
        for i in 0..count {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            if (rows, cols) != meta.param_shape(i) {
                return Err(Error::Format(format!(
                    "tensor {i} is {rows}x{cols}, architecture needs {:?}",
                    meta.param_shape(i)
                )));
            }
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let v = r.f64()?;
                if !v.is_finite() {
                    return Err(Error::Format(format!("non-finite value in tensor {i}")));
                }
                values.push(v);
            }
            params.push(Param::new(values));
        }
        if !r.is_empty() {
            return Err(Error::Format("trailing bytes after checkpoint".to_string()));
        }
        Ok(PropModel { meta, params })
    }
}

pub(crate) const CHECKPOINT_MAGIC: &[u8; 4] = b"PRP1";

/// Parameter matrices cloned out of the flat list for one forward/backward
/// round.
pub(crate) struct Mats {
    pub(crate) w_embed: DenseMatrix,
    pub(crate) b_embed: Vec<f64>,
    pub(crate) w_mlp: DenseMatrix,
    pub(crate) b_mlp: Vec<f64>,
    pub(crate) ln_gain: Vec<f64>,
    pub(crate) ln_bias: Vec<f64>,
    pub(crate) attn: Vec<f64>,
    pub(crate) w_attn: DenseMatrix,
    pub(crate) w_props: Vec<DenseMatrix>,
    pub(crate) w_out: DenseMatrix,
    pub(crate) b_out: Vec<f64>,
}

pub(crate) fn materialize(meta: &PropMeta, params: &[Param]) -> Result<Mats> {
    if params.len() != meta.param_count() {
        return Err(Error::shape(format!(
            "{} parameter tensors, architecture needs {}",
            params.len(),
            meta.param_count()
        )));
    }
    let matrix = |i: usize| -> Result<DenseMatrix> {
        let (rows, cols) = meta.param_shape(i);
        DenseMatrix::from_vec(rows, cols, params[i].value.clone())
    };
    let w_props = (0..meta.layers)
        .map(|l| matrix(meta.prop_index(l)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Mats {
        w_embed: matrix(P_W_EMBED)?,
        b_embed: params[P_B_EMBED].value.clone(),
        w_mlp: matrix(P_W_MLP)?,
        b_mlp: params[P_B_MLP].value.clone(),
        ln_gain: params[P_LN_GAIN].value.clone(),
        ln_bias: params[P_LN_BIAS].value.clone(),
        attn: params[P_ATTN].value.clone(),
        w_attn: matrix(P_W_ATTN)?,
        w_props,
        w_out: matrix(meta.w_out_index())?,
        b_out: params[meta.b_out_index()].value.clone(),
    })
}

/// Intermediates of one forward pass, in evaluation order.
pub(crate) struct PropTrace {
    pub(crate) z1: DenseMatrix,
    pub(crate) mask1: DenseMatrix,
    /// Projection output after activation and dropout.
    pub(crate) d1: DenseMatrix,
    pub(crate) ln_cache: LayerNormCache,
    pub(crate) ln_out: DenseMatrix,
    pub(crate) mask2: DenseMatrix,
    /// Pre-rectifier attention transform `h0 . w_attn`.
    pub(crate) t_pre: DenseMatrix,
    pub(crate) t_act: DenseMatrix,
    pub(crate) a_p: SparseMatrix,
    pub(crate) a_s: SparseMatrix,
    pub(crate) layers: Vec<LayerTrace>,
    /// Node features entering each layer: `hs[0]` is the refined input,
    /// `hs[layers]` feeds the output head.
    pub(crate) hs: Vec<DenseMatrix>,
    pub(crate) pred: DenseMatrix,
}

pub(crate) struct LayerTrace {
    pub(crate) prod: DenseMatrix,
    pub(crate) cp: DenseMatrix,
    pub(crate) cs: DenseMatrix,
    pub(crate) q: DenseMatrix,
}

/// Stable softmax over a logit slice, in place.
fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in logits.iter_mut() {
        *v /= sum;
    }
}

/// Split each node's rectified attention transform into the two halves of
/// the edge score: the source part (first half of the attention vector) and
/// the target part (second half). An edge's logit is source(u) + target(v).
fn edge_score_parts(t_act: &DenseMatrix, attn: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d3 = t_act.cols();
    let (left_w, right_w) = attn.split_at(d3);
    let mut s_left = Vec::with_capacity(t_act.rows());
    let mut s_right = Vec::with_capacity(t_act.rows());
    for r in 0..t_act.rows() {
        let row = t_act.row(r);
        s_left.push(row.iter().zip(left_w).map(|(&x, &w)| x * w).sum());
        s_right.push(row.iter().zip(right_w).map(|(&x, &w)| x * w).sum());
    }
    (s_left, s_right)
}

/// Row-stochastic attention over one relation: each node's row softmaxes the
/// edge logits of its neighbors plus a self-loop (base weight 1), so isolated
/// nodes keep all attention on themselves.
fn attention_matrix<'a>(
    n: usize,
    neighbors: impl Fn(usize) -> &'a [(usize, f64)],
    s_left: &[f64],
    s_right: &[f64],
    weighted: bool,
) -> Result<SparseMatrix> {
    let mut triplets = Vec::new();
    for u in 0..n {
        let adj = neighbors(u);
        let split = adj.partition_point(|&(j, _)| j < u);
        let mut cols: Vec<(usize, f64)> = Vec::with_capacity(adj.len() + 1);
        cols.extend_from_slice(&adj[..split]);
        cols.push((u, 1.0));
        cols.extend_from_slice(&adj[split..]);
        let mut logits: Vec<f64> = cols
            .iter()
            .map(|&(j, w)| {
                let base = if weighted { w.max(1e-12).ln() } else { 0.0 };
                s_left[u] + s_right[j] + base
            })
            .collect();
        softmax_in_place(&mut logits);
        triplets.extend(cols.iter().zip(&logits).map(|(&(j, _), &a)| (u, j, a)));
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// One residual propagation layer. Both relations share the input features
/// and the layer weight; each adds its attention-weighted neighborhood mix
/// to the untouched input, is activated, and the two activated halves are
/// summed and activated again.
pub(crate) fn propagate_layer(
    a_p: &SparseMatrix,
    a_s: &SparseMatrix,
    h: &DenseMatrix,
    w: &DenseMatrix,
    act: Activation,
) -> Result<(LayerTrace, DenseMatrix)> {
    let prod = h.matmul(w)?;
    let (left, right) = rayon::join(
        || -> Result<DenseMatrix> { a_p.spmm(&prod)?.add(h) },
        || -> Result<DenseMatrix> { a_s.spmm(&prod)?.add(h) },
    );
    let cp = left?;
    let cs = right?;
    let q = act.forward(&cp).add(&act.forward(&cs))?;
    let out = act.forward(&q);
    Ok((LayerTrace { prod, cp, cs, q }, out))
}

/// Full forward pass from aligned input features to label probabilities.
/// Attention is computed once from the refined features and reused by every
/// propagation layer. `rng` only matters when `training` is set and dropout
/// is positive.
pub(crate) fn forward_with(
    meta: &PropMeta,
    mats: &Mats,
    net: &HeteroNetwork,
    features: &DenseMatrix,
    training: bool,
    rng: &mut ChaCha12Rng,
) -> Result<PropTrace> {
    if features.rows() != net.n() {
        return Err(Error::shape(format!(
            "{} feature rows for a {}-node network",
            features.rows(),
            net.n()
        )));
    }
    if features.cols() != meta.input_dim {
        return Err(Error::shape(format!(
            "feature width {} differs from the model's input width {}",
            features.cols(),
            meta.input_dim
        )));
    }
    let act = meta.activation;
    let n = net.n();

    let z1 = features.matmul(&mats.w_embed)?.add_row_broadcast(&mats.b_embed)?;
    let mask1 = crate::numeric::dropout_mask(n, meta.d3, meta.dropout, training, rng)?;
    let d1 = act.forward(&z1).hadamard(&mask1)?;
    let z2 = d1.matmul(&mats.w_mlp)?.add_row_broadcast(&mats.b_mlp)?;
    let (ln_out, ln_cache) = layer_norm_forward(&z2, &mats.ln_gain, &mats.ln_bias)?;
    let mask2 = crate::numeric::dropout_mask(n, meta.d3, meta.dropout, training, rng)?;
    let h0 = act.forward(&ln_out).hadamard(&mask2)?;

    let t_pre = h0.matmul(&mats.w_attn)?;
    let t_act = Activation::LeakyRelu(meta.leaky_slope).forward(&t_pre);
    let (s_left, s_right) = edge_score_parts(&t_act, &mats.attn);
    let a_p = attention_matrix(
        n,
        |u| net.interaction_neighbors(u),
        &s_left,
        &s_right,
        meta.weighted_logits,
    )?;
    let a_s = attention_matrix(
        n,
        |u| net.similarity_neighbors(u),
        &s_left,
        &s_right,
        meta.weighted_logits,
    )?;

    let mut hs = vec![h0];
    let mut layers = Vec::with_capacity(meta.layers);
    for l in 0..meta.layers {
        let (trace, next) = propagate_layer(&a_p, &a_s, hs.last().unwrap(), &mats.w_props[l], act)?;
        layers.push(trace);
        hs.push(next);
    }

    let logits = hs.last().unwrap().matmul(&mats.w_out)?.add_row_broadcast(&mats.b_out)?;
    let pred = logits.map(sigmoid);

    Ok(PropTrace {
        z1,
        mask1,
        d1,
        ln_cache,
        ln_out,
        mask2,
        t_pre,
        t_act,
        a_p,
        a_s,
        layers,
        hs,
        pred,
    })
}

pub(crate) fn prop_forward(
    model: &PropModel,
    net: &HeteroNetwork,
    features: &DenseMatrix,
    training: bool,
    rng: &mut ChaCha12Rng,
) -> Result<PropTrace> {
    let mats = materialize(&model.meta, &model.params)?;
    forward_with(&model.meta, &mats, net, features, training, rng)
}

/// Accumulate gradients of the masked loss into `grads` (same layout as the
/// parameter list). `d_pred` is the loss gradient with respect to the
/// predicted probabilities; dropout masks from the forward trace are reused
/// so the pass matches the exact function that was evaluated.
pub(crate) fn prop_backward(
    meta: &PropMeta,
    mats: &Mats,
    features: &DenseMatrix,
    trace: &PropTrace,
    d_pred: &DenseMatrix,
    grads: &mut [Param],
) -> Result<()> {
    let act = meta.activation;
    let n = features.rows();
    let d3 = meta.d3;

    // Output head: probabilities back to logits.
    let mut d_logits = d_pred.clone();
    for (g, &p) in d_logits.values_mut().iter_mut().zip(trace.pred.values()) {
        *g *= p * (1.0 - p);
    }
    let h_final = trace.hs.last().expect("forward stores at least one feature block");
    add_matrix_grad(grads, meta.w_out_index(), &h_final.matmul_tn(&d_logits)?);
    add_vec_grad(grads, meta.b_out_index(), &d_logits.col_sums());
    let mut d_h = d_logits.matmul_nt(&mats.w_out)?;

    // Propagation layers, deepest first. The attention matrices are shared
    // by every layer, so their per-entry gradients accumulate across layers.
    let mut d_ap_vals = vec![0.0; trace.a_p.nnz()];
    let mut d_as_vals = vec![0.0; trace.a_s.nnz()];
    for l in (0..meta.layers).rev() {
        let lt = &trace.layers[l];
        let h_in = &trace.hs[l];
        let d_q = act.backward(&lt.q, &d_h);
        let d_cp = act.backward(&lt.cp, &d_q);
        let d_cs = act.backward(&lt.cs, &d_q);
        let mut d_prod = DenseMatrix::zeros(n, d3);
        trace
            .a_p
            .spmm_backward(&lt.prod, &d_cp, &mut d_prod, Some(&mut d_ap_vals))?;
        trace
            .a_s
            .spmm_backward(&lt.prod, &d_cs, &mut d_prod, Some(&mut d_as_vals))?;
        add_matrix_grad(grads, meta.prop_index(l), &h_in.matmul_tn(&d_prod)?);
        let mut d_h_in = d_cp.add(&d_cs)?;
        d_h_in.add_scaled_assign(&d_prod.matmul_nt(&mats.w_props[l])?, 1.0)?;
        d_h = d_h_in;
    }
    let mut d_h0 = d_h;

    // Attention: softmax rows back to per-node score parts.
    let mut d_s_left = vec![0.0; n];
    let mut d_s_right = vec![0.0; n];
    for (mat, dvals) in [(&trace.a_p, &d_ap_vals), (&trace.a_s, &d_as_vals)] {
        let mut pos = 0usize;
        for u in 0..n {
            let (cols, alphas) = mat.row(u);
            let g = &dvals[pos..pos + cols.len()];
            pos += cols.len();
            let mixed: f64 = alphas.iter().zip(g).map(|(&a, &gv)| a * gv).sum();
            for ((&c, &a), &gv) in cols.iter().zip(alphas).zip(g) {
                let d_logit = a * (gv - mixed);
                d_s_left[u] += d_logit;
                d_s_right[c] += d_logit;
            }
        }
    }
    let (left_w, right_w) = mats.attn.split_at(d3);
    let mut d_attn = vec![0.0; 2 * d3];
    let mut d_t_act = DenseMatrix::zeros(n, d3);
    for u in 0..n {
        let t_row = trace.t_act.row(u);
        let d_row = d_t_act.row_mut(u);
        for k in 0..d3 {
            d_attn[k] += d_s_left[u] * t_row[k];
            d_attn[d3 + k] += d_s_right[u] * t_row[k];
            d_row[k] = d_s_left[u] * left_w[k] + d_s_right[u] * right_w[k];
        }
    }
    add_vec_grad(grads, P_ATTN, &d_attn);
    let d_t_pre = Activation::LeakyRelu(meta.leaky_slope).backward(&trace.t_pre, &d_t_act);
    add_matrix_grad(grads, P_W_ATTN, &trace.hs[0].matmul_tn(&d_t_pre)?);
    d_h0.add_scaled_assign(&d_t_pre.matmul_nt(&mats.w_attn)?, 1.0)?;

    // Refiner and input projection.
    let d_a2 = d_h0.hadamard(&trace.mask2)?;
    let d_ln_out = act.backward(&trace.ln_out, &d_a2);
    let (head, tail) = grads.split_at_mut(P_LN_BIAS);
    let d_z2 = layer_norm_backward(
        &trace.ln_cache,
        &mats.ln_gain,
        &d_ln_out,
        &mut head[P_LN_GAIN].grad,
        &mut tail[0].grad,
    );
    add_matrix_grad(grads, P_W_MLP, &trace.d1.matmul_tn(&d_z2)?);
    add_vec_grad(grads, P_B_MLP, &d_z2.col_sums());
    let d_a1 = d_z2.matmul_nt(&mats.w_mlp)?.hadamard(&trace.mask1)?;
    let d_z1 = act.backward(&trace.z1, &d_a1);
    add_matrix_grad(grads, P_W_EMBED, &features.matmul_tn(&d_z1)?);
    add_vec_grad(grads, P_B_EMBED, &d_z1.col_sums());
    Ok(())
}

fn add_matrix_grad(grads: &mut [Param], index: usize, delta: &DenseMatrix) {
    for (g, &d) in grads[index].grad.iter_mut().zip(delta.values()) {
        *g += d;
    }
}

fn add_vec_grad(grads: &mut [Param], index: usize, delta: &[f64]) {
    for (g, &d) in grads[index].grad.iter_mut().zip(delta) {
        *g += d;
    }
}

/// Stack a feature table into a dense matrix whose rows follow the network's
/// node order. Every network protein must have a feature row.
pub fn align_features(net: &HeteroNetwork, table: &FeatureTable) -> Result<DenseMatrix> {
    let mut missing: Vec<&str> = Vec::new();
    let mut m = DenseMatrix::zeros(net.n(), table.dim());
    for (r, id) in net.ids().iter().enumerate() {
        match table.get(id) {
            Some(row) => m.row_mut(r).copy_from_slice(row),
            None => missing.push(id),
        }
    }
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(8).copied().collect();
        let suffix = if missing.len() > shown.len() { ", ..." } else { "" };
        return Err(Error::Alignment(format!(
            "{} network proteins lack feature rows: {}{suffix}",
            missing.len(),
            shown.join(", ")
        )));
    }
    Ok(m)
}

/// Label probabilities for every network protein, dropout off. Rows follow
/// the network's node order.
pub fn prop_forward_eval(
    model: &PropModel,
    net: &HeteroNetwork,
    features: &FeatureTable,
) -> Result<DenseMatrix> {
    let aligned = align_features(net, features)?;
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    Ok(prop_forward(model, net, &aligned, false, &mut rng)?.pred)
}

/// The two row-stochastic attention matrices a trained model assigns to the
/// interaction and similarity relations, dropout off.
pub fn attention_matrices(
    model: &PropModel,
    net: &HeteroNetwork,
    features: &FeatureTable,
) -> Result<(SparseMatrix, SparseMatrix)> {
    let aligned = align_features(net, features)?;
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let trace = prop_forward(model, net, &aligned, false, &mut rng)?;
    Ok((trace.a_p, trace.a_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{PpiEdgeList, SimilarityEdgeList};
    use crate::numeric::LAYER_NORM_EPS;

    fn tiny_meta(input_dim: usize, d3: usize, n_labels: usize, layers: usize) -> PropMeta {
        PropMeta {
            branch: Branch::Mfo,
            input_dim,
            d3,
            n_labels,
            layers,
            dropout: 0.0,
            leaky_slope: 0.2,
            activation: Activation::Relu,
            weighted_logits: false,
        }
    }

    fn net_from(
        ids: &[&str],
        ppi: Vec<(&str, &str, f64)>,
        sim: Vec<(&str, &str, f64)>,
    ) -> HeteroNetwork {
        let owned = |v: Vec<(&str, &str, f64)>| {
            v.into_iter()
                .map(|(a, b, w)| (a.to_string(), b.to_string(), w))
                .collect::<Vec<_>>()
        };
        HeteroNetwork::new(
            &ids.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            &PpiEdgeList::from_edges(owned(ppi)),
            &SimilarityEdgeList::from_edges(owned(sim)),
        )
        .unwrap()
    }

    fn random_features(net: &HeteroNetwork, dim: usize, seed: u64) -> FeatureTable {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut t = FeatureTable::new(dim).unwrap();
        for id in net.ids() {
            let row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            t.insert(id.clone(), row).unwrap();
        }
        t
    }

    #[test]
    fn parameter_layout_counts_and_shapes() {
        let meta = tiny_meta(7, 4, 3, 2);
        assert_eq!(meta.param_count(), 12);
        assert_eq!(meta.param_shape(P_W_EMBED), (7, 4));
        assert_eq!(meta.param_shape(P_ATTN), (1, 8));
        assert_eq!(meta.param_shape(meta.prop_index(0)), (4, 4));
        assert_eq!(meta.param_shape(meta.prop_index(1)), (4, 4));
        assert_eq!(meta.param_shape(meta.w_out_index()), (4, 3));
        assert_eq!(meta.param_shape(meta.b_out_index()), (1, 3));
        let model = PropModel::init(meta, 9).unwrap();
        assert!(model.params[P_LN_GAIN].value.iter().all(|&v| v == 1.0));
        assert!(model.params[P_B_EMBED].value.iter().all(|&v| v == 0.0));
        let b_out = model.meta.b_out_index();
        assert!(model.params[b_out].value.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let meta = tiny_meta(5, 4, 3, 2);
        let a = PropModel::init(meta.clone(), 4).unwrap();
        let b = PropModel::init(meta.clone(), 4).unwrap();
        let c = PropModel::init(meta, 5).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn softmax_of_zero_and_ln_two_gives_thirds() {
        let mut logits = vec![0.0, 2.0_f64.ln()];
        softmax_in_place(&mut logits);
        assert!((logits[0] - 1.0 / 3.0).abs() < 1e-15, "{}", logits[0]);
        assert!((logits[1] - 2.0 / 3.0).abs() < 1e-15, "{}", logits[1]);
    }

    #[test]
    fn zero_projection_weights_produce_zero_first_stage() {
        let meta = tiny_meta(3, 4, 2, 1);
        let mut model = PropModel::init(meta, 1).unwrap();
        model.params[P_W_EMBED].value.iter_mut().for_each(|v| *v = 0.0);
        model.params[P_B_EMBED].value.iter_mut().for_each(|v| *v = 0.0);
        let net = net_from(&["a", "b"], vec![("a", "b", 0.8)], vec![]);
        let features = align_features(&net, &random_features(&net, 3, 7)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let trace = prop_forward(&model, &net, &features, false, &mut rng).unwrap();
        assert!(trace.z1.values().iter().all(|&v| v == 0.0));
        assert!(trace.d1.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_output_head_predicts_one_half_everywhere() {
        let meta = tiny_meta(3, 4, 5, 2);
        let mut model = PropModel::init(meta, 2).unwrap();
        let w_out = model.meta.w_out_index();
        let b_out = model.meta.b_out_index();
        model.params[w_out].value.iter_mut().for_each(|v| *v = 0.0);
        model.params[b_out].value.iter_mut().for_each(|v| *v = 0.0);
        let net = net_from(&["a", "b", "c"], vec![("a", "b", 0.5)], vec![("b", "c", 0.4)]);
        let table = random_features(&net, 3, 11);
        let pred = prop_forward_eval(&model, &net, &table).unwrap();
        assert!(pred.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn predictions_stay_strictly_inside_unit_interval() {
        let meta = tiny_meta(4, 5, 3, 2);
        let model = PropModel::init(meta, 3).unwrap();
        let net = net_from(
            &["a", "b", "c", "d"],
            vec![("a", "b", 0.9), ("c", "d", 0.2)],
            vec![("a", "c", 0.7)],
        );
        let pred = prop_forward_eval(&model, &net, &random_features(&net, 4, 13)).unwrap();
        assert!(pred.values().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn residual_only_layer_doubles_nonnegative_features() {
        let n = 3;
        let empty = SparseMatrix::from_triplets(n, n, std::iter::empty::<(usize, usize, f64)>()).unwrap();
        let h = DenseMatrix::from_rows(&[
            vec![0.5, 0.0],
            vec![1.25, 2.0],
            vec![0.0, 0.75],
        ])
        .unwrap();
        let w = DenseMatrix::zeros(2, 2);
        let (_, out) = propagate_layer(&empty, &empty, &h, &w, Activation::Relu).unwrap();
        for (o, &x) in out.values().iter().zip(h.values()) {
            assert!((o - 2.0 * x).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_two_node_network_with_equal_features_gives_equal_rows() {
        let meta = tiny_meta(3, 4, 2, 2);
        let model = PropModel::init(meta, 5).unwrap();
        let net = net_from(&["a", "b"], vec![("a", "b", 0.6)], vec![("a", "b", 0.3)]);
        let mut table = FeatureTable::new(3).unwrap();
        table.insert("a".into(), vec![0.4, -0.2, 0.9]).unwrap();
        table.insert("b".into(), vec![0.4, -0.2, 0.9]).unwrap();
        let pred = prop_forward_eval(&model, &net, &table).unwrap();
        for c in 0..pred.cols() {
            assert!((pred.get(0, c) - pred.get(1, c)).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_node_attends_only_to_itself() {
        let meta = tiny_meta(3, 4, 2, 1);
        let model = PropModel::init(meta, 6).unwrap();
        let net = net_from(&["a", "b", "c"], vec![("a", "b", 0.5)], vec![]);
        let table = random_features(&net, 3, 17);
        let (a_p, a_s) = attention_matrices(&model, &net, &table).unwrap();
        // c (index 2) has no interaction neighbors; nobody has similarity ones.
        let (cols, vals) = a_p.row(2);
        assert_eq!(cols, &[2]);
        assert_eq!(vals, &[1.0]);
        for u in 0..3 {
            let (cols, vals) = a_s.row(u);
            assert_eq!(cols, &[u]);
            assert_eq!(vals, &[1.0]);
        }
    }

    #[test]
    fn identical_neighbors_receive_identical_attention() {
        let meta = tiny_meta(3, 4, 2, 1);
        let model = PropModel::init(meta, 8).unwrap();
        let net = net_from(
            &["hub", "x", "y"],
            vec![("hub", "x", 0.5), ("hub", "y", 0.9)],
            vec![],
        );
        let mut table = FeatureTable::new(3).unwrap();
        table.insert("hub".into(), vec![0.1, 0.2, 0.3]).unwrap();
        table.insert("x".into(), vec![0.7, -0.4, 0.2]).unwrap();
        table.insert("y".into(), vec![0.7, -0.4, 0.2]).unwrap();
        let (a_p, _) = attention_matrices(&model, &net, &table).unwrap();
        let row = net.index_of("hub").unwrap();
        let (cols, vals) = a_p.row(row);
        let ix = net.index_of("x").unwrap();
        let iy = net.index_of("y").unwrap();
        let wx = vals[cols.iter().position(|&c| c == ix).unwrap()];
        let wy = vals[cols.iter().position(|&c| c == iy).unwrap()];
        assert!((wx - wy).abs() < 1e-15, "{wx} vs {wy}");
    }

    #[test]
    fn log_weighted_logits_rescale_attention_by_base_weights() {
        let plain_meta = tiny_meta(3, 4, 2, 1);
        let mut weighted_meta = plain_meta.clone();
        weighted_meta.weighted_logits = true;
        let plain = PropModel::init(plain_meta, 21).unwrap();
        let mut weighted = PropModel::init(weighted_meta, 21).unwrap();
        // Same draws: weighted_logits does not touch initialization.
        for (a, b) in plain.params.iter().zip(weighted.params.iter_mut()) {
            b.value.clone_from(&a.value);
        }
        let net = net_from(
            &["hub", "x", "y"],
            vec![("hub", "x", 2.0), ("hub", "y", 0.25)],
            vec![],
        );
        let table = random_features(&net, 3, 23);
        let (a_plain, _) = attention_matrices(&plain, &net, &table).unwrap();
        let (a_weighted, _) = attention_matrices(&weighted, &net, &table).unwrap();
        let row = net.index_of("hub").unwrap();
        let (cols, plain_vals) = a_plain.row(row);
        let (_, weighted_vals) = a_weighted.row(row);
        // Adding ln(w) to a logit multiplies its softmax weight by w (self = 1).
        let scaled: Vec<f64> = cols
            .iter()
            .zip(plain_vals)
            .map(|(&c, &a)| {
                let w = if c == row {
                    1.0
                } else {
                    net.interaction_neighbors(row)
                        .iter()
                        .find(|&&(j, _)| j == c)
                        .unwrap()
                        .1
                };
                a * w
            })
            .collect();
        let total: f64 = scaled.iter().sum();
        for (&got, &want) in weighted_vals.iter().zip(&scaled) {
            assert!((got - want / total).abs() < 1e-12, "{got} vs {}", want / total);
        }
    }

    #[test]
    fn single_node_forward_matches_scalar_hand_evaluation() {
        let meta = tiny_meta(2, 2, 2, 1);
        let mut model = PropModel::init(meta, 0).unwrap();
        model.params[P_W_EMBED].value = vec![0.3, -0.2, 0.1, 0.4];
        model.params[P_B_EMBED].value = vec![0.05, -0.1];
        model.params[P_W_MLP].value = vec![0.2, 0.1, -0.3, 0.25];
        model.params[P_B_MLP].value = vec![0.02, 0.03];
        model.params[P_LN_GAIN].value = vec![1.1, 0.9];
        model.params[P_LN_BIAS].value = vec![0.01, -0.02];
        model.params[P_ATTN].value = vec![0.5, -0.4, 0.3, 0.2];
        model.params[P_W_ATTN].value = vec![0.6, -0.1, 0.2, 0.3];
        let prop0 = model.meta.prop_index(0);
        model.params[prop0].value = vec![0.15, -0.05, 0.1, 0.2];
        let w_out = model.meta.w_out_index();
        let b_out = model.meta.b_out_index();
        model.params[w_out].value = vec![0.4, -0.3, 0.1, 0.5];
        model.params[b_out].value = vec![0.1, -0.1];

        let net = net_from(&["only"], vec![], vec![]);
        let mut table = FeatureTable::new(2).unwrap();
        table.insert("only".into(), vec![0.7, -0.5]).unwrap();
        let pred = prop_forward_eval(&model, &net, &table).unwrap();

        // Scalar re-derivation, step by step.
        let relu = |x: f64| x.max(0.0);
        let z1 = [
            0.7 * 0.3 + (-0.5) * 0.1 + 0.05,
            0.7 * (-0.2) + (-0.5) * 0.4 + (-0.1),
        ];
        let a1 = [relu(z1[0]), relu(z1[1])];
        let z2 = [
            a1[0] * 0.2 + a1[1] * (-0.3) + 0.02,
            a1[0] * 0.1 + a1[1] * 0.25 + 0.03,
        ];
        let mean = (z2[0] + z2[1]) / 2.0;
        let var = ((z2[0] - mean).powi(2) + (z2[1] - mean).powi(2)) / 2.0;
        let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        let ln = [
            1.1 * (z2[0] - mean) * inv_std + 0.01,
            0.9 * (z2[1] - mean) * inv_std + (-0.02),
        ];
        let h0 = [relu(ln[0]), relu(ln[1])];
        // One node: both attention matrices are the 1x1 identity.
        let prod = [
            h0[0] * 0.15 + h0[1] * 0.1,
            h0[0] * (-0.05) + h0[1] * 0.2,
        ];
        let cp = [prod[0] + h0[0], prod[1] + h0[1]];
        let q = [2.0 * relu(cp[0]), 2.0 * relu(cp[1])];
        let h1 = [relu(q[0]), relu(q[1])];
        let logits = [
            h1[0] * 0.4 + h1[1] * 0.1 + 0.1,
            h1[0] * (-0.3) + h1[1] * 0.5 + (-0.1),
        ];
        let want = [sigmoid(logits[0]), sigmoid(logits[1])];
        assert!((pred.get(0, 0) - want[0]).abs() < 1e-12);
        assert!((pred.get(0, 1) - want[1]).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trips_bit_for_bit() {
        let meta = PropMeta {
            branch: Branch::Cco,
            input_dim: 6,
            d3: 5,
            n_labels: 4,
            layers: 2,
            dropout: 0.25,
            leaky_slope: 0.2,
            activation: Activation::LeakyRelu(0.1),
            weighted_logits: true,
        };
        let model = PropModel::init(meta, 42).unwrap();
        let bytes = model.to_bytes();
        let restored = PropModel::from_bytes(&bytes).unwrap();
        assert_eq!(restored.meta, model.meta);
        assert_eq!(restored.to_bytes(), bytes);
    }

    #[test]
    fn corrupt_checkpoints_are_rejected() {
        let model = PropModel::init(tiny_meta(3, 4, 2, 1), 7).unwrap();
        let good = model.to_bytes();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(PropModel::from_bytes(&bad_magic).is_err());

        let truncated = &good[..good.len() - 3];
        assert!(PropModel::from_bytes(truncated).is_err());

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(PropModel::from_bytes(&trailing).is_err());

        let mut nan_value = good.clone();
        let tail = nan_value.len() - 8;
        nan_value[tail..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(PropModel::from_bytes(&nan_value).is_err());

        assert!(PropModel::from_bytes(&[]).is_err());
    }

    #[test]
    fn alignment_reports_missing_feature_rows() {
        let net = net_from(&["a", "b", "c"], vec![], vec![]);
        let mut table = FeatureTable::new(2).unwrap();
        table.insert("a".into(), vec![0.1, 0.2]).unwrap();
        let err = align_features(&net, &table).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2 network proteins"), "{msg}");
        assert!(msg.contains('b') && msg.contains('c'), "{msg}");
    }

    #[test]
    fn meta_validation_rejects_bad_values() {
        for patch in [
            |m: &mut PropMeta| m.input_dim = 0,
            |m: &mut PropMeta| m.d3 = 0,
            |m: &mut PropMeta| m.n_labels = 0,
            |m: &mut PropMeta| m.dropout = 1.0,
            |m: &mut PropMeta| m.leaky_slope = 0.0,
            |m: &mut PropMeta| m.leaky_slope = 1.0,
        ] {
            let mut m = tiny_meta(4, 4, 2, 2);
            patch(&mut m);
            assert!(m.validate().is_err());
        }
    }
}
