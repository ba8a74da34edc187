//! Model parameters, the per-protein forward/backward pass, and the
//! checkpoint format.

use super::layers::{
    pool_subgraph, readout, readout_backward, top_select, ReadoutMode,
};
use super::StructConfig;
use crate::contact::{normalized_adjacency_from_edges, ContactGraph};
use crate::error::{Error, Result};
use crate::numeric::{dropout_mask, sigmoid, Activation, DenseMatrix, Param, SparseMatrix};
use crate::ontology::Branch;
use crate::serial::{branch_tag, parse_branch_tag, push_activation, read_activation, Reader};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// One protein's graph: node count, contact edges (deduplicated, endpoints
/// ordered), and an `n x input_dim` residue feature matrix.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub features: DenseMatrix,
}

impl GraphInput {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, features: DenseMatrix) -> Result<GraphInput> {
        if n == 0 {
            return Err(Error::Config("graph needs at least one node".to_string()));
        }
        if features.rows() != n {
            return Err(Error::shape(format!(
                "{} feature rows for {n} nodes",
                features.rows()
            )));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::shape(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            if a == b {
                return Err(Error::Format(format!("self-edge at node {a}")));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(GraphInput {
            n,
            edges: normalized,
            features,
        })
    }

    pub fn from_contact(graph: &ContactGraph, features: DenseMatrix) -> Result<GraphInput> {
        GraphInput::new(graph.n(), graph.edges().to_vec(), features)
    }
}

/// A protein queued for the structural model; `None` marks a protein
/// without usable coordinates.
#[derive(Debug, Clone)]
pub struct StructItem {
    pub id: String,
    pub graph: Option<GraphInput>,
}

/// Everything needed to rebuild a model's computation graph: architecture
/// sizes plus the label-space branch the model was trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct StructMeta {
    pub branch: Branch,
    pub input_dim: usize,
    pub d2: usize,
    pub n_labels: usize,
    pub conv_layers: usize,
    pub modules: usize,
    pub pool_rate: f64,
    pub dropout: f64,
    pub conv_activation: Activation,
    pub score_activation: Activation,
    pub readout: ReadoutMode,
}

impl StructMeta {
    pub fn from_config(
        branch: Branch,
        input_dim: usize,
        n_labels: usize,
        cfg: &StructConfig,
    ) -> StructMeta {
        StructMeta {
            branch,
            input_dim,
            d2: cfg.d2,
            n_labels,
            conv_layers: cfg.conv_layers,
            modules: cfg.modules,
            pool_rate: cfg.pool_rate,
            dropout: cfg.dropout,
            conv_activation: cfg.conv_activation,
            score_activation: cfg.score_activation,
            readout: cfg.readout,
        }
    }

    /// Width of the protein-level feature vector (two aggregates per
    /// hidden column).
    pub fn feature_width(&self) -> usize {
        2 * self.d2
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.d2 == 0 || self.n_labels == 0 {
            return Err(Error::Config(format!(
                "model sizes must be positive (input {}, hidden {}, labels {})",
                self.input_dim, self.d2, self.n_labels
            )));
        }
        if self.conv_layers == 0 || self.modules == 0 {
            return Err(Error::Config(
                "at least one module with one convolution layer is required".to_string(),
            ));
        }
        if !(self.pool_rate > 0.0 && self.pool_rate <= 1.0) {
            return Err(Error::Config(format!(
                "pool rate must be in (0, 1], got {}",
                self.pool_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    fn per_module(&self) -> usize {
        self.conv_layers + 1
    }

    pub(crate) fn conv_index(&self, module: usize, layer: usize) -> usize {
        module * self.per_module() + layer
    }

    pub(crate) fn score_index(&self, module: usize) -> usize {
        module * self.per_module() + self.conv_layers
    }

    pub(crate) fn mlp_w_index(&self, layer: usize) -> usize {
        self.modules * self.per_module() + 2 * layer
    }

    pub(crate) fn mlp_b_index(&self, layer: usize) -> usize {
        self.modules * self.per_module() + 2 * layer + 1
    }

    fn param_count(&self) -> usize {
        self.modules * self.per_module() + 6
    }

    /// Classifier widths: feature_width -> feature_width -> d2 -> labels.
    fn mlp_dims(&self) -> [(usize, usize); 3] {
        [
            (self.feature_width(), self.feature_width()),
            (self.feature_width(), self.d2),
            (self.d2, self.n_labels),
        ]
    }

    fn param_shape(&self, i: usize) -> (usize, usize) {
        let module_params = self.modules * self.per_module();
        if i < module_params {
            let (m, l) = (i / self.per_module(), i % self.per_module());
            if l == self.conv_layers {
                (self.d2, 1)
            } else if m == 0 && l == 0 {
                (self.input_dim, self.d2)
            } else {
                (self.d2, self.d2)
            }
        } else {
            let j = i - module_params;
            let (input, output) = self.mlp_dims()[j / 2];
            if j % 2 == 0 {
                (input, output)
            } else {
                (1, output)
            }
        }
    }

    fn is_bias(&self, i: usize) -> bool {
        i >= self.modules * self.per_module() && (i - self.modules * self.per_module()) % 2 == 1
    }
}

/// The trainable model: metadata plus a flat parameter list in a fixed
/// layout (per module: convolution weights then the score weight; then
/// alternating classifier weights and biases).
#[derive(Debug, Clone)]
pub struct StructModel {
    pub meta: StructMeta,
    pub(crate) params: Vec<Param>,
}

impl StructModel {
    /// Fresh model: weights drawn uniform in ±sqrt(6 / (fan_in + fan_out)),
    /// biases zero, all from the given seed.
    pub fn init(meta: StructMeta, seed: u64) -> Result<StructModel> {
        meta.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(meta.param_count());
        for i in 0..meta.param_count() {
            let (rows, cols) = meta.param_shape(i);
            let values = if meta.is_bias(i) {
                vec![0.0; rows * cols]
            } else {
                let limit = (6.0 / (rows + cols) as f64).sqrt();
                (0..rows * cols)
                    .map(|_| rng.gen_range(-limit..limit))
                    .collect()
            };
            params.push(Param::new(values));
        }
        Ok(StructModel { meta, params })
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn feature_width(&self) -> usize {
        self.meta.feature_width()
    }

    /// Serialize to the versioned binary checkpoint format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.push(branch_tag(self.meta.branch));
        for v in [
            self.meta.input_dim,
            self.meta.d2,
            self.meta.n_labels,
            self.meta.conv_layers,
            self.meta.modules,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.meta.pool_rate.to_le_bytes());
        out.extend_from_slice(&self.meta.dropout.to_le_bytes());
        push_activation(&mut out, self.meta.conv_activation);
        push_activation(&mut out, self.meta.score_activation);
        out.push(match self.meta.readout {
            ReadoutMode::MeanMax => 0,
            ReadoutMode::SumMax => 1,
        });
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

    pub fn from_bytes(bytes: &[u8]) -> Result<StructModel> {
        let mut r = Reader::new(bytes);
        let magic = r.take(4)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::Format(format!(
                "bad checkpoint magic {magic:?}, expected {CHECKPOINT_MAGIC:?}"
            )));
        }
        let branch = parse_branch_tag(r.u8()?)?;
        let input_dim = r.u32()? as usize;
        let d2 = r.u32()? as usize;
        let n_labels = r.u32()? as usize;
        let conv_layers = r.u32()? as usize;
        let modules = r.u32()? as usize;
        let pool_rate = r.f64()?;
        let dropout = r.f64()?;
        let conv_activation = read_activation(&mut r)?;
        let score_activation = read_activation(&mut r)?;
        let readout = match r.u8()? {
            0 => ReadoutMode::MeanMax,
            1 => ReadoutMode::SumMax,
            other => return Err(Error::Format(format!("unknown readout tag {other}"))),
        };
        let meta = StructMeta {
            branch,
            input_dim,
            d2,
            n_labels,
            conv_layers,
            modules,
            pool_rate,
            dropout,
            conv_activation,
            score_activation,
            readout,
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
        Ok(StructModel { meta, params })
    }
}

pub(crate) const CHECKPOINT_MAGIC: &[u8; 4] = b"SMP1";


/// Parameter matrices cloned out of the flat list for a round of forward/
/// backward passes.
pub(crate) struct Materialized {
    pub convs: Vec<Vec<DenseMatrix>>,
    pub score_weights: Vec<DenseMatrix>,
    pub mlp_w: Vec<DenseMatrix>,
    pub mlp_b: Vec<Vec<f64>>,
}

pub(crate) fn materialize(meta: &StructMeta, params: &[Param]) -> Result<Materialized> {
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
    let mut convs = Vec::with_capacity(meta.modules);
    let mut score_weights = Vec::with_capacity(meta.modules);
    for m in 0..meta.modules {
        let mut layer_list = Vec::with_capacity(meta.conv_layers);
        for l in 0..meta.conv_layers {
            layer_list.push(matrix(meta.conv_index(m, l))?);
        }
        convs.push(layer_list);
        score_weights.push(matrix(meta.score_index(m))?);
    }
    let mut mlp_w = Vec::with_capacity(3);
    let mut mlp_b = Vec::with_capacity(3);
    for l in 0..3 {
        mlp_w.push(matrix(meta.mlp_w_index(l))?);
        mlp_b.push(params[meta.mlp_b_index(l)].value.clone());
    }
    Ok(Materialized {
        convs,
        score_weights,
        mlp_w,
        mlp_b,
    })
}

/// Cached intermediates of one module's forward pass.
pub(crate) struct ModuleTrace {
    adj: SparseMatrix,
    h_in: DenseMatrix,
    pub(crate) pre: Vec<DenseMatrix>,
    pub(crate) post: Vec<DenseMatrix>,
    agg: DenseMatrix,
    score_pre: Vec<f64>,
    pub(crate) scores: Vec<f64>,
    pub idx: Vec<usize>,
    argmax: Vec<usize>,
}

pub(crate) struct EncodeTrace {
    pub modules: Vec<ModuleTrace>,
    pub hidden: Vec<f64>,
}

/// Forward pass of the module stack on one protein; returns the summed
/// readout plus everything the backward pass needs.
pub(crate) fn encode_one(
    meta: &StructMeta,
    mat: &Materialized,
    input: &GraphInput,
) -> Result<EncodeTrace> {
    if input.features.cols() != meta.input_dim {
        return Err(Error::shape(format!(
            "feature width {} does not match the model's input width {}",
            input.features.cols(),
            meta.input_dim
        )));
    }
    let mut h = input.features.clone();
    let mut edges = input.edges.clone();
    let mut n = input.n;
    let mut hidden = vec![0.0; meta.feature_width()];
    let mut modules = Vec::with_capacity(meta.modules);
    for m in 0..meta.modules {
        let adj = normalized_adjacency_from_edges(n, &edges);
        let h_in = h;
        let mut pre_list = Vec::with_capacity(meta.conv_layers);
        let mut post_list: Vec<DenseMatrix> = Vec::with_capacity(meta.conv_layers);
        for l in 0..meta.conv_layers {
            let inp = if l == 0 { &h_in } else { &post_list[l - 1] };
            let projected = inp.matmul(&mat.convs[m][l])?;
            let pre = adj.spmm(&projected)?;
            post_list.push(meta.conv_activation.forward(&pre));
            pre_list.push(pre);
        }
        let last = post_list.last().expect("at least one convolution layer");
        let agg = adj.spmm(last)?;
        let score_pre_m = agg.matmul(&mat.score_weights[m])?;
        let score_pre: Vec<f64> = score_pre_m.values().to_vec();
        let scores: Vec<f64> = score_pre
            .iter()
            .map(|&v| meta.score_activation.apply(v))
            .collect();
        let idx = top_select(&scores, meta.pool_rate);
        let (h_sub, sub_edges) = pool_subgraph(last, &edges, &scores, &idx);
        let (readout_vec, argmax) = readout(&h_sub, meta.readout);
        for (acc, v) in hidden.iter_mut().zip(&readout_vec) {
            *acc += v;
        }
        n = idx.len();
        edges = sub_edges;
        h = h_sub;
        modules.push(ModuleTrace {
            adj,
            h_in,
            pre: pre_list,
            post: post_list,
            agg,
            score_pre,
            scores,
            idx,
            argmax,
        });
    }
    Ok(EncodeTrace { modules, hidden })
}

/// Backward pass through the module stack: the gradient with respect to
/// the summed readout flows into every module, plus whatever the next
/// module sent back through its input features.
pub(crate) fn encode_backward(
    meta: &StructMeta,
    mat: &Materialized,
    trace: &EncodeTrace,
    d_hidden: &[f64],
    grads: &mut [Param],
) -> Result<()> {
    let mut d_from_next: Option<DenseMatrix> = None;
    for m in (0..meta.modules).rev() {
        let t = &trace.modules[m];
        let last_post = t.post.last().expect("at least one convolution layer");
        let n = last_post.rows();
        let n_sub = t.idx.len();
        let mut d_h_sub = readout_backward(n_sub, meta.d2, &t.argmax, d_hidden, meta.readout);
        if let Some(d) = d_from_next.take() {
            d_h_sub.add_scaled_assign(&d, 1.0)?;
        }
        // Pooling backward: kept rows were scaled by their score, so the
        // gradient splits between the row features and the score.
        let mut d_post = DenseMatrix::zeros(n, meta.d2);
        let mut d_scores = vec![0.0; n];
        for (r, &orig) in t.idx.iter().enumerate() {
            let s = t.scores[orig];
            let src = d_h_sub.row(r);
            for (dv, &g) in d_post.row_mut(orig).iter_mut().zip(src) {
                *dv += g * s;
            }
            d_scores[orig] += src
                .iter()
                .zip(last_post.row(orig))
                .map(|(&a, &b)| a * b)
                .sum::<f64>();
        }
        let d_score_pre: Vec<f64> = d_scores
            .iter()
            .zip(&t.score_pre)
            .map(|(&g, &x)| g * meta.score_activation.derivative(x))
            .collect();
        let d_score_pre = DenseMatrix::from_vec(n, 1, d_score_pre)?;
        add_matrix_grad(grads, meta.score_index(m), &t.agg.matmul_tn(&d_score_pre)?);
        let d_agg = d_score_pre.matmul_nt(&mat.score_weights[m])?;
        // The normalized adjacency is symmetric, so its transpose-product
        // is just another sparse product.
        d_post.add_scaled_assign(&t.adj.spmm(&d_agg)?, 1.0)?;
        let mut d_out = d_post;
        for l in (0..meta.conv_layers).rev() {
            let d_pre = meta.conv_activation.backward(&t.pre[l], &d_out);
            let d_projected = t.adj.spmm(&d_pre)?;
            let inp = if l == 0 { &t.h_in } else { &t.post[l - 1] };
            add_matrix_grad(grads, meta.conv_index(m, l), &inp.matmul_tn(&d_projected)?);
            d_out = d_projected.matmul_nt(&mat.convs[m][l])?;
        }
        d_from_next = Some(d_out);
    }
    Ok(())
}

/// Cached intermediates of the classifier MLP on a batch.
pub(crate) struct MlpTrace {
    input: DenseMatrix,
    pub(crate) pre: Vec<DenseMatrix>,
    kept: Vec<DenseMatrix>,
    masks: Vec<DenseMatrix>,
    pub probs: DenseMatrix,
}

/// Classifier forward: two hidden layers (ReLU, dropout while training)
/// and a sigmoid output per label.
pub(crate) fn classify(
    meta: &StructMeta,
    mat: &Materialized,
    hidden: &DenseMatrix,
    training: bool,
    rng: &mut ChaCha12Rng,
) -> Result<MlpTrace> {
    let z1 = hidden.matmul(&mat.mlp_w[0])?.add_row_broadcast(&mat.mlp_b[0])?;
    let a1 = Activation::Relu.forward(&z1);
    let m1 = dropout_mask(a1.rows(), a1.cols(), meta.dropout, training, rng)?;
    let d1 = a1.hadamard(&m1)?;
    let z2 = d1.matmul(&mat.mlp_w[1])?.add_row_broadcast(&mat.mlp_b[1])?;
    let a2 = Activation::Relu.forward(&z2);
    let m2 = dropout_mask(a2.rows(), a2.cols(), meta.dropout, training, rng)?;
    let d2 = a2.hadamard(&m2)?;
    let z3 = d2.matmul(&mat.mlp_w[2])?.add_row_broadcast(&mat.mlp_b[2])?;
    let probs = z3.map(sigmoid);
    Ok(MlpTrace {
        input: hidden.clone(),
        pre: vec![z1, z2, z3],
        kept: vec![d1, d2],
        masks: vec![m1, m2],
        probs,
    })
}

/// Classifier backward; returns the gradient with respect to the input
/// features (one row per protein in the batch).
pub(crate) fn classify_backward(
    meta: &StructMeta,
    mat: &Materialized,
    trace: &MlpTrace,
    d_probs: &DenseMatrix,
    grads: &mut [Param],
) -> Result<DenseMatrix> {
    let sig_slope = trace.probs.map(|p| p * (1.0 - p));
    let d_z3 = d_probs.hadamard(&sig_slope)?;
    add_matrix_grad(grads, meta.mlp_w_index(2), &trace.kept[1].matmul_tn(&d_z3)?);
    add_vec_grad(grads, meta.mlp_b_index(2), &d_z3.col_sums());
    let d_d2 = d_z3.matmul_nt(&mat.mlp_w[2])?;
    let d_a2 = d_d2.hadamard(&trace.masks[1])?;
    let d_z2 = Activation::Relu.backward(&trace.pre[1], &d_a2);
    add_matrix_grad(grads, meta.mlp_w_index(1), &trace.kept[0].matmul_tn(&d_z2)?);
    add_vec_grad(grads, meta.mlp_b_index(1), &d_z2.col_sums());
    let d_d1 = d_z2.matmul_nt(&mat.mlp_w[1])?;
    let d_a1 = d_d1.hadamard(&trace.masks[0])?;
    let d_z1 = Activation::Relu.backward(&trace.pre[0], &d_a1);
    add_matrix_grad(grads, meta.mlp_w_index(0), &trace.input.matmul_tn(&d_z1)?);
    add_vec_grad(grads, meta.mlp_b_index(0), &d_z1.col_sums());
    d_z1.matmul_nt(&mat.mlp_w[0])
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

/// Inference on one protein: label probabilities and the protein-level
/// feature vector (the summed module readouts, taken before the
/// classifier). Dropout is off, so repeated calls are identical.
pub fn struct_forward(input: &GraphInput, model: &StructModel) -> Result<(Vec<f64>, Vec<f64>)> {
    let mat = materialize(&model.meta, &model.params)?;
    let trace = encode_one(&model.meta, &mat, input)?;
    let hidden = DenseMatrix::from_vec(1, trace.hidden.len(), trace.hidden.clone())?;
    let mut rng = ChaCha12Rng::seed_from_u64(0); // dropout disabled: never drawn from
    let mlp = classify(&model.meta, &mat, &hidden, false, &mut rng)?;
    Ok((mlp.probs.row(0).to_vec(), trace.hidden))
}
