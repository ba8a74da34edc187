//! Prediction-time label diffusion and score fusion.
//!
//! Training annotations spread over the heterogeneous network through the
//! same attention matrices the feature model learned, with annotated rows
//! clamped so known labels are never diluted. The diffused label scores are
//! then blended with the feature-model output by a per-branch convex weight,
//! and the result serializes as a thresholded protein/term/score table.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ingest::{FeatureTable, PpiEdgeList, SimilarityEdgeList};
use crate::numeric::{DenseMatrix, SparseMatrix};
use crate::ontology::{Branch, LabelMatrix};
use crate::propagation::{attention_matrices, prop_forward_eval, HeteroNetwork, PropModel};

/// Diffusion depth used when none is configured; matches the feature
/// model's default propagation depth.
pub const DEFAULT_LABEL_LAYERS: usize = 2;

/// Scores below this value are omitted from serialized predictions.
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.01;

/// Per-branch convex blend weight between the feature-model output and the
/// diffused label scores. The weight multiplies the feature-model side;
/// `1 - weight` multiplies the label side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub bpo: f64,
    pub mfo: f64,
    pub cco: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            bpo: 0.2,
            mfo: 0.4,
            cco: 0.5,
        }
    }
}

impl FusionConfig {
    /// The blend weight for one ontology branch.
    pub fn phi(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Bpo => self.bpo,
            Branch::Mfo => self.mfo,
            Branch::Cco => self.cco,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("BPO", self.bpo), ("MFO", self.mfo), ("CCO", self.cco)] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::Config(format!(
                    "fusion weight for {name} must lie in [0, 1], got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Settings for one prediction run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictConfig {
    /// Weight on the feature-model output; `1 - phi` weights the diffused
    /// labels. The endpoints are allowed: 1 disables label diffusion and 0
    /// disables the feature model.
    pub phi: f64,
    /// Number of label-diffusion passes over the attention matrices.
    pub label_layers: usize,
}

impl PredictConfig {
    /// The default configuration for a branch: its fusion weight and the
    /// standard diffusion depth.
    pub fn for_branch(branch: Branch, fusion: &FusionConfig) -> PredictConfig {
        PredictConfig {
            phi: fusion.phi(branch),
            label_layers: DEFAULT_LABEL_LAYERS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi.is_finite() || !(0.0..=1.0).contains(&self.phi) {
            return Err(Error::Config(format!(
                "fusion weight must lie in [0, 1], got {}",
                self.phi
            )));
        }
        Ok(())
    }
}

/// Diffuse label rows over both relations of the heterogeneous network.
///
/// Each pass computes `A_p · Y + A_s · Y`, rescales every unclamped row to
/// unit Euclidean length (rows that are entirely zero stay zero), and resets
/// clamped rows to their original labels, so known annotations pass through
/// unchanged while unannotated rows accumulate their neighbors' labels.
/// With `layers == 0` the labels come back as given.
pub fn label_propagate(
    interaction_attention: &SparseMatrix,
    similarity_attention: &SparseMatrix,
    labels: &DenseMatrix,
    clamp: &[bool],
    layers: usize,
) -> Result<DenseMatrix> {
    let n = labels.rows();
    for (name, matrix) in [
        ("interaction", interaction_attention),
        ("similarity", similarity_attention),
    ] {
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::shape(format!(
                "{name} attention is {}x{} but there are {n} label rows",
                matrix.rows(),
                matrix.cols()
            )));
        }
    }
    if clamp.len() != n {
        return Err(Error::shape(format!(
            "clamp mask covers {} rows but there are {n} label rows",
            clamp.len()
        )));
    }
    if labels
        .values()
        .iter()
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(Error::Numeric(
            "label diffusion requires finite, non-negative label entries".into(),
        ));
    }

    let mut state = labels.clone();
    for _ in 0..layers {
        let spread_ppi = interaction_attention.spmm(&state)?;
        let spread_sim = similarity_attention.spmm(&state)?;
        let mut next = spread_ppi.add(&spread_sim)?;
        for (r, &hold) in clamp.iter().enumerate() {
            if hold {
                next.row_mut(r).copy_from_slice(labels.row(r));
            } else {
                let row = next.row_mut(r);
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for v in row.iter_mut() {
                        *v /= norm;
                    }
                }
            }
        }
        state = next;
    }
    Ok(state)
}

/// Blend feature-model scores with diffused label scores:
/// `phi * feature + (1 - phi) * label`, clipped to `[0, 1]` for reporting.
///
/// For operands already inside `[0, 1]` the endpoints are exact: `phi == 1`
/// returns the feature scores unchanged and `phi == 0` the label scores.
pub fn fuse(
    feature_scores: &DenseMatrix,
    label_scores: &DenseMatrix,
    phi: f64,
) -> Result<DenseMatrix> {
    if feature_scores.shape() != label_scores.shape() {
        return Err(Error::shape(format!(
            "feature scores are {:?} but label scores are {:?}",
            feature_scores.shape(),
            label_scores.shape()
        )));
    }
    if !phi.is_finite() || !(0.0..=1.0).contains(&phi) {
        return Err(Error::Config(format!(
            "fusion weight must lie in [0, 1], got {phi}"
        )));
    }
    if !feature_scores.is_finite() || !label_scores.is_finite() {
        return Err(Error::Numeric(
            "cannot fuse non-finite score matrices".into(),
        ));
    }
    let fused: Vec<f64> = feature_scores
        .values()
        .iter()
        .zip(label_scores.values())
        .map(|(&f, &l)| (phi * f + (1.0 - phi) * l).clamp(0.0, 1.0))
        .collect();
    DenseMatrix::from_vec(feature_scores.rows(), feature_scores.cols(), fused)
}

/// Scores for a set of proteins over a fixed term vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    ids: Vec<String>,
    terms: Vec<String>,
    scores: DenseMatrix,
}

impl Prediction {
    /// Bundle protein ids, a term vocabulary, and a score matrix with one
    /// row per protein and one column per term; scores must sit in `[0, 1]`.
    pub fn new(ids: Vec<String>, terms: Vec<String>, scores: DenseMatrix) -> Result<Prediction> {
        if scores.rows() != ids.len() || scores.cols() != terms.len() {
            return Err(Error::shape(format!(
                "{} proteins and {} terms need a {}x{} score matrix, got {}x{}",
                ids.len(),
                terms.len(),
                ids.len(),
                terms.len(),
                scores.rows(),
                scores.cols()
            )));
        }
        if scores.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Numeric(
                "prediction scores must lie in [0, 1]".into(),
            ));
        }
        Ok(Prediction { ids, terms, scores })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// One row per protein (in `ids` order), one column per term.
    pub fn scores(&self) -> &DenseMatrix {
        &self.scores
    }

    /// Serialize as `protein-id <TAB> term-id <TAB> score` lines with six
    /// decimals. Lines are sorted by protein id, then score descending, then
    /// term id; scores below `threshold` are omitted (the comparison is
    /// inclusive, so a score equal to the threshold is kept).
    pub fn to_tsv_string(&self, threshold: f64) -> String {
        use std::fmt::Write as _;

        let mut order: Vec<usize> = (0..self.ids.len()).collect();
        order.sort_by(|&a, &b| self.ids[a].cmp(&self.ids[b]));
        let mut out = String::new();
        for &row in &order {
            let scores = self.scores.row(row);
            let mut cols: Vec<usize> = (0..scores.len())
                .filter(|&col| scores[col] >= threshold)
                .collect();
            cols.sort_by(|&a, &b| {
                scores[b]
                    .partial_cmp(&scores[a])
                    .expect("scores validated finite")
                    .then_with(|| self.terms[a].cmp(&self.terms[b]))
            });
            for col in cols {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.6}",
                    self.ids[row], self.terms[col], scores[col]
                );
            }
        }
        out
    }
}

/// Dense 0/1 label rows for every network node, plus the clamp mask marking
/// nodes with at least one known annotation. A protein whose label row is
/// entirely zero has no known annotations in this branch, so it stays free
/// to receive diffused labels like any other unannotated node.
pub(crate) fn clamped_label_rows(
    net: &HeteroNetwork,
    train_labels: &LabelMatrix,
) -> (DenseMatrix, Vec<bool>) {
    let c = train_labels.n_terms();
    let mut labels = DenseMatrix::zeros(net.n(), c);
    let mut clamped = vec![false; net.n()];
    for (node, id) in net.ids().iter().enumerate() {
        if let Some(row) = train_labels.protein_row(id) {
            for term in 0..c {
                if train_labels.get(row, term) {
                    labels.set(node, term, 1.0);
                    clamped[node] = true;
                }
            }
        }
    }
    (labels, clamped)
}

/// Score `test_ids` by fusing the trained feature model with label
/// diffusion over the heterogeneous network.
///
/// Proteins in the network get the full treatment: a feature forward pass,
/// label diffusion through the model's attention matrices with annotated
/// rows clamped, and the convex blend. Proteins missing from the network
/// are scored as isolated nodes — their attention reduces to the self-loop
/// and no labels can reach them, so their label component is zero — and a
/// warning lists them. Requested ids keep their input order in the result,
/// duplicates included.
pub fn predict(
    model: &PropModel,
    net: &HeteroNetwork,
    features: &FeatureTable,
    train_labels: &LabelMatrix,
    test_ids: &[String],
    cfg: &PredictConfig,
) -> Result<Prediction> {
    cfg.validate()?;
    if test_ids.is_empty() {
        return Err(Error::Config("no proteins requested for prediction".into()));
    }
    if train_labels.branch() != model.meta.branch {
        return Err(Error::Config(format!(
            "label matrix covers {} but the model was trained for {}",
            train_labels.branch(),
            model.meta.branch
        )));
    }
    let c = train_labels.n_terms();
    if c != model.meta.n_labels {
        return Err(Error::Config(format!(
            "label matrix has {c} terms but the model outputs {}",
            model.meta.n_labels
        )));
    }

    let missing: Vec<String> = {
        let mut seen = BTreeSet::new();
        test_ids
            .iter()
            .filter(|id| net.index_of(id).is_none() && seen.insert(id.as_str()))
            .cloned()
            .collect()
    };

    let fused_in_net = if test_ids.iter().any(|id| net.index_of(id).is_some()) {
        let feature_scores = prop_forward_eval(model, net, features)?;
        // At phi == 1 the label side is weighted by exactly zero, and every
        // diffused entry is finite and non-negative, so skipping the
        // diffusion leaves the fused scores bit-identical.
        let diffused = if cfg.phi == 1.0 {
            DenseMatrix::zeros(feature_scores.rows(), feature_scores.cols())
        } else {
            let (a_p, a_s) = attention_matrices(model, net, features)?;
            let (labels, clamped) = clamped_label_rows(net, train_labels);
            label_propagate(&a_p, &a_s, &labels, &clamped, cfg.label_layers)?
        };
        Some(fuse(&feature_scores, &diffused, cfg.phi)?)
    } else {
        None
    };

    let isolated = if missing.is_empty() {
        None
    } else {
        let preview: Vec<&str> = missing.iter().take(5).map(String::as_str).collect();
        log::warn!(
            "{} requested protein(s) are not in the heterogeneous network and are scored as \
             isolated nodes (self-attention only, no label diffusion): {}{}",
            missing.len(),
            preview.join(", "),
            if missing.len() > preview.len() {
                ", ..."
            } else {
                ""
            }
        );
        let aux_net = HeteroNetwork::new(
            &missing,
            &PpiEdgeList::from_edges(Vec::new()),
            &SimilarityEdgeList::from_edges(Vec::new()),
        )?;
        let feature_scores = prop_forward_eval(model, &aux_net, features)?;
        let zero_labels = DenseMatrix::zeros(feature_scores.rows(), feature_scores.cols());
        let fused = fuse(&feature_scores, &zero_labels, cfg.phi)?;
        Some((aux_net, fused))
    };

    let mut scores = DenseMatrix::zeros(test_ids.len(), c);
    for (out_row, id) in test_ids.iter().enumerate() {
        let source = if let Some(node) = net.index_of(id) {
            let fused = fused_in_net
                .as_ref()
                .expect("network-resident ids imply the full pass ran");
            fused.row(node)
        } else {
            let (aux_net, fused) = isolated
                .as_ref()
                .expect("missing ids imply the isolated pass ran");
            let node = aux_net
                .index_of(id)
                .expect("the isolated network holds every missing id");
            fused.row(node)
        };
        scores.row_mut(out_row).copy_from_slice(source);
    }
    Prediction::new(test_ids.to_vec(), train_labels.terms().to_vec(), scores)
}
