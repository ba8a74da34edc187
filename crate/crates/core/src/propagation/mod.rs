//! Heterogeneous-network propagation stage: protein features flow through an
//! input projection and a layer-normalized refiner, learned edge attention
//! turns two relations (physical interactions, cross-species similarity)
//! into row-stochastic mixing matrices, residual propagation layers blend
//! every protein with its neighborhoods in both relations, and a sigmoid
//! head scores each label. Training is full-batch with the loss masked to
//! annotated proteins, so unannotated proteins shape predictions only
//! through the network structure.

mod model;
mod network;
mod train;

pub use model::{
    align_features, attention_matrices, prop_forward_eval, PropMeta, PropModel,
};
pub use network::HeteroNetwork;
pub use train::{prop_train, verify_training_gradients, PropEpoch, PropTrainReport};

use crate::error::{Error, Result};
use crate::ingest::FeatureTable;
use crate::numeric::Activation;

/// Hyper-parameters of the network model and its training loop.
#[derive(Debug, Clone)]
pub struct PropConfig {
    /// Hidden width of the refiner, attention, and propagation layers.
    pub d3: usize,
    /// Residual propagation layers (0 disables neighborhood mixing).
    pub layers: usize,
    /// Dropout inside the input projection and refiner (training only).
    pub dropout: f64,
    /// Negative slope of the leaky rectifier inside edge attention.
    pub leaky_slope: f64,
    /// Activation of the refiner and propagation layers.
    pub activation: Activation,
    /// Add each edge's log base weight to its attention logit.
    pub weighted_logits: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for PropConfig {
    fn default() -> Self {
        PropConfig {
            d3: 512,
            layers: 2,
            dropout: 0.5,
            leaky_slope: 0.2,
            activation: Activation::Relu,
            weighted_logits: false,
            learning_rate: 1e-3,
            epochs: 10,
            seed: 0,
        }
    }
}

impl PropConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d3 == 0 {
            return Err(Error::Config("hidden width must be at least 1".to_string()));
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
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Join per-protein sequence features and structure-derived features into
/// one table, sequence columns first. Either side may be absent (the other
/// passes through unchanged); when both are present their id sets must match
/// exactly — rows are paired by id, never by iteration order.
pub fn concat_features(
    sequence: Option<&FeatureTable>,
    structural: Option<&FeatureTable>,
) -> Result<FeatureTable> {
    match (sequence, structural) {
        (None, None) => Err(Error::Config(
            "at least one feature table is required".to_string(),
        )),
        (Some(t), None) | (None, Some(t)) => Ok(t.clone()),
        (Some(seq), Some(st)) => {
            let seq_ids: Vec<&str> = seq.ids().collect();
            let st_ids: Vec<&str> = st.ids().collect();
            if seq_ids != st_ids {
                let only_seq: Vec<&str> = seq_ids
                    .iter()
                    .filter(|id| st.get(id).is_none())
                    .take(5)
                    .copied()
                    .collect();
                let only_st: Vec<&str> = st_ids
                    .iter()
                    .filter(|id| seq.get(id).is_none())
                    .take(5)
                    .copied()
                    .collect();
                return Err(Error::Alignment(format!(
                    "feature tables cover different proteins (sequence-only: [{}], structure-only: [{}])",
                    only_seq.join(", "),
                    only_st.join(", ")
                )));
            }
            let mut out = FeatureTable::new(seq.dim() + st.dim())?;
            for (id, seq_row) in seq.iter() {
                let st_row = st.get(id).expect("id sets were just checked to match");
                let mut row = Vec::with_capacity(seq_row.len() + st_row.len());
                row.extend_from_slice(seq_row);
                row.extend_from_slice(st_row);
                out.insert(id.to_string(), row)?;
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{PpiEdgeList, SimilarityEdgeList};
    use crate::numeric::{sigmoid, DenseMatrix, LAYER_NORM_EPS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn defaults_match_documented_values() {
        let c = PropConfig::default();
        assert_eq!(c.d3, 512);
        assert_eq!(c.layers, 2);
        assert_eq!(c.dropout, 0.5);
        assert_eq!(c.leaky_slope, 0.2);
        assert_eq!(c.learning_rate, 1e-3);
        assert_eq!(c.epochs, 10);
        assert_eq!(c.activation, Activation::Relu);
        assert!(!c.weighted_logits);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for patch in [
            |c: &mut PropConfig| c.d3 = 0,
            |c: &mut PropConfig| c.dropout = 1.0,
            |c: &mut PropConfig| c.dropout = -0.1,
            |c: &mut PropConfig| c.leaky_slope = 0.0,
            |c: &mut PropConfig| c.learning_rate = 0.0,
        ] {
            let mut c = PropConfig::default();
            patch(&mut c);
            assert!(c.validate().is_err());
        }
    }

    fn table(dim: usize, rows: &[(&str, Vec<f64>)]) -> FeatureTable {
        let mut t = FeatureTable::new(dim).unwrap();
        for (id, row) in rows {
            t.insert(id.to_string(), row.clone()).unwrap();
        }
        t
    }

    #[test]
    fn concatenation_is_sequence_first_and_id_aligned() {
        let seq = table(2, &[("a", vec![1.0, 2.0]), ("b", vec![3.0, 4.0])]);
        let st = table(1, &[("b", vec![30.0]), ("a", vec![10.0])]);
        let joined = concat_features(Some(&seq), Some(&st)).unwrap();
        assert_eq!(joined.dim(), 3);
        assert_eq!(joined.get("a").unwrap(), &[1.0, 2.0, 10.0]);
        assert_eq!(joined.get("b").unwrap(), &[3.0, 4.0, 30.0]);
    }

    #[test]
    fn concatenation_of_default_widths() {
        let mut seq = FeatureTable::new(1280).unwrap();
        let mut st = FeatureTable::new(1024).unwrap();
        seq.insert("p".into(), vec![0.0; 1280]).unwrap();
        st.insert("p".into(), vec![0.0; 1024]).unwrap();
        let joined = concat_features(Some(&seq), Some(&st)).unwrap();
        assert_eq!(joined.dim(), 2304);
    }

    #[test]
    fn a_single_table_passes_through() {
        let seq = table(2, &[("a", vec![1.0, 2.0])]);
        assert_eq!(concat_features(Some(&seq), None).unwrap(), seq);
        assert_eq!(concat_features(None, Some(&seq)).unwrap(), seq);
        assert!(concat_features(None, None).is_err());
    }

    #[test]
    fn mismatched_id_sets_are_an_alignment_error() {
        let seq = table(1, &[("a", vec![1.0]), ("b", vec![2.0])]);
        let st = table(1, &[("a", vec![1.0]), ("c", vec![3.0])]);
        let err = concat_features(Some(&seq), Some(&st)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("different proteins"), "{msg}");
        assert!(msg.contains('b') && msg.contains('c'), "{msg}");
    }

    fn random_net(seed: u64, n: usize, sim_edges: bool) -> (HeteroNetwork, FeatureTable) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let ids: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
        let mut ppi = Vec::new();
        let mut sim = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < 0.4 {
                    ppi.push((ids[i].clone(), ids[j].clone(), rng.gen_range(0.2..1.0)));
                }
                if sim_edges && rng.gen::<f64>() < 0.3 {
                    sim.push((ids[i].clone(), ids[j].clone(), rng.gen_range(0.2..1.0)));
                }
            }
        }
        let net = HeteroNetwork::new(
            &ids,
            &PpiEdgeList::from_edges(ppi),
            &SimilarityEdgeList::from_edges(sim),
        )
        .unwrap();
        let dim = 4;
        let mut t = FeatureTable::new(dim).unwrap();
        for id in net.ids() {
            t.insert(
                id.clone(),
                (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
        }
        (net, t)
    }

    #[test]
    fn attention_rows_sum_to_one_within_nano_tolerance() {
        for seed in [1u64, 2, 3] {
            let (net, features) = random_net(seed, 7, true);
            let meta = PropMeta {
                branch: crate::ontology::Branch::Mfo,
                input_dim: 4,
                d3: 5,
                n_labels: 3,
                layers: 2,
                dropout: 0.0,
                leaky_slope: 0.2,
                activation: Activation::Relu,
                weighted_logits: seed == 3,
            };
            let model = PropModel::init(meta, seed).unwrap();
            let (a_p, a_s) = attention_matrices(&model, &net, &features).unwrap();
            for mat in [&a_p, &a_s] {
                for u in 0..net.n() {
                    let (_, vals) = mat.row(u);
                    let sum: f64 = vals.iter().sum();
                    assert!((sum - 1.0).abs() <= 1e-9, "row {u} sums to {sum}");
                    assert!(vals.iter().all(|&v| v > 0.0));
                }
            }
        }
    }

    /// Dense re-derivation of the whole forward pass for a network whose
    /// similarity relation is empty, written with scalar loops and explicit
    /// softmax normalization instead of the sparse machinery. With no
    /// similarity edges that relation only carries self-loops, so its mixing
    /// step must reduce to an identity pass-through.
    fn dense_single_relation_reference(
        model: &PropModel,
        net: &HeteroNetwork,
        features: &DenseMatrix,
    ) -> DenseMatrix {
        let meta = &model.meta;
        let p = |i: usize| &model.params()[i].value;
        let n = net.n();
        let d3 = meta.d3;
        let relu = |x: f64| x.max(0.0);

        // Projection: features (n x input_dim) times weight (input_dim x d3).
        let mut h = vec![vec![0.0; d3]; n];
        for u in 0..n {
            for k in 0..d3 {
                let mut acc = p(1)[k];
                for j in 0..meta.input_dim {
                    acc += features.get(u, j) * p(0)[j * d3 + k];
                }
                h[u][k] = relu(acc);
            }
        }
        // Refiner with per-row normalization.
        let mut h0 = vec![vec![0.0; d3]; n];
        for u in 0..n {
            let mut z = vec![0.0; d3];
            for k in 0..d3 {
                let mut acc = p(3)[k];
                for j in 0..d3 {
                    acc += h[u][j] * p(2)[j * d3 + k];
                }
                z[k] = acc;
            }
            let mean = z.iter().sum::<f64>() / d3 as f64;
            let var = z.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d3 as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for k in 0..d3 {
                h0[u][k] = relu(p(4)[k] * (z[k] - mean) * inv + p(5)[k]);
            }
        }
        // Edge scores.
        let leaky = |x: f64| if x > 0.0 { x } else { meta.leaky_slope * x };
        let mut s_left = vec![0.0; n];
        let mut s_right = vec![0.0; n];
        for u in 0..n {
            for k in 0..d3 {
                let mut t = 0.0;
                for j in 0..d3 {
                    t += h0[u][j] * p(7)[j * d3 + k];
                }
                let t = leaky(t);
                s_left[u] += p(6)[k] * t;
                s_right[u] += p(6)[d3 + k] * t;
            }
        }
        // Dense interaction attention over neighbors plus self.
        let mut a = vec![vec![0.0; n]; n];
        for u in 0..n {
            let mut members: Vec<usize> = net
                .interaction_neighbors(u)
                .iter()
                .map(|&(j, _)| j)
                .collect();
            members.push(u);
            let mut denom = 0.0;
            let mut num = vec![0.0; members.len()];
            let max = members
                .iter()
                .map(|&j| s_left[u] + s_right[j])
                .fold(f64::NEG_INFINITY, f64::max);
            for (i, &j) in members.iter().enumerate() {
                num[i] = (s_left[u] + s_right[j] - max).exp();
                denom += num[i];
            }
            for (i, &j) in members.iter().enumerate() {
                a[u][j] = num[i] / denom;
            }
        }
        // Propagation layers; the empty relation contributes the identity.
        let mut cur = h0;
        for l in 0..meta.layers {
            let w = p(meta.prop_index(l));
            let mut prod = vec![vec![0.0; d3]; n];
            for u in 0..n {
                for k in 0..d3 {
                    for j in 0..d3 {
                        prod[u][k] += cur[u][j] * w[j * d3 + k];
                    }
                }
            }
            let mut next = vec![vec![0.0; d3]; n];
            for u in 0..n {
                for k in 0..d3 {
                    let mut mixed = 0.0;
                    for v in 0..n {
                        mixed += a[u][v] * prod[v][k];
                    }
                    let through = relu(mixed + cur[u][k]);
                    let kept = relu(prod[u][k] + cur[u][k]);
                    next[u][k] = relu(through + kept);
                }
            }
            cur = next;
        }
        // Output head.
        let w_out = p(meta.w_out_index());
        let b_out = p(meta.b_out_index());
        let mut pred = DenseMatrix::zeros(n, meta.n_labels);
        for u in 0..n {
            for c in 0..meta.n_labels {
                let mut acc = b_out[c];
                for j in 0..d3 {
                    acc += cur[u][j] * w_out[j * meta.n_labels + c];
                }
                pred.set(u, c, sigmoid(acc));
            }
        }
        pred
    }

    #[test]
    fn empty_similarity_relation_reduces_to_a_single_network_model() {
        for seed in [4u64, 5, 6] {
            let (net, features) = random_net(seed, 6, false);
            assert_eq!(net.similarity_edge_count(), 0);
            let meta = PropMeta {
                branch: crate::ontology::Branch::Mfo,
                input_dim: 4,
                d3: 3,
                n_labels: 2,
                layers: 2,
                dropout: 0.0,
                leaky_slope: 0.2,
                activation: Activation::Relu,
                weighted_logits: false,
            };
            let model = PropModel::init(meta, seed * 31).unwrap();
            let got = prop_forward_eval(&model, &net, &features).unwrap();
            let aligned = align_features(&net, &features).unwrap();
            let want = dense_single_relation_reference(&model, &net, &aligned);
            for (g, w) in got.values().iter().zip(want.values()) {
                assert!((g - w).abs() < 1e-12, "{g} vs {w}");
            }
        }
    }
}
