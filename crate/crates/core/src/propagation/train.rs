//! Full-batch training of the heterogeneous-network model with masked loss,
//! plus an end-to-end gradient verifier against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::model::{
    align_features, forward_with, materialize, prop_backward, prop_forward, PropMeta, PropModel,
    PropTrace,
};
use super::network::HeteroNetwork;
use super::PropConfig;
use crate::error::{Error, Result};
use crate::ingest::{FeatureTable, PpiEdgeList, SimilarityEdgeList};
use crate::metrics::{fmax, EvalInput};
use crate::numeric::{
    bce_loss_masked, finite_difference_check, DenseMatrix, Param, Reduction,
};
use crate::ontology::{Branch, LabelMatrix};

/// One completed training epoch.
#[derive(Debug, Clone)]
pub struct PropEpoch {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Summed binary cross-entropy over the masked training rows.
    pub loss: f64,
    /// Protein-centric F-measure maximum on the validation rows, when a
    /// validation label matrix was supplied.
    pub val_fmax: Option<f64>,
}

/// Epoch-by-epoch log of one training run.
#[derive(Debug, Clone)]
pub struct PropTrainReport {
    pub epochs: Vec<PropEpoch>,
    /// Set when a numerical breakdown stopped training early; the returned
    /// model then holds the parameters from the last finite epoch.
    pub halted: bool,
}

impl PropTrainReport {
    /// CSV rendering with header `epoch,loss,val_fmax`; the third column is
    /// empty when no validation set was given.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,val_fmax\n");
        for e in &self.epochs {
            match e.val_fmax {
                Some(f) => out.push_str(&format!("{},{:.6},{:.6}\n", e.epoch, e.loss, f)),
                None => out.push_str(&format!("{},{:.6},\n", e.epoch, e.loss)),
            }
        }
        out
    }
}

fn stream_seed(master: u64, stream: u64, epoch: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(epoch.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Validation bookkeeping: which network rows to score against which label
/// rows, on the training term vocabulary.
struct ValSet {
    rows: Vec<(usize, usize)>,
    truth: LabelMatrix,
}

/// Train against one branch's label matrix with Adam, one full-batch update
/// per epoch. Only network rows whose protein appears in `train_labels`
/// contribute loss and gradient; everything else rides along. A non-finite
/// forward or loss halts training and returns the parameters from the last
/// finite epoch. When `val_labels` is given, each epoch's log line carries
/// the F-measure maximum over the validation proteins present in the network
/// (restricted to the training term vocabulary).
pub fn prop_train(
    net: &HeteroNetwork,
    features: &FeatureTable,
    train_labels: &LabelMatrix,
    val_labels: Option<&LabelMatrix>,
    cfg: &PropConfig,
) -> Result<(PropModel, PropTrainReport)> {
    cfg.validate()?;
    if train_labels.n_terms() == 0 {
        return Err(Error::Config(
            "label matrix has no terms to train against".to_string(),
        ));
    }
    let aligned = align_features(net, features)?;
    let n = net.n();
    let c = train_labels.n_terms();

    let mut mask = vec![false; n];
    let mut targets = DenseMatrix::zeros(n, c);
    let mut covered = 0usize;
    for (row, id) in net.ids().iter().enumerate() {
        if let Some(lrow) = train_labels.protein_row(id) {
            mask[row] = true;
            covered += 1;
            for col in 0..c {
                if train_labels.get(lrow, col) {
                    targets.set(row, col, 1.0);
                }
            }
        }
    }
    if covered == 0 {
        return Err(Error::Alignment(
            "no network protein has a training label row".to_string(),
        ));
    }
    let absent = train_labels.n_proteins() - covered;
    if absent > 0 {
        log::warn!("{absent} labeled proteins are outside the network and cannot be trained on");
    }

    let val = match val_labels {
        Some(vl) => {
            if vl.branch() != train_labels.branch() {
                return Err(Error::Config(format!(
                    "validation labels are {:?} but training labels are {:?}",
                    vl.branch(),
                    train_labels.branch()
                )));
            }
            let truth = vl.restrict_to_terms(train_labels.terms())?;
            let rows: Vec<(usize, usize)> = truth
                .proteins()
                .iter()
                .enumerate()
                .filter_map(|(vrow, id)| net.index_of(id).map(|nrow| (nrow, vrow)))
                .collect();
            if rows.is_empty() {
                log::warn!("no validation protein is present in the network; skipping validation");
                None
            } else {
                Some(ValSet { rows, truth })
            }
        }
        None => None,
    };

    let meta = PropMeta::from_config(train_labels.branch(), aligned.cols(), c, cfg);
    let mut model = PropModel::init(meta, cfg.seed)?;
    let mut report = PropTrainReport {
        epochs: Vec::with_capacity(cfg.epochs),
        halted: false,
    };
    if cfg.epochs == 0 {
        return Ok((model, report));
    }

    let mut adam = crate::numeric::Adam::new(cfg.learning_rate);
    let mut last_good: Vec<Param> = model.params.clone();
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha12Rng::seed_from_u64(stream_seed(cfg.seed, 1, epoch as u64));
        let trace = prop_forward(&model, net, &aligned, true, &mut rng)?;
        if !trace.pred.is_finite() {
            log::error!("non-finite predictions at epoch {}; keeping the last finite parameters", epoch + 1);
            model.params = last_good;
            report.halted = true;
            return Ok((model, report));
        }
        let (loss, d_pred) = bce_loss_masked(&trace.pred, &targets, &mask, Reduction::Sum)?;
        if !loss.is_finite() {
            log::error!("non-finite loss at epoch {}; keeping the last finite parameters", epoch + 1);
            model.params = last_good;
            report.halted = true;
            return Ok((model, report));
        }
        for p in &mut model.params {
            p.zero_grad();
        }
        let mats = materialize(&model.meta, &model.params)?;
        prop_backward(&model.meta, &mats, &aligned, &trace, &d_pred, &mut model.params)?;
        match adam.step(&mut model.params) {
            Ok(()) => {}
            Err(Error::Numeric(msg)) => {
                log::error!("{msg} at epoch {}; keeping the last finite parameters", epoch + 1);
                model.params = last_good;
                report.halted = true;
                return Ok((model, report));
            }
            Err(e) => return Err(e),
        }

        let val_fmax = match &val {
            Some(v) => Some(epoch_val_fmax(&model, net, &aligned, v)?),
            None => None,
        };
        report.epochs.push(PropEpoch {
            epoch: epoch + 1,
            loss,
            val_fmax,
        });
        log::info!(
            "network model epoch {}: summed loss {loss:.6}",
            epoch + 1
        );
        last_good = model.params.clone();
    }
    Ok((model, report))
}

fn epoch_val_fmax(
    model: &PropModel,
    net: &HeteroNetwork,
    aligned: &DenseMatrix,
    val: &ValSet,
) -> Result<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let trace = prop_forward(model, net, aligned, false, &mut rng)?;
    let c = trace.pred.cols();
    let mut pred = DenseMatrix::zeros(val.rows.len(), c);
    let mut truth = DenseMatrix::zeros(val.rows.len(), c);
    for (i, &(nrow, vrow)) in val.rows.iter().enumerate() {
        pred.row_mut(i).copy_from_slice(trace.pred.row(nrow));
        for col in 0..c {
            if val.truth.get(vrow, col) {
                truth.set(i, col, 1.0);
            }
        }
    }
    let eval = EvalInput::new(&pred, &truth, val.truth.terms(), None)?;
    Ok(fmax(&eval)?.0)
}

/// A random training-step probe: model, network, aligned features, targets,
/// and the row mask the loss is restricted to.
struct FdCase {
    model: PropModel,
    net: HeteroNetwork,
    features: DenseMatrix,
    targets: DenseMatrix,
    mask: Vec<bool>,
}

fn build_fd_case(seed: u64) -> Result<FdCase> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=6);
    let ids: Vec<String> = (0..n).map(|i| format!("p{i:03}")).collect();
    let mut ppi = Vec::new();
    let mut sim = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < 0.5 {
                ppi.push((ids[i].clone(), ids[j].clone(), rng.gen_range(0.2..1.0)));
            }
            if rng.gen::<f64>() < 0.3 {
                sim.push((ids[i].clone(), ids[j].clone(), rng.gen_range(0.2..1.0)));
            }
        }
    }
    if ppi.is_empty() {
        ppi.push((ids[0].clone(), ids[1].clone(), 0.8));
    }
    let net = HeteroNetwork::new(
        &ids,
        &PpiEdgeList::from_edges(ppi),
        &SimilarityEdgeList::from_edges(sim),
    )?;
    let input_dim = 5;
    let features = DenseMatrix::from_rows(
        &(0..n)
            .map(|_| (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect::<Vec<Vec<f64>>>(),
    )?;
    let c = 3;
    let mut targets = DenseMatrix::zeros(n, c);
    for v in targets.values_mut() {
        if rng.gen::<f64>() < 0.5 {
            *v = 1.0;
        }
    }
    let mask: Vec<bool> = (0..n).map(|r| r < n - 2).collect();
    let meta = PropMeta {
        branch: Branch::Mfo,
        input_dim,
        d3: 4,
        n_labels: c,
        layers: 2,
        dropout: 0.0,
        leaky_slope: 0.2,
        activation: crate::numeric::Activation::Relu,
        weighted_logits: false,
    };
    let model = PropModel::init(meta, seed.wrapping_add(977))?;
    Ok(FdCase {
        model,
        net,
        features,
        targets,
        mask,
    })
}

/// A finite-difference probe is only meaningful where the loss is smooth
/// around the evaluation point. Rectifier kinks sit at zero pre-activations,
/// so any live pre-activation within `margin` of zero disqualifies the
/// candidate. Exact zeros in the attention transform and the propagation
/// sums come from dead rectified paths below them and cannot move under a
/// parameter step of the probe's size; exact zeros in the projection and
/// refiner stages could be bias-induced and are rejected outright. The
/// prediction clamp of the loss is a kink too, so probabilities near the
/// clamp bounds also disqualify.
fn smooth_neighbourhood(trace: &PropTrace, margin: f64) -> bool {
    let strict = |m: &DenseMatrix| m.values().iter().all(|&v| v.abs() >= margin);
    let lenient = |m: &DenseMatrix| {
        m.values()
            .iter()
            .all(|&v| v == 0.0 || v.abs() >= margin)
    };
    if !strict(&trace.z1) || !strict(&trace.ln_out) {
        return false;
    }
    if !lenient(&trace.t_pre) {
        return false;
    }
    for layer in &trace.layers {
        if !lenient(&layer.cp) || !lenient(&layer.cs) || !lenient(&layer.q) {
            return false;
        }
    }
    trace
        .pred
        .values()
        .iter()
        .all(|&p| p > 1e-6 && p < 1.0 - 1e-6)
}

/// Compare the full training-step gradient (attention, propagation, head,
/// masked loss) against central finite differences on a small random
/// network. Deterministically rolls candidate cases from `base_seed` until
/// one is smooth around the evaluation point, then returns the worst
/// relative error across sampled coordinates of every parameter tensor.
pub fn verify_training_gradients(base_seed: u64) -> Result<f64> {
    const STEP: f64 = 1e-5;
    const MARGIN: f64 = 1e-4;
    let mut chosen = None;
    for attempt in 0..50u64 {
        let case = build_fd_case(base_seed.wrapping_add(10 * attempt))?;
        let mats = materialize(&case.model.meta, &case.model.params)?;
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let trace = forward_with(
            &case.model.meta,
            &mats,
            &case.net,
            &case.features,
            true,
            &mut rng,
        )?;
        if smooth_neighbourhood(&trace, MARGIN) {
            chosen = Some((case, mats, trace));
            break;
        }
    }
    let Some((case, mats, trace)) = chosen else {
        return Err(Error::Numeric(
            "no smooth gradient-probe configuration within 50 candidates".to_string(),
        ));
    };

    let mut probe = case.model.params.clone();
    for p in &mut probe {
        p.zero_grad();
    }
    let (_, d_pred) = bce_loss_masked(&trace.pred, &case.targets, &case.mask, Reduction::Sum)?;
    prop_backward(
        &case.model.meta,
        &mats,
        &case.features,
        &trace,
        &d_pred,
        &mut probe,
    )?;

    let meta = case.model.meta.clone();
    let net = &case.net;
    let features = &case.features;
    let targets = &case.targets;
    let mask = &case.mask;
    let loss_of = |params: &[Param]| -> f64 {
        let mats = materialize(&meta, params).expect("probe parameters keep their shapes");
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let trace = forward_with(&meta, &mats, net, features, true, &mut rng)
            .expect("probe forward pass stays well-formed");
        bce_loss_masked(&trace.pred, targets, mask, Reduction::Sum)
            .expect("probe loss stays finite")
            .0
    };
    finite_difference_check(loss_of, &mut probe, STEP, 4, base_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::GoDag;

    fn toy_dag(n_children: usize) -> GoDag {
        let mut text = String::from(
            "[Term]\nid: GO:0000001\nname: root\nnamespace: molecular_function\n\n",
        );
        for i in 0..n_children {
            text.push_str(&format!(
                "[Term]\nid: GO:{:07}\nname: child {i}\nnamespace: molecular_function\nis_a: GO:0000001\n\n",
                i + 2
            ));
        }
        GoDag::parse_obo(&text).unwrap()
    }

    fn term_id(i: usize) -> String {
        format!("GO:{:07}", i + 2)
    }

    /// A learnable two-cluster task: cluster membership is readable from the
    /// features and decides the label set; interactions stay within
    /// clusters, similarities bridge the two halves of each cluster.
    struct ClusterTask {
        net: HeteroNetwork,
        features: FeatureTable,
        labels: LabelMatrix,
    }

    fn cluster_task(n: usize, n_terms: usize, dim: usize, seed: u64) -> ClusterTask {
        let dag = toy_dag(n_terms);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let ids: Vec<String> = (0..n).map(|i| format!("q{i:04}")).collect();
        let clusters: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let mut features = FeatureTable::new(dim).unwrap();
        for (i, id) in ids.iter().enumerate() {
            let mut row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.05..0.05)).collect();
            row[clusters[i]] += 1.0;
            features.insert(id.clone(), row).unwrap();
        }
        let mut ppi = Vec::new();
        let mut sim = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if clusters[i] == clusters[j] && rng.gen::<f64>() < 0.1 {
                    ppi.push((ids[i].clone(), ids[j].clone(), rng.gen_range(0.4..1.0)));
                }
                if i % 2 == j % 2 && clusters[i] == clusters[j] && rng.gen::<f64>() < 0.05 {
                    sim.push((ids[i].clone(), ids[j].clone(), rng.gen_range(0.4..1.0)));
                }
            }
        }
        let net = HeteroNetwork::new(
            &ids,
            &PpiEdgeList::from_edges(ppi),
            &SimilarityEdgeList::from_edges(sim),
        )
        .unwrap();
        let per_cluster = n_terms / 4;
        let mut annotations = Vec::new();
        for (i, id) in ids.iter().enumerate() {
            for t in 0..per_cluster {
                annotations.push((id.clone(), term_id(clusters[i] * per_cluster + t)));
            }
        }
        let labels =
            LabelMatrix::from_annotations(&dag, Branch::Mfo, &annotations).unwrap();
        ClusterTask {
            net,
            features,
            labels,
        }
    }

    fn small_cfg() -> PropConfig {
        PropConfig {
            d3: 8,
            layers: 2,
            dropout: 0.0,
            leaky_slope: 0.2,
            activation: crate::numeric::Activation::Relu,
            weighted_logits: false,
            learning_rate: 1e-3,
            epochs: 3,
            seed: 0,
        }
    }

    #[test]
    fn training_gradients_match_finite_differences() {
        for base in [11u64, 12, 13] {
            let worst = verify_training_gradients(base).unwrap();
            assert!(worst <= 1e-4, "base {base}: worst relative error {worst}");
        }
    }

    #[test]
    fn validation_labels_never_touch_the_updates() {
        let task = cluster_task(24, 8, 8, 3);
        let dag = toy_dag(8);
        let val_a = LabelMatrix::from_annotations(
            &dag,
            Branch::Mfo,
            &[("q0001".to_string(), term_id(0))],
        )
        .unwrap();
        let val_b = LabelMatrix::from_annotations(
            &dag,
            Branch::Mfo,
            &[
                ("q0001".to_string(), term_id(5)),
                ("q0003".to_string(), term_id(2)),
            ],
        )
        .unwrap();
        let cfg = small_cfg();
        let (m_none, _) =
            prop_train(&task.net, &task.features, &task.labels, None, &cfg).unwrap();
        let (m_a, r_a) =
            prop_train(&task.net, &task.features, &task.labels, Some(&val_a), &cfg).unwrap();
        let (m_b, _) =
            prop_train(&task.net, &task.features, &task.labels, Some(&val_b), &cfg).unwrap();
        assert_eq!(m_none.to_bytes(), m_a.to_bytes());
        assert_eq!(m_a.to_bytes(), m_b.to_bytes());
        assert!(r_a.epochs.iter().all(|e| e.val_fmax.is_some()));
    }

    #[test]
    fn training_is_deterministic_under_a_fixed_seed() {
        let task = cluster_task(20, 8, 8, 5);
        let mut cfg = small_cfg();
        cfg.dropout = 0.5;
        let (m1, r1) = prop_train(&task.net, &task.features, &task.labels, None, &cfg).unwrap();
        let (m2, r2) = prop_train(&task.net, &task.features, &task.labels, None, &cfg).unwrap();
        assert_eq!(m1.to_bytes(), m2.to_bytes());
        let l1: Vec<f64> = r1.epochs.iter().map(|e| e.loss).collect();
        let l2: Vec<f64> = r2.epochs.iter().map(|e| e.loss).collect();
        assert_eq!(l1, l2);
        cfg.seed = 99;
        let (m3, _) = prop_train(&task.net, &task.features, &task.labels, None, &cfg).unwrap();
        assert_ne!(m1.to_bytes(), m3.to_bytes());
    }

    #[test]
    fn capacity_to_overfit_a_cluster_task() {
        let task = cluster_task(200, 16, 24, 7);
        let mut cfg = small_cfg();
        cfg.d3 = 32;
        cfg.epochs = 50;
        // 50 full-batch updates are few; a stronger step keeps the capacity
        // check inside that budget.
        cfg.learning_rate = 5e-3;
        let (model, report) =
            prop_train(&task.net, &task.features, &task.labels, None, &cfg).unwrap();
        assert!(!report.halted);
        let pred = crate::propagation::prop_forward_eval(&model, &task.net, &task.features).unwrap();
        let truth = task.labels.to_dense();
        // Network rows and label rows coincide: same sorted protein ids.
        assert_eq!(task.net.ids(), task.labels.proteins());
        let eval = EvalInput::new(&pred, &truth, task.labels.terms(), None).unwrap();
        let (f, _) = fmax(&eval).unwrap();
        assert!(f >= 0.95, "training F-measure maximum {f}");
        let losses: Vec<f64> = report.epochs.iter().map(|e| e.loss).collect();
        assert!(losses.last().unwrap() < losses.first().unwrap());
    }

    #[test]
    fn numerical_breakdown_returns_the_last_finite_parameters() {
        let dag = toy_dag(4);
        let cfg = small_cfg();
        let dim = 8;
        // Peek at the deterministic initialization to build feature rows that
        // are guaranteed to overflow the first projection column to infinity,
        // which turns the normalized refiner stage into NaN on epoch one.
        let meta = PropMeta::from_config(Branch::Mfo, dim, 2, &cfg);
        let probe = PropModel::init(meta, cfg.seed).unwrap();
        let w_embed = &probe.params[0].value;
        let signs: Vec<f64> = (0..dim).map(|k| w_embed[k * cfg.d3].signum()).collect();
        let magnitude: f64 = (0..dim).map(|k| w_embed[k * cfg.d3].abs()).sum();
        assert_eq!(1e308 * magnitude, f64::INFINITY, "scenario precondition");

        let ids: Vec<String> = (0..6).map(|i| format!("r{i}")).collect();
        let mut features = FeatureTable::new(dim).unwrap();
        for id in &ids {
            let row: Vec<f64> = signs.iter().map(|&s| s * 1e308).collect();
            features.insert(id.clone(), row).unwrap();
        }
        let ppi = PpiEdgeList::from_edges(vec![(ids[0].clone(), ids[1].clone(), 0.9)]);
        let net = HeteroNetwork::new(&ids, &ppi, &SimilarityEdgeList::from_edges(vec![])).unwrap();
        let annotations: Vec<(String, String)> = ids
            .iter()
            .map(|id| (id.clone(), term_id(0)))
            .collect();
        let labels = LabelMatrix::from_annotations(&dag, Branch::Mfo, &annotations).unwrap();
        assert_eq!(labels.n_terms(), 2, "scenario precondition");
        let (model, report) = prop_train(&net, &features, &labels, None, &cfg).unwrap();
        assert!(report.halted);
        assert!(report.epochs.is_empty());
        let fresh = PropModel::init(model.meta.clone(), cfg.seed).unwrap();
        assert_eq!(model.to_bytes(), fresh.to_bytes());
    }

    #[test]
    fn epoch_log_renders_as_csv() {
        let report = PropTrainReport {
            epochs: vec![
                PropEpoch {
                    epoch: 1,
                    loss: 12.5,
                    val_fmax: Some(0.25),
                },
                PropEpoch {
                    epoch: 2,
                    loss: 10.0625,
                    val_fmax: None,
                },
            ],
            halted: false,
        };
        let csv = report.to_csv();
        assert_eq!(
            csv,
            "epoch,loss,val_fmax\n1,12.500000,0.250000\n2,10.062500,\n"
        );
    }

    #[test]
    fn zero_epochs_returns_the_initial_model() {
        let task = cluster_task(12, 4, 8, 9);
        let mut cfg = small_cfg();
        cfg.epochs = 0;
        let (model, report) = prop_train(&task.net, &task.features, &task.labels, None, &cfg).unwrap();
        assert!(report.epochs.is_empty());
        assert!(!report.halted);
        let fresh = PropModel::init(model.meta.clone(), cfg.seed).unwrap();
        assert_eq!(model.to_bytes(), fresh.to_bytes());
    }

    #[test]
    fn training_requires_a_labeled_network_protein() {
        let dag = toy_dag(2);
        let ids = vec!["a".to_string(), "b".to_string()];
        let mut features = FeatureTable::new(2).unwrap();
        features.insert("a".into(), vec![0.1, 0.2]).unwrap();
        features.insert("b".into(), vec![0.3, 0.4]).unwrap();
        let net = HeteroNetwork::new(
            &ids,
            &PpiEdgeList::from_edges(vec![]),
            &SimilarityEdgeList::from_edges(vec![]),
        )
        .unwrap();
        let labels = LabelMatrix::from_annotations(
            &dag,
            Branch::Mfo,
            &[("zzz".to_string(), term_id(0))],
        )
        .unwrap();
        let err = prop_train(&net, &features, &labels, None, &small_cfg()).unwrap_err();
        assert!(err.to_string().contains("no network protein"), "{err}");
    }

    #[test]
    fn mismatched_validation_branch_is_rejected() {
        let task = cluster_task(12, 4, 8, 15);
        let bp_dag = GoDag::parse_obo(
            "[Term]\nid: GO:0100001\nname: broot\nnamespace: biological_process\n\n",
        )
        .unwrap();
        let val = LabelMatrix::from_annotations(
            &bp_dag,
            Branch::Bpo,
            &[("q0001".to_string(), "GO:0100001".to_string())],
        )
        .unwrap();
        let err =
            prop_train(&task.net, &task.features, &task.labels, Some(&val), &small_cfg()).unwrap_err();
        assert!(err.to_string().contains("validation labels"), "{err}");
    }
}
