//! End-to-end orchestration: dataset loading, per-stage composition, and the
//! one-call run that turns a dataset directory into scored predictions and a
//! metrics report.
//!
//! Every stage is a pure function over in-memory types so the command-line
//! frontend and the test suites share exactly the same code paths. Stages
//! are deterministic: all randomness flows from the seeds stored in
//! [`PipelineConfig`], and per-protein work never depends on protein order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::contact::{build_contact_map, ContactGraph};
use crate::error::{Error, Result};
use crate::ingest::{
    parse_annotations, parse_coords, parse_fasta, parse_ppi_tsv, parse_similarity_tsv,
    temporal_split, toy_sequence_features, AnnotationRecord, CoordinateRecord, DatasetSplit,
    FeatureTable, FixtureBundle, PpiEdgeList, SequenceRecord, SimilarityEdgeList,
};
use crate::metrics::{aupr, fmax, smin, weighted_aupr, weighted_fmax, EvalInput};
use crate::node2vec::{
    generate_walks, residue_features, train_skipgram, EmbeddingConfig, WalkConfig,
};
use crate::ontology::{compute_ic, Branch, GoDag, LabelMatrix};
use crate::prediction::{
    predict, FusionConfig, PredictConfig, Prediction, DEFAULT_LABEL_LAYERS,
};
use crate::propagation::{
    concat_features, prop_train, HeteroNetwork, PropConfig, PropModel, PropTrainReport,
};
use crate::structure::{
    extract_hidden, struct_train, GraphInput, StructConfig, StructItem, StructModel, TrainReport,
};

/// Contact distance used when none is configured, in Ångström.
pub const DEFAULT_CONTACT_THRESHOLD: f64 = 10.0;

/// Which parts of the full model to switch off for controlled comparisons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Ablation {
    /// Drop structural features entirely; the network model sees sequence
    /// features only.
    pub skip_structure: bool,
    /// Keep residue embeddings but replace the trained structural encoder
    /// with a plain mean over each protein's residue features.
    pub skip_structure_model: bool,
    /// Train the network model with zero propagation layers and skip label
    /// diffusion at prediction time.
    pub skip_propagation: bool,
    /// Keep the trained network model but skip label diffusion at
    /// prediction time (the fusion weight becomes 1).
    pub skip_label_diffusion: bool,
}

/// Everything a full run needs: the ontology branch, per-stage
/// hyper-parameters, fusion weights, and the ablation switches.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub branch: Branch,
    /// Cα distance below which two residues are connected, in Ångström.
    pub contact_threshold: f64,
    /// Width of the hashed k-mer sequence features.
    pub sequence_dim: usize,
    pub walk: WalkConfig,
    pub embedding: EmbeddingConfig,
    pub structural: StructConfig,
    pub propagation: PropConfig,
    pub fusion: FusionConfig,
    /// Diffusion depth at prediction time.
    pub label_layers: usize,
    pub ablation: Ablation,
}

/// Splitmix-style hash: maps (master seed, stage) to an independent stream.
fn stream_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl PipelineConfig {
    /// Full-scale defaults for the given branch.
    pub fn new(branch: Branch) -> PipelineConfig {
        PipelineConfig {
            branch,
            contact_threshold: DEFAULT_CONTACT_THRESHOLD,
            sequence_dim: 1280,
            walk: WalkConfig::default(),
            embedding: EmbeddingConfig::default(),
            structural: StructConfig::default(),
            propagation: PropConfig::default(),
            fusion: FusionConfig::default(),
            label_layers: DEFAULT_LABEL_LAYERS,
            ablation: Ablation::default(),
        }
    }

    /// A minutes-scale preset: the same architecture at small widths and
    /// short schedules, sized for synthetic datasets of a few hundred
    /// proteins.
    pub fn quick(branch: Branch, seed: u64) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(branch);
        cfg.sequence_dim = 48;
        cfg.walk.walk_length = 12;
        cfg.walk.walks_per_node = 4;
        cfg.embedding.dim = 16;
        cfg.embedding.window = 3;
        cfg.embedding.negatives = 3;
        cfg.embedding.epochs = 2;
        cfg.structural.d2 = 24;
        cfg.structural.conv_layers = 2;
        cfg.structural.modules = 2;
        cfg.structural.dropout = 0.1;
        cfg.structural.learning_rate = 1e-3;
        cfg.structural.epochs = 8;
        cfg.structural.batch_size = 16;
        cfg.propagation.d3 = 48;
        cfg.propagation.dropout = 0.1;
        cfg.propagation.learning_rate = 5e-3;
        cfg.propagation.epochs = 25;
        cfg.with_master_seed(seed)
    }

    /// Derive independent per-stage seeds from one master seed.
    pub fn with_master_seed(mut self, seed: u64) -> PipelineConfig {
        self.walk.seed = stream_seed(seed, 1);
        self.embedding.seed = stream_seed(seed, 2);
        self.structural.seed = stream_seed(seed, 3);
        self.propagation.seed = stream_seed(seed, 4);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contact_threshold > 0.0 && self.contact_threshold.is_finite()) {
            return Err(Error::Config(format!(
                "contact threshold must be positive and finite, got {}",
                self.contact_threshold
            )));
        }
        if self.sequence_dim == 0 {
            return Err(Error::Config(
                "sequence feature width must be at least 1".into(),
            ));
        }
        self.walk.validate()?;
        self.embedding.validate()?;
        self.structural.validate()?;
        self.propagation.validate()?;
        self.fusion.validate()?;
        Ok(())
    }
}

/// One dataset in memory: ontology, sequences, structures, networks,
/// annotations, and the temporal train/validation/test split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dag: GoDag,
    pub sequences: Vec<SequenceRecord>,
    pub coords: Vec<CoordinateRecord>,
    pub ppi: PpiEdgeList,
    pub homology: SimilarityEdgeList,
    pub annotations: Vec<AnnotationRecord>,
    pub split: DatasetSplit,
}

impl Dataset {
    /// Adopt an in-memory synthetic bundle.
    pub fn from_bundle(bundle: &FixtureBundle) -> Result<Dataset> {
        let dag = GoDag::parse_obo(&bundle.obo_text)?;
        let split = bundle.split()?;
        Ok(Dataset {
            dag,
            sequences: bundle.sequences.clone(),
            coords: bundle.coords.clone(),
            ppi: bundle.ppi.clone(),
            homology: bundle.homology.clone(),
            annotations: bundle.annotations.clone(),
            split,
        })
    }

    /// Load a dataset directory: `ontology.obo`, `sequences.fasta`,
    /// `annotations.tsv`, `ppi.tsv`, `homology.tsv`, `split-dates.txt`
    /// (three ISO dates, one per line), and per-protein coordinate files
    /// under `coords/`. Coordinate files without a matching sequence are
    /// skipped with a warning; proteins without coordinates fall back to
    /// zero structural features downstream.
    pub fn load_dir(dir: &Path) -> Result<Dataset> {
        let read = |name: &str| -> Result<String> {
            let path = dir.join(name);
            std::fs::read_to_string(&path)
                .map_err(|e| Error::Format(format!("reading {}: {e}", path.display())))
        };

        let dag = GoDag::parse_obo(&read("ontology.obo")?)?;
        let mut sequences = parse_fasta(&read("sequences.fasta")?)?;
        sequences.sort_by(|a, b| a.id.cmp(&b.id));
        let annotations = parse_annotations(&read("annotations.tsv")?)?;
        let ppi = parse_ppi_tsv(&read("ppi.tsv")?)?;
        let homology = parse_similarity_tsv(&read("homology.tsv")?)?;

        let dates_text = read("split-dates.txt")?;
        let dates: Vec<NaiveDate> = dates_text
            .lines()
            .enumerate()
            .filter(|(_, line)| !line.trim().is_empty())
            .map(|(i, line)| {
                line.trim().parse::<NaiveDate>().map_err(|e| {
                    Error::parse(i + 1, format!("bad split date {:?}: {e}", line.trim()))
                })
            })
            .collect::<Result<_>>()?;
        if dates.len() != 3 {
            return Err(Error::Format(format!(
                "split-dates.txt must hold exactly 3 dates, found {}",
                dates.len()
            )));
        }
        let split = temporal_split(&annotations, dates[0], dates[1], dates[2])?;

        let known: BTreeSet<&str> = sequences.iter().map(|s| s.id.as_str()).collect();
        let coord_dir = dir.join("coords");
        let mut coords = Vec::new();
        if coord_dir.is_dir() {
            let mut paths: Vec<std::path::PathBuf> = std::fs::read_dir(&coord_dir)?
                .map(|entry| entry.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            paths.sort();
            for path in paths {
                if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                    continue;
                }
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                if !known.contains(id.as_str()) {
                    log::warn!(
                        "coordinate file {} has no matching sequence; skipped",
                        path.display()
                    );
                    continue;
                }
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Format(format!("reading {}: {e}", path.display())))?;
                let record = parse_coords(&id, &text)
                    .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
                coords.push(record);
            }
        } else {
            log::warn!(
                "no coords/ directory under {}; structural features unavailable",
                dir.display()
            );
        }
        coords.sort_by(|a, b| a.id.cmp(&b.id));

        Ok(Dataset {
            dag,
            sequences,
            coords,
            ppi,
            homology,
            annotations,
            split,
        })
    }
}

/// Per-split label matrices over one shared training vocabulary.
#[derive(Debug, Clone)]
pub struct LabelSets {
    /// Training annotations; its term list is the run's vocabulary.
    pub train: LabelMatrix,
    /// Validation annotations in their own vocabulary (the network trainer
    /// restricts them to the training vocabulary internally).
    pub valid: Option<LabelMatrix>,
    /// Held-out truth, restricted to the training vocabulary.
    pub test_truth: LabelMatrix,
}

/// Build the train/validation/test label matrices for one branch. The
/// training vocabulary is whatever terms the training annotations reach
/// after ancestor closure; held-out truth is evaluated on that vocabulary.
pub fn label_stage(dataset: &Dataset, branch: Branch) -> Result<LabelSets> {
    let split = &dataset.split;
    if split.train.is_empty() {
        return Err(Error::Config("the dataset split has no training proteins".into()));
    }
    if split.test.is_empty() {
        return Err(Error::Config("the dataset split holds out no test proteins".into()));
    }

    let pairs_for = |ids: &[String]| -> Vec<(String, String)> {
        let wanted: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        dataset
            .annotations
            .iter()
            .filter(|a| wanted.contains(a.protein.as_str()))
            .map(|a| (a.protein.clone(), a.term.clone()))
            .collect()
    };

    let train = LabelMatrix::from_annotations_with_proteins(
        &dataset.dag,
        branch,
        &pairs_for(&split.train),
        &split.train,
    )?;
    if train.n_terms() == 0 {
        return Err(Error::Config(format!(
            "training annotations contain no {branch} terms"
        )));
    }
    let valid = if split.valid.is_empty() {
        None
    } else {
        Some(LabelMatrix::from_annotations_with_proteins(
            &dataset.dag,
            branch,
            &pairs_for(&split.valid),
            &split.valid,
        )?)
    };
    let test_truth = LabelMatrix::from_annotations_with_proteins(
        &dataset.dag,
        branch,
        &pairs_for(&split.test),
        &split.test,
    )?
    .restrict_to_terms(train.terms())?;

    Ok(LabelSets {
        train,
        valid,
        test_truth,
    })
}

/// Build one contact graph per coordinate record, in parallel.
pub fn contact_stage(
    coords: &[CoordinateRecord],
    threshold: f64,
) -> Result<Vec<(String, ContactGraph)>> {
    coords
        .par_iter()
        .map(|record| {
            build_contact_map(record, threshold)
                .map(|graph| (record.id.clone(), graph))
                .map_err(|e| Error::Format(format!("contact map for {}: {e}", record.id)))
        })
        .collect()
}

/// Random-walk residue embeddings plus one-hot letters for every protein.
/// Proteins without a contact graph get `graph: None` (their structural
/// features fall back to zero downstream). Every protein runs with the same
/// configuration, so results are independent of protein order.
pub fn embed_stage(
    sequences: &[SequenceRecord],
    graphs: &[(String, ContactGraph)],
    walk: &WalkConfig,
    embedding: &EmbeddingConfig,
) -> Result<Vec<StructItem>> {
    walk.validate()?;
    embedding.validate()?;
    let by_id: BTreeMap<&str, &ContactGraph> =
        graphs.iter().map(|(id, g)| (id.as_str(), g)).collect();

    let items: Vec<StructItem> = sequences
        .par_iter()
        .map(|record| -> Result<StructItem> {
            let Some(graph) = by_id.get(record.id.as_str()) else {
                return Ok(StructItem {
                    id: record.id.clone(),
                    graph: None,
                });
            };
            let walks = generate_walks(graph, walk)?;
            let embeddings = train_skipgram(&walks, graph.n(), embedding)?;
            let features = residue_features(&embeddings, graph.letters())?;
            let input = GraphInput::new(graph.n(), graph.edges().to_vec(), features)?;
            Ok(StructItem {
                id: record.id.clone(),
                graph: Some(input),
            })
        })
        .collect::<Result<_>>()?;

    let missing = items.iter().filter(|item| item.graph.is_none()).count();
    if missing > 0 {
        log::warn!("{missing} protein(s) have no structure; they fall back to zero structural features");
    }
    Ok(items)
}

/// Replace the trained structural encoder with a plain mean over each
/// protein's residue features; proteins without structures get zero rows.
pub fn mean_residue_features(items: &[StructItem]) -> Result<FeatureTable> {
    let width = items
        .iter()
        .find_map(|item| item.graph.as_ref().map(|g| g.features.cols()))
        .ok_or_else(|| {
            Error::Config("no structures available to size residue features".into())
        })?;
    let mut table = FeatureTable::new(width)?;
    for item in items {
        let row = match &item.graph {
            Some(graph) => {
                let n = graph.features.rows();
                let mut acc = vec![0.0; width];
                for r in 0..n {
                    for (slot, value) in acc.iter_mut().zip(graph.features.row(r)) {
                        *slot += value;
                    }
                }
                for slot in &mut acc {
                    *slot /= n as f64;
                }
                acc
            }
            None => vec![0.0; width],
        };
        table.insert(item.id.clone(), row)?;
    }
    Ok(table)
}

/// Trained structural encoder plus the per-protein features it extracts.
#[derive(Debug, Clone)]
pub struct StructStage {
    pub model: StructModel,
    pub report: TrainReport,
    /// Encoder output for every item, zero rows for missing structures.
    pub features: FeatureTable,
}

/// Train the structural encoder on the items that have training labels,
/// then extract features for every item.
pub fn structure_stage(
    items: &[StructItem],
    train_labels: &LabelMatrix,
    cfg: &StructConfig,
) -> Result<StructStage> {
    let train_items: Vec<StructItem> = items
        .iter()
        .filter(|item| train_labels.protein_row(&item.id).is_some())
        .cloned()
        .collect();
    if train_items.is_empty() {
        return Err(Error::Config(
            "no proteins with both structures and training labels".into(),
        ));
    }
    let (model, report) = struct_train(&train_items, train_labels, cfg)?;
    let features = extract_hidden(items, &model)?;
    Ok(StructStage {
        model,
        report,
        features,
    })
}

/// The features the network model consumes, with any structural artifacts.
#[derive(Debug, Clone)]
pub struct FeatureStage {
    /// Per-protein input features (sequence, structural, or both).
    pub features: FeatureTable,
    /// Trained encoder artifacts; `None` under the structure ablations.
    pub structural: Option<StructStage>,
}

/// Produce the fused per-protein features for one run, honoring the
/// ablation switches: sequence features always, structural features unless
/// skipped, from the trained encoder unless it is replaced by mean residue
/// features.
pub fn feature_stage(
    dataset: &Dataset,
    train_labels: &LabelMatrix,
    cfg: &PipelineConfig,
) -> Result<FeatureStage> {
    let sequence = toy_sequence_features(&dataset.sequences, cfg.sequence_dim)?;
    if cfg.ablation.skip_structure {
        return Ok(FeatureStage {
            features: concat_features(Some(&sequence), None)?,
            structural: None,
        });
    }

    let graphs = contact_stage(&dataset.coords, cfg.contact_threshold)?;
    let items = embed_stage(&dataset.sequences, &graphs, &cfg.walk, &cfg.embedding)?;

    if cfg.ablation.skip_structure_model {
        let structural = mean_residue_features(&items)?;
        return Ok(FeatureStage {
            features: concat_features(Some(&sequence), Some(&structural))?,
            structural: None,
        });
    }

    let stage = structure_stage(&items, train_labels, &cfg.structural)?;
    let features = concat_features(Some(&sequence), Some(&stage.features))?;
    Ok(FeatureStage {
        features,
        structural: Some(stage),
    })
}

/// The trained network model with the network it was trained on.
#[derive(Debug, Clone)]
pub struct NetworkStage {
    pub network: HeteroNetwork,
    pub model: PropModel,
    pub report: PropTrainReport,
}

/// Build the heterogeneous network over every featured protein and train
/// the propagation model. The propagation-free ablation trains the same
/// architecture with zero propagation layers.
pub fn network_stage(
    dataset: &Dataset,
    features: &FeatureTable,
    labels: &LabelSets,
    cfg: &PipelineConfig,
) -> Result<NetworkStage> {
    let ids: Vec<String> = features.ids().map(String::from).collect();
    let network = HeteroNetwork::new(&ids, &dataset.ppi, &dataset.homology)?;
    let mut prop_cfg = cfg.propagation.clone();
    if cfg.ablation.skip_propagation {
        prop_cfg.layers = 0;
    }
    let (model, report) = prop_train(
        &network,
        features,
        &labels.train,
        labels.valid.as_ref(),
        &prop_cfg,
    )?;
    Ok(NetworkStage {
        network,
        model,
        report,
    })
}

/// Score the requested proteins, honoring the ablation switches: label
/// diffusion is skipped (fusion weight 1) when either the label-diffusion
/// or the propagation ablation is active.
pub fn predict_stage(
    model: &PropModel,
    net: &HeteroNetwork,
    features: &FeatureTable,
    train_labels: &LabelMatrix,
    test_ids: &[String],
    cfg: &PipelineConfig,
) -> Result<Prediction> {
    let phi = if cfg.ablation.skip_label_diffusion || cfg.ablation.skip_propagation {
        1.0
    } else {
        cfg.fusion.phi(cfg.branch)
    };
    let predict_cfg = PredictConfig {
        phi,
        label_layers: cfg.label_layers,
    };
    predict(model, net, features, train_labels, test_ids, &predict_cfg)
}

/// Threshold-swept evaluation results for one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub branch: Branch,
    pub fmax: f64,
    pub fmax_tau: f64,
    pub smin: f64,
    pub smin_tau: f64,
    pub aupr: f64,
    pub weighted_fmax: f64,
    pub weighted_fmax_tau: f64,
    pub weighted_aupr: f64,
}

impl MetricsReport {
    /// One header line plus five metric rows: branch, metric, value, and the
    /// maximizing/minimizing threshold where one exists.
    pub fn to_tsv_string(&self) -> String {
        let mut out = String::from("branch\tmetric\tvalue\ttau\n");
        let branch = self.branch.code();
        out.push_str(&format!(
            "{branch}\tfmax\t{:.6}\t{:.6}\n",
            self.fmax, self.fmax_tau
        ));
        out.push_str(&format!(
            "{branch}\tsmin\t{:.6}\t{:.6}\n",
            self.smin, self.smin_tau
        ));
        out.push_str(&format!("{branch}\taupr\t{:.6}\t\n", self.aupr));
        out.push_str(&format!(
            "{branch}\tweighted-fmax\t{:.6}\t{:.6}\n",
            self.weighted_fmax, self.weighted_fmax_tau
        ));
        out.push_str(&format!(
            "{branch}\tweighted-aupr\t{:.6}\t\n",
            self.weighted_aupr
        ));
        out
    }
}

/// Truth rows for exactly the proteins in the prediction, in its row order.
pub fn truth_rows_for(prediction: &Prediction, truth: &LabelMatrix) -> Result<DenseMatrixAlias> {
    let c = truth.n_terms();
    let mut dense = crate::numeric::DenseMatrix::zeros(prediction.ids().len(), c);
    for (r, id) in prediction.ids().iter().enumerate() {
        let row = truth.protein_row(id).ok_or_else(|| {
            Error::Alignment(format!("no held-out truth row for predicted protein {id}"))
        })?;
        for t in 0..c {
            if truth.get(row, t) {
                dense.set(r, t, 1.0);
            }
        }
    }
    Ok(dense)
}

type DenseMatrixAlias = crate::numeric::DenseMatrix;

/// Evaluate a prediction against held-out truth. Information-content
/// weights come from the training labels, mirroring how term rarity would
/// be estimated in practice.
pub fn eval_stage(
    prediction: &Prediction,
    truth: &LabelMatrix,
    train: &LabelMatrix,
) -> Result<MetricsReport> {
    if prediction.terms() != truth.terms() {
        return Err(Error::Alignment(
            "prediction and truth use different term vocabularies".into(),
        ));
    }
    let truth_dense = truth_rows_for(prediction, truth)?;
    let ic = compute_ic(train)?;
    let eval = EvalInput::new(prediction.scores(), &truth_dense, prediction.terms(), Some(&ic))?;
    let (fmax_value, fmax_tau) = fmax(&eval)?;
    let (smin_value, smin_tau) = smin(&eval)?;
    let aupr_value = aupr(&eval)?;
    let (weighted_fmax_value, weighted_fmax_tau) = weighted_fmax(&eval)?;
    let weighted_aupr_value = weighted_aupr(&eval)?;
    Ok(MetricsReport {
        branch: truth.branch(),
        fmax: fmax_value,
        fmax_tau,
        smin: smin_value,
        smin_tau,
        aupr: aupr_value,
        weighted_fmax: weighted_fmax_value,
        weighted_fmax_tau,
        weighted_aupr: weighted_aupr_value,
    })
}

/// Everything a full run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub labels: LabelSets,
    pub features: FeatureStage,
    pub network: NetworkStage,
    pub prediction: Prediction,
    pub metrics: MetricsReport,
}

/// Run the whole pipeline on one dataset: labels, features, network
/// training, prediction on the held-out proteins, and evaluation.
pub fn run_end_to_end(dataset: &Dataset, cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let labels = label_stage(dataset, cfg.branch)?;
    let features = feature_stage(dataset, &labels.train, cfg)?;
    let network = network_stage(dataset, &features.features, &labels, cfg)?;
    let test_ids: Vec<String> = labels.test_truth.proteins().to_vec();
    let prediction = predict_stage(
        &network.model,
        &network.network,
        &features.features,
        &labels.train,
        &test_ids,
        cfg,
    )?;
    let metrics = eval_stage(&prediction, &labels.test_truth, &labels.train)?;
    Ok(PipelineOutcome {
        labels,
        features,
        network,
        prediction,
        metrics,
    })
}
