//! One function per subcommand. Every command reads its inputs, does its
//! work through the library stages, and writes artifacts atomically; the
//! caller turns errors into a nonzero exit.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gopred_core::ingest::{
    load_feature_table, synth_fixture, toy_sequence_features, FeatureTable, FixtureConfig,
};
use gopred_core::metrics::{pr_curve, EvalInput};
use gopred_core::node2vec::{generate_walks, residue_features, train_skipgram};
use gopred_core::ontology::{compute_ic, Branch};
use gopred_core::pipeline::{
    contact_stage, eval_stage, label_stage, mean_residue_features, network_stage, predict_stage,
    truth_rows_for, Dataset, PipelineConfig,
};
use gopred_core::prediction::{Prediction, DEFAULT_SCORE_THRESHOLD};
use gopred_core::propagation::{concat_features, HeteroNetwork, PropModel};
use gopred_core::structure::{extract_hidden, struct_train, GraphInput, StructItem, StructModel};
use rayon::prelude::*;

use crate::cli::{AblationFlags, CommonArgs, FixtureArgs};
use crate::config::{Preset, Settings};
use crate::stores::{
    contact_from_str, contact_to_string, matrix_from_str, matrix_to_string, read_bytes, read_text,
    scores_from_str, scores_to_string, write_atomic, WorkDir,
};

/// Master seed used when neither a flag nor a config key provides one.
pub const DEFAULT_MASTER_SEED: u64 = 42;

/// Resolved shared state for one subcommand invocation.
pub struct Ctx {
    pub data: PathBuf,
    pub work: WorkDir,
    pub settings: Settings,
    pub seed: u64,
    pub preset: Preset,
}

impl Ctx {
    pub fn new(common: &CommonArgs) -> Result<Ctx> {
        let settings = match &common.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let seed = common
            .seed
            .or(settings.seed()?)
            .unwrap_or(DEFAULT_MASTER_SEED);
        let preset = common
            .preset
            .map(Into::into)
            .or(settings.preset()?)
            .unwrap_or(Preset::Paper);
        Ok(Ctx {
            data: common.data.clone(),
            work: WorkDir::new(&common.work),
            settings,
            seed,
            preset,
        })
    }

    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::load_dir(&self.data)
            .with_context(|| format!("loading dataset directory {}", self.data.display()))
    }

    /// Assemble the effective configuration for one branch: preset
    /// defaults, then config-file keys, then command-line flags.
    pub fn config(&self, branch: Branch, ablation: Option<&AblationFlags>) -> Result<PipelineConfig> {
        let mut cfg = self.preset.build(branch, self.seed);
        self.settings.apply(&mut cfg)?;
        self.settings.warn_outside_search_ranges();
        if let Some(flags) = ablation {
            if flags.no_struct {
                cfg.ablation.skip_structure = true;
            }
            if flags.no_struct_model {
                cfg.ablation.skip_structure_model = true;
            }
            if flags.no_propagation {
                cfg.ablation.skip_propagation = true;
            }
            if flags.no_label_prop {
                cfg.ablation.skip_label_diffusion = true;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Which branches this invocation covers: `--all-branches`, an explicit
    /// `--branch`, or the config file's `branch` key, in that order.
    pub fn branches(&self, branch: Option<&str>, all: bool) -> Result<Vec<Branch>> {
        if all {
            return Ok(Branch::ALL.to_vec());
        }
        if let Some(raw) = branch {
            return Ok(vec![Branch::parse(raw)?]);
        }
        if let Some(b) = self.settings.branch()? {
            return Ok(vec![b]);
        }
        bail!("no branch selected: pass --branch, --all-branches, or a config file with branch=")
    }
}

/// Generate a synthetic dataset directory with planted signal, plus a
/// manifest describing what was planted. The directory is assembled in a
/// temp sibling and renamed into place, so a failed run leaves nothing
/// behind.
pub fn cmd_fixture(args: &FixtureArgs) -> Result<()> {
    let settings = match &args.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let mut cfg = FixtureConfig::default();
    if let Some(seed) = args.seed.or(settings.seed()?) {
        cfg.seed = seed;
    }
    if let Some(n) = args.species {
        cfg.species = n;
    }
    if let Some(n) = args.proteins_per_species {
        cfg.proteins_per_species = n;
    }
    if let Some(n) = args.labels {
        cfg.labels = n;
    }
    if let Some(n) = args.min_residues {
        cfg.min_residues = n;
    }
    if let Some(n) = args.max_residues {
        cfg.max_residues = n;
    }

    let bundle = synth_fixture(&cfg)?;

    let out = &args.out;
    if out.exists() {
        let occupied = out.is_file() || out.read_dir().map(|mut d| d.next().is_some())?;
        if occupied {
            bail!("output path {} already exists and is not empty", out.display());
        }
        std::fs::remove_dir(out)?;
    }
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = out.with_file_name(format!(
        ".{}.tmp-{}",
        out.file_name().map(|n| n.to_string_lossy()).unwrap_or_default(),
        std::process::id()
    ));
    bundle.write_to_dir(&tmp)?;
    std::fs::write(tmp.join("manifest.txt"), manifest_text(&cfg))?;
    std::fs::rename(&tmp, out)
        .with_context(|| format!("renaming {} into place", out.display()))?;

    println!(
        "wrote synthetic dataset: {} species x {} proteins, {} ontology terms, seed {} -> {}",
        cfg.species,
        cfg.proteins_per_species,
        cfg.labels,
        cfg.seed,
        out.display()
    );
    Ok(())
}

fn manifest_text(cfg: &FixtureConfig) -> String {
    format!(
        "synthetic dataset manifest\n\
         seed = {seed}\n\
         species = {species}\n\
         proteins-per-species = {per}\n\
         ontology-terms = {labels} ({branch})\n\
         residues-per-protein = {min}..={max}\n\
         \n\
         planted signal:\n\
         - function families drive sequence composition and within-species interaction blocks\n\
           (edge probability {pf} inside a family, {pn} elsewhere)\n\
         - fold classes drive backbone geometry: compact coil, flat sheet, or extended chain\n\
         - ortholog groups span species, share at least {share} of their closed label sets,\n\
           and are connected by cross-species similarity edges\n\
         - later species drift in sequence composition (shift fraction {shift})\n\
         - the last species is split by annotation date: {test} of it is held out for testing\n\
           and {valid} for validation; everything earlier trains\n\
         \n\
         files: ontology.obo, sequences.fasta, annotations.tsv, ppi.tsv, homology.tsv,\n\
         split-dates.txt, coords/<protein-id>.txt\n",
        seed = cfg.seed,
        species = cfg.species,
        per = cfg.proteins_per_species,
        labels = cfg.labels,
        branch = cfg.branch.code(),
        min = cfg.min_residues,
        max = cfg.max_residues,
        pf = cfg.ppi_within_family,
        pn = cfg.ppi_noise,
        share = cfg.ortholog_label_share,
        shift = cfg.species_shift,
        test = cfg.test_fraction,
        valid = cfg.valid_fraction,
    )
}

/// Build one contact graph per coordinate record and store the edge lists.
pub fn cmd_contact(ctx: &Ctx, threshold: Option<f64>) -> Result<()> {
    let dataset = ctx.dataset()?;
    let mut cfg = ctx.config(Branch::Mfo, None)?;
    if let Some(t) = threshold {
        cfg.contact_threshold = t;
    }
    if dataset.coords.is_empty() {
        bail!("dataset {} holds no coordinate files", ctx.data.display());
    }
    let graphs = contact_stage(&dataset.coords, cfg.contact_threshold)?;
    for (id, graph) in &graphs {
        write_atomic(
            &ctx.work.contact_file(id),
            contact_to_string(graph).as_bytes(),
        )?;
    }
    println!(
        "wrote {} contact graphs (threshold {} A) -> {}",
        graphs.len(),
        cfg.contact_threshold,
        ctx.work.contact_dir().display()
    );
    Ok(())
}

/// Random-walk residue embeddings plus one-hot letters for every protein
/// with a stored contact graph.
pub fn cmd_embed(ctx: &Ctx) -> Result<()> {
    let dataset = ctx.dataset()?;
    let cfg = ctx.config(Branch::Mfo, None)?;

    let jobs: Vec<(&str, PathBuf)> = dataset
        .sequences
        .iter()
        .map(|rec| (rec.id.as_str(), ctx.work.contact_file(&rec.id)))
        .filter(|(_, path)| path.is_file())
        .collect();
    if jobs.is_empty() {
        bail!(
            "no stored contact graphs under {}; run the contact step first",
            ctx.work.contact_dir().display()
        );
    }

    let written: usize = jobs
        .par_iter()
        .map(|(id, path)| -> Result<usize> {
            let graph = contact_from_str(&read_text(path)?)
                .with_context(|| format!("contact file {}", path.display()))?;
            let walks = generate_walks(&graph, &cfg.walk)?;
            let embeddings = train_skipgram(&walks, graph.n(), &cfg.embedding)?;
            let features = residue_features(&embeddings, graph.letters())?;
            write_atomic(
                &ctx.work.residue_file(id),
                matrix_to_string(&features).as_bytes(),
            )?;
            Ok(1)
        })
        .sum::<Result<usize>>()?;

    let skipped = dataset.sequences.len() - written;
    if skipped > 0 {
        log::warn!("{skipped} protein(s) have no contact graph; no residue features written");
    }
    println!(
        "wrote residue features for {} proteins (width {}) -> {}",
        written,
        cfg.embedding.dim + gopred_core::node2vec::ONE_HOT_WIDTH,
        ctx.work.residue_dir().display()
    );
    Ok(())
}

/// Load stored contact graphs and residue features into structural items,
/// one per sequence; proteins missing either artifact get no graph.
fn load_struct_items(ctx: &Ctx, dataset: &Dataset) -> Result<Vec<StructItem>> {
    let items = dataset
        .sequences
        .par_iter()
        .map(|rec| -> Result<StructItem> {
            let contact_path = ctx.work.contact_file(&rec.id);
            let residue_path = ctx.work.residue_file(&rec.id);
            if !contact_path.is_file() || !residue_path.is_file() {
                return Ok(StructItem {
                    id: rec.id.clone(),
                    graph: None,
                });
            }
            let graph = contact_from_str(&read_text(&contact_path)?)
                .with_context(|| format!("contact file {}", contact_path.display()))?;
            let features = matrix_from_str(&read_text(&residue_path)?)
                .with_context(|| format!("residue file {}", residue_path.display()))?;
            let input = GraphInput::new(graph.n(), graph.edges().to_vec(), features)
                .with_context(|| format!("assembling graph input for {}", rec.id))?;
            Ok(StructItem {
                id: rec.id.clone(),
                graph: Some(input),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let missing = items.iter().filter(|i| i.graph.is_none()).count();
    if missing > 0 {
        log::warn!("{missing} protein(s) lack stored structure artifacts; they fall back to zero structural features");
    }
    Ok(items)
}

/// Train the structural encoder for one branch on the training split.
pub fn cmd_train_struct(ctx: &Ctx, branch: Branch) -> Result<()> {
    let dataset = ctx.dataset()?;
    let cfg = ctx.config(branch, None)?;
    let labels = label_stage(&dataset, branch)?;
    let items = load_struct_items(ctx, &dataset)?;
    let train_items: Vec<StructItem> = items
        .into_iter()
        .filter(|item| labels.train.protein_row(&item.id).is_some())
        .collect();
    if train_items.iter().all(|i| i.graph.is_none()) {
        bail!("no training protein has stored structure artifacts; run contact and embed first");
    }
    let (model, report) = struct_train(&train_items, &labels.train, &cfg.structural)?;

    write_atomic(&ctx.work.struct_model(branch), &model.to_bytes())?;
    let mut csv = String::from("epoch,loss\n");
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        csv.push_str(&format!("{},{loss:.6}\n", i + 1));
    }
    write_atomic(&ctx.work.struct_log(branch), csv.as_bytes())?;

    let last = report.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "{branch}: trained structural encoder on {} proteins for {} epochs (final loss {last:.6}) -> {}",
        train_items.len(),
        report.epoch_losses.len(),
        ctx.work.struct_model(branch).display()
    );
    Ok(())
}

/// Extract per-protein structural features with a trained encoder.
pub fn cmd_extract(ctx: &Ctx, branch: Branch) -> Result<()> {
    let dataset = ctx.dataset()?;
    let model_path = ctx.work.struct_model(branch);
    let model = StructModel::from_bytes(&read_bytes(&model_path)?)
        .with_context(|| format!("loading checkpoint {}", model_path.display()))?;
    let items = load_struct_items(ctx, &dataset)?;
    let table = extract_hidden(&items, &model)?;
    write_atomic(
        &ctx.work.structural_features(branch),
        &table.to_binary_bytes(),
    )?;
    println!(
        "{branch}: extracted structural features for {} proteins (width {}) -> {}",
        items.len(),
        table.dim(),
        ctx.work.structural_features(branch).display()
    );
    Ok(())
}

/// The per-protein feature table a network run consumes: sequence features
/// (from a drop-in table or the built-in hashed fallback), concatenated
/// with structural features per the ablation switches.
fn assemble_features(
    ctx: &Ctx,
    dataset: &Dataset,
    branch: Branch,
    cfg: &PipelineConfig,
    sequence_features: Option<&Path>,
) -> Result<FeatureTable> {
    let sequence = match sequence_features {
        Some(path) => load_feature_table(&read_bytes(path)?)
            .with_context(|| format!("loading sequence feature table {}", path.display()))?,
        None => toy_sequence_features(&dataset.sequences, cfg.sequence_dim)?,
    };
    if cfg.ablation.skip_structure {
        return Ok(concat_features(Some(&sequence), None)?);
    }
    if cfg.ablation.skip_structure_model {
        let items = load_struct_items(ctx, dataset)?;
        let structural = mean_residue_features(&items)?;
        return Ok(concat_features(Some(&sequence), Some(&structural))?);
    }
    let path = ctx.work.structural_features(branch);
    if !path.is_file() {
        bail!(
            "no structural feature table at {}; run extract first (or pass --no-struct)",
            path.display()
        );
    }
    let structural = load_feature_table(&read_bytes(&path)?)
        .with_context(|| format!("loading structural feature table {}", path.display()))?;
    Ok(concat_features(Some(&sequence), Some(&structural))?)
}

/// Train the network propagation model for one branch.
pub fn cmd_train_prop(
    ctx: &Ctx,
    branch: Branch,
    ablation: &AblationFlags,
    sequence_features: Option<&Path>,
) -> Result<()> {
    let dataset = ctx.dataset()?;
    let cfg = ctx.config(branch, Some(ablation))?;
    let labels = label_stage(&dataset, branch)?;
    let features = assemble_features(ctx, &dataset, branch, &cfg, sequence_features)?;
    let stage = network_stage(&dataset, &features, &labels, &cfg)?;
    if stage.report.halted {
        log::warn!(
            "{branch}: training halted early on a numerical breakdown; the checkpoint holds the last finite epoch"
        );
    }

    write_atomic(&ctx.work.prop_model(branch), &stage.model.to_bytes())?;
    write_atomic(&ctx.work.prop_log(branch), stage.report.to_csv().as_bytes())?;

    let last = stage.report.epochs.last();
    println!(
        "{branch}: trained network model on {} proteins for {} epochs (final loss {}) -> {}",
        features.len(),
        stage.report.epochs.len(),
        last.map_or("n/a".to_string(), |e| format!("{:.6}", e.loss)),
        ctx.work.prop_model(branch).display()
    );
    Ok(())
}

/// Score the held-out proteins for one branch and store both the
/// thresholded prediction table and the dense score table.
pub fn cmd_predict(
    ctx: &Ctx,
    branch: Branch,
    ablation: &AblationFlags,
    sequence_features: Option<&Path>,
    phi: Option<f64>,
    score_threshold: Option<f64>,
) -> Result<()> {
    let dataset = ctx.dataset()?;
    let mut cfg = ctx.config(branch, Some(ablation))?;
    if let Some(phi) = phi {
        cfg.fusion = gopred_core::prediction::FusionConfig {
            bpo: phi,
            mfo: phi,
            cco: phi,
        };
        cfg.fusion.validate()?;
    }
    let threshold = match score_threshold {
        Some(t) => t,
        None => ctx
            .settings
            .score_threshold()?
            .unwrap_or(DEFAULT_SCORE_THRESHOLD),
    };
    if !(0.0..=1.0).contains(&threshold) {
        bail!("score threshold must lie in [0, 1], got {threshold}");
    }

    let labels = label_stage(&dataset, branch)?;
    let features = assemble_features(ctx, &dataset, branch, &cfg, sequence_features)?;
    let model_path = ctx.work.prop_model(branch);
    let model = PropModel::from_bytes(&read_bytes(&model_path)?)
        .with_context(|| format!("loading checkpoint {}", model_path.display()))?;
    let ids: Vec<String> = features.ids().map(String::from).collect();
    let network = HeteroNetwork::new(&ids, &dataset.ppi, &dataset.homology)?;
    let test_ids: Vec<String> = labels.test_truth.proteins().to_vec();
    let prediction = predict_stage(&model, &network, &features, &labels.train, &test_ids, &cfg)?;

    write_atomic(
        &ctx.work.predictions(branch),
        prediction.to_tsv_string(threshold).as_bytes(),
    )?;
    write_atomic(
        &ctx.work.scores(branch),
        scores_to_string(prediction.ids(), prediction.terms(), prediction.scores()).as_bytes(),
    )?;
    println!(
        "{branch}: scored {} held-out proteins over {} terms (threshold {threshold}) -> {}",
        prediction.ids().len(),
        prediction.terms().len(),
        ctx.work.predictions(branch).display()
    );
    Ok(())
}

/// Evaluate stored scores against the held-out truth for one branch.
pub fn cmd_eval(ctx: &Ctx, branch: Branch) -> Result<()> {
    let dataset = ctx.dataset()?;
    let labels = label_stage(&dataset, branch)?;
    let scores_path = ctx.work.scores(branch);
    if !scores_path.is_file() {
        bail!(
            "no score table at {}; run predict first",
            scores_path.display()
        );
    }
    let (ids, terms, scores) = scores_from_str(&read_text(&scores_path)?)
        .with_context(|| format!("score table {}", scores_path.display()))?;
    let prediction = Prediction::new(ids, terms, scores)?;
    let report = eval_stage(&prediction, &labels.test_truth, &labels.train)?;
    write_atomic(&ctx.work.metrics(branch), report.to_tsv_string().as_bytes())?;

    let truth = truth_rows_for(&prediction, &labels.test_truth)?;
    let ic = compute_ic(&labels.train)?;
    let eval = EvalInput::new(prediction.scores(), &truth, prediction.terms(), Some(&ic))?;
    let curve = pr_curve(&eval)?;
    write_atomic(&ctx.work.pr_curve(branch), curve.to_csv().as_bytes())?;

    print!("{}", report.to_tsv_string());
    Ok(())
}
