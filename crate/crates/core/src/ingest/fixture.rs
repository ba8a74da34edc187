//! Deterministic synthetic dataset generator.
//!
//! The generated bundle plants recoverable signal along two independent axes:
//! function families are encoded in sequence composition (with a per-species
//! composition shift so later species are out of distribution for a model
//! trained on the first), and fold classes are encoded purely in residue
//! geometry (compact lattice, flat sheet, extended chain) with identical
//! sequence statistics. Cross-species ortholog pairs share most planted
//! labels and are linked by similarity edges, so network propagation is the
//! intended route for signal to reach held-out species.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::ingest::{
    temporal_split, write_annotations, write_coords, write_fasta, AnnotationRecord,
    CoordinateRecord, DatasetSplit, PpiEdgeList, Residue, SequenceRecord, SimilarityEdgeList,
};
use crate::ontology::Branch;

const FAMILY_BLOCKS: [&[u8]; 3] = [b"ACDEF", b"GHIKL", b"MNPQR"];
const SHIFT_BLOCK: &[u8] = b"STVWY";

#[derive(Debug, Clone)]
pub struct FixtureConfig {
    pub seed: u64,
    pub species: usize,
    pub proteins_per_species: usize,
    /// Total number of ontology terms, including the root.
    pub labels: usize,
    pub branch: Branch,
    /// Minimum pairwise overlap (Jaccard over closed label sets) enforced
    /// within every ortholog group.
    pub ortholog_label_share: f64,
    pub min_residues: usize,
    pub max_residues: usize,
    /// Probability of an interaction edge between same-species proteins of
    /// the same function family.
    pub ppi_within_family: f64,
    /// Probability of an interaction edge between other same-species pairs.
    pub ppi_noise: f64,
    /// Fraction of sequence letters drawn from the shift block instead of
    /// the family block, scaled linearly up to the last species.
    pub species_shift: f64,
    /// Fractions of the last species assigned to test and validation; the
    /// remainder of that species (and all earlier species) trains.
    pub test_fraction: f64,
    pub valid_fraction: f64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            seed: 42,
            species: 2,
            proteins_per_species: 100,
            labels: 16,
            branch: Branch::Mfo,
            ortholog_label_share: 0.8,
            min_residues: 24,
            max_residues: 40,
            ppi_within_family: 0.35,
            ppi_noise: 0.02,
            species_shift: 0.35,
            test_fraction: 0.7,
            valid_fraction: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixtureBundle {
    pub obo_text: String,
    pub sequences: Vec<SequenceRecord>,
    pub coords: Vec<CoordinateRecord>,
    pub ppi: PpiEdgeList,
    pub homology: SimilarityEdgeList,
    pub annotations: Vec<AnnotationRecord>,
    pub train_cut: NaiveDate,
    pub valid_cut: NaiveDate,
    pub test_cut: NaiveDate,
}

impl FixtureBundle {
    pub fn split(&self) -> Result<DatasetSplit> {
        temporal_split(&self.annotations, self.train_cut, self.valid_cut, self.test_cut)
    }

    /// Write every part of the bundle under a directory: ontology.obo,
    /// sequences.fasta, annotations.tsv, ppi.tsv, homology.tsv, split
    /// cut dates, and one coordinate file per protein under coords/.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("ontology.obo"), &self.obo_text)?;
        std::fs::write(dir.join("sequences.fasta"), write_fasta(&self.sequences))?;
        std::fs::write(dir.join("annotations.tsv"), write_annotations(&self.annotations))?;
        std::fs::write(dir.join("ppi.tsv"), self.ppi.to_tsv_string())?;
        std::fs::write(dir.join("homology.tsv"), self.homology.to_tsv_string())?;
        std::fs::write(
            dir.join("split-dates.txt"),
            format!("{}\n{}\n{}\n", self.train_cut, self.valid_cut, self.test_cut),
        )?;
        let coord_dir = dir.join("coords");
        std::fs::create_dir_all(&coord_dir)?;
        for rec in &self.coords {
            std::fs::write(coord_dir.join(format!("{}.txt", rec.id)), write_coords(rec))?;
        }
        Ok(())
    }
}

/// Ontology layout: a root, function families with leaves underneath, and a
/// fold subtree whose classes map to residue geometries.
struct DagLayout {
    parents: Vec<Option<usize>>,
    names: Vec<String>,
    /// Leaf terms per function family.
    family_leaves: Vec<Vec<usize>>,
    /// Fold class terms (children of the fold parent).
    fold_classes: Vec<usize>,
    /// Deeper terms per fold class.
    fold_deep: Vec<Vec<usize>>,
}

fn term_id(idx: usize) -> String {
    format!("GO:{:07}", idx + 1)
}

fn build_dag(labels: usize) -> DagLayout {
    let mut parents: Vec<Option<usize>> = vec![None; labels];
    let mut names: Vec<String> = vec![String::new(); labels];
    names[0] = "root".to_string();

    let fold_terms = if labels >= 8 { (labels - 1) / 3 } else { 0 };
    let fun_terms = labels - 1 - fold_terms;
    let n_families = fun_terms.min(3);
    let mut family_leaves: Vec<Vec<usize>> = vec![Vec::new(); n_families];

    for f in 0..n_families {
        let idx = 1 + f;
        parents[idx] = Some(0);
        names[idx] = format!("family-{}", f + 1);
    }
    for (j, idx) in (1 + n_families..1 + fun_terms).enumerate() {
        let family = j % n_families;
        parents[idx] = Some(1 + family);
        names[idx] = format!("family-{}-leaf-{}", family + 1, family_leaves[family].len() + 1);
        family_leaves[family].push(idx);
    }

    let mut fold_classes = Vec::new();
    let mut fold_deep: Vec<Vec<usize>> = Vec::new();
    if fold_terms >= 2 {
        let fold_parent = 1 + fun_terms;
        parents[fold_parent] = Some(0);
        names[fold_parent] = "fold".to_string();
        let n_classes = (fold_terms - 1).min(3);
        for c in 0..n_classes {
            let idx = fold_parent + 1 + c;
            parents[idx] = Some(fold_parent);
            names[idx] = format!("fold-{}", c + 1);
            fold_classes.push(idx);
            fold_deep.push(Vec::new());
        }
        for (j, idx) in (fold_parent + 1 + n_classes..labels).enumerate() {
            let class = j % n_classes;
            parents[idx] = Some(fold_classes[class]);
            names[idx] = format!("fold-{}-sub-{}", class + 1, fold_deep[class].len() + 1);
            fold_deep[class].push(idx);
        }
    }

    DagLayout {
        parents,
        names,
        family_leaves,
        fold_classes,
        fold_deep,
    }
}

impl DagLayout {
    fn obo_text(&self, branch: Branch) -> String {
        let mut out = String::from("format-version: 1.2\n\n");
        for idx in 0..self.parents.len() {
            out.push_str("[Term]\n");
            out.push_str(&format!("id: {}\n", term_id(idx)));
            out.push_str(&format!("name: {}\n", self.names[idx]));
            out.push_str(&format!("namespace: {}\n", branch.namespace()));
            if let Some(p) = self.parents[idx] {
                out.push_str(&format!("is_a: {} ! {}\n", term_id(p), self.names[p]));
            }
            out.push('\n');
        }
        out
    }

    fn close(&self, planted: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut closed = BTreeSet::new();
        for &t in planted {
            let mut cur = Some(t);
            while let Some(idx) = cur {
                if !closed.insert(idx) {
                    break;
                }
                cur = self.parents[idx];
            }
        }
        closed
    }

    fn n_families(&self) -> usize {
        self.family_leaves.len()
    }

    fn all_function_leaves(&self) -> Vec<usize> {
        self.family_leaves.iter().flatten().copied().collect()
    }
}

fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    inter / union
}

fn protein_name(species: usize, group: usize) -> String {
    format!("SP{species}_P{group:04}")
}

/// Residue geometry per fold class: 0 compact lattice, 1 flat sheet,
/// 2 extended chain. Class count beyond 3 reuses styles cyclically.
fn make_coords(
    id: &str,
    sequence: &str,
    style: usize,
    rng: &mut ChaCha12Rng,
) -> CoordinateRecord {
    let n = sequence.len();
    let mut residues = Vec::with_capacity(n);
    let side_3d = (n as f64).cbrt().ceil() as usize;
    let side_2d = (n as f64).sqrt().ceil() as usize;
    for (i, aa) in sequence.chars().enumerate() {
        let (bx, by, bz) = match style % 3 {
            0 => {
                let x = i % side_3d;
                let y = (i / side_3d) % side_3d;
                let z = i / (side_3d * side_3d);
                (x as f64 * 5.5, y as f64 * 5.5, z as f64 * 5.5)
            }
            1 => {
                let x = i % side_2d;
                let y = i / side_2d;
                (x as f64 * 5.0, y as f64 * 5.0, 0.0)
            }
            _ => (i as f64 * 3.8, 0.0, 0.0),
        };
        residues.push(Residue {
            index: (i + 1) as u32,
            aa,
            x: bx + rng.gen_range(-0.5..0.5),
            y: by + rng.gen_range(-0.5..0.5),
            z: bz + rng.gen_range(-0.5..0.5),
        });
    }
    CoordinateRecord {
        id: id.to_string(),
        residues,
    }
}

fn make_sequence(
    family: usize,
    shift: f64,
    len: usize,
    rng: &mut ChaCha12Rng,
) -> String {
    let block = FAMILY_BLOCKS[family % FAMILY_BLOCKS.len()];
    let mut seq = String::with_capacity(len);
    for _ in 0..len {
        let source = if rng.gen::<f64>() < shift { SHIFT_BLOCK } else { block };
        seq.push(source[rng.gen_range(0..source.len())] as char);
    }
    seq
}

fn jittered_date(base: NaiveDate, spread_days: u64, rng: &mut ChaCha12Rng) -> NaiveDate {
    let offset = rng.gen_range(0..=2 * spread_days);
    if offset >= spread_days {
        base.checked_add_days(Days::new(offset - spread_days))
            .expect("date in range")
    } else {
        base.checked_sub_days(Days::new(spread_days - offset))
            .expect("date in range")
    }
}

/// Generate the full synthetic bundle. Identical configurations produce
/// byte-identical output.
pub fn synth_fixture(cfg: &FixtureConfig) -> Result<FixtureBundle> {
    if cfg.species == 0 || cfg.proteins_per_species == 0 || cfg.labels == 0 {
        return Err(Error::Config(
            "fixture needs at least one species, protein, and label".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.ortholog_label_share) {
        return Err(Error::Config("ortholog label share must lie in [0, 1]".into()));
    }
    if cfg.min_residues < 3 || cfg.max_residues < cfg.min_residues {
        return Err(Error::Config(
            "residue range must satisfy 3 <= min <= max".into(),
        ));
    }
    if cfg.test_fraction + cfg.valid_fraction > 1.0 {
        return Err(Error::Config("test and validation fractions exceed 1".into()));
    }

    let mut master = ChaCha12Rng::seed_from_u64(cfg.seed);
    let sub = |master: &mut ChaCha12Rng| ChaCha12Rng::seed_from_u64(master.gen());
    let mut label_rng = sub(&mut master);
    let mut seq_rng = sub(&mut master);
    let mut coord_rng = sub(&mut master);
    let mut ppi_rng = sub(&mut master);
    let mut hom_rng = sub(&mut master);
    let mut date_rng = sub(&mut master);

    let layout = build_dag(cfg.labels);
    let obo_text = layout.obo_text(cfg.branch);
    let n_groups = cfg.proteins_per_species;
    let n_species = cfg.species;

    // Group-level trait assignment: function family and fold class cycle at
    // different rates so their joint distribution is balanced.
    let n_families = layout.n_families().max(1);
    let n_classes = layout.fold_classes.len();
    let group_family: Vec<usize> = (0..n_groups).map(|g| g % n_families).collect();
    let group_class: Vec<usize> = (0..n_groups)
        .map(|g| if n_classes == 0 { 0 } else { (g / n_families) % n_classes })
        .collect();

    // Planted label sets: family leaves plus the fold class subtree, with
    // occasional extra leaves, pruned until every ortholog pair keeps the
    // configured overlap.
    let all_leaves = layout.all_function_leaves();
    let mut member_closed: Vec<Vec<BTreeSet<usize>>> = Vec::with_capacity(n_groups);
    for g in 0..n_groups {
        let mut base = BTreeSet::new();
        if !layout.family_leaves.is_empty() {
            base.extend(layout.family_leaves[group_family[g]].iter().copied());
        }
        if n_classes > 0 {
            let class = group_class[g];
            base.insert(layout.fold_classes[class]);
            base.extend(layout.fold_deep[class].iter().copied());
        }
        if base.is_empty() {
            base.insert(0);
        }
        let base_closed = layout.close(&base);

        let mut members: Vec<BTreeSet<usize>> = Vec::with_capacity(n_species);
        let mut deviants: Vec<usize> = Vec::new();
        for s in 0..n_species {
            let mut planted = base.clone();
            if !all_leaves.is_empty() && label_rng.gen::<f64>() < 0.25 {
                let extra = all_leaves[label_rng.gen_range(0..all_leaves.len())];
                if planted.insert(extra) {
                    deviants.push(s);
                }
            }
            members.push(layout.close(&planted));
        }
        // Deviations only ever add terms, so overlap is minimized against
        // the base set; revert deviants until the guarantee holds.
        while let Some(&s) = deviants.first() {
            let worst = members
                .iter()
                .flat_map(|a| members.iter().map(move |b| jaccard(a, b)))
                .fold(f64::INFINITY, f64::min);
            if worst >= cfg.ortholog_label_share {
                break;
            }
            members[s] = base_closed.clone();
            deviants.remove(0);
        }
        member_closed.push(members);
    }

    // Sequences: family block letters with a species-dependent admixture of
    // shift-block letters.
    let mut sequences = Vec::new();
    let mut coords = Vec::new();
    for s in 0..n_species {
        let shift = if n_species == 1 {
            0.0
        } else {
            cfg.species_shift * s as f64 / (n_species - 1) as f64
        };
        for g in 0..n_groups {
            let id = protein_name(s, g);
            let len = seq_rng.gen_range(cfg.min_residues..=cfg.max_residues);
            let sequence = make_sequence(group_family[g], shift, len, &mut seq_rng);
            let style = if n_classes == 0 { 0 } else { group_class[g] };
            coords.push(make_coords(&id, &sequence, style, &mut coord_rng));
            sequences.push(SequenceRecord { id, sequence });
        }
    }
    sequences.sort_by(|a, b| a.id.cmp(&b.id));
    coords.sort_by(|a, b| a.id.cmp(&b.id));

    // Interaction edges within each species: dense within a function family,
    // sparse elsewhere.
    let mut ppi_edges = Vec::new();
    for s in 0..n_species {
        for a in 0..n_groups {
            for b in (a + 1)..n_groups {
                let (p, score_range): (f64, std::ops::Range<f64>) = if group_family[a] == group_family[b] {
                    (cfg.ppi_within_family, 600.0..900.0)
                } else {
                    (cfg.ppi_noise, 150.0..400.0)
                };
                if ppi_rng.gen::<f64>() < p {
                    ppi_edges.push((
                        protein_name(s, a),
                        protein_name(s, b),
                        ppi_rng.gen_range(score_range).round(),
                    ));
                }
            }
        }
    }
    let ppi = PpiEdgeList::from_edges(ppi_edges);

    // Similarity edges: strong links along each ortholog group's consecutive
    // species, plus sparse cross-species noise.
    let mut hom_edges = Vec::new();
    for g in 0..n_groups {
        for s in 1..n_species {
            hom_edges.push((
                protein_name(s - 1, g),
                protein_name(s, g),
                (hom_rng.gen_range(0.85f64..0.98) * 1000.0).round() / 1000.0,
            ));
        }
    }
    if n_species > 1 {
        for a in 0..n_groups {
            for b in 0..n_groups {
                if a != b && hom_rng.gen::<f64>() < 0.005 {
                    hom_edges.push((
                        protein_name(0, a),
                        protein_name(n_species - 1, b),
                        (hom_rng.gen_range(0.5f64..0.7) * 1000.0).round() / 1000.0,
                    ));
                }
            }
        }
    }
    let homology = SimilarityEdgeList::from_edges(hom_edges);

    // Split membership: every species but the last trains; the last species
    // is mostly held out. Dates place each protein in its window.
    let train_cut = NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date");
    let valid_cut = NaiveDate::from_ymd_opt(2022, 8, 1).expect("valid date");
    let test_cut = NaiveDate::from_ymd_opt(2023, 8, 31).expect("valid date");
    let train_base = NaiveDate::from_ymd_opt(2019, 6, 15).expect("valid date");
    let valid_base = NaiveDate::from_ymd_opt(2021, 6, 15).expect("valid date");
    let test_base = NaiveDate::from_ymd_opt(2022, 12, 15).expect("valid date");

    let mut annotations = Vec::new();
    for s in 0..n_species {
        for g in 0..n_groups {
            let date = if s + 1 < n_species {
                jittered_date(train_base, 150, &mut date_rng)
            } else {
                let u: f64 = date_rng.gen();
                if n_species > 1 && u < cfg.test_fraction {
                    jittered_date(test_base, 60, &mut date_rng)
                } else if n_species > 1 && u < cfg.test_fraction + cfg.valid_fraction {
                    jittered_date(valid_base, 60, &mut date_rng)
                } else {
                    jittered_date(train_base, 150, &mut date_rng)
                }
            };
            for &t in &member_closed[g][s] {
                annotations.push(AnnotationRecord {
                    protein: protein_name(s, g),
                    term: term_id(t),
                    date,
                });
            }
        }
    }
    annotations.sort();
    annotations.dedup();

    Ok(FixtureBundle {
        obo_text,
        sequences,
        coords,
        ppi,
        homology,
        annotations,
        train_cut,
        valid_cut,
        test_cut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::GoDag;
    use std::collections::BTreeMap;

    fn small_cfg() -> FixtureConfig {
        FixtureConfig {
            seed: 7,
            species: 2,
            proteins_per_species: 20,
            labels: 16,
            ..FixtureConfig::default()
        }
    }

    fn bundle_fingerprint(b: &FixtureBundle) -> String {
        let mut s = String::new();
        s.push_str(&b.obo_text);
        s.push_str(&write_fasta(&b.sequences));
        for c in &b.coords {
            s.push_str(&write_coords(c));
        }
        s.push_str(&b.ppi.to_tsv_string());
        s.push_str(&b.homology.to_tsv_string());
        s.push_str(&write_annotations(&b.annotations));
        s
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let a = synth_fixture(&small_cfg()).unwrap();
        let b = synth_fixture(&small_cfg()).unwrap();
        assert_eq!(bundle_fingerprint(&a), bundle_fingerprint(&b));
    }

    #[test]
    fn different_seeds_differ() {
        let a = synth_fixture(&small_cfg()).unwrap();
        let mut cfg = small_cfg();
        cfg.seed = 8;
        let b = synth_fixture(&cfg).unwrap();
        assert_ne!(bundle_fingerprint(&a), bundle_fingerprint(&b));
    }

    #[test]
    fn annotations_are_closed() {
        let bundle = synth_fixture(&small_cfg()).unwrap();
        let dag = GoDag::parse_obo(&bundle.obo_text).unwrap();
        let mut per_protein: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for a in &bundle.annotations {
            per_protein.entry(&a.protein).or_default().insert(&a.term);
        }
        for (protein, terms) in per_protein {
            for term in &terms {
                let idx = dag.lookup(term).expect("annotated term exists");
                for anc in dag.ancestors(idx) {
                    assert!(
                        terms.contains(dag.term(anc).id.as_str()),
                        "{protein} missing ancestor {} of {term}",
                        dag.term(anc).id
                    );
                }
            }
        }
    }

    #[test]
    fn ortholog_pairs_share_labels() {
        let cfg = small_cfg();
        let bundle = synth_fixture(&cfg).unwrap();
        let mut per_protein: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for a in &bundle.annotations {
            per_protein
                .entry(a.protein.clone())
                .or_default()
                .insert(a.term.clone());
        }
        for g in 0..cfg.proteins_per_species {
            let a = &per_protein[&protein_name(0, g)];
            let b = &per_protein[&protein_name(1, g)];
            let inter = a.intersection(b).count() as f64;
            let union = a.union(b).count() as f64;
            assert!(
                inter / union >= cfg.ortholog_label_share,
                "group {g}: share {}",
                inter / union
            );
        }
    }

    #[test]
    fn split_holds_out_the_last_species() {
        let bundle = synth_fixture(&small_cfg()).unwrap();
        let split = bundle.split().unwrap();
        assert!(split.train.iter().any(|p| p.starts_with("SP0_")));
        assert!(!split.test.is_empty());
        assert!(split.test.iter().all(|p| p.starts_with("SP1_")));
        // every first-species protein trains
        let sp0: Vec<&String> = split.train.iter().filter(|p| p.starts_with("SP0_")).collect();
        assert_eq!(sp0.len(), 20);
    }

    #[test]
    fn ortholog_groups_are_linked_by_similarity_edges() {
        let cfg = small_cfg();
        let bundle = synth_fixture(&cfg).unwrap();
        for g in 0..cfg.proteins_per_species {
            let a = protein_name(0, g);
            let b = protein_name(1, g);
            assert!(
                bundle
                    .homology
                    .edges()
                    .iter()
                    .any(|(x, y, _)| (x == &a && y == &b) || (x == &b && y == &a)),
                "missing ortholog edge for group {g}"
            );
        }
    }

    #[test]
    fn geometry_styles_have_distinct_contact_density() {
        let cfg = small_cfg();
        let bundle = synth_fixture(&cfg).unwrap();
        // Average number of <=10 A neighbor pairs per residue, by fold class.
        let dag = GoDag::parse_obo(&bundle.obo_text).unwrap();
        let mut class_of: BTreeMap<&str, usize> = BTreeMap::new();
        for a in &bundle.annotations {
            let idx = dag.lookup(&a.term).unwrap();
            let name = &dag.term(idx).name;
            if let Some(rest) = name.strip_prefix("fold-") {
                if let Ok(c) = rest.split('-').next().unwrap_or_default().parse::<usize>() {
                    class_of.entry(a.protein.as_str()).or_insert(c);
                }
            }
        }
        let mut density: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for rec in &bundle.coords {
            let Some(&class) = class_of.get(rec.id.as_str()) else {
                continue;
            };
            let n = rec.len();
            let mut contacts = 0usize;
            for i in 0..n {
                for j in (i + 1)..n {
                    if rec.residues[i].distance(&rec.residues[j]) <= 10.0 {
                        contacts += 1;
                    }
                }
            }
            let e = density.entry(class).or_insert((0.0, 0));
            e.0 += contacts as f64 / n as f64;
            e.1 += 1;
        }
        let avg: BTreeMap<usize, f64> =
            density.iter().map(|(&c, &(sum, n))| (c, sum / n as f64)).collect();
        assert!(avg[&1] > avg[&2] + 1.0, "{avg:?}"); // compact >> sheet
        assert!(avg[&2] > avg[&3] + 1.0, "{avg:?}"); // sheet >> chain
    }

    #[test]
    fn single_species_and_tiny_label_sets_work() {
        let cfg = FixtureConfig {
            seed: 3,
            species: 1,
            proteins_per_species: 4,
            labels: 2,
            ..FixtureConfig::default()
        };
        let bundle = synth_fixture(&cfg).unwrap();
        assert_eq!(bundle.sequences.len(), 4);
        assert!(bundle.homology.is_empty());
        assert!(!bundle.annotations.is_empty());
    }

    #[test]
    fn zero_counts_rejected() {
        let cfg = FixtureConfig {
            species: 0,
            ..FixtureConfig::default()
        };
        assert!(synth_fixture(&cfg).is_err());
    }

    #[test]
    fn write_to_dir_produces_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = FixtureConfig {
            proteins_per_species: 5,
            ..small_cfg()
        };
        let bundle = synth_fixture(&cfg).unwrap();
        bundle.write_to_dir(dir.path()).unwrap();
        for name in [
            "ontology.obo",
            "sequences.fasta",
            "annotations.tsv",
            "ppi.tsv",
            "homology.tsv",
            "split-dates.txt",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let n_coords = std::fs::read_dir(dir.path().join("coords")).unwrap().count();
        assert_eq!(n_coords, 10);
    }
}
