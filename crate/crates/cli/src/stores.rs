//! On-disk artifact formats shared by the subcommands: per-protein contact
//! graphs and residue features, dense score tables, and checkpoint files.
//! Every write goes through an atomic temp-file-then-rename so an
//! interrupted run never leaves a truncated artifact behind.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gopred_core::contact::ContactGraph;
use gopred_core::numeric::DenseMatrix;

/// Write bytes to `path` atomically: the content lands in a sibling temp
/// file first and is renamed into place, so readers only ever see either
/// the old artifact or the complete new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating directory {}", parent.display()))?;
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    if file_name.is_empty() {
        bail!("cannot write to a path without a file name: {}", path.display());
    }
    let tmp = path.with_file_name(format!(".{file_name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", path.display()))?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Paths of every artifact a work directory can hold.
#[derive(Debug, Clone)]
pub struct WorkDir {
    root: PathBuf,
}

impl WorkDir {
    pub fn new(root: &Path) -> WorkDir {
        WorkDir {
            root: root.to_path_buf(),
        }
    }

    pub fn contact_dir(&self) -> PathBuf {
        self.root.join("contacts")
    }

    pub fn contact_file(&self, id: &str) -> PathBuf {
        self.contact_dir().join(format!("{id}.tsv"))
    }

    pub fn residue_dir(&self) -> PathBuf {
        self.root.join("residues")
    }

    pub fn residue_file(&self, id: &str) -> PathBuf {
        self.residue_dir().join(format!("{id}.tsv"))
    }

    fn branch_dir(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.root.join(branch.code().to_ascii_lowercase())
    }

    pub fn struct_model(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.branch_dir(branch).join("struct-model.bin")
    }

    pub fn struct_log(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.branch_dir(branch).join("struct-train.csv")
    }

    pub fn structural_features(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.branch_dir(branch).join("structural-features.bin")
    }

    pub fn prop_model(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.branch_dir(branch).join("prop-model.bin")
    }

    pub fn prop_log(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.branch_dir(branch).join("prop-train.csv")
    }

    pub fn predictions(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.branch_dir(branch).join("predictions.tsv")
    }

    pub fn scores(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.branch_dir(branch).join("scores.tsv")
    }

    pub fn metrics(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.branch_dir(branch).join("metrics.tsv")
    }

    pub fn pr_curve(&self, branch: gopred_core::ontology::Branch) -> PathBuf {
        self.branch_dir(branch).join("pr-curve.csv")
    }
}

/// Serialize a contact graph: first line `residues<TAB><letters>`, then one
/// `i<TAB>j` line per undirected edge with i < j.
pub fn contact_to_string(graph: &ContactGraph) -> String {
    let mut out = String::from("residues\t");
    out.extend(graph.letters().iter());
    out.push('\n');
    for &(a, b) in graph.edges() {
        out.push_str(&format!("{a}\t{b}\n"));
    }
    out
}

pub fn contact_from_str(text: &str) -> Result<ContactGraph> {
    let mut lines = text.lines();
    let header = lines.next().context("contact file is empty")?;
    let letters: Vec<char> = match header.split_once('\t') {
        Some(("residues", rest)) => rest.chars().collect(),
        _ => bail!("contact file must start with 'residues<TAB><letters>', got {header:?}"),
    };
    let mut edges = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 2 {
            bail!("contact file line {}: expected 'i<TAB>j', got {line:?}", lineno + 2);
        }
        let a: usize = parts[0]
            .parse()
            .with_context(|| format!("contact file line {}: bad index", lineno + 2))?;
        let b: usize = parts[1]
            .parse()
            .with_context(|| format!("contact file line {}: bad index", lineno + 2))?;
        edges.push((a, b));
    }
    Ok(ContactGraph::from_edges(letters, &edges)?)
}

/// Serialize a residue feature matrix, one residue per line, values
/// space-separated in shortest round-trip form (parsing reproduces each
/// f64 bit for bit).
pub fn matrix_to_string(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let mut first = true;
        for v in m.row(r) {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn matrix_from_str(text: &str) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .with_context(|| format!("line {}: bad float {tok:?}", lineno + 1))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("matrix file holds no rows");
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

/// Serialize a dense score table: a header line `protein-id` followed by the
/// term ids, then one row per protein with shortest round-trip floats.
pub fn scores_to_string(ids: &[String], terms: &[String], scores: &DenseMatrix) -> String {
    let mut out = String::from("protein-id");
    for term in terms {
        out.push('\t');
        out.push_str(term);
    }
    out.push('\n');
    for (r, id) in ids.iter().enumerate() {
        out.push_str(id);
        for v in scores.row(r) {
            out.push('\t');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn scores_from_str(text: &str) -> Result<(Vec<String>, Vec<String>, DenseMatrix)> {
    let mut lines = text.lines();
    let header = lines.next().context("score table is empty")?;
    let mut fields = header.split('\t');
    if fields.next() != Some("protein-id") {
        bail!("score table must start with a 'protein-id' header, got {header:?}");
    }
    let terms: Vec<String> = fields.map(String::from).collect();
    if terms.is_empty() {
        bail!("score table header lists no terms");
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default();
        if id.is_empty() {
            bail!("score table line {}: missing protein id", lineno + 2);
        }
        let row: Vec<f64> = fields
            .map(|tok| {
                tok.parse::<f64>()
                    .with_context(|| format!("score table line {}: bad float {tok:?}", lineno + 2))
            })
            .collect::<Result<_>>()?;
        if row.len() != terms.len() {
            bail!(
                "score table line {}: expected {} scores, found {}",
                lineno + 2,
                terms.len(),
                row.len()
            );
        }
        ids.push(id.to_string());
        rows.push(row);
    }
    if ids.is_empty() {
        bail!("score table holds no proteins");
    }
    Ok((ids, terms, DenseMatrix::from_rows(&rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(leftovers.len(), 1, "{leftovers:?}");
    }

    #[test]
    fn contact_graphs_round_trip() {
        let g = ContactGraph::from_edges(vec!['M', 'K', 'V'], &[(0, 1), (1, 2)]).unwrap();
        let text = contact_to_string(&g);
        let back = contact_from_str(&text).unwrap();
        assert_eq!(back.letters(), g.letters());
        assert_eq!(back.edges(), g.edges());
        assert!(contact_from_str("edges\t3\n").is_err());
        assert!(contact_from_str("residues\tMK\n0\n").is_err());
    }

    #[test]
    fn matrices_round_trip_bit_for_bit() {
        let m = DenseMatrix::from_rows(&[
            vec![0.1, 1.0 / 3.0, -2.5e-17],
            vec![f64::MIN_POSITIVE, 1e300, 0.0],
        ])
        .unwrap();
        let back = matrix_from_str(&matrix_to_string(&m)).unwrap();
        assert_eq!(back.values(), m.values());
        assert!(matrix_from_str("\n").is_err());
        assert!(matrix_from_str("1.0 nope\n").is_err());
    }

    #[test]
    fn score_tables_round_trip_bit_for_bit() {
        let ids = vec!["p1".to_string(), "p2".to_string()];
        let terms = vec!["GO:0000001".to_string(), "GO:0000002".to_string()];
        let m = DenseMatrix::from_rows(&[vec![0.25, 1.0 / 7.0], vec![0.0, 1.0]]).unwrap();
        let text = scores_to_string(&ids, &terms, &m);
        let (ids2, terms2, m2) = scores_from_str(&text).unwrap();
        assert_eq!(ids2, ids);
        assert_eq!(terms2, terms);
        assert_eq!(m2.values(), m.values());
        assert!(scores_from_str("protein-id\n").is_err());
        assert!(scores_from_str("protein-id\tGO:1\np1\t0.5\t0.5\n").is_err());
    }

    #[test]
    fn work_dir_paths_are_branch_scoped() {
        use gopred_core::ontology::Branch;
        let w = WorkDir::new(Path::new("/tmp/w"));
        assert_eq!(
            w.prop_model(Branch::Mfo),
            Path::new("/tmp/w/mfo/prop-model.bin")
        );
        assert_eq!(
            w.predictions(Branch::Bpo),
            Path::new("/tmp/w/bpo/predictions.tsv")
        );
        assert_eq!(w.contact_file("SP0_P1"), Path::new("/tmp/w/contacts/SP0_P1.tsv"));
    }
}
