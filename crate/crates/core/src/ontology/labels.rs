//! Binary label matrices closed under ancestor propagation.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;
use crate::ontology::{Branch, GoDag};

/// Proteins x terms binary matrix for a single ontology branch. Rows and
/// columns are kept sorted by id; the matrix is closed under ancestor
/// propagation at construction time.
#[derive(Debug, Clone)]
pub struct LabelMatrix {
    branch: Branch,
    proteins: Vec<String>,
    terms: Vec<String>,
    bits: Vec<bool>,
}

impl LabelMatrix {
    /// Build from raw (protein, term) annotation pairs. Terms of other
    /// branches are skipped; terms missing from the DAG entirely abort with
    /// the full offender list. Each annotation is expanded to all its
    /// ancestors within the branch, and columns cover exactly the terms that
    /// occur after expansion.
    pub fn from_annotations(
        dag: &GoDag,
        branch: Branch,
        annotations: &[(String, String)],
    ) -> Result<LabelMatrix> {
        let proteins: BTreeSet<&str> = annotations.iter().map(|(p, _)| p.as_str()).collect();
        let proteins: Vec<String> = proteins.into_iter().map(String::from).collect();
        Self::from_annotations_with_proteins(dag, branch, annotations, &proteins)
    }

    /// Same as [`LabelMatrix::from_annotations`] but with a fixed protein
    /// row set (sorted internally). Proteins without in-branch annotations
    /// get all-zero rows; annotations for proteins outside the set abort.
    pub fn from_annotations_with_proteins(
        dag: &GoDag,
        branch: Branch,
        annotations: &[(String, String)],
        proteins: &[String],
    ) -> Result<LabelMatrix> {
        let mut sorted: Vec<String> = proteins.to_vec();
        sorted.sort();
        sorted.dedup();
        let row_of: BTreeMap<&str, usize> = sorted
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();

        let mut unknown_terms = BTreeSet::new();
        let mut unknown_proteins = BTreeSet::new();
        let mut closed: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); sorted.len()];
        for (protein, term) in annotations {
            let Some(tidx) = dag.lookup(term) else {
                unknown_terms.insert(term.clone());
                continue;
            };
            if dag.term(tidx).branch != branch {
                continue;
            }
            let Some(&row) = row_of.get(protein.as_str()) else {
                unknown_proteins.insert(protein.clone());
                continue;
            };
            closed[row].extend(dag.ancestors_with_self(tidx));
        }
        if !unknown_terms.is_empty() {
            let list: Vec<String> = unknown_terms.into_iter().collect();
            return Err(Error::Ingest(format!(
                "annotations reference terms missing from the ontology: {}",
                list.join(", ")
            )));
        }
        if !unknown_proteins.is_empty() {
            let list: Vec<String> = unknown_proteins.into_iter().collect();
            return Err(Error::Ingest(format!(
                "annotations reference proteins outside the given set: {}",
                list.join(", ")
            )));
        }

        let used: BTreeSet<usize> = closed.iter().flatten().copied().collect();
        let terms: Vec<String> = used.iter().map(|&t| dag.term(t).id.clone()).collect();
        let col_of: BTreeMap<usize, usize> =
            used.iter().enumerate().map(|(c, &t)| (t, c)).collect();

        let mut bits = vec![false; sorted.len() * terms.len()];
        for (row, term_set) in closed.iter().enumerate() {
            for t in term_set {
                bits[row * terms.len() + col_of[t]] = true;
            }
        }
        Ok(LabelMatrix {
            branch,
            proteins: sorted,
            terms,
            bits,
        })
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn n_proteins(&self) -> usize {
        self.proteins.len()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn proteins(&self) -> &[String] {
        &self.proteins
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn protein_row(&self, protein: &str) -> Option<usize> {
        self.proteins.binary_search_by(|p| p.as_str().cmp(protein)).ok()
    }

    pub fn term_col(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.terms.len() + col]
    }

    /// Term ids annotated to one protein row, in column order.
    pub fn row_terms(&self, row: usize) -> Vec<&str> {
        (0..self.terms.len())
            .filter(|&c| self.get(row, c))
            .map(|c| self.terms[c].as_str())
            .collect()
    }

    /// Number of set entries in a column.
    pub fn col_count(&self, col: usize) -> usize {
        (0..self.proteins.len()).filter(|&r| self.get(r, col)).count()
    }

    /// 0/1 matrix for use as a training target.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.proteins.len(), self.terms.len());
        for r in 0..self.proteins.len() {
            for c in 0..self.terms.len() {
                if self.get(r, c) {
                    m.set(r, c, 1.0);
                }
            }
        }
        m
    }

    /// Re-index onto a fixed sorted term vocabulary. Columns outside the
    /// vocabulary are dropped and vocabulary terms not present here become
    /// all-zero columns. Dropping columns can open the closure; evaluation
    /// against a fixed vocabulary accepts that.
    pub fn restrict_to_terms(&self, vocab: &[String]) -> Result<LabelMatrix> {
        if vocab.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "term vocabulary must be sorted and free of duplicates".into(),
            ));
        }
        let mut bits = vec![false; self.proteins.len() * vocab.len()];
        for (new_c, term) in vocab.iter().enumerate() {
            if let Some(old_c) = self.term_col(term) {
                for r in 0..self.proteins.len() {
                    bits[r * vocab.len() + new_c] = self.get(r, old_c);
                }
            }
        }
        Ok(LabelMatrix {
            branch: self.branch,
            proteins: self.proteins.clone(),
            terms: vocab.to_vec(),
            bits,
        })
    }

    /// True when every set entry has all its in-branch ancestors set too.
    pub fn is_closed(&self, dag: &GoDag) -> bool {
        for r in 0..self.proteins.len() {
            for c in 0..self.terms.len() {
                if !self.get(r, c) {
                    continue;
                }
                let Some(tidx) = dag.lookup(&self.terms[c]) else {
                    return false;
                };
                for anc in dag.ancestors(tidx) {
                    match self.term_col(&dag.term(anc).id) {
                        Some(anc_col) if self.get(r, anc_col) => {}
                        _ => return false,
                    }
                }
            }
        }
        true
    }

    /// Serialize as one line per protein: id, tab, comma-separated term ids.
    pub fn to_tsv_string(&self) -> String {
        let mut out = String::new();
        for r in 0..self.proteins.len() {
            out.push_str(&self.proteins[r]);
            out.push('\t');
            out.push_str(&self.row_terms(r).join(","));
            out.push('\n');
        }
        out
    }

    /// Parse the TSV form back into a matrix. The closure is re-applied, so
    /// a hand-edited file that lost some ancestors loads as its closed form.
    pub fn from_tsv_str(dag: &GoDag, branch: Branch, text: &str) -> Result<LabelMatrix> {
        let mut annotations = Vec::new();
        let mut proteins = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (protein, terms) = line.split_once('\t').ok_or_else(|| {
                Error::parse(lineno + 1, "expected protein-id<TAB>term,term,...".to_string())
            })?;
            proteins.push(protein.to_string());
            for term in terms.split(',') {
                let term = term.trim();
                if !term.is_empty() {
                    annotations.push((protein.to_string(), term.to_string()));
                }
            }
        }
        Self::from_annotations_with_proteins(dag, branch, &annotations, &proteins)
    }
}
