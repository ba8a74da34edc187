//! Information-content weights from training-set term frequencies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ontology::LabelMatrix;

/// Per-term information content in bits, derived from annotation frequency
/// with add-one smoothing: IC(t) = -log2((count(t) + 1) / (N + 1)).
#[derive(Debug, Clone)]
pub struct IcWeights {
    values: BTreeMap<String, f64>,
    max_ic: f64,
}

/// Compute IC weights from a closed training label matrix. Terms never seen
/// in training (including lookups for ids outside the matrix) get the
/// maximum smoothed value log2(N + 1).
pub fn compute_ic(train: &LabelMatrix) -> Result<IcWeights> {
    let n = train.n_proteins();
    if n == 0 {
        return Err(Error::Config(
            "information content needs at least one training protein".into(),
        ));
    }
    let denom = (n + 1) as f64;
    let max_ic = denom.log2();
    let mut values = BTreeMap::new();
    for (col, term) in train.terms().iter().enumerate() {
        let count = train.col_count(col);
        let ic = -(((count + 1) as f64) / denom).log2();
        values.insert(term.clone(), ic);
    }
    Ok(IcWeights { values, max_ic })
}

impl IcWeights {
    /// Build a table directly from (term, weight) pairs, e.g. when loading
    /// precomputed weights. Weights must be finite and non-negative; the
    /// fallback is served for terms absent from the table.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (String, f64)>,
        fallback: f64,
    ) -> Result<Self> {
        if !fallback.is_finite() || fallback < 0.0 {
            return Err(Error::Config(format!(
                "information-content fallback must be finite and non-negative, got {fallback}"
            )));
        }
        let mut values = BTreeMap::new();
        for (term, weight) in entries {
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::Config(format!(
                    "information content for {term} must be finite and non-negative, got {weight}"
                )));
            }
            values.insert(term, weight);
        }
        Ok(IcWeights { values, max_ic: fallback })
    }

    /// IC for a term, falling back to the maximum smoothed value for terms
    /// absent from training.
    pub fn value(&self, term: &str) -> f64 {
        self.values.get(term).copied().unwrap_or(self.max_ic)
    }

    /// IC only if the term was present in training.
    pub fn get(&self, term: &str) -> Option<f64> {
        self.values.get(term).copied()
    }

    pub fn max_ic(&self) -> f64 {
        self.max_ic
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(t, &v)| (t.as_str(), v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{Branch, GoDag};

    fn dag() -> GoDag {
        let text = "\
[Term]
id: GO:0000001
name: root
namespace: molecular_function

[Term]
id: GO:0000002
name: mid
namespace: molecular_function
is_a: GO:0000001

[Term]
id: GO:0000003
name: leaf
namespace: molecular_function
is_a: GO:0000002
";
        GoDag::parse_obo(text).unwrap()
    }

    fn matrix(raw: &[(&str, &str)]) -> LabelMatrix {
        let ann: Vec<(String, String)> = raw
            .iter()
            .map(|(p, t)| (p.to_string(), t.to_string()))
            .collect();
        LabelMatrix::from_annotations(&dag(), Branch::Mfo, &ann).unwrap()
    }

    #[test]
    fn universal_term_has_zero_ic() {
        let m = matrix(&[("P1", "GO:0000002"), ("P2", "GO:0000002"), ("P3", "GO:0000002")]);
        let ic = compute_ic(&m).unwrap();
        assert_eq!(ic.value("GO:0000001"), 0.0);
        assert_eq!(ic.value("GO:0000002"), 0.0);
    }

    #[test]
    fn one_of_three_gives_one_bit() {
        // count 1, N 3: -log2(2/4) = 1
        let m = matrix(&[
            ("P1", "GO:0000003"),
            ("P2", "GO:0000001"),
            ("P3", "GO:0000001"),
        ]);
        let ic = compute_ic(&m).unwrap();
        assert!((ic.value("GO:0000003") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn children_are_at_least_as_informative_as_parents() {
        let m = matrix(&[
            ("P1", "GO:0000003"),
            ("P2", "GO:0000002"),
            ("P3", "GO:0000001"),
            ("P4", "GO:0000003"),
        ]);
        let ic = compute_ic(&m).unwrap();
        assert!(ic.value("GO:0000003") >= ic.value("GO:0000002"));
        assert!(ic.value("GO:0000002") >= ic.value("GO:0000001"));
    }

    #[test]
    fn unseen_terms_get_the_maximum() {
        let m = matrix(&[("P1", "GO:0000001")]);
        let ic = compute_ic(&m).unwrap();
        assert_eq!(ic.get("GO:0000009"), None);
        assert_eq!(ic.value("GO:0000009"), ic.max_ic());
        assert!((ic.max_ic() - 1.0).abs() < 1e-12); // log2(2)
    }

    #[test]
    fn empty_matrix_rejected() {
        let m = matrix(&[]);
        assert_eq!(m.n_proteins(), 0);
        assert!(compute_ic(&m).is_err());
    }
}
