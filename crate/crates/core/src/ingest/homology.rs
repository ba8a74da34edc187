//! Sequence-similarity network from k-mer profile cosine similarity. A
//! deterministic stand-in for an external alignment tool: all that downstream
//! propagation needs is a weighted homology graph.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::{SequenceRecord, SimilarityEdgeList};

/// Compare all sequence pairs by cosine similarity of their k-mer count
/// profiles and keep edges at or above the threshold.
pub fn build_homology_network(
    records: &[SequenceRecord],
    k: usize,
    threshold: f64,
) -> Result<SimilarityEdgeList> {
    if k < 2 {
        return Err(Error::Config(format!("k-mer length must be at least 2, got {k}")));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!(
            "similarity threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let profiles: Vec<BTreeMap<&[u8], f64>> = records
        .iter()
        .map(|rec| {
            let bytes = rec.sequence.as_bytes();
            let mut counts: BTreeMap<&[u8], f64> = BTreeMap::new();
            if bytes.len() < k {
                log::warn!("sequence {} shorter than k={k}; isolated node", rec.id);
            } else {
                for kmer in bytes.windows(k) {
                    *counts.entry(kmer).or_insert(0.0) += 1.0;
                }
            }
            counts
        })
        .collect();
    let norms: Vec<f64> = profiles
        .iter()
        .map(|p| p.values().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut edges = Vec::new();
    for i in 0..records.len() {
        for j in (i + 1)..records.len() {
            let sim = cosine(&profiles[i], norms[i], &profiles[j], norms[j]);
            if sim >= threshold {
                edges.push((records[i].id.clone(), records[j].id.clone(), sim.min(1.0)));
            }
        }
    }
    Ok(SimilarityEdgeList::from_edges(edges))
}

fn cosine(
    a: &BTreeMap<&[u8], f64>,
    norm_a: f64,
    b: &BTreeMap<&[u8], f64>,
    norm_b: f64,
) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(kmer, &va)| large.get(kmer).map(|&vb| va * vb))
        .sum();
    dot / (norm_a * norm_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, seq: &str) -> SequenceRecord {
        SequenceRecord {
            id: id.to_string(),
            sequence: seq.to_string(),
        }
    }

    #[test]
    fn identical_sequences_score_one() {
        let list =
            build_homology_network(&[rec("a", "ACDEFG"), rec("b", "ACDEFG")], 3, 0.5).unwrap();
        assert_eq!(list.len(), 1);
        assert!((list.edges()[0].2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_alphabets_score_zero() {
        let list = build_homology_network(&[rec("a", "AAAA"), rec("b", "CCCC")], 3, 0.1).unwrap();
        assert!(list.is_empty());
    }

    #[test]
    fn two_mer_profiles_match_hand_computed_cosine() {
        // ACACAC: AC x3, CA x2. ACACGT: AC x2, CA x1, CG x1, GT x1.
        // dot = 3*2 + 2*1 = 8; norms sqrt(13) and sqrt(7).
        let expected = 8.0 / (13.0f64 * 7.0).sqrt();
        let list =
            build_homology_network(&[rec("a", "ACACAC"), rec("b", "ACACGT")], 2, 0.5).unwrap();
        assert_eq!(list.len(), 1);
        assert!((list.edges()[0].2 - expected).abs() < 1e-12, "{}", list.edges()[0].2);
    }

    #[test]
    fn short_sequences_are_isolated() {
        let list = build_homology_network(
            &[rec("a", "AC"), rec("b", "ACACAC"), rec("c", "ACACAC")],
            3,
            0.5,
        )
        .unwrap();
        assert_eq!(list.len(), 1);
        assert!(list.edges().iter().all(|(x, y, _)| x != "a" && y != "a"));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(build_homology_network(&[], 1, 0.5).is_err());
        assert!(build_homology_network(&[], 3, 0.0).is_err());
        assert!(build_homology_network(&[], 3, 1.0).is_err());
    }

    #[test]
    fn output_is_symmetric_and_self_edge_free() {
        let recs = vec![
            rec("a", "ACACACAC"),
            rec("b", "ACACACGT"),
            rec("c", "GTGTGTGT"),
        ];
        let list = build_homology_network(&recs, 2, 0.1).unwrap();
        for (a, b, _) in list.edges() {
            assert!(a < b); // normalized undirected representation
        }
    }
}
