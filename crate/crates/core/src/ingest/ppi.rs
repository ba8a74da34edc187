//! Undirected weighted edge lists: interaction edges with STRING-style
//! scores and similarity edges with scores in [0, 1].

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Interaction edges, normalized: endpoints ordered within each edge, edges
/// sorted, duplicates merged by maximum score, self-edges dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PpiEdgeList {
    edges: Vec<(String, String, f64)>,
}

/// Sequence-similarity edges with the same normalization, scores in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityEdgeList {
    edges: Vec<(String, String, f64)>,
}

fn normalize_edges(
    raw: Vec<(String, String, f64)>,
) -> Vec<(String, String, f64)> {
    let mut merged: BTreeMap<(String, String), f64> = BTreeMap::new();
    for (a, b, score) in raw {
        let key = if a <= b { (a, b) } else { (b, a) };
        let entry = merged.entry(key).or_insert(f64::NEG_INFINITY);
        if score > *entry {
            *entry = score;
        }
    }
    merged
        .into_iter()
        .map(|((a, b), s)| (a, b, s))
        .collect()
}

fn parse_edge_lines(
    text: &str,
    max_score: f64,
    kind: &str,
) -> Result<Vec<(String, String, f64)>> {
    let mut raw = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 'idA idB score', got {} fields", fields.len()),
            ));
        }
        let score: f64 = match fields[2].parse() {
            Ok(s) => s,
            // A single leading non-numeric line is a column header.
            Err(_) if lineno == 1 => continue,
            Err(_) => {
                return Err(Error::parse(lineno, format!("bad score {:?}", fields[2])));
            }
        };
        if !score.is_finite() || score < 0.0 || score > max_score {
            return Err(Error::parse(
                lineno,
                format!("{kind} score {score} outside [0, {max_score}]"),
            ));
        }
        if fields[0] == fields[1] {
            log::warn!("dropping self-edge {} at line {lineno}", fields[0]);
            continue;
        }
        raw.push((fields[0].to_string(), fields[1].to_string(), score));
    }
    Ok(raw)
}

fn edges_to_tsv(edges: &[(String, String, f64)]) -> String {
    let mut out = String::new();
    for (a, b, s) in edges {
        out.push_str(&format!("{a}\t{b}\t{s:.6}\n"));
    }
    out
}

impl PpiEdgeList {
    pub fn from_edges(raw: Vec<(String, String, f64)>) -> PpiEdgeList {
        PpiEdgeList {
            edges: normalize_edges(
                raw.into_iter().filter(|(a, b, _)| a != b).collect(),
            ),
        }
    }

    pub fn edges(&self) -> &[(String, String, f64)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn to_tsv_string(&self) -> String {
        edges_to_tsv(&self.edges)
    }
}

impl SimilarityEdgeList {
    pub fn from_edges(raw: Vec<(String, String, f64)>) -> SimilarityEdgeList {
        SimilarityEdgeList {
            edges: normalize_edges(
                raw.into_iter().filter(|(a, b, _)| a != b).collect(),
            ),
        }
    }

    pub fn edges(&self) -> &[(String, String, f64)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn to_tsv_string(&self) -> String {
        edges_to_tsv(&self.edges)
    }
}

/// Parse whitespace-separated "idA idB score" lines with STRING-style scores
/// in [0, 1000]. An optional single header line is skipped.
pub fn parse_ppi_tsv(text: &str) -> Result<PpiEdgeList> {
    Ok(PpiEdgeList {
        edges: normalize_edges(parse_edge_lines(text, 1000.0, "interaction")?),
    })
}

/// Parse similarity edges with scores in [0, 1].
pub fn parse_similarity_tsv(text: &str) -> Result<SimilarityEdgeList> {
    Ok(SimilarityEdgeList {
        edges: normalize_edges(parse_edge_lines(text, 1.0, "similarity")?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let list = parse_ppi_tsv("p1 p2 700\n").unwrap();
        assert_eq!(list.edges(), &[("p1".to_string(), "p2".to_string(), 700.0)]);
    }

    #[test]
    fn reversed_duplicate_merges_by_max() {
        let list = parse_ppi_tsv("p1 p2 700\np2 p1 900\n").unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list.edges()[0].2, 900.0);
    }

    #[test]
    fn self_edge_dropped() {
        let list = parse_ppi_tsv("p1 p1 500\n").unwrap();
        assert!(list.is_empty());
    }

    #[test]
    fn header_line_skipped() {
        let list = parse_ppi_tsv("protein1 protein2 combined_score\np1 p2 10\n").unwrap();
        assert_eq!(list.len(), 1);
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = parse_ppi_tsv("p1 p2 700\np3 p4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_ppi_tsv("p1 p2 700\np3 p4 abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn out_of_range_scores_rejected() {
        assert!(parse_ppi_tsv("p1 p2 1500\n").is_err());
        assert!(parse_similarity_tsv("p1 p2 1.5\n").is_err());
        assert!(parse_similarity_tsv("p1 p2 -0.1\n").is_err());
    }

    #[test]
    fn round_trip() {
        let list = parse_ppi_tsv("b a 12\nc a 999\n").unwrap();
        let again = parse_ppi_tsv(&list.to_tsv_string()).unwrap();
        assert_eq!(again, list);
        let sim = parse_similarity_tsv("b a 0.25\nc a 0.75\n").unwrap();
        let again = parse_similarity_tsv(&sim.to_tsv_string()).unwrap();
        assert_eq!(again, sim);
    }
}
