//! Cross-species heterogeneous network: one protein vertex set carrying two
//! undirected edge relations, physical interactions and sequence similarity.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::{PpiEdgeList, SimilarityEdgeList};

/// Two weighted undirected edge sets over one sorted protein id list. Edges
/// whose endpoints are not in the id list are dropped with a warning; the
/// survivors are stored as symmetric adjacency lists sorted by neighbor
/// index. Self-edges never occur (the edge lists drop them on construction)
/// and each relation keeps at most one edge per pair.
#[derive(Debug, Clone)]
pub struct HeteroNetwork {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    interaction_adj: Vec<Vec<(usize, f64)>>,
    similarity_adj: Vec<Vec<(usize, f64)>>,
    interaction_edges: usize,
    similarity_edges: usize,
}

impl HeteroNetwork {
    /// Assemble the network over `ids` (sorted and deduplicated internally).
    pub fn new(
        ids: &[String],
        interactions: &PpiEdgeList,
        similarities: &SimilarityEdgeList,
    ) -> Result<HeteroNetwork> {
        let mut sorted: Vec<String> = ids.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.is_empty() {
            return Err(Error::Config(
                "a network needs at least one protein id".to_string(),
            ));
        }
        let index: BTreeMap<String, usize> = sorted
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();

        let (interaction_adj, kept_i) =
            build_adjacency(sorted.len(), &index, interactions.edges(), "interaction");
        let (similarity_adj, kept_s) =
            build_adjacency(sorted.len(), &index, similarities.edges(), "similarity");

        Ok(HeteroNetwork {
            ids: sorted,
            index,
            interaction_adj,
            similarity_adj,
            interaction_edges: kept_i,
            similarity_edges: kept_s,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Interaction neighbors of one node, sorted by index, with base weights.
    pub fn interaction_neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.interaction_adj[node]
    }

    /// Similarity neighbors of one node, sorted by index, with base weights.
    pub fn similarity_neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.similarity_adj[node]
    }

    /// Number of kept (undirected) interaction edges.
    pub fn interaction_edge_count(&self) -> usize {
        self.interaction_edges
    }

    /// Number of kept (undirected) similarity edges.
    pub fn similarity_edge_count(&self) -> usize {
        self.similarity_edges
    }
}

fn build_adjacency(
    n: usize,
    index: &BTreeMap<String, usize>,
    edges: &[(String, String, f64)],
    relation: &str,
) -> (Vec<Vec<(usize, f64)>>, usize) {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut kept = 0usize;
    let mut dropped = 0usize;
    for (a, b, w) in edges {
        match (index.get(a), index.get(b)) {
            (Some(&i), Some(&j)) => {
                adj[i].push((j, *w));
                adj[j].push((i, *w));
                kept += 1;
            }
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} {relation} edges with endpoints outside the network");
    }
    for row in &mut adj {
        row.sort_by_key(|&(j, _)| j);
    }
    (adj, kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn edge(a: &str, b: &str, w: f64) -> (String, String, f64) {
        (a.to_string(), b.to_string(), w)
    }

    #[test]
    fn ids_are_sorted_and_deduplicated_and_index_is_total() {
        let net = HeteroNetwork::new(
            &ids(&["pB", "pA", "pC", "pA"]),
            &PpiEdgeList::from_edges(vec![]),
            &SimilarityEdgeList::from_edges(vec![]),
        )
        .unwrap();
        assert_eq!(net.ids(), &["pA".to_string(), "pB".to_string(), "pC".to_string()]);
        for (i, id) in net.ids().iter().enumerate() {
            assert_eq!(net.index_of(id), Some(i));
        }
        assert_eq!(net.index_of("pZ"), None);
    }

    #[test]
    fn adjacency_is_symmetric_and_sorted() {
        let net = HeteroNetwork::new(
            &ids(&["a", "b", "c", "d"]),
            &PpiEdgeList::from_edges(vec![
                edge("a", "c", 0.9),
                edge("c", "b", 0.4),
                edge("a", "d", 0.7),
            ]),
            &SimilarityEdgeList::from_edges(vec![edge("d", "b", 0.5)]),
        )
        .unwrap();
        assert_eq!(net.interaction_edge_count(), 3);
        assert_eq!(net.similarity_edge_count(), 1);
        for u in 0..net.n() {
            for &(v, w) in net.interaction_neighbors(u) {
                assert!(net.interaction_neighbors(v).contains(&(u, w)));
            }
            for &(v, w) in net.similarity_neighbors(u) {
                assert!(net.similarity_neighbors(v).contains(&(u, w)));
            }
            let cols: Vec<usize> = net.interaction_neighbors(u).iter().map(|&(j, _)| j).collect();
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
        // a=0, b=1, c=2, d=3: a's interaction neighbors are c and d.
        assert_eq!(net.interaction_neighbors(0), &[(2, 0.9), (3, 0.7)]);
    }

    #[test]
    fn edges_with_unknown_endpoints_are_dropped() {
        let net = HeteroNetwork::new(
            &ids(&["a", "b"]),
            &PpiEdgeList::from_edges(vec![edge("a", "b", 0.9), edge("a", "ghost", 0.8)]),
            &SimilarityEdgeList::from_edges(vec![edge("ghost", "b", 0.5)]),
        )
        .unwrap();
        assert_eq!(net.interaction_edge_count(), 1);
        assert_eq!(net.similarity_edge_count(), 0);
        assert!(net.similarity_neighbors(0).is_empty());
        assert!(net.similarity_neighbors(1).is_empty());
    }

    #[test]
    fn empty_id_list_is_rejected() {
        let err = HeteroNetwork::new(
            &[],
            &PpiEdgeList::from_edges(vec![]),
            &SimilarityEdgeList::from_edges(vec![]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("at least one protein"));
    }

    #[test]
    fn both_relations_may_be_empty() {
        let net = HeteroNetwork::new(
            &ids(&["a", "b"]),
            &PpiEdgeList::from_edges(vec![]),
            &SimilarityEdgeList::from_edges(vec![]),
        )
        .unwrap();
        assert_eq!(net.n(), 2);
        assert!(net.interaction_neighbors(0).is_empty());
    }
}
