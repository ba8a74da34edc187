//! Residue contact graphs from Cα coordinates and their degree-normalized
//! adjacency matrices.

use crate::error::{Error, Result};
use crate::ingest::CoordinateRecord;
use crate::numeric::SparseMatrix;

/// Undirected residue contact graph. Node order follows the coordinate
/// record; edges are stored once with i < j.
#[derive(Debug, Clone)]
pub struct ContactGraph {
    letters: Vec<char>,
    edges: Vec<(usize, usize)>,
}

/// Connect residue pairs whose Cα distance is at or below the threshold
/// (inclusive). Self-loops are not added here; the normalized adjacency
/// introduces them.
pub fn build_contact_map(coords: &CoordinateRecord, threshold: f64) -> Result<ContactGraph> {
    if coords.is_empty() {
        return Err(Error::Config(format!(
            "contact map for {} needs at least one residue",
            coords.id
        )));
    }
    if !(threshold > 0.0) {
        return Err(Error::Config(format!(
            "contact threshold must be positive, got {threshold}"
        )));
    }
    for r in &coords.residues {
        if !(r.x.is_finite() && r.y.is_finite() && r.z.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite coordinates for residue {} of {}",
                r.index, coords.id
            )));
        }
    }
    let n = coords.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if coords.residues[i].distance(&coords.residues[j]) <= threshold {
                edges.push((i, j));
            }
        }
    }
    Ok(ContactGraph {
        letters: coords.residues.iter().map(|r| r.aa).collect(),
        edges,
    })
}

impl ContactGraph {
    /// Build a graph directly from an edge list (tests, debug tooling).
    /// Edges are normalized to i < j and deduplicated.
    pub fn from_edges(letters: Vec<char>, edges: &[(usize, usize)]) -> Result<ContactGraph> {
        let n = letters.len();
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::shape(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            if a == b {
                return Err(Error::Format(format!("self-edge at node {a}")));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(ContactGraph {
            letters,
            edges: normalized,
        })
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Degree without the self-loop.
    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == node || b == node)
            .count()
    }

    /// Neighbor lists (no self-loops), each sorted.
    pub fn adjacency_list(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Symmetric normalized adjacency with self-loops: entry (i, j) of
    /// D^(-1/2) (A + I) D^(-1/2), i.e. 1/sqrt(d_i * d_j) on support, where
    /// d counts the self-loop. Both triangle entries are computed from the
    /// same expression, so the matrix is symmetric to the bit.
    pub fn normalized_adjacency(&self) -> SparseMatrix {
        normalized_adjacency_from_edges(self.n(), &self.edges)
    }

    /// Debug export: one "i j" pair per line.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}

/// Normalized adjacency for an arbitrary undirected edge list over `n`
/// nodes (self-loops added, symmetric degree normalization). Edges must be
/// deduplicated pairs with distinct endpoints below `n`; node degrees count
/// the self-loop. Also used for pooled subgraphs, which must be normalized
/// again after node selection.
pub fn normalized_adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> SparseMatrix {
    let mut degree = vec![1.0f64; n];
    for &(a, b) in edges {
        degree[a] += 1.0;
        degree[b] += 1.0;
    }
    let mut triplets = Vec::with_capacity(n + 2 * edges.len());
    for (i, d) in degree.iter().enumerate() {
        triplets.push((i, i, 1.0 / d));
    }
    for &(a, b) in edges {
        let v = 1.0 / (degree[a] * degree[b]).sqrt();
        triplets.push((a, b, v));
        triplets.push((b, a, v));
    }
    SparseMatrix::from_triplets(n, n, triplets).expect("triplets are in bounds and finite")
}
