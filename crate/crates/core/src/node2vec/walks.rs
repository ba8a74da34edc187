//! Biased second-order random walks.
//!
//! A step from `current` (reached from `prev`) weighs each neighbor `x` of
//! `current` by how far `x` is from `prev`: returning to `prev` itself gets
//! weight 1/p, a neighbor that `prev` can also reach in one hop gets
//! weight 1, and a node two hops from `prev` gets weight 1/q. Weights are
//! normalized into a probability distribution over the neighbors.

use super::WalkConfig;
use crate::contact::ContactGraph;
use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Transition distribution out of `current`. `prev` is the node visited
/// immediately before `current`; `None` means the walk just started, in
/// which case all neighbors are equally likely. Returns `(neighbor,
/// probability)` pairs in ascending neighbor order; empty when `current`
/// has no neighbors.
pub fn transition_probs(
    g: &ContactGraph,
    prev: Option<usize>,
    current: usize,
    cfg: &WalkConfig,
) -> Result<Vec<(usize, f64)>> {
    cfg.validate()?;
    let n = g.n();
    if current >= n {
        return Err(Error::shape(format!("node {current} outside 0..{n}")));
    }
    if let Some(t) = prev {
        if t >= n {
            return Err(Error::shape(format!("previous node {t} outside 0..{n}")));
        }
    }
    let adj = g.adjacency_list();
    Ok(step_distribution(&adj, prev, current, cfg.p, cfg.q))
}

/// Core of the walk bias; `adj` must hold sorted neighbor lists.
fn step_distribution(
    adj: &[Vec<usize>],
    prev: Option<usize>,
    current: usize,
    p: f64,
    q: f64,
) -> Vec<(usize, f64)> {
    let neighbors = &adj[current];
    if neighbors.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(neighbors.len());
    let mut total = 0.0;
    for &x in neighbors {
        let bias = match prev {
            // First step of a walk: nothing to be biased by.
            None => 1.0,
            Some(t) => {
                // Hop count from t to x, which by construction is 0, 1 or 2:
                // x is adjacent to current, so it is never further than two
                // hops from any neighbor of current.
                if x == t {
                    1.0 / p
                } else if adj[t].binary_search(&x).is_ok() {
                    1.0
                } else {
                    1.0 / q
                }
            }
        };
        debug_assert!(bias.is_finite() && bias > 0.0);
        out.push((x, bias));
        total += bias;
    }
    for entry in &mut out {
        entry.1 /= total;
    }
    out
}

/// Generate `walks_per_node` walks starting at every node of the graph.
///
/// Walks are returned grouped by start node (all walks from node 0 first,
/// then node 1, ...). Each walk holds `walk_length` nodes unless it reaches
/// a dead end earlier; a walk from an isolated node is just that node.
///
/// Every walk draws from its own random stream derived from the master
/// seed, the start node, and the walk index, so the output is identical no
/// matter how the work is scheduled across threads.
pub fn generate_walks(g: &ContactGraph, cfg: &WalkConfig) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    let adj = g.adjacency_list();
    let per_node: Vec<Vec<Vec<usize>>> = (0..g.n())
        .into_par_iter()
        .map(|node| {
            (0..cfg.walks_per_node)
                .map(|w| single_walk(&adj, node, w, cfg))
                .collect()
        })
        .collect();
    Ok(per_node.into_iter().flatten().collect())
}

fn single_walk(adj: &[Vec<usize>], start: usize, walk_index: usize, cfg: &WalkConfig) -> Vec<usize> {
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, start as u64, walk_index as u64));
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    while walk.len() < cfg.walk_length {
        let current = *walk.last().expect("walk starts non-empty");
        let prev = if walk.len() >= 2 {
            Some(walk[walk.len() - 2])
        } else {
            None
        };
        let dist = step_distribution(adj, prev, current, cfg.p, cfg.q);
        if dist.is_empty() {
            break;
        }
        let next = if cfg.greedy {
            argmax_node(&dist)
        } else {
            sample_node(&dist, &mut rng)
        };
        walk.push(next);
    }
    walk
}

/// Mix the master seed with the walk coordinates so every walk gets an
/// independent, schedule-free stream.
fn derive_seed(master: u64, node: u64, walk: u64) -> u64 {
    let mut z = master
        .wrapping_add(node.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(walk.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_node(dist: &[(usize, f64)], rng: &mut ChaCha12Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(node, prob) in dist {
        acc += prob;
        if u < acc {
            return node;
        }
    }
    // Rounding can leave acc a hair under 1; the last candidate absorbs it.
    dist.last().expect("distribution checked non-empty").0
}

fn argmax_node(dist: &[(usize, f64)]) -> usize {
    let mut best = dist[0];
    for &(node, prob) in &dist[1..] {
        if prob > best.1 {
            best = (node, prob);
        }
    }
    best.0
}
