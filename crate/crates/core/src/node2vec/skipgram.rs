//! Skip-gram training with negative sampling over walk corpora.
//!
//! Each (center, context) pair within the window pushes the center's input
//! vector towards the context's output vector and away from the output
//! vectors of sampled negatives. Negatives are drawn from the unigram
//! distribution of the corpus raised to the 3/4 power.

use super::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

/// Learn one embedding per node from the walk corpus and return them as an
/// `n_nodes x dim` matrix (the input vectors; output vectors are discarded).
///
/// Input vectors start uniform in `[-0.5/dim, 0.5/dim)`, output vectors at
/// zero; zero epochs therefore return the initialization untouched. The
/// learning rate decays linearly over all scheduled updates down to 1e-4 of
/// its starting value.
pub fn train_skipgram(
    walks: &[Vec<usize>],
    n_nodes: usize,
    cfg: &EmbeddingConfig,
) -> Result<DenseMatrix> {
    cfg.validate()?;
    for walk in walks {
        for &node in walk {
            if node >= n_nodes {
                return Err(Error::shape(format!(
                    "walk visits node {node}, outside 0..{n_nodes}"
                )));
            }
        }
    }
    let dim = cfg.dim;
    let mut init_rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, 0));
    let mut in_values = vec![0.0f64; n_nodes * dim];
    for v in &mut in_values {
        *v = (init_rng.gen::<f64>() - 0.5) / dim as f64;
    }

    let pairs_per_epoch: usize = walks
        .iter()
        .map(|w| {
            let l = w.len();
            (0..l)
                .map(|i| i.min(cfg.window) + (l - 1 - i).min(cfg.window))
                .sum::<usize>()
        })
        .sum();
    if cfg.epochs == 0 || pairs_per_epoch == 0 {
        return DenseMatrix::from_vec(n_nodes, dim, in_values);
    }
    let total_pairs = pairs_per_epoch * cfg.epochs;

    let table = NegativeTable::from_walks(walks, n_nodes);
    let in_vecs = SharedVectors::from_values(in_values, dim);
    let out_vecs = SharedVectors::from_values(vec![0.0; n_nodes * dim], dim);
    let processed = AtomicUsize::new(0);
    // One chunk per corpus keeps training single-threaded and fully
    // deterministic; the unsynchronized mode splits the corpus so several
    // threads update the shared vectors concurrently.
    let chunk_size = if cfg.parallel {
        walks
            .len()
            .div_ceil(rayon::current_num_threads().max(1) * 4)
            .max(1)
    } else {
        walks.len()
    };
    for epoch in 0..cfg.epochs {
        walks
            .par_chunks(chunk_size)
            .enumerate()
            .for_each(|(chunk_index, chunk)| {
                let stream = 1 + epoch as u64 * 1_000_003 + chunk_index as u64;
                let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, stream));
                let mut scratch = vec![0.0f64; dim];
                for walk in chunk {
                    train_walk(
                        walk,
                        &in_vecs,
                        &out_vecs,
                        &table,
                        cfg,
                        total_pairs,
                        &processed,
                        &mut rng,
                        &mut scratch,
                    );
                }
            });
    }
    let trained = DenseMatrix::from_vec(n_nodes, dim, in_vecs.into_values())?;
    if !trained.is_finite() {
        return Err(Error::Numeric(
            "embedding training produced non-finite values; lower the learning rate".to_string(),
        ));
    }
    Ok(trained)
}

#[allow(clippy::too_many_arguments)]
fn train_walk(
    walk: &[usize],
    in_vecs: &SharedVectors,
    out_vecs: &SharedVectors,
    table: &NegativeTable,
    cfg: &EmbeddingConfig,
    total_pairs: usize,
    processed: &AtomicUsize,
    rng: &mut ChaCha12Rng,
    scratch: &mut [f64],
) {
    let l = walk.len();
    for i in 0..l {
        let center = walk[i];
        let lo = i.saturating_sub(cfg.window);
        let hi = (i + cfg.window).min(l - 1);
        for j in lo..=hi {
            if j == i {
                continue;
            }
            let done = processed.fetch_add(1, Ordering::Relaxed);
            let progress = done as f64 / total_pairs as f64;
            let lr = cfg.learning_rate * (1.0 - progress).max(1e-4);
            train_pair(
                center,
                walk[j],
                lr,
                cfg.negatives,
                in_vecs,
                out_vecs,
                table,
                rng,
                scratch,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn train_pair(
    center: usize,
    context: usize,
    lr: f64,
    negatives: usize,
    in_vecs: &SharedVectors,
    out_vecs: &SharedVectors,
    table: &NegativeTable,
    rng: &mut ChaCha12Rng,
    scratch: &mut [f64],
) {
    scratch.fill(0.0);
    update_target(center, context, 1.0, lr, in_vecs, out_vecs, scratch);
    for _ in 0..negatives {
        let neg = table.sample(rng);
        if neg == context {
            continue;
        }
        update_target(center, neg, 0.0, lr, in_vecs, out_vecs, scratch);
    }
    for (j, delta) in scratch.iter().enumerate() {
        in_vecs.add(center, j, *delta);
    }
}

/// One gradient step on a single (center, target) example with the given
/// label. The output vector is updated in place; the center update is
/// accumulated into `scratch` so all targets of a pair see the same center.
fn update_target(
    center: usize,
    target: usize,
    label: f64,
    lr: f64,
    in_vecs: &SharedVectors,
    out_vecs: &SharedVectors,
    scratch: &mut [f64],
) {
    let dim = scratch.len();
    let mut dot = 0.0;
    for j in 0..dim {
        dot += in_vecs.get(center, j) * out_vecs.get(target, j);
    }
    let g = (label - sigmoid(dot)) * lr;
    for (j, acc) in scratch.iter_mut().enumerate() {
        let o = out_vecs.get(target, j);
        out_vecs.add(target, j, g * in_vecs.get(center, j));
        *acc += g * o;
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn mix_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sampler over nodes weighted by corpus frequency to the 3/4 power.
pub(crate) struct NegativeTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl NegativeTable {
    pub(crate) fn from_walks(walks: &[Vec<usize>], n_nodes: usize) -> NegativeTable {
        let mut counts = vec![0u64; n_nodes];
        for walk in walks {
            for &node in walk {
                counts[node] += 1;
            }
        }
        let mut cumulative = Vec::with_capacity(n_nodes);
        let mut acc = 0.0;
        for c in counts {
            acc += (c as f64).powf(0.75);
            cumulative.push(acc);
        }
        NegativeTable {
            cumulative,
            total: acc,
        }
    }

    /// Sampling weight of a node (unnormalized).
    #[cfg(test)]
    pub(crate) fn weight(&self, node: usize) -> f64 {
        let before = if node == 0 {
            0.0
        } else {
            self.cumulative[node - 1]
        };
        self.cumulative[node] - before
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> usize {
        let u: f64 = rng.gen::<f64>() * self.total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// Flat vector table shared across training threads. Updates are plain
/// read-add-write sequences on relaxed atomics: in single-threaded training
/// they are exact; in the unsynchronized parallel mode concurrent updates
/// may overwrite each other, which is the accepted trade-off of that mode.
struct SharedVectors {
    data: Vec<AtomicU64>,
    dim: usize,
}

impl SharedVectors {
    fn from_values(values: Vec<f64>, dim: usize) -> SharedVectors {
        SharedVectors {
            data: values
                .into_iter()
                .map(|v| AtomicU64::new(v.to_bits()))
                .collect(),
            dim,
        }
    }

    #[inline]
    fn get(&self, node: usize, j: usize) -> f64 {
        f64::from_bits(self.data[node * self.dim + j].load(Ordering::Relaxed))
    }

    #[inline]
    fn add(&self, node: usize, j: usize, delta: f64) {
        let cell = &self.data[node * self.dim + j];
        let v = f64::from_bits(cell.load(Ordering::Relaxed)) + delta;
        cell.store(v.to_bits(), Ordering::Relaxed);
    }

    fn into_values(self) -> Vec<f64> {
        self.data
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect()
    }
}
