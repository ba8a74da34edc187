//! Residue embeddings learned from biased second-order random walks over
//! contact graphs, trained with skip-gram negative sampling, plus the
//! per-residue feature assembly (embedding concatenated with a one-hot
//! amino-acid encoding).

mod features;
mod skipgram;
mod walks;

pub use features::{residue_features, AMINO_ACID_ALPHABET, ONE_HOT_WIDTH};
pub use skipgram::train_skipgram;
pub use walks::{generate_walks, transition_probs};

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// Parameters of the biased random walk.
///
/// `p` is the return parameter: the bias applied to stepping back to the
/// node visited immediately before the current one. `q` is the in-out
/// parameter: the bias applied to stepping to a node not adjacent to the
/// previous one. Candidates adjacent to the previous node keep weight 1.
#[derive(Debug, Clone)]
pub struct WalkConfig {
    /// Return parameter; larger values discourage revisiting the previous node.
    pub p: f64,
    /// In-out parameter; larger values keep the walk close to its origin.
    pub q: f64,
    /// Number of nodes in each walk (the start node counts).
    pub walk_length: usize,
    /// How many walks to start from every node.
    pub walks_per_node: usize,
    /// Master seed; each walk derives its own independent stream from it.
    pub seed: u64,
    /// When set, every step takes the highest-probability candidate
    /// (ties broken towards the lowest node index) instead of sampling.
    pub greedy: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 1.0,
            q: 1.0,
            walk_length: 40,
            walks_per_node: 10,
            seed: 0,
            greedy: false,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::Config(format!(
                "return parameter p must be positive and finite, got {}",
                self.p
            )));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::Config(format!(
                "in-out parameter q must be positive and finite, got {}",
                self.q
            )));
        }
        if self.walk_length < 2 {
            return Err(Error::Config(format!(
                "walk length must be at least 2 nodes, got {}",
                self.walk_length
            )));
        }
        if self.walks_per_node == 0 {
            return Err(Error::Config(
                "walks per node must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Parameters of skip-gram training with negative sampling.
#[derive(Debug, Clone)]
pub struct EmbeddingConfig {
    /// Embedding dimensionality.
    pub dim: usize,
    /// Context window radius on each side of the center node.
    pub window: usize,
    /// Negative samples drawn per (center, context) pair.
    pub negatives: usize,
    /// Passes over the walk corpus. Zero passes return the initialization
    /// untouched.
    pub epochs: usize,
    /// Initial learning rate, decayed linearly over all updates.
    pub learning_rate: f64,
    /// Seed for initialization and sampling.
    pub seed: u64,
    /// Train with multiple threads performing unsynchronized (lock-free)
    /// updates. Faster on large corpora but NOT deterministic: concurrent
    /// updates race and results vary between runs. The default
    /// single-threaded mode is fully reproducible.
    pub parallel: bool,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
            parallel: false,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config(
                "embedding dimension must be at least 1".to_string(),
            ));
        }
        if self.window == 0 {
            return Err(Error::Config(
                "context window must be at least 1".to_string(),
            ));
        }
        if self.negatives == 0 {
            return Err(Error::Config(
                "negative sample count must be at least 1".to_string(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Render embeddings as one line per node: the node index followed by the
/// vector components, space-separated with six decimal places.
pub fn embeddings_to_string(embeddings: &DenseMatrix) -> String {
    let mut out = String::new();
    for r in 0..embeddings.rows() {
        out.push_str(&r.to_string());
        for v in embeddings.row(r) {
            out.push_str(&format!(" {v:.6}"));
        }
        out.push('\n');
    }
    out
}

/// Parse the line format written by [`embeddings_to_string`]. Node indices
/// must cover 0..n exactly once; every row must have the same width.
pub fn parse_embeddings(text: &str) -> Result<DenseMatrix> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let id: usize = fields
            .next()
            .expect("split of a non-empty line yields at least one field")
            .parse()
            .map_err(|_| Error::parse(lineno + 1, "node index is not an integer"))?;
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(lineno + 1, format!("bad component {f:?}")))
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::parse(lineno + 1, "row has no vector components"));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::parse(
                    lineno + 1,
                    format!("row width {} does not match earlier width {d}", values.len()),
                ));
            }
            Some(_) => {}
        }
        rows.push((id, values));
    }
    rows.sort_by_key(|(id, _)| *id);
    for (expect, (id, _)) in rows.iter().enumerate() {
        if *id != expect {
            return Err(Error::Format(format!(
                "node indices must cover 0..{} exactly once; found {id} where {expect} was expected",
                rows.len()
            )));
        }
    }
    let data: Vec<f64> = rows.into_iter().flat_map(|(_, v)| v).collect();
    let d = dim.unwrap_or(0);
    let n = if d == 0 { 0 } else { data.len() / d };
    DenseMatrix::from_vec(n, d, data)
}
