//! Multi-species protein function prediction at desk scale.
//!
//! The pipeline turns protein structures into residue contact graphs, embeds
//! residues with biased random walks, trains a graph-convolution-pooling model
//! to produce protein-level structural features, concatenates those with
//! sequence features, and propagates everything through a heterogeneous
//! PPI + homology network with learned edge attention. At prediction time the
//! same attention matrices diffuse training labels to unannotated proteins and
//! the two signals are fused. Evaluation is CAFA-style (Fmax, Smin, AUPR plus
//! information-content-weighted variants).
//!
//! All arithmetic is plain `f64`, gradients are hand-derived per layer, and
//! every random choice flows from one master seed, so end-to-end runs are
//! reproducible bit for bit.

pub mod contact;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod node2vec;
pub mod numeric;
pub mod ontology;
pub mod pipeline;
pub mod prediction;
pub mod propagation;
pub(crate) mod serial;
pub mod structure;

pub use error::{Error, Result};
