//! Structural encoder: stacked graph-convolution + self-attention pooling
//! modules over residue contact graphs, trained against GO labels through a
//! small classifier MLP, then stripped to emit one protein-level feature
//! vector per protein (the sum of the modules' readouts, taken before the
//! classifier).

mod layers;
mod model;
mod train;

pub use layers::{attention_scores, gcn_layer, pool_subgraph, readout, top_select, ReadoutMode};
pub use model::{struct_forward, GraphInput, StructItem, StructMeta, StructModel};
pub use train::{extract_hidden, struct_train, verify_training_gradients, TrainReport};

use crate::error::{Error, Result};
use crate::numeric::Activation;

/// Hyper-parameters of the structural encoder and its training loop.
#[derive(Debug, Clone)]
pub struct StructConfig {
    /// Width of every convolution layer's output (the protein feature is
    /// twice this wide).
    pub d2: usize,
    /// Convolution layers per module.
    pub conv_layers: usize,
    /// Number of stacked convolution-pooling modules.
    pub modules: usize,
    /// Fraction of nodes kept at each pooling step, in (0, 1].
    pub pool_rate: f64,
    /// Dropout rate inside the classifier MLP (training only).
    pub dropout: f64,
    /// Activation after each convolution.
    pub conv_activation: Activation,
    /// Activation for node scores.
    pub score_activation: Activation,
    /// How pooled node features collapse into one vector.
    pub readout: ReadoutMode,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for StructConfig {
    fn default() -> Self {
        StructConfig {
            d2: 512,
            conv_layers: 3,
            modules: 2,
            pool_rate: 0.75,
            dropout: 0.5,
            conv_activation: Activation::Relu,
            score_activation: Activation::Tanh,
            readout: ReadoutMode::MeanMax,
            learning_rate: 5e-4,
            epochs: 20,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl StructConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d2 == 0 {
            return Err(Error::Config("hidden width must be at least 1".to_string()));
        }
        if self.conv_layers == 0 {
            return Err(Error::Config(
                "at least one convolution layer per module is required".to_string(),
            ));
        }
        if self.modules == 0 {
            return Err(Error::Config(
                "at least one convolution-pooling module is required".to_string(),
            ));
        }
        if !(self.pool_rate > 0.0 && self.pool_rate <= 1.0) {
            return Err(Error::Config(format!(
                "pool rate must be in (0, 1], got {}",
                self.pool_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".to_string()));
        }
        Ok(())
    }
}
