//! Minimal dense/sparse linear algebra with hand-derived gradients.
//!
//! There is no autodiff tape: the model set is small and fixed, so each layer
//! exposes an explicit forward and backward. Everything is `f64`.

mod activation;
mod adam;
mod dense;
mod dropout;
mod gradcheck;
mod loss;
mod norm;
mod sparse;

pub use activation::{sigmoid, Activation};
pub use adam::{Adam, Param};
pub use dense::{matmul_backward, DenseMatrix};
pub use dropout::dropout_mask;
pub use gradcheck::finite_difference_check;
pub use loss::{bce_loss, bce_loss_masked, Reduction};
pub use norm::{layer_norm_backward, layer_norm_forward, LayerNormCache, LAYER_NORM_EPS};
pub use sparse::SparseMatrix;
