//! Elementwise activations with matching backward passes.

use crate::numeric::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Tanh,
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(slope) => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at pre-activation input `x`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(slope) => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }

    pub fn forward(self, x: &DenseMatrix) -> DenseMatrix {
        x.map(|v| self.apply(v))
    }

    /// Upstream gradient times the derivative at the cached pre-activation.
    pub fn backward(self, pre: &DenseMatrix, d_out: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(pre.shape(), d_out.shape());
        let mut out = d_out.clone();
        for (g, &x) in out.values_mut().iter_mut().zip(pre.values()) {
            *g *= self.derivative(x);
        }
        out
    }
}
