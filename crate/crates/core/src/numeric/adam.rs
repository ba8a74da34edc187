//! Adam optimizer over flat parameter tensors.

use crate::error::{Error, Result};

/// A trainable tensor: current values plus the accumulated gradient.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn new(value: Vec<f64>) -> Self {
        let grad = vec![0.0; value.len()];
        Self { value, grad }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }
}

/// Adam with bias-corrected first/second moment estimates.
#[derive(Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            moments: Vec::new(),
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    /// Apply one update using the gradients currently stored in `params`.
    /// Moment buffers are allocated lazily on the first call; the parameter
    /// list must keep the same shapes across calls.
    pub fn step(&mut self, params: &mut [Param]) -> Result<()> {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| (vec![0.0; p.len()], vec![0.0; p.len()]))
                .collect();
        }
        if self.moments.len() != params.len() {
            return Err(Error::shape(format!(
                "optimizer tracks {} tensors, got {}",
                self.moments.len(),
                params.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (param, (m, v)) in params.iter_mut().zip(self.moments.iter_mut()) {
            if param.len() != m.len() {
                return Err(Error::shape(format!(
                    "parameter length changed from {} to {}",
                    m.len(),
                    param.len()
                )));
            }
            for i in 0..param.value.len() {
                let g = param.grad[i];
                if !g.is_finite() {
                    return Err(Error::Numeric("non-finite gradient in optimizer step".into()));
                }
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                param.value[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_values_unchanged() {
        let mut params = vec![Param::new(vec![1.0, -2.0, 3.0])];
        let mut opt = Adam::new(0.1);
        opt.step(&mut params).unwrap();
        assert_eq!(params[0].value, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_signed_learning_rate() {
        // With bias correction the first update is -lr * g / (|g| + eps).
        let mut params = vec![Param::new(vec![0.0, 0.0])];
        params[0].grad = vec![2.0, -0.5];
        let mut opt = Adam::new(0.01);
        opt.step(&mut params).unwrap();
        assert!((params[0].value[0] - (-0.01)).abs() < 1e-8);
        assert!((params[0].value[1] - 0.01).abs() < 1e-8);
    }

    #[test]
    fn converges_on_a_quadratic() {
        // f(x) = (x - 3)^2, gradient 2(x - 3). Momentum may overshoot on
        // individual steps, so only the overall trajectory is asserted.
        let mut params = vec![Param::new(vec![0.0])];
        let mut opt = Adam::new(0.1);
        for _ in 0..300 {
            let x = params[0].value[0];
            params[0].grad[0] = 2.0 * (x - 3.0);
            opt.step(&mut params).unwrap();
        }
        let f = (params[0].value[0] - 3.0).powi(2);
        assert!(f < 1e-2, "final objective {f}");
    }

    #[test]
    fn identical_runs_are_identical() {
        let run = || {
            let mut params = vec![Param::new(vec![0.3, -0.7])];
            let mut opt = Adam::new(0.05);
            for step in 0..10 {
                params[0].grad = vec![(step as f64).sin(), (step as f64).cos()];
                opt.step(&mut params).unwrap();
            }
            params[0].value.clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut params = vec![Param::new(vec![0.0])];
        params[0].grad = vec![f64::NAN];
        let mut opt = Adam::new(0.1);
        assert!(opt.step(&mut params).is_err());
    }
}
