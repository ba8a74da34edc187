//! Finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::numeric::Param;

/// Compare the gradients stored in `params` against central finite
/// differences of `f`. For each tensor up to `max_coords_per_param`
/// coordinates are sampled (seeded, so runs are repeatable) and the worst
/// relative error across all sampled coordinates is returned.
///
/// The relative error uses a floored denominator so that near-zero gradient
/// pairs are compared absolutely rather than amplified.
pub fn finite_difference_check<F>(
    mut f: F,
    params: &mut [Param],
    h: f64,
    max_coords_per_param: usize,
    seed: u64,
) -> Result<f64>
where
    F: FnMut(&[Param]) -> f64,
{
    if h <= 0.0 {
        return Err(Error::Config(format!("step size must be positive, got {h}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for p in 0..params.len() {
        let len = params[p].len();
        if len == 0 {
            continue;
        }
        let take = max_coords_per_param.min(len).max(1);
        let coords = sample(&mut rng, len, take);
        for i in coords {
            let analytic = params[p].grad[i];
            let original = params[p].value[i];
            params[p].value[i] = original + h;
            let f_plus = f(params);
            params[p].value[i] = original - h;
            let f_minus = f(params);
            params[p].value[i] = original;
            if !f_plus.is_finite() || !f_minus.is_finite() {
                return Err(Error::Numeric(format!(
                    "objective not finite near parameter {p} coordinate {i}"
                )));
            }
            let fd = (f_plus - f_minus) / (2.0 * h);
            let denom = (fd.abs() + analytic.abs()).max(1e-3);
            let rel = (fd - analytic).abs() / denom;
            if rel > worst {
                worst = rel;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{bce_loss, sigmoid, DenseMatrix, Reduction};

    #[test]
    fn linear_function_is_exact() {
        // f = sum(3 * x) has constant gradient 3 everywhere.
        let mut params = vec![Param::new(vec![0.5, -1.2, 2.0])];
        params[0].grad = vec![3.0; 3];
        let worst = finite_difference_check(
            |ps| ps[0].value.iter().map(|&v| 3.0 * v).sum(),
            &mut params,
            1e-5,
            8,
            11,
        )
        .unwrap();
        assert!(worst <= 1e-9, "worst {worst}");
    }

    #[test]
    fn logistic_loss_toy_model_matches() {
        // Scalar model: p = sigmoid(w * x + b) against a single target.
        let x = 0.7;
        let t = 1.0;
        let objective = |ps: &[Param]| {
            let w = ps[0].value[0];
            let b = ps[0].value[1];
            let p = sigmoid(w * x + b);
            let pred = DenseMatrix::from_rows(&[vec![p]]).unwrap();
            let target = DenseMatrix::from_rows(&[vec![t]]).unwrap();
            bce_loss(&pred, &target, Reduction::Sum).unwrap().0
        };
        let mut params = vec![Param::new(vec![0.4, -0.2])];
        // d_logit = p - t; chain through the linear map
        let p = sigmoid(0.4 * x + (-0.2));
        params[0].grad = vec![(p - t) * x, p - t];
        let worst = finite_difference_check(objective, &mut params, 1e-5, 4, 5).unwrap();
        assert!(worst <= 1e-4, "worst {worst}");
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let mut params = vec![Param::new(vec![1.0, 2.0])];
        params[0].grad = vec![3.0, 3.5]; // second coordinate off by 0.5
        let worst = finite_difference_check(
            |ps| ps[0].value.iter().map(|&v| 3.0 * v).sum(),
            &mut params,
            1e-5,
            4,
            3,
        )
        .unwrap();
        assert!(worst >= 1e-2, "worst {worst}");
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let mut params = vec![Param::new(vec![0.0])];
        let err = finite_difference_check(|_| f64::NAN, &mut params, 1e-5, 1, 1);
        assert!(err.is_err());
    }

    #[test]
    fn restores_parameter_values() {
        let mut params = vec![Param::new(vec![1.5, -2.5])];
        params[0].grad = vec![1.0, 1.0];
        finite_difference_check(
            |ps| ps[0].value.iter().sum(),
            &mut params,
            1e-5,
            2,
            1,
        )
        .unwrap();
        assert_eq!(params[0].value, vec![1.5, -2.5]);
    }
}
