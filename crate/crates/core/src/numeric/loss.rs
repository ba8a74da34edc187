//! Binary cross-entropy over probability matrices.

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// Clamp bound keeping log() finite; gradients vanish outside the open range.
const CLAMP: f64 = 1e-7;

/// How per-element losses are combined into the scalar objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// Total over every element.
    Sum,
    /// Total divided by the number of contributing elements.
    Mean,
}

/// Binary cross-entropy of predicted probabilities against 0/1 targets.
/// Returns the reduced loss and the gradient with respect to the predictions.
pub fn bce_loss(
    pred: &DenseMatrix,
    target: &DenseMatrix,
    reduction: Reduction,
) -> Result<(f64, DenseMatrix)> {
    let all = vec![true; pred.rows()];
    bce_loss_masked(pred, target, &all, reduction)
}

/// Binary cross-entropy restricted to rows with `row_mask[r] == true`.
/// Masked-out rows contribute nothing to the loss and get zero gradient.
pub fn bce_loss_masked(
    pred: &DenseMatrix,
    target: &DenseMatrix,
    row_mask: &[bool],
    reduction: Reduction,
) -> Result<(f64, DenseMatrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(format!(
            "bce prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if row_mask.len() != pred.rows() {
        return Err(Error::shape(format!(
            "bce row mask length {} vs {} rows",
            row_mask.len(),
            pred.rows()
        )));
    }
    let mut total = 0.0;
    let mut grad = DenseMatrix::zeros(pred.rows(), pred.cols());
    let mut counted = 0usize;
    for r in 0..pred.rows() {
        if !row_mask[r] {
            continue;
        }
        counted += pred.cols();
        let p_row = pred.row(r);
        let t_row = target.row(r);
        let g_row = grad.row_mut(r);
        for c in 0..p_row.len() {
            let t = t_row[c];
            let clamped = p_row[c].clamp(CLAMP, 1.0 - CLAMP);
            total -= t * clamped.ln() + (1.0 - t) * (1.0 - clamped).ln();
            // The clamp is part of the function: outside the open interval the
            // loss is locally constant in the raw prediction.
            if p_row[c] > CLAMP && p_row[c] < 1.0 - CLAMP {
                g_row[c] = (clamped - t) / (clamped * (1.0 - clamped));
            }
        }
    }
    if !total.is_finite() {
        return Err(Error::Numeric("binary cross-entropy diverged".into()));
    }
    match reduction {
        Reduction::Sum => Ok((total, grad)),
        Reduction::Mean => {
            let n = counted.max(1) as f64;
            grad.scale(1.0 / n);
            Ok((total / n, grad))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_near_zero() {
        let t = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (loss, _) = bce_loss(&t, &t, Reduction::Sum).unwrap();
        assert!(loss >= 0.0);
        assert!(loss <= 4.0 * 1e-5, "loss {loss}");
    }

    #[test]
    fn uniform_half_gives_ln_two_per_element() {
        let pred = DenseMatrix::filled(2, 3, 0.5);
        let target = DenseMatrix::from_rows(&[vec![1.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let (sum, _) = bce_loss(&pred, &target, Reduction::Sum).unwrap();
        assert!((sum - 6.0 * std::f64::consts::LN_2).abs() < 1e-12);
        let (mean, _) = bce_loss(&pred, &target, Reduction::Mean).unwrap();
        assert!((mean - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pred = DenseMatrix::from_rows(&[vec![0.3, 0.8], vec![0.6, 0.1]]).unwrap();
        let target = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (_, grad) = bce_loss(&pred, &target, Reduction::Sum).unwrap();
        let h = 1e-6;
        for r in 0..2 {
            for c in 0..2 {
                let mut plus = pred.clone();
                plus.set(r, c, pred.get(r, c) + h);
                let mut minus = pred.clone();
                minus.set(r, c, pred.get(r, c) - h);
                let (lp, _) = bce_loss(&plus, &target, Reduction::Sum).unwrap();
                let (lm, _) = bce_loss(&minus, &target, Reduction::Sum).unwrap();
                let fd = (lp - lm) / (2.0 * h);
                assert!(
                    (fd - grad.get(r, c)).abs() < 1e-4,
                    "({r},{c}) fd {fd} vs {}",
                    grad.get(r, c)
                );
            }
        }
    }

    #[test]
    fn masked_rows_do_not_contribute() {
        let pred = DenseMatrix::from_rows(&[vec![0.9, 0.2], vec![0.5, 0.5]]).unwrap();
        let target = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let (loss, grad) = bce_loss_masked(&pred, &target, &[true, false], Reduction::Sum).unwrap();
        let only_first =
            bce_loss_masked(&pred, &target, &[true, true], Reduction::Sum).unwrap().0
                - bce_loss_masked(&pred, &target, &[false, true], Reduction::Sum).unwrap().0;
        assert!((loss - only_first).abs() < 1e-12);
        assert_eq!(grad.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn extreme_predictions_stay_finite_with_zero_gradient() {
        let pred = DenseMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let target = DenseMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let (loss, grad) = bce_loss(&pred, &target, Reduction::Sum).unwrap();
        assert!(loss.is_finite());
        assert_eq!(grad.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = DenseMatrix::zeros(2, 2);
        let b = DenseMatrix::zeros(2, 3);
        assert!(bce_loss(&a, &b, Reduction::Sum).is_err());
        assert!(bce_loss_masked(&a, &a, &[true], Reduction::Sum).is_err());
    }
}
