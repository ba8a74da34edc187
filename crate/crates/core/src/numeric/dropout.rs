//! Inverted dropout masks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// Build a multiplicative dropout mask. Kept entries are scaled by
/// `1 / (1 - rate)` so the expected activation is unchanged; when `training`
/// is false (or the rate is zero) the mask is all ones.
pub fn dropout_mask<R: Rng>(
    rows: usize,
    cols: usize,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<DenseMatrix> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok(DenseMatrix::filled(rows, cols, 1.0));
    }
    let keep_scale = 1.0 / (1.0 - rate);
    let mut mask = DenseMatrix::zeros(rows, cols);
    for v in mask.values_mut() {
        if rng.gen::<f64>() >= rate {
            *v = keep_scale;
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn eval_mode_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let mask = dropout_mask(3, 4, 0.5, false, &mut rng).unwrap();
        assert!(mask.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mask = dropout_mask(3, 4, 0.0, true, &mut rng).unwrap();
        assert!(mask.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn invalid_rate_rejected() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        assert!(dropout_mask(2, 2, 1.0, true, &mut rng).is_err());
        assert!(dropout_mask(2, 2, -0.1, true, &mut rng).is_err());
    }

    #[test]
    fn kept_entries_are_scaled_and_fraction_is_plausible() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let rate = 0.5;
        let mask = dropout_mask(100, 100, rate, true, &mut rng).unwrap();
        let scale = 1.0 / (1.0 - rate);
        let mut kept = 0usize;
        for &v in mask.values() {
            assert!(v == 0.0 || (v - scale).abs() < 1e-12);
            if v != 0.0 {
                kept += 1;
            }
        }
        let frac = kept as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.05, "kept fraction {frac}");
    }

    #[test]
    fn same_seed_same_mask() {
        let a = dropout_mask(8, 8, 0.3, true, &mut ChaCha12Rng::seed_from_u64(9)).unwrap();
        let b = dropout_mask(8, 8, 0.3, true, &mut ChaCha12Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
