//! Per-residue feature assembly: learned embedding concatenated with a
//! one-hot encoding of the amino-acid letter.

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// Recognized residue letters, in one-hot column order: the twenty
/// canonical amino acids alphabetically, then the ambiguity codes B and Z,
/// the rare U (selenocysteine) and O (pyrrolysine), and the catch-all X.
pub const AMINO_ACID_ALPHABET: [char; 25] = [
    'A', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'K', 'L', 'M', 'N', 'P', 'Q', 'R', 'S', 'T', 'V',
    'W', 'Y', 'B', 'Z', 'U', 'O', 'X',
];

/// Width of the one-hot block appended to each embedding.
pub const ONE_HOT_WIDTH: usize = AMINO_ACID_ALPHABET.len();

/// Concatenate each residue's embedding with the one-hot encoding of its
/// letter. Row `i` of the result is `embedding[i] || one_hot(letters[i])`.
/// Letters are case-folded; anything outside the alphabet is treated as X
/// with a warning.
pub fn residue_features(embeddings: &DenseMatrix, letters: &[char]) -> Result<DenseMatrix> {
    if embeddings.rows() != letters.len() {
        return Err(Error::shape(format!(
            "{} embeddings for {} residue letters",
            embeddings.rows(),
            letters.len()
        )));
    }
    let d = embeddings.cols();
    let mut out = DenseMatrix::zeros(letters.len(), d + ONE_HOT_WIDTH);
    for (i, &ch) in letters.iter().enumerate() {
        let upper = ch.to_ascii_uppercase();
        let idx = AMINO_ACID_ALPHABET
            .iter()
            .position(|&a| a == upper)
            .unwrap_or_else(|| {
                log::warn!("unknown residue letter {ch:?}; encoding as X");
                ONE_HOT_WIDTH - 1
            });
        let row = out.row_mut(i);
        row[..d].copy_from_slice(embeddings.row(i));
        row[d + idx] = 1.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_positions_are_stable() {
        assert_eq!(AMINO_ACID_ALPHABET[0], 'A');
        assert_eq!(AMINO_ACID_ALPHABET[1], 'C');
        assert_eq!(AMINO_ACID_ALPHABET[19], 'Y');
        assert_eq!(AMINO_ACID_ALPHABET[24], 'X');
        assert_eq!(ONE_HOT_WIDTH, 25);
    }

    #[test]
    fn embedding_block_is_copied_and_one_hot_set() {
        let emb = DenseMatrix::from_rows(&[vec![0.5, -1.0], vec![2.0, 3.0]]).unwrap();
        let f = residue_features(&emb, &['A', 'Y']).unwrap();
        assert_eq!(f.shape(), (2, 2 + 25));
        assert_eq!(&f.row(0)[..2], &[0.5, -1.0]);
        assert_eq!(&f.row(1)[..2], &[2.0, 3.0]);
        assert_eq!(f.get(0, 2), 1.0); // 'A' is column 0 of the one-hot block
        assert_eq!(f.row(0)[3..].iter().sum::<f64>(), 0.0);
        assert_eq!(f.get(1, 2 + 19), 1.0); // 'Y' is the last canonical letter
    }

    #[test]
    fn unknown_and_lowercase_letters() {
        let emb = DenseMatrix::zeros(3, 1);
        let f = residue_features(&emb, &['J', 'a', '*']).unwrap();
        assert_eq!(f.get(0, 1 + 24), 1.0); // 'J' falls back to X
        assert_eq!(f.get(1, 1), 1.0); // 'a' folds to 'A'
        assert_eq!(f.get(2, 1 + 24), 1.0);
        for r in 0..3 {
            let ones: f64 = f.row(r)[1..].iter().sum();
            assert_eq!(ones, 1.0);
        }
    }

    #[test]
    fn row_count_mismatch_is_rejected() {
        let emb = DenseMatrix::zeros(2, 4);
        assert!(matches!(
            residue_features(&emb, &['A']),
            Err(Error::Shape(_))
        ));
    }
}
