//! Compressed-row sparse matrix.

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// CSR matrix: `offsets` has `rows + 1` entries, column indices are sorted and
/// unique within each row, and all values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::shape(format!(
                    "triplet ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite value at ({r}, {c})")));
            }
            per_row[r].push((c, v));
        }
        let mut offsets = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            offsets.push(indices.len());
        }
        Ok(SparseMatrix {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.offsets[r], self.offsets[r + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Position of entry (r, c) in the value array, if present.
    pub fn find(&self, r: usize, c: usize) -> Option<usize> {
        let (s, e) = (self.offsets[r], self.offsets[r + 1]);
        self.indices[s..e].binary_search(&c).ok().map(|i| s + i)
    }

    /// Sparse * dense product.
    pub fn spmm(&self, dense: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != dense.rows() {
            return Err(Error::shape(format!(
                "spmm {}x{} * {}x{}",
                self.rows,
                self.cols,
                dense.rows(),
                dense.cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, dense.cols());
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let src = dense.row(c);
                let dst = out.row_mut(r);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        Ok(out)
    }

    /// Gradients of `Y = S * D`: accumulates `dD += S^T * dY` and, when
    /// `d_values` is given (learnable attention weights), also
    /// `dS[r, c] += dot(dY[r, :], D[c, :])` for every stored entry.
    pub fn spmm_backward(
        &self,
        dense: &DenseMatrix,
        d_out: &DenseMatrix,
        d_dense: &mut DenseMatrix,
        mut d_values: Option<&mut [f64]>,
    ) -> Result<()> {
        if d_out.shape() != (self.rows, dense.cols()) {
            return Err(Error::shape(format!(
                "spmm_backward upstream {}x{}, expected {}x{}",
                d_out.rows(),
                d_out.cols(),
                self.rows,
                dense.cols()
            )));
        }
        if let Some(ref dv) = d_values {
            if dv.len() != self.values.len() {
                return Err(Error::shape("spmm_backward d_values length"));
            }
        }
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let g_row = d_out.row(r);
            for (k, (&c, &v)) in cols.iter().zip(vals).enumerate() {
                let dst = d_dense.row_mut(c);
                for (d, &g) in dst.iter_mut().zip(g_row) {
                    *d += v * g;
                }
                if let Some(ref mut dv) = d_values {
                    let mut acc = 0.0;
                    for (&g, &x) in g_row.iter().zip(dense.row(c)) {
                        acc += g * x;
                    }
                    dv[self.offsets[r] + k] += acc;
                }
            }
        }
        Ok(())
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols];
        for &c in &self.indices {
            counts[c] += 1;
        }
        let mut offsets = Vec::with_capacity(self.cols + 1);
        offsets.push(0);
        for c in 0..self.cols {
            offsets.push(offsets[c] + counts[c]);
        }
        let mut cursor = offsets.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let pos = cursor[c];
                indices[pos] = r;
                values[pos] = v;
                cursor[c] += 1;
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            offsets,
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(r, c, v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn sparse_identity_times_matrix() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let i = SparseMatrix::identity(2);
        assert_eq!(i.spmm(&m).unwrap(), m);
    }

    #[test]
    fn empty_row_gives_zero_output_row() {
        let s = SparseMatrix::from_triplets(2, 2, [(1, 0, 3.0)]).unwrap();
        let m = DenseMatrix::from_rows(&[vec![5.0], vec![7.0]]).unwrap();
        let out = s.spmm(&m).unwrap();
        assert_eq!(out.row(0), &[0.0]);
        assert_eq!(out.row(1), &[15.0]);
    }

    #[test]
    fn permutation_matrix_swaps_rows() {
        let s = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let m = DenseMatrix::from_rows(&[vec![3.0], vec![9.0]]).unwrap();
        let out = s.spmm(&m).unwrap();
        assert_eq!(out.values(), &[9.0, 3.0]);
    }

    #[test]
    fn duplicate_triplets_are_summed_and_sorted() {
        let s = SparseMatrix::from_triplets(1, 3, [(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5)]).unwrap();
        let (cols, vals) = s.row(0);
        assert_eq!(cols, &[0, 2]);
        assert_eq!(vals, &[2.0, 1.5]);
    }

    #[test]
    fn sparse_matches_dense_on_random_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let rows = rng.gen_range(1..=20);
            let inner = rng.gen_range(1..=20);
            let cols = rng.gen_range(1..=6);
            let mut triplets = Vec::new();
            for r in 0..rows {
                for c in 0..inner {
                    if rng.gen_bool(0.3) {
                        triplets.push((r, c, rng.gen_range(-2.0..2.0)));
                    }
                }
            }
            let s = SparseMatrix::from_triplets(rows, inner, triplets).unwrap();
            let mut d = DenseMatrix::zeros(inner, cols);
            for v in d.values_mut() {
                *v = rng.gen_range(-2.0..2.0);
            }
            let sparse_out = s.spmm(&d).unwrap();
            let dense_out = s.to_dense().matmul(&d).unwrap();
            for (a, b) in sparse_out.values().iter().zip(dense_out.values()) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn transpose_round_trip() {
        let s =
            SparseMatrix::from_triplets(3, 2, [(0, 1, 1.0), (2, 0, -2.0), (1, 1, 0.5)]).unwrap();
        assert_eq!(s.transpose().transpose(), s);
        assert_eq!(s.transpose().to_dense(), s.to_dense().transpose());
    }
}
