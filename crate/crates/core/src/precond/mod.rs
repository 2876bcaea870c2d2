//! Matrix-free linear operators and the preconditioner compositions built from
//! dual pairings.

mod compose;

pub use compose::{CplPreconditioner, HigherOrderPreconditioner, PwcPreconditioner};

use crate::error::{shape, Result};

/// A real square operator applied to vectors.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y ← Op x`. Lengths are the caller's responsibility.
    fn apply_to(&self, x: &[f64], y: &mut [f64]);

    fn is_symmetric(&self) -> bool {
        true
    }

    /// Checked application returning a fresh vector.
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(shape("operator application", self.dim(), x.len()));
        }
        let mut y = vec![0.0; self.dim()];
        self.apply_to(x, &mut y);
        Ok(y)
    }

    /// Row-major dense materialisation, column by column.
    fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_to(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                out[i * n + j] = col[i];
            }
        }
        out
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_to(x, y)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
    fn to_dense(&self) -> Vec<f64> {
        (**self).to_dense()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_to(x, y)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
    fn to_dense(&self) -> Vec<f64> {
        (**self).to_dense()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_to(x, y)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
    fn to_dense(&self) -> Vec<f64> {
        (**self).to_dense()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// Diagonal matrix, stored by its entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    entries: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(entries: Vec<f64>) -> Self {
        DiagonalOperator { entries }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entrywise power `D^p`.
    pub fn powf(&self, p: f64) -> Self {
        DiagonalOperator::new(self.entries.iter().map(|x| x.powf(p)).collect())
    }

    pub fn inverse(&self) -> Self {
        self.powf(-1.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        DiagonalOperator::new(self.entries.iter().map(|x| a * x).collect())
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.entries.len()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.entries) {
            *yi = d * xi;
        }
    }
    fn to_dense(&self) -> Vec<f64> {
        let n = self.entries.len();
        let mut out = vec![0.0; n * n];
        for (i, d) in self.entries.iter().enumerate() {
            out[i * n + i] = *d;
        }
        out
    }
}

/// Sparse matrix in compressed rows; used for the incidence `p` and the
/// embedding `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from rows of `(column, value)` pairs.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in &rows {
            for &(c, v) in r {
                debug_assert!(c < n_cols);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix {
            n_rows: rows.len(),
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y ← M x`.
    pub fn mul_to(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `y ← Mᵀ x`.
    pub fn mul_transpose_to(&self, x: &[f64], y: &mut [f64]) {
        y[..self.n_cols].fill(0.0);
        for (i, xi) in x.iter().enumerate().take(self.n_rows) {
            for (c, v) in self.row(i) {
                y[c] += v * xi;
            }
        }
    }

    pub fn mul(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(shape("sparse product", self.n_cols, x.len()));
        }
        let mut y = vec![0.0; self.n_rows];
        self.mul_to(x, &mut y);
        Ok(y)
    }

    pub fn mul_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_rows {
            return Err(shape("sparse transpose product", self.n_rows, x.len()));
        }
        let mut y = vec![0.0; self.n_cols];
        self.mul_transpose_to(x, &mut y);
        Ok(y)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows * self.n_cols];
        for i in 0..self.n_rows {
            for (c, v) in self.row(i) {
                out[i * self.n_cols + c] += v;
            }
        }
        out
    }

    /// `row col value` lines, zero based.
    pub fn write_coordinate<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n_rows {
            for (c, v) in self.row(i) {
                writeln!(out, "{i} {c} {v}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn identity_and_zero() {
        let id = Identity(3);
        assert_eq!(id.apply(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        let d = DiagonalOperator::new(vec![2.0, 3.0]);
        assert_eq!(d.apply(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn apply_checks_shape() {
        let d = DiagonalOperator::new(vec![2.0, 3.0]);
        assert!(matches!(d.apply(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn sparse_products_agree_with_dense() {
        let m = SparseMatrix::from_rows(3, vec![vec![(0, 1.0), (2, 2.0)], vec![(1, -1.0)]]);
        let dense = m.to_dense();
        assert_eq!(dense, vec![1.0, 0.0, 2.0, 0.0, -1.0, 0.0]);
        assert_eq!(m.mul(&[1.0, 2.0, 3.0]).unwrap(), vec![7.0, -2.0]);
        assert_eq!(m.mul_transpose(&[1.0, 2.0]).unwrap(), vec![1.0, -2.0, 2.0]);
        let mut buf = Vec::new();
        m.write_coordinate(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 0 1\n0 2 2\n1 1 -1\n");
    }
}
