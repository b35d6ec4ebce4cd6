//! System matrices seen by the factorizations.
//!
//! The standard-form matrix `Wd·G·W⁻¹` is never formed: [`ScaledKernel`]
//! applies the two diagonal scalings around products with the stored
//! kernel and counts every pass it makes over that kernel.

use alloc::vec::Vec;
use core::cell::Cell;

use nalgebra::DMatrix;

use crate::kernel::KernelMatrix;
use crate::linalg::{self, MatRef};
use crate::{Error, Result};

/// Linear map with block and vector products.
pub trait SystemMatrix {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A·X` for an n×k block.
    fn mul_block(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Aᵀ·Y` for an m×k block.
    fn tr_mul_block(&self, y: &DMatrix<f64>) -> DMatrix<f64>;
    fn mul_vec(&self, x: &[f64]) -> Vec<f64>;
    fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64>;
    /// Materialized m×n matrix.
    fn to_dense(&self) -> DMatrix<f64>;
}

impl SystemMatrix for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn mul_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::matmul(self.into(), x.into())
    }

    fn tr_mul_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::matmul(MatRef::from(self).t(), y.into())
    }

    fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        linalg::matvec(self.into(), x)
    }

    fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        linalg::matvec(MatRef::from(self).t(), y)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

/// Passes made over the stored kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VisitCounts {
    /// Block products `A·X` or `Aᵀ·Y` (one pass each regardless of width).
    pub block_products: usize,
    pub forward_products: usize,
    pub transpose_products: usize,
    pub densifications: usize,
}

impl VisitCounts {
    /// Total passes over the full matrix.
    pub fn matrix_visits(&self) -> usize {
        self.block_products + self.forward_products + self.transpose_products + self.densifications
    }
}

/// `diag(row_scale) · G · diag(col_scale)` applied implicitly.
#[derive(Debug)]
pub struct ScaledKernel<'a> {
    kernel: &'a KernelMatrix,
    row_scale: &'a [f64],
    col_scale: Vec<f64>,
    visits: Cell<VisitCounts>,
}

impl<'a> ScaledKernel<'a> {
    pub fn new(kernel: &'a KernelMatrix, row_scale: &'a [f64], col_scale: Vec<f64>) -> Result<Self> {
        if row_scale.len() != kernel.nrows() {
            return Err(Error::DimensionMismatch {
                context: "row scaling",
                expected: kernel.nrows(),
                found: row_scale.len(),
            });
        }
        if col_scale.len() != kernel.ncols() {
            return Err(Error::DimensionMismatch {
                context: "column scaling",
                expected: kernel.ncols(),
                found: col_scale.len(),
            });
        }
        Ok(ScaledKernel {
            kernel,
            row_scale,
            col_scale,
            visits: Cell::new(VisitCounts::default()),
        })
    }

    pub fn visits(&self) -> VisitCounts {
        self.visits.get()
    }

    pub fn reset_visits(&self) {
        self.visits.set(VisitCounts::default());
    }

    fn bump(&self, f: impl FnOnce(&mut VisitCounts)) {
        let mut v = self.visits.get();
        f(&mut v);
        self.visits.set(v);
    }
}

fn scale_rows(m: &mut DMatrix<f64>, s: &[f64]) {
    for mut col in m.column_iter_mut() {
        for (x, f) in col.iter_mut().zip(s) {
            *x *= f;
        }
    }
}

impl SystemMatrix for ScaledKernel<'_> {
    fn nrows(&self) -> usize {
        self.kernel.nrows()
    }

    fn ncols(&self) -> usize {
        self.kernel.ncols()
    }

    fn mul_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.bump(|v| v.block_products += 1);
        let mut scaled = x.clone();
        scale_rows(&mut scaled, &self.col_scale);
        let mut out = linalg::matmul(self.kernel.view(), (&scaled).into());
        scale_rows(&mut out, self.row_scale);
        out
    }

    fn tr_mul_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.bump(|v| v.block_products += 1);
        let mut scaled = y.clone();
        scale_rows(&mut scaled, self.row_scale);
        let mut out = linalg::matmul(self.kernel.view().t(), (&scaled).into());
        scale_rows(&mut out, &self.col_scale);
        out
    }

    fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.bump(|v| v.forward_products += 1);
        let scaled: Vec<f64> = x.iter().zip(&self.col_scale).map(|(a, b)| a * b).collect();
        let mut out = linalg::matvec(self.kernel.view(), &scaled);
        for (o, s) in out.iter_mut().zip(self.row_scale) {
            *o *= s;
        }
        out
    }

    fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        self.bump(|v| v.transpose_products += 1);
        let scaled: Vec<f64> = y.iter().zip(self.row_scale).map(|(a, b)| a * b).collect();
        let mut out = linalg::matvec(self.kernel.view().t(), &scaled);
        for (o, s) in out.iter_mut().zip(&self.col_scale) {
            *o *= s;
        }
        out
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.bump(|v| v.densifications += 1);
        let (m, n) = (self.nrows(), self.ncols());
        DMatrix::from_fn(m, n, |i, j| self.row_scale[i] * self.kernel.get(i, j) * self.col_scale[j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn scaled_products_match_dense() {
        let kernel =
            KernelMatrix::from_row_major(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let rows = [2.0, 0.5];
        let op = ScaledKernel::new(&kernel, &rows, vec![1.0, 10.0, 100.0]).unwrap();
        let dense = op.to_dense();
        assert_eq!(dense[(1, 2)], 0.5 * 6.0 * 100.0);
        let x = [1.0, -1.0, 0.5];
        let y = op.mul_vec(&x);
        let expected = &dense * nalgebra::DVector::from_column_slice(&x);
        assert!((y[0] - expected[0]).abs() < 1e-12 && (y[1] - expected[1]).abs() < 1e-12);
        let z = op.tr_mul_vec(&[1.0, 2.0]);
        let expected = dense.transpose() * nalgebra::DVector::from_column_slice(&[1.0, 2.0]);
        for i in 0..3 {
            assert!((z[i] - expected[i]).abs() < 1e-10);
        }
        let block = op.tr_mul_block(&DMatrix::identity(2, 2));
        assert!((block - dense.transpose()).abs().max() < 1e-10);
        let v = op.visits();
        assert_eq!(v.forward_products, 1);
        assert_eq!(v.transpose_products, 1);
        assert_eq!(v.block_products, 1);
        assert_eq!(v.densifications, 1);
        assert_eq!(v.matrix_visits(), 4);
    }

    #[test]
    fn scaling_lengths_checked() {
        let kernel = KernelMatrix::from_row_major(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(ScaledKernel::new(&kernel, &[1.0, 2.0], vec![1.0, 1.0]).is_err());
        assert!(ScaledKernel::new(&kernel, &[1.0], vec![1.0]).is_err());
    }
}
