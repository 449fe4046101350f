//! Compressed sparse row storage.

use std::fmt::Write as _;
use std::io;
use std::ops::{Add, AddAssign, Mul};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("entry ({row}, {col}) out of bounds for {nrows}x{ncols} matrix")]
    OutOfBounds { row: usize, col: usize, nrows: usize, ncols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not symmetric: |A[{row},{col}] - A[{col},{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

pub trait Scalar:
    Copy + Default + PartialEq + Add<Output = Self> + Mul<Output = Self> + AddAssign + std::fmt::Debug
{
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for i32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Row-compressed sparse matrix. Column indices are strictly increasing
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

pub type CsrMatrix = Csr<f64>;

impl<T: Scalar> Csr<T> {
    /// Assembles from triplets. Duplicates are summed in input order, so the
    /// result depends only on the triplet sequence, never on hashing.
    /// Explicit zeros produced by cancellation are kept.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Result<Self, SparseError> {
        for &(row, col, _) in &triplets {
            if row >= nrows || col >= ncols {
                return Err(SparseError::OutOfBounds { row, col, nrows, ncols });
            }
        }
        // stable: preserves input order among duplicates
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Csr { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Csr {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::default(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Csr::from_triplets(self.ncols, self.nrows, triplets).expect("transpose stays in bounds")
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Csr<T>) -> Result<Csr<T>, SparseError> {
        if self.ncols != other.nrows {
            return Err(SparseError::Dimension(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut triplets = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    triplets.push((i, j, a * b));
                }
            }
        }
        Csr::from_triplets(self.nrows, other.ncols, triplets)
    }

    pub fn to_f64(&self) -> CsrMatrix {
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| v.to_f64()).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v.to_f64();
        }
        out
    }
}

impl CsrMatrix {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// Entry-wise scaling `diag(left) * A * diag(right)`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] *= left[i] * right[self.col_idx[k]];
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Gershgorin bound `max_i sum_j |A_ij|`, an upper bound on the spectral
    /// norm of a symmetric matrix.
    pub fn max_row_abs_sum(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Sum of two matrices with `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<CsrMatrix, SparseError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SparseError::Dimension("add of different shapes".into()));
        }
        let triplets = self
            .triplets()
            .map(|(i, j, v)| (i, j, alpha * v))
            .chain(other.triplets().map(|(i, j, v)| (i, j, beta * v)))
            .collect();
        Csr::from_triplets(self.nrows, self.ncols, triplets)
    }

    /// Principal submatrix on `keep` (ascending indices).
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut new_index = vec![usize::MAX; self.ncols];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut triplets = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if new_index[j] != usize::MAX {
                    triplets.push((k, new_index[j], v));
                }
            }
        }
        Csr::from_triplets(keep.len(), keep.len(), triplets).expect("submatrix stays in bounds")
    }

    /// Matrix Market coordinate text (`real general`, 1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
        }
        out
    }

    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_matrix_market())
    }
}

/// Square sparse matrix certified symmetric up to `symmetry_tol` (relative).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparseOperator {
    matrix: CsrMatrix,
    symmetry_tol: f64,
}

pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-12;

impl SymmetricSparseOperator {
    pub fn new(matrix: CsrMatrix) -> Result<Self, SparseError> {
        Self::with_tolerance(matrix, DEFAULT_SYMMETRY_TOL)
    }

    /// Checks `|A_ij - A_ji| <= tol * max(|A_ij|, |A_ji|, 1)` for every stored entry.
    pub fn with_tolerance(matrix: CsrMatrix, symmetry_tol: f64) -> Result<Self, SparseError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(SparseError::Dimension(format!(
                "symmetric operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for (i, j, v) in matrix.triplets() {
            if !v.is_finite() {
                return Err(SparseError::NonFinite { row: i, col: j });
            }
            if j <= i {
                continue;
            }
            let w = matrix.get(j, i);
            let diff = (v - w).abs();
            if diff > symmetry_tol * v.abs().max(w.abs()).max(1.0) {
                return Err(SparseError::NotSymmetric { row: i, col: j, diff });
            }
        }
        // entries stored only below the diagonal
        for i in 0..matrix.nrows() {
            for (j, v) in matrix.row(i) {
                if j < i && v != 0.0 && !matrix.row(j).any(|(c, _)| c == i) {
                    return Err(SparseError::NotSymmetric { row: i, col: j, diff: v.abs() });
                }
            }
        }
        Ok(SymmetricSparseOperator { matrix, symmetry_tol })
    }

    pub fn diagonal_from(diag: &[f64]) -> Self {
        SymmetricSparseOperator {
            matrix: CsrMatrix::from_diagonal(diag),
            symmetry_tol: DEFAULT_SYMMETRY_TOL,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn symmetry_tol(&self) -> f64 {
        self.symmetry_tol
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }

    /// `Some(diagonal)` when no off-diagonal entry is nonzero.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        let off_diag = self.matrix.triplets().any(|(i, j, v)| i != j && v != 0.0);
        (!off_diag).then(|| self.matrix.diagonal())
    }

    /// Largest entry-wise asymmetry `max |A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        self.matrix
            .triplets()
            .map(|(i, j, v)| (v - self.matrix.get(j, i)).abs())
            .fold(0.0, f64::max)
    }
}
