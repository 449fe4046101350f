//! Sparse symmetric LDLᵀ factorization (up-looking, no pivoting).
//!
//! The symbolic phase computes the elimination tree and column counts of
//! the permuted matrix; it only depends on the sparsity pattern and can be
//! reused for every shift of the same operator pair.

use super::ordering::nested_dissection;
use crate::sparse::CsrMatrix;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SymbolicLdl {
    perm: Vec<usize>,
    inv: Vec<usize>,
    parent: Vec<usize>,
    col_ptr: Vec<usize>,
}

impl SymbolicLdl {
    /// Analyses the pattern of `a` (both triangles stored).
    pub fn analyse(a: &CsrMatrix) -> Self {
        let n = a.nrows();
        let perm = nested_dissection(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut counts = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for (j, _) in a.row(perm[k]) {
                let mut i = inv[j];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        counts[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut col_ptr = vec![0; n + 1];
        for i in 0..n {
            col_ptr[i + 1] = col_ptr[i] + counts[i];
        }
        SymbolicLdl { perm, inv, parent, col_ptr }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn factor_nnz(&self) -> usize {
        self.col_ptr[self.dim()]
    }
}

#[derive(Debug, Clone)]
pub struct LdlFactor {
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    d: Vec<f64>,
}

/// Pivot `k` of the permuted matrix was exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPivot(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl LdlFactor {
    /// Numeric factorization of `a`, whose pattern must be contained in the
    /// one `symbolic` was built from.
    pub fn factor(a: &CsrMatrix, symbolic: &SymbolicLdl) -> Result<Self, ZeroPivot> {
        let n = symbolic.dim();
        let SymbolicLdl { perm, inv, parent, col_ptr } = symbolic;
        let nnz = symbolic.factor_nnz();
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut filled = vec![0usize; n];

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for (j, v) in a.row(perm[k]) {
                let mut i = inv[j];
                if i > k {
                    continue;
                }
                y[i] += v;
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dk = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let start = col_ptr[i];
                let end = start + filled[i];
                for p in start..end {
                    y[row_idx[p]] -= values[p] * yi;
                }
                let l_ki = yi / d[i];
                dk -= l_ki * yi;
                row_idx[end] = k;
                values[end] = l_ki;
                filled[i] += 1;
            }
            if dk == 0.0 || !dk.is_finite() {
                return Err(ZeroPivot(k));
            }
            d[k] = dk;
        }
        Ok(LdlFactor {
            perm: perm.clone(),
            col_ptr: col_ptr.clone(),
            row_idx,
            values,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Pivots in elimination order.
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Original row index of the `k`-th pivot.
    pub fn pivot_row(&self, k: usize) -> usize {
        self.perm[k]
    }

    pub fn inertia(&self) -> Inertia {
        let mut inertia = Inertia { negative: 0, zero: 0, positive: 0 };
        for &d in &self.d {
            if d < 0.0 {
                inertia.negative += 1;
            } else if d > 0.0 {
                inertia.positive += 1;
            } else {
                inertia.zero += 1;
            }
        }
        inertia
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut block = b.to_vec();
        self.solve_block(&mut block, 1);
        block
    }

    /// Solves for `width` right-hand sides stored row-interleaved:
    /// entry `(i, c)` lives at `x[i * width + c]`.
    pub fn solve_block(&self, x: &mut [f64], width: usize) {
        let n = self.dim();
        assert_eq!(x.len(), n * width);
        let mut z = vec![0.0; n * width];
        for k in 0..n {
            let src = self.perm[k] * width;
            z[k * width..(k + 1) * width].copy_from_slice(&x[src..src + width]);
        }
        let mut acc = vec![0.0; width];
        for j in 0..n {
            acc.copy_from_slice(&z[j * width..(j + 1) * width]);
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let l = self.values[p];
                let row = &mut z[self.row_idx[p] * width..(self.row_idx[p] + 1) * width];
                for (r, a) in row.iter_mut().zip(&acc) {
                    *r -= l * a;
                }
            }
        }
        for j in 0..n {
            let inv = 1.0 / self.d[j];
            for v in &mut z[j * width..(j + 1) * width] {
                *v *= inv;
            }
        }
        for j in (0..n).rev() {
            acc.copy_from_slice(&z[j * width..(j + 1) * width]);
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let l = self.values[p];
                let row = &z[self.row_idx[p] * width..(self.row_idx[p] + 1) * width];
                for (a, r) in acc.iter_mut().zip(row) {
                    *a -= l * r;
                }
            }
            z[j * width..(j + 1) * width].copy_from_slice(&acc);
        }
        for k in 0..n {
            let dst = self.perm[k] * width;
            x[dst..dst + width].copy_from_slice(&z[k * width..(k + 1) * width]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse_symmetric(n: usize, shift: f64, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, shift + rng.random_range(0.0..1.0)));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v = rng.random_range(-1.0..1.0);
                    t.push((i, j, v));
                    t.push((j, i, v));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn solves_indefinite_system() {
        let a = random_sparse_symmetric(400, 0.5, 3);
        let sym = SymbolicLdl::analyse(&a);
        let f = LdlFactor::factor(&a, &sym).unwrap();
        let b: Vec<f64> = (0..400).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = f.solve(&b);
        let r = a.matvec(&x);
        let err = r.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "residual {err}");
    }

    #[test]
    fn block_solve_matches_single() {
        let a = random_sparse_symmetric(200, 6.0, 5);
        let sym = SymbolicLdl::analyse(&a);
        let f = LdlFactor::factor(&a, &sym).unwrap();
        let width = 3;
        let mut block = vec![0.0; 200 * width];
        for i in 0..200 {
            for c in 0..width {
                block[i * width + c] = ((i * (c + 1)) as f64).cos();
            }
        }
        let cols: Vec<Vec<f64>> = (0..width)
            .map(|c| f.solve(&(0..200).map(|i| block[i * width + c]).collect::<Vec<_>>()))
            .collect();
        f.solve_block(&mut block, width);
        for i in 0..200 {
            for c in 0..width {
                assert!((block[i * width + c] - cols[c][i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn inertia_matches_dense_eigenvalues() {
        let a = random_sparse_symmetric(60, 0.0, 11);
        let sym = SymbolicLdl::analyse(&a);
        let f = LdlFactor::factor(&a, &sym).unwrap();
        let dense = nalgebra::DMatrix::from_fn(60, 60, |i, j| a.get(i, j));
        let eig = nalgebra::SymmetricEigen::new(dense).eigenvalues;
        let neg = eig.iter().filter(|&&l| l < 0.0).count();
        assert_eq!(f.inertia().negative, neg);
        assert_eq!(f.inertia().zero, 0);
    }

    #[test]
    fn reports_zero_pivot() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 0.0), (1, 1, 1.0)]).unwrap();
        let sym = SymbolicLdl::analyse(&a);
        assert!(LdlFactor::factor(&a, &sym).is_err());
    }
}
