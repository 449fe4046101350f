//! Smallest eigenpairs of `A x = λ M x` with diagonal positive `M`.
//!
//! The iteration runs on the standard-form operator
//! `Op = M^{1/2} (A − σM)⁻¹ M^{1/2}` in the variable `y = M^{1/2} x`:
//! a block Krylov expansion with full reorthogonalization, Rayleigh–Ritz on
//! the stored products `W = Op V`, and thick restarts that keep the leading
//! Ritz vectors. Results are certified afterwards by an independent residual
//! evaluation and an inertia count of `A − σ'M` just above the last pair.

pub mod ldl;
pub mod ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dec::EigenproblemPair;
use crate::sparse::CsrMatrix;
use ldl::{LdlFactor, SymbolicLdl, ZeroPivot};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 42;

/// Problems this small are solved densely.
const MIN_RELATIVE_GAP: f64 = 1e-6;
const DENSE_LIMIT: usize = 64;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("requested {k} eigenpairs of a {dim}-dimensional problem")]
    InvalidCount { k: usize, dim: usize },
    #[error("residual tolerance {0} outside (0, 1e-4]")]
    InvalidTolerance(f64),
    #[error("mass matrix is not diagonal")]
    MassNotDiagonal,
    #[error("factorization of A - σM failed after {retries} shift retries (last σ = {shift:e})")]
    Factorization { retries: usize, shift: f64 },
    #[error(
        "no convergence after {restarts} restarts: {converged} leading pairs converged, \
         pair {failing_index} has residual {residual:e}"
    )]
    NotConverged { restarts: usize, converged: usize, failing_index: usize, residual: f64 },
    #[error(
        "inertia check at σ' = {shift:e}: factorization counts {factor_count} eigenvalues below, \
         solver found {solver_count}"
    )]
    InertiaMismatch { shift: f64, factor_count: usize, solver_count: usize },
}

pub type Result<T> = std::result::Result<T, EigenError>;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub seed: u64,
    pub block_size: usize,
    /// Extra pairs computed beyond `k` and discarded.
    pub padding: usize,
    pub max_restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, seed: DEFAULT_SEED, block_size: 8, padding: 4, max_restarts: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaCheck {
    pub shift: f64,
    pub factor_count: usize,
    pub solver_count: usize,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub degree: u8,
    pub eigenvalues: Vec<f64>,
    /// Mass-orthonormal, one per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `‖A x − λ M x‖_{M⁻¹} / (‖C‖ ‖x‖_M)` with `C = M^{-1/2} A M^{-1/2}` and
    /// `‖C‖` its Gershgorin bound.
    pub residuals: Vec<f64>,
    pub zero_count: usize,
    pub shift: f64,
    pub inertia: Option<InertiaCheck>,
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    p: u8,
    eigenvalues: &'a [f64],
    residuals: &'a [f64],
    zero_count: usize,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `{"p", "eigenvalues", "residuals", "zero_count"}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpectrumJson {
            p: self.degree,
            eigenvalues: &self.eigenvalues,
            residuals: &self.residuals,
            zero_count: self.zero_count,
        })
        .expect("spectrum serializes")
    }

    /// Eigenvalues with the kernel modes set to exactly zero.
    pub fn clamped_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| if i < self.zero_count { 0.0 } else { l })
            .collect()
    }
}

/// Number of leading eigenvalues that are numerically zero: those below
/// `1e-6` times the first eigenvalue exceeding `1e-4 · max`.
pub fn kernel_count(eigenvalues: &[f64]) -> usize {
    let max = eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    if max == 0.0 {
        return eigenvalues.len();
    }
    match eigenvalues.iter().find(|&&l| l > 1e-4 * max) {
        Some(&reference) => eigenvalues.iter().filter(|&&l| l < 1e-6 * reference).count(),
        None => eigenvalues.len(),
    }
}

pub fn smallest_eigenpairs(problem: &EigenproblemPair, k: usize, tol: f64) -> Result<SpectrumResult> {
    smallest_eigenpairs_with(problem, k, &SolverOptions { tol, ..SolverOptions::default() })
}

pub fn smallest_eigenpairs_with(
    problem: &EigenproblemPair,
    k: usize,
    options: &SolverOptions,
) -> Result<SpectrumResult> {
    let n = problem.dim();
    if k == 0 || k > n {
        return Err(EigenError::InvalidCount { k, dim: n });
    }
    if !(options.tol > 0.0 && options.tol <= 1e-4) {
        return Err(EigenError::InvalidTolerance(options.tol));
    }
    let mass = problem.mass.as_diagonal().ok_or(EigenError::MassNotDiagonal)?;
    let a = problem.stiffness.matrix();
    let root_mass: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let inv_root: Vec<f64> = root_mass.iter().map(|s| 1.0 / s).collect();
    let c_norm = a.scale(&inv_root, &inv_root).max_row_abs_sum().max(f64::MIN_POSITIVE);
    let k_int = (k + options.padding).min(n);
    let block = options.block_size.max(1);

    if n <= DENSE_LIMIT || k_int + 2 * block > n {
        let (values, vectors) = dense_solve(a, &inv_root);
        return finish(problem, a, &mass, c_norm, values, vectors, k, options.tol, 0.0, None);
    }

    let mass_matrix = CsrMatrix::from_diagonal(&mass);
    let pattern = a.add_scaled(1.0, &mass_matrix, 0.0).expect("same shape");
    let symbolic = SymbolicLdl::analyse(&pattern);
    let (mut shift, mut factor) = choose_shift(a, &mass_matrix, &symbolic, c_norm)?;
    if shift != 0.0 {
        // singular A: a rough pass locates the first nonzero eigenvalue, the
        // working shift is then placed just below the kernel on that scale
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let (thetas, _) =
            thick_restart(&factor, &root_mass, k_int, block, 1e-5, options.max_restarts, &mut rng)?;
        let rough: Vec<f64> = thetas.iter().map(|t| shift + 1.0 / t).collect();
        let max = rough.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        if let Some(&reference) = rough.iter().find(|&&l| l > 1e-4 * max) {
            (shift, factor) = factor_below(a, &mass_matrix, &symbolic, -1e-3 * reference)?;
        }
    }

    let mut block_size = block;
    let mut k_int = k_int;
    let mut attempt = 0;
    loop {
        if k_int + 2 * block_size > n {
            let (values, vectors) = dense_solve(a, &inv_root);
            return finish(problem, a, &mass, c_norm, values, vectors, k, options.tol, 0.0, None);
        }
        let mut tol_inner = options.tol;
        let mut outcome = None;
        for _ in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let (thetas, ys) =
                thick_restart(&factor, &root_mass, k_int, block_size, tol_inner, options.max_restarts, &mut rng)?;
            let values: Vec<f64> = thetas.iter().map(|t| shift + 1.0 / t).collect();
            let vectors: Vec<Vec<f64>> =
                ys.into_iter().map(|y| y.iter().zip(&inv_root).map(|(v, s)| v * s).collect()).collect();
            let worst = (0..k_int)
                .map(|i| certified_residual(a, &mass, c_norm, values[i], &vectors[i]))
                .fold(0.0, f64::max);
            if worst <= options.tol {
                outcome = Some((values, vectors));
                break;
            }
            tol_inner *= 0.1;
        }
        let Some((values, vectors)) = outcome else {
            return Err(EigenError::NotConverged {
                restarts: options.max_restarts,
                converged: 0,
                failing_index: 0,
                residual: f64::NAN,
            });
        };

        let check = if k_int < n {
            match separating_gap(&values, k) {
                Some(i) => Some(inertia_check(a, &mass_matrix, &symbolic, &values, i)?),
                None => {
                    // the cluster containing λ_k reaches the end of the window
                    k_int = (k_int + options.padding.max(1) * 2).min(n);
                    continue;
                }
            }
        } else {
            None
        };
        match check {
            Some(c) if c.factor_count != c.solver_count => {
                if attempt < 2 {
                    attempt += 1;
                    block_size *= 2;
                    continue;
                }
                return Err(EigenError::InertiaMismatch {
                    shift: c.shift,
                    factor_count: c.factor_count,
                    solver_count: c.solver_count,
                });
            }
            _ => {}
        }
        return finish(problem, a, &mass, c_norm, values, vectors, k, options.tol, shift, check);
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &EigenproblemPair,
    a: &CsrMatrix,
    mass: &[f64],
    c_norm: f64,
    mut values: Vec<f64>,
    mut vectors: Vec<Vec<f64>>,
    k: usize,
    tol: f64,
    shift: f64,
    inertia: Option<InertiaCheck>,
) -> Result<SpectrumResult> {
    let zero_count = kernel_count(&values).min(k);
    values.truncate(k);
    vectors.truncate(k);
    let residuals: Vec<f64> =
        values.iter().zip(&vectors).map(|(&l, x)| certified_residual(a, mass, c_norm, l, x)).collect();
    if let Some(i) = residuals.iter().position(|&r| !(r <= tol)) {
        return Err(EigenError::NotConverged { restarts: 0, converged: i, failing_index: i, residual: residuals[i] });
    }
    Ok(SpectrumResult {
        degree: problem.degree,
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        zero_count,
        shift,
        inertia,
    })
}

fn certified_residual(a: &CsrMatrix, mass: &[f64], c_norm: f64, lambda: f64, x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let mut r2 = 0.0;
    let mut x2 = 0.0;
    for i in 0..x.len() {
        let r = ax[i] - lambda * mass[i] * x[i];
        r2 += r * r / mass[i];
        x2 += mass[i] * x[i] * x[i];
    }
    r2.sqrt() / (c_norm * x2.sqrt())
}

fn dense_solve(a: &CsrMatrix, inv_root: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.nrows();
    let mut c = DMatrix::zeros(n, n);
    for (i, j, v) in a.triplets() {
        c[(i, j)] += v * inv_root[i] * inv_root[j];
    }
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]).then(p.cmp(&q)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|r| eig.eigenvectors[(r, i)] * inv_root[r]).collect())
        .collect();
    (values, vectors)
}

fn shifted(a: &CsrMatrix, mass: &CsrMatrix, sigma: f64) -> CsrMatrix {
    a.add_scaled(1.0, mass, -sigma).expect("same shape")
}

/// σ = 0 when `A` is safely definite, otherwise a tiny negative shift
/// `−1e-10 ‖C‖` that grows until the factorization has no negative pivots.
fn choose_shift(
    a: &CsrMatrix,
    mass: &CsrMatrix,
    symbolic: &SymbolicLdl,
    c_norm: f64,
) -> Result<(f64, LdlFactor)> {
    let diag = a.diagonal();
    if let Ok(f) = LdlFactor::factor(&shifted(a, mass, 0.0), symbolic) {
        let definite = f
            .pivots()
            .iter()
            .enumerate()
            .all(|(k, &d)| d > 1e-10 * diag[f.pivot_row(k)].abs());
        if definite {
            return Ok((0.0, f));
        }
    }
    factor_below(a, mass, symbolic, -1e-10 * c_norm)
}

/// Factors `A − σM` starting at `sigma < 0`, moving σ down until no pivot is
/// negative.
fn factor_below(
    a: &CsrMatrix,
    mass: &CsrMatrix,
    symbolic: &SymbolicLdl,
    mut sigma: f64,
) -> Result<(f64, LdlFactor)> {
    let mut retries = 0;
    while retries < 60 {
        match LdlFactor::factor(&shifted(a, mass, sigma), symbolic) {
            Ok(f) if f.inertia().negative == 0 => return Ok((sigma, f)),
            Ok(_) => sigma *= 8.0,
            Err(ZeroPivot(_)) => sigma *= 1.5,
        }
        retries += 1;
    }
    Err(EigenError::Factorization { retries, shift: sigma })
}

/// Index `i ≥ k` of the widest relative gap `(λ_{i−1}, λ_i)`, if that gap is
/// clearly resolved.
fn separating_gap(values: &[f64], k: usize) -> Option<usize> {
    (k..values.len())
        .map(|i| {
            let gap = (values[i] - values[i - 1]) / (values[i].abs() + values[i - 1].abs() + f64::MIN_POSITIVE);
            (gap, i)
        })
        .filter(|&(gap, _)| gap > MIN_RELATIVE_GAP)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, i)| i)
}

/// Factor `A − σ'M` with σ' in the gap below `values[i]` and compare the
/// negative pivot count with the number of computed eigenvalues below σ'.
fn inertia_check(
    a: &CsrMatrix,
    mass: &CsrMatrix,
    symbolic: &SymbolicLdl,
    values: &[f64],
    i: usize,
) -> Result<InertiaCheck> {
    let mut probe = 0.5 * (values[i - 1] + values[i]);
    for retry in 0..8 {
        match LdlFactor::factor(&shifted(a, mass, probe), symbolic) {
            Ok(f) => {
                let solver_count = values.iter().filter(|&&l| l < probe).count();
                return Ok(InertiaCheck { shift: probe, factor_count: f.inertia().negative, solver_count });
            }
            Err(_) => {
                probe = values[i - 1] + (values[i] - values[i - 1]) * (0.5 + 0.05 * (retry + 1) as f64);
            }
        }
    }
    Err(EigenError::Factorization { retries: 8, shift: probe })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (b, a) in y.iter_mut().zip(x) {
        *b += alpha * a;
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Orthonormalizes `cand` against `basis` (two Gram–Schmidt passes) and
/// appends it; rank-deficient candidates are replaced by random vectors.
fn push_orthonormal(basis: &mut Vec<Vec<f64>>, mut cand: Vec<f64>, rng: &mut ChaCha8Rng) -> bool {
    let n = cand.len();
    if basis.len() >= n {
        return false;
    }
    for _ in 0..4 {
        let before = norm(&cand);
        for _ in 0..2 {
            for v in basis.iter() {
                let c = dot(v, &cand);
                axpy(-c, v, &mut cand);
            }
        }
        let after = norm(&cand);
        if after > 1e-8 * before && after > 0.0 {
            cand.iter_mut().for_each(|v| *v /= after);
            basis.push(cand);
            return true;
        }
        cand = random_vector(n, rng);
    }
    false
}

/// `y ↦ M^{1/2} (A − σM)⁻¹ M^{1/2} y` applied to several vectors at once.
fn apply_op(factor: &LdlFactor, root_mass: &[f64], cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = root_mass.len();
    let w = cols.len();
    if w == 0 {
        return Vec::new();
    }
    let mut z = vec![0.0; n * w];
    for (c, col) in cols.iter().enumerate() {
        for i in 0..n {
            z[i * w + c] = root_mass[i] * col[i];
        }
    }
    factor.solve_block(&mut z, w);
    (0..w).map(|c| (0..n).map(|i| root_mass[i] * z[i * w + c]).collect()).collect()
}

fn combine(basis: &[Vec<f64>], coeffs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (v, c) in basis.iter().zip(coeffs) {
        if c != 0.0 {
            axpy(c, v, &mut out);
        }
    }
    out
}

/// Returns the `count` largest eigenvalues θ of `Op` (descending) with their
/// unit eigenvectors.
fn thick_restart(
    factor: &LdlFactor,
    root_mass: &[f64],
    count: usize,
    block: usize,
    tol: f64,
    max_restarts: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = root_mass.len();
    let max_basis = n.min((count + 4 * block).max(2 * count));
    let keep = (count + block).min(max_basis - block);

    let mut v: Vec<Vec<f64>> = Vec::new();
    for _ in 0..block {
        let r = random_vector(n, rng);
        push_orthonormal(&mut v, r, rng);
    }
    let mut w = apply_op(factor, root_mass, &v);
    let mut last_block = 0..v.len();
    let mut worst = (0, 0, f64::INFINITY);

    for _ in 0..=max_restarts {
        while v.len() < max_basis {
            let room = (max_basis - v.len()).min(last_block.len().max(1));
            let start = v.len();
            let sources: Vec<Vec<f64>> = w[last_block.clone()].iter().take(room).cloned().collect();
            for s in sources {
                push_orthonormal(&mut v, s, rng);
            }
            if v.len() == start {
                break;
            }
            let fresh = apply_op(factor, root_mass, &v[start..]);
            w.extend(fresh);
            last_block = start..v.len();
        }

        let m = v.len();
        let mut h = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let x = 0.5 * (dot(&v[i], &w[j]) + dot(&v[j], &w[i]));
                h[(i, j)] = x;
                h[(j, i)] = x;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]).then(p.cmp(&q)));

        let take = keep.min(m);
        let thetas: Vec<f64> = order[..take].iter().map(|&i| eig.eigenvalues[i]).collect();
        let ys: Vec<Vec<f64>> =
            order[..take].iter().map(|&i| combine(&v, eig.eigenvectors.column(i).iter().copied())).collect();
        let wys: Vec<Vec<f64>> =
            order[..take].iter().map(|&i| combine(&w, eig.eigenvectors.column(i).iter().copied())).collect();

        let mut residuals = Vec::with_capacity(take);
        let mut converged = 0;
        let mut all = true;
        for i in 0..take {
            let mut r = wys[i].clone();
            axpy(-thetas[i], &ys[i], &mut r);
            let rel = norm(&r) / thetas[i].abs().max(f64::MIN_POSITIVE);
            if i < count {
                if rel <= tol && all {
                    converged += 1;
                } else if all {
                    all = false;
                    worst = (converged, i, rel);
                }
            }
            residuals.push(r);
        }
        if converged >= count.min(take) || m == n {
            let mut ys = ys;
            ys.truncate(count);
            let mut thetas = thetas;
            thetas.truncate(count);
            return Ok((thetas, ys));
        }

        // restart: leading Ritz vectors plus the residuals of the first
        // unconverged ones
        let mut new_v = Vec::with_capacity(max_basis);
        for y in &ys {
            push_orthonormal(&mut new_v, y.clone(), rng);
        }
        let mut new_w = wys;
        new_w.truncate(new_v.len());
        let start = new_v.len();
        for r in residuals.into_iter().skip(converged).take(block) {
            push_orthonormal(&mut new_v, r, rng);
        }
        let fresh = apply_op(factor, root_mass, &new_v[start..]);
        new_w.extend(fresh);
        last_block = start..new_v.len();
        v = new_v;
        w = new_w;
    }
    Err(EigenError::NotConverged {
        restarts: max_restarts,
        converged: worst.0,
        failing_index: worst.1,
        residual: worst.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SymmetricSparseOperator;

    fn pair(a: CsrMatrix, mass: &[f64]) -> EigenproblemPair {
        let n = a.nrows();
        EigenproblemPair::new(
            SymmetricSparseOperator::new(a).unwrap(),
            SymmetricSparseOperator::diagonal_from(mass),
            0,
            false,
            (0..n).collect(),
        )
        .unwrap()
    }

    fn path_dirichlet(n: usize) -> EigenproblemPair {
        let h = 1.0 / (n + 1) as f64;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 / h));
            if i + 1 < n {
                t.push((i, i + 1, -1.0 / h));
                t.push((i + 1, i, -1.0 / h));
            }
        }
        pair(CsrMatrix::from_triplets(n, n, t).unwrap(), &vec![h; n])
    }

    #[test]
    fn diagonal_problem() {
        let a = CsrMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let s = smallest_eigenpairs(&pair(a, &[1.0; 3]), 2, 1e-8).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((s.eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cluster_straddling_the_window() {
        // ten-fold eigenvalue 5 starting at index 4: the inertia probe must
        // land above the whole cluster
        let diag: Vec<f64> = (0..200).map(|i| if (4..14).contains(&i) { 5.0 } else { 1.0 + i as f64 }).collect();
        let s = smallest_eigenpairs(&pair(CsrMatrix::from_diagonal(&diag), &[1.0; 200]), 5, 1e-8).unwrap();
        assert_eq!(s.eigenvalues.len(), 5);
        assert!((s.eigenvalues[4] - 5.0).abs() < 1e-10);
        let c = s.inertia.unwrap();
        assert_eq!(c.factor_count, c.solver_count);
        assert!(c.shift > 5.0);
    }

    #[test]
    fn path_graph_matches_dispersion_relation() {
        let n = 100;
        let s = smallest_eigenpairs(&path_dirichlet(n), 3, 1e-8).unwrap();
        let h = 1.0 / (n + 1) as f64;
        for (j, &l) in s.eigenvalues.iter().enumerate() {
            let theta = (j + 1) as f64 * std::f64::consts::PI * h;
            let discrete = 4.0 / (h * h) * (theta / 2.0).sin().powi(2);
            assert!((l - discrete).abs() < 1e-8 * discrete, "{l} vs {discrete}");
            let continuum = ((j + 1) as f64 * std::f64::consts::PI).powi(2);
            assert!((l - continuum).abs() < 2e-3 * continuum);
        }
        assert_eq!(s.zero_count, 0);
        assert!(s.inertia.is_some());
    }

    #[test]
    fn singular_problem_uses_negative_shift() {
        // periodic ring: one zero mode, then pairs
        let n = 120;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            t.push((i, (i + 1) % n, -1.0));
            t.push(((i + 1) % n, i, -1.0));
        }
        let s = smallest_eigenpairs(&pair(CsrMatrix::from_triplets(n, n, t).unwrap(), &vec![1.0; n]), 5, 1e-8)
            .unwrap();
        assert!(s.shift < 0.0);
        assert_eq!(s.zero_count, 1);
        assert_eq!(s.clamped_eigenvalues()[0], 0.0);
        let l1 = 4.0 * (std::f64::consts::PI / n as f64).sin().powi(2);
        assert!((s.eigenvalues[1] - l1).abs() < 1e-9);
        assert!((s.eigenvalues[2] - l1).abs() < 1e-9);
    }

    #[test]
    fn indefinite_problem_finds_negative_eigenvalues() {
        let n = 150;
        let diag: Vec<f64> = (0..n).map(|i| i as f64 - 3.5).collect();
        let mut t: Vec<_> = diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        for i in 0..n - 1 {
            t.push((i, i + 1, 0.01));
            t.push((i + 1, i, 0.01));
        }
        let a = CsrMatrix::from_triplets(n, n, t).unwrap();
        let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let mut exact: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
        exact.sort_by(f64::total_cmp);
        let s = smallest_eigenpairs(&pair(a, &vec![1.0; n]), 6, 1e-9).unwrap();
        for i in 0..6 {
            assert!((s.eigenvalues[i] - exact[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn vectors_are_mass_orthonormal_and_deterministic() {
        let n = 200;
        let h = 1.0 / (n + 1) as f64;
        let mass: Vec<f64> = (0..n).map(|i| h * (1.0 + 0.5 * (i as f64 * 0.1).sin())).collect();
        let base = path_dirichlet(n);
        let p = pair(base.stiffness.matrix().clone(), &mass);
        let s = smallest_eigenpairs(&p, 8, 1e-9).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let g: f64 = (0..n).map(|r| s.eigenvectors[i][r] * mass[r] * s.eigenvectors[j][r]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-8);
            }
        }
        let again = smallest_eigenpairs(&p, 8, 1e-9).unwrap();
        assert_eq!(s.eigenvalues, again.eigenvalues);
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = path_dirichlet(10);
        assert!(matches!(smallest_eigenpairs(&p, 0, 1e-8), Err(EigenError::InvalidCount { .. })));
        assert!(matches!(smallest_eigenpairs(&p, 11, 1e-8), Err(EigenError::InvalidCount { .. })));
        assert!(matches!(smallest_eigenpairs(&p, 2, 1e-3), Err(EigenError::InvalidTolerance(_))));
    }

    #[test]
    fn json_has_expected_keys() {
        let s = smallest_eigenpairs(&path_dirichlet(10), 2, 1e-8).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        for key in ["p", "eigenvalues", "residuals", "zero_count"] {
            assert!(v.get(key).is_some());
        }
    }
}
