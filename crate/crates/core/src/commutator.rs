//! Dense check of the commutator identity
//! `Σ_k |⟨[L,G]u_j, u_k⟩|² / (λ_k − λ_j) = −½ ⟨[[L,G],G]u_j, u_j⟩`
//! for symmetric `L`, `G`, and of the vanishing of `⟨[L,G]u_j, u_k⟩` inside
//! eigenspaces of `L`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_DIM: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum CommutatorError {
    #[error("operators have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("dimension {0} exceeds the dense limit")]
    TooLarge(usize),
    #[error("matrix {name} is not symmetric: |A_ij - A_ji| = {diff:e} at ({row}, {col})")]
    NotSymmetric { name: &'static str, row: usize, col: usize, diff: f64 },
    #[error("coupling {coupling:e} between eigenvectors {j} and {k} of a repeated eigenvalue")]
    IdentityViolation { j: usize, k: usize, coupling: f64 },
}

/// Two dense symmetric matrices of equal size.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPair {
    l: DMatrix<f64>,
    g: DMatrix<f64>,
}

fn check_symmetric(name: &'static str, m: &DMatrix<f64>) -> Result<(), CommutatorError> {
    for i in 0..m.nrows() {
        for j in 0..i {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            let diff = (a - b).abs();
            if !(diff <= 1e-12 * a.abs().max(b.abs()).max(1.0)) {
                return Err(CommutatorError::NotSymmetric { name, row: i, col: j, diff });
            }
        }
    }
    Ok(())
}

fn random_symmetric(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    (&a + a.transpose()) * 0.5
}

fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    a.qr().q()
}

impl OperatorPair {
    pub fn new(l: DMatrix<f64>, g: DMatrix<f64>) -> Result<Self, CommutatorError> {
        if !l.is_square() || !g.is_square() || l.nrows() != g.nrows() {
            return Err(CommutatorError::DimensionMismatch(l.nrows(), g.nrows()));
        }
        if l.nrows() > MAX_DIM {
            return Err(CommutatorError::TooLarge(l.nrows()));
        }
        check_symmetric("L", &l)?;
        check_symmetric("G", &g)?;
        Ok(OperatorPair { l, g })
    }

    /// Independent Gaussian symmetric `L` and `G`.
    pub fn random(dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let l = random_symmetric(dim, rng);
        let g = random_symmetric(dim, rng);
        OperatorPair { l, g }
    }

    /// `L = Q D Qᵀ` where `D` repeats eigenvalue `i` `multiplicities[i]` times;
    /// `G` is Gaussian symmetric.
    pub fn degenerate(multiplicities: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let dim: usize = multiplicities.iter().sum();
        let mut diag = Vec::with_capacity(dim);
        let mut value = 0.0;
        for &m in multiplicities {
            value += rng.random_range(0.5..2.0);
            diag.extend(std::iter::repeat_n(value, m));
        }
        let q = random_orthogonal(dim, rng);
        let l = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)) * q.transpose();
        let l = (&l + l.transpose()) * 0.5;
        let g = random_symmetric(dim, rng);
        OperatorPair { l, g }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    fn commutator(&self) -> DMatrix<f64> {
        &self.l * &self.g - &self.g * &self.l
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
}

/// Eigenpairs of `L` sorted ascending, with every cluster of eigenvalues
/// closer than `δ` rotated so that `G` is diagonal on it.
struct AdaptedBasis {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    clusters: Vec<std::ops::Range<usize>>,
}

fn adapted_basis(pair: &OperatorPair, adapt: bool) -> AdaptedBasis {
    let n = pair.dim();
    let eig = SymmetricEigen::new(pair.l.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let spread = values[n - 1] - values[0];
    let delta = 1e-8 * spread;
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || values[i] - values[i - 1] > delta {
            if i - start > 1 {
                clusters.push(start..i);
            }
            start = i;
        }
    }
    if adapt {
        for c in &clusters {
            let u = vectors.columns(c.start, c.len()).into_owned();
            let compressed = u.transpose() * &pair.g * &u;
            let compressed = (&compressed + compressed.transpose()) * 0.5;
            let inner = SymmetricEigen::new(compressed);
            let rotated = u * inner.eigenvectors;
            vectors.columns_mut(c.start, c.len()).copy_from(&rotated);
        }
    }
    AdaptedBasis { values, vectors, clusters }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResidual {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `|lhs_j − rhs_j|`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// `‖L‖ ‖G‖²` in spectral norms.
    pub scale: f64,
    /// Largest `|⟨[L,G]u_j, u_k⟩|` over pairs inside a cluster.
    pub max_cluster_coupling: f64,
    pub clusters: usize,
}

/// Evaluates both sides of the identity for every `j`.
pub fn lp_identity_residual(pair: &OperatorPair) -> Result<IdentityResidual, CommutatorError> {
    let n = pair.dim();
    let norm_l = spectral_norm(&pair.l);
    let norm_g = spectral_norm(&pair.g);
    let scale = norm_l * norm_g * norm_g;
    let coupling_tol = 1e-10 * (norm_l * norm_g).max(f64::MIN_POSITIVE);

    let c = pair.commutator();
    let double = &c * &pair.g - &pair.g * &c;

    let basis = adapted_basis(pair, true);
    let u = &basis.vectors;
    // coupling[k, j] = u_kᵀ [L,G] u_j
    let coupling = u.transpose() * &c * u;
    let mut in_cluster = vec![usize::MAX; n];
    for (id, r) in basis.clusters.iter().enumerate() {
        for i in r.clone() {
            in_cluster[i] = id;
        }
    }
    let mut max_cluster_coupling = 0.0_f64;
    for j in 0..n {
        for k in 0..n {
            if k != j && in_cluster[j] != usize::MAX && in_cluster[j] == in_cluster[k] {
                let value = coupling[(k, j)].abs();
                max_cluster_coupling = max_cluster_coupling.max(value);
                if value > coupling_tol {
                    return Err(CommutatorError::IdentityViolation { j, k, coupling: value });
                }
            }
        }
    }

    let mut lhs = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for j in 0..n {
        let mut sum = 0.0;
        for k in 0..n {
            let same = k == j || (in_cluster[j] != usize::MAX && in_cluster[j] == in_cluster[k]);
            if !same {
                sum += coupling[(k, j)].powi(2) / (basis.values[k] - basis.values[j]);
            }
        }
        lhs[j] = sum;
        let uj = u.column(j);
        rhs[j] = -0.5 * (uj.transpose() * &double * uj)[(0, 0)];
    }
    let residuals: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).collect();
    let max_residual = residuals.iter().fold(0.0, |a: f64, &b| a.max(b));
    Ok(IdentityResidual {
        lhs,
        rhs,
        residuals,
        max_residual,
        scale,
        max_cluster_coupling,
        clusters: basis.clusters.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityReport {
    /// Max in-eigenspace `|⟨[L,G]u_j, u_k⟩|` in the adapted basis.
    pub max_coupling: f64,
    /// The same quantity in the basis returned by the eigensolver.
    pub raw_coupling: f64,
    /// `‖L‖ ‖G‖`.
    pub scale: f64,
}

pub fn degenerate_orthogonality_check(pair: &OperatorPair) -> OrthogonalityReport {
    let c = pair.commutator();
    let max_in_clusters = |basis: &AdaptedBasis| {
        let mut worst = 0.0_f64;
        for r in &basis.clusters {
            let u = basis.vectors.columns(r.start, r.len());
            let block = u.transpose() * &c * u;
            for j in 0..r.len() {
                for k in 0..r.len() {
                    if j != k {
                        worst = worst.max(block[(k, j)].abs());
                    }
                }
            }
        }
        worst
    };
    OrthogonalityReport {
        max_coupling: max_in_clusters(&adapted_basis(pair, true)),
        raw_coupling: max_in_clusters(&adapted_basis(pair, false)),
        scale: spectral_norm(&pair.l) * spectral_norm(&pair.g),
    }
}

/// One line of the trial log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub dim: usize,
    pub seed: u64,
    pub max_residual: f64,
    pub scale: f64,
}

impl TrialReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trial report serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub random: Vec<TrialReport>,
    /// Worst `max_residual / scale` over random pairs.
    pub worst_identity_ratio: f64,
    /// Worst adapted in-eigenspace coupling over `‖L‖‖G‖` across degenerate cases.
    pub worst_coupling_ratio: f64,
    /// Worst identity residual ratio across the degenerate cases.
    pub worst_degenerate_identity_ratio: f64,
    pub degenerate_cases: usize,
}

/// Seeded random trials: `trials` generic pairs with `dim ∈ dims` and
/// `degenerate` pairs with repeated eigenvalues. Trial `i` uses seed
/// `seed + i`, so every reported trial can be regenerated on its own.
pub fn run_trials(
    dims: std::ops::RangeInclusive<usize>,
    trials: usize,
    degenerate: usize,
    seed: u64,
) -> Result<TrialSummary, CommutatorError> {
    let mut random = Vec::with_capacity(trials);
    let mut worst_identity_ratio = 0.0_f64;
    for i in 0..trials {
        let trial_seed = seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let dim = rng.random_range(dims.clone());
        let pair = OperatorPair::random(dim, &mut rng);
        let r = lp_identity_residual(&pair)?;
        worst_identity_ratio = worst_identity_ratio.max(r.max_residual / r.scale);
        random.push(TrialReport { dim, seed: trial_seed, max_residual: r.max_residual, scale: r.scale });
    }
    let mut worst_coupling_ratio = 0.0_f64;
    let mut worst_degenerate_identity_ratio = 0.0_f64;
    for i in 0..degenerate {
        let trial_seed = seed.wrapping_add((trials + i) as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let dim = rng.random_range(dims.clone()).max(2);
        let mut multiplicities = Vec::new();
        let mut left = dim;
        while left > 0 {
            let m = rng.random_range(1..=left.min(5));
            multiplicities.push(m);
            left -= m;
        }
        // at least one genuine repetition
        if multiplicities.iter().all(|&m| m == 1) {
            multiplicities.truncate(multiplicities.len() - 1);
            multiplicities[0] += 1;
        }
        let pair = OperatorPair::degenerate(&multiplicities, &mut rng);
        let report = degenerate_orthogonality_check(&pair);
        worst_coupling_ratio = worst_coupling_ratio.max(report.max_coupling / report.scale);
        let r = lp_identity_residual(&pair)?;
        worst_degenerate_identity_ratio = worst_degenerate_identity_ratio.max(r.max_residual / r.scale);
    }
    Ok(TrialSummary {
        random,
        worst_identity_ratio,
        worst_coupling_ratio,
        worst_degenerate_identity_ratio,
        degenerate_cases: degenerate,
    })
}
