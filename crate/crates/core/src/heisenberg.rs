//! Kohn sublaplacian `Σ X_i² + Y_i²` on boxes of the Heisenberg group
//! `H^n`, with `X_i = ∂x_i + (y_i/2)∂t` and `Y_i = ∂y_i − (x_i/2)∂t`.
//!
//! Each field is discretized by centered differences on the interior nodes
//! of a uniform grid (exterior neighbours dropped, i.e. zero Dirichlet data)
//! and the operator is assembled as the Gram sum `Σ AᵢᵀAᵢ + BᵢᵀBᵢ`.

use thiserror::Error;

use crate::audit::AuditRecord;
use crate::dec::EigenproblemPair;
use crate::eigensolve::SpectrumResult;
use crate::sparse::{CsrMatrix, SymmetricSparseOperator};

pub const MIN_NODES: usize = 16;
const MAX_UNKNOWNS: usize = 4_000_000;

#[derive(Debug, Error)]
pub enum HeisenbergError {
    #[error("group parameter n must be at least 1")]
    ZeroN,
    #[error("{0} nodes per axis, need at least {MIN_NODES}")]
    TooFewNodes(usize),
    #[error("box extents must be positive and finite, got a = {a}, T = {t}")]
    InvalidExtent { a: f64, t: f64 },
    #[error("center has {found} coordinates, expected {expected}")]
    CenterLength { expected: usize, found: usize },
    #[error("grid has {0} unknowns, more than supported")]
    TooLarge(usize),
    #[error("need {needed} eigenvalues, spectrum has {available}")]
    MissingEigenvalues { needed: usize, available: usize },
    #[error("internal assembly error: {0}")]
    Assembly(String),
}

pub type Result<T> = std::result::Result<T, HeisenbergError>;

/// Interior nodes of the box `c + [−a,a]^{2n} × [−T,T]`, `nodes` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergGrid {
    n: usize,
    half_width: f64,
    half_height: f64,
    center: Vec<f64>,
    nodes: usize,
}

impl HeisenbergGrid {
    pub fn new(n: usize, half_width: f64, half_height: f64, nodes: usize) -> Result<Self> {
        Self::with_center(n, half_width, half_height, nodes, vec![0.0; 2 * n + 1])
    }

    pub fn with_center(n: usize, half_width: f64, half_height: f64, nodes: usize, center: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(HeisenbergError::ZeroN);
        }
        if nodes < MIN_NODES {
            return Err(HeisenbergError::TooFewNodes(nodes));
        }
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(half_width) || !ok(half_height) {
            return Err(HeisenbergError::InvalidExtent { a: half_width, t: half_height });
        }
        if center.len() != 2 * n + 1 || center.iter().any(|c| !c.is_finite()) {
            return Err(HeisenbergError::CenterLength { expected: 2 * n + 1, found: center.len() });
        }
        let total = (nodes as f64).powi(2 * n as i32 + 1);
        if total > MAX_UNKNOWNS as f64 {
            return Err(HeisenbergError::TooLarge(total.min(usize::MAX as f64) as usize));
        }
        Ok(HeisenbergGrid { n, half_width, half_height, center, nodes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn axes(&self) -> usize {
        2 * self.n + 1
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.nodes.pow(self.axes() as u32)
    }

    /// Grid step along `axis` (the last axis is `t`).
    pub fn spacing(&self, axis: usize) -> f64 {
        let half = if axis + 1 == self.axes() { self.half_height } else { self.half_width };
        2.0 * half / (self.nodes + 1) as f64
    }

    /// Coordinate of node `i` (0-based, interior) along `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let half = if axis + 1 == self.axes() { self.half_height } else { self.half_width };
        self.center[axis] - half + (i + 1) as f64 * self.spacing(axis)
    }

    /// Multi-index of a node; axis order `x_1..x_n, y_1..y_n, t`, `t` fastest.
    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes()];
        for slot in idx.iter_mut().rev() {
            *slot = node % self.nodes;
            node /= self.nodes;
        }
        idx
    }

    fn stride(&self, axis: usize) -> usize {
        self.nodes.pow((self.axes() - 1 - axis) as u32)
    }
}

/// Centered difference along `axis` scaled by `coef`, exterior neighbours
/// dropped.
fn push_difference(grid: &HeisenbergGrid, node: usize, idx: &[usize], axis: usize, coef: f64, row: &mut Vec<(usize, f64)>) {
    if coef == 0.0 {
        return;
    }
    let w = coef / (2.0 * grid.spacing(axis));
    let s = grid.stride(axis);
    if idx[axis] + 1 < grid.nodes {
        row.push((node + s, w));
    }
    if idx[axis] > 0 {
        row.push((node - s, -w));
    }
}

/// `L = Σ AᵢᵀAᵢ + BᵢᵀBᵢ`; bitwise symmetric and positive semidefinite.
pub fn build_kohn_laplacian(grid: &HeisenbergGrid) -> Result<SymmetricSparseOperator> {
    let n = grid.n;
    let t_axis = 2 * n;
    let dim = grid.dim();
    let mut triplets = Vec::with_capacity(dim * 2 * n * 16);
    let mut row = Vec::with_capacity(4);
    for node in 0..dim {
        let idx = grid.multi_index(node);
        for i in 0..n {
            let x = grid.coordinate(i, idx[i]);
            let y = grid.coordinate(n + i, idx[n + i]);
            for (axis, t_coef) in [(i, 0.5 * y), (n + i, -0.5 * x)] {
                row.clear();
                push_difference(grid, node, &idx, axis, 1.0, &mut row);
                push_difference(grid, node, &idx, t_axis, t_coef, &mut row);
                for &(p, a) in &row {
                    for &(q, b) in &row {
                        triplets.push((p, q, a * b));
                    }
                }
            }
        }
    }
    let matrix =
        CsrMatrix::from_triplets(dim, dim, triplets).map_err(|e| HeisenbergError::Assembly(e.to_string()))?;
    SymmetricSparseOperator::with_tolerance(matrix, 0.0).map_err(|e| HeisenbergError::Assembly(e.to_string()))
}

/// `L u = λ u` with identity mass.
pub fn kohn_problem(grid: &HeisenbergGrid) -> Result<EigenproblemPair> {
    let stiffness = build_kohn_laplacian(grid)?;
    let dim = grid.dim();
    let mass = SymmetricSparseOperator::diagonal_from(&vec![1.0; dim]);
    EigenproblemPair::new(stiffness, mass, 0, true, (0..dim).collect())
        .map_err(|e| HeisenbergError::Assembly(e.to_string()))
}

/// `Σ_{l=1}^{n} λ_{j+l} ≤ (n+2) λ_j` for `j = 1..=j_max`.
pub fn audit_kohn(spectrum: &SpectrumResult, n: usize, j_max: usize) -> Result<Vec<AuditRecord>> {
    let needed = j_max + n;
    if spectrum.len() < needed {
        return Err(HeisenbergError::MissingEigenvalues { needed, available: spectrum.len() });
    }
    let l = &spectrum.eigenvalues;
    Ok((1..=j_max)
        .map(|j| {
            let lhs: f64 = l[j..j + n].iter().sum();
            let rhs = (n + 2) as f64 * l[j - 1];
            AuditRecord::new("KOHN", 0, j, lhs, rhs, &[("lambda_j", l[j - 1]), ("n", n as f64)], 0.0)
        })
        .collect())
}
