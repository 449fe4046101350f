//! Discrete exterior calculus on triangle meshes.
//!
//! Cochains live on the mesh simplices: 0-forms on vertices, 1-forms on the
//! globally oriented edges, 2-forms on faces. Hodge stars are diagonal. All
//! Laplacians follow the nonnegative convention `Δ = dδ + δd` and are returned
//! as a weak-form pair `(A, M)` for the generalized problem `A x = λ M x`.

use thiserror::Error;

use crate::mesh::{surface_measures, TriangleMesh};
use crate::sparse::{Csr, CsrMatrix, SparseError, SymmetricSparseOperator};

#[derive(Debug, Error)]
pub enum DecError {
    #[error("exterior derivative is defined for p in {{0, 1}}, got {0}")]
    DerivativeDegree(u8),
    #[error("form degree must be 0, 1 or 2, got {0}")]
    Degree(u8),
    #[error("mesh has a boundary; use dirichlet_laplacian for problems on meshes with boundary")]
    HasBoundary,
    #[error("mesh is closed; the Dirichlet problem needs a nonempty boundary")]
    Closed,
    #[error("mesh has no interior vertices")]
    NoInterior,
    #[error("potential has {got} values for {expected} vertices")]
    PotentialLength { expected: usize, got: usize },
    #[error("potential value at vertex {0} is not finite")]
    NonFinitePotential(usize),
    #[error("mass matrix entry {0} is not strictly positive")]
    NonPositiveMass(usize),
    #[error("mass matrix must be diagonal")]
    MassNotDiagonal,
    #[error("Dirichlet pairs must have degree 0")]
    DirichletDegree,
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

pub type Result<T> = std::result::Result<T, DecError>;

/// Signed incidence matrix `d_p` with rows on `(p+1)`-simplices and columns on
/// `p`-simplices.
pub fn exterior_derivative(mesh: &TriangleMesh, p: u8) -> Result<Csr<i32>> {
    match p {
        0 => {
            let mut triplets = Vec::with_capacity(2 * mesh.edge_count());
            for (e, &[tail, head]) in mesh.edges().iter().enumerate() {
                triplets.push((e, tail, -1));
                triplets.push((e, head, 1));
            }
            Ok(Csr::from_triplets(mesh.edge_count(), mesh.vertex_count(), triplets)?)
        }
        1 => {
            let mut triplets = Vec::with_capacity(3 * mesh.face_count());
            for (f, sides) in mesh.face_edges().iter().enumerate() {
                for &(e, sign) in sides {
                    triplets.push((f, e, sign as i32));
                }
            }
            Ok(Csr::from_triplets(mesh.face_count(), mesh.edge_count(), triplets)?)
        }
        _ => Err(DecError::DerivativeDegree(p)),
    }
}

/// Diagonal Hodge star together with its positivity diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeStar {
    pub degree: u8,
    pub diagonal: Vec<f64>,
    /// Entries raised to the positivity floor (1-forms only).
    pub clamped: usize,
    /// Faces whose circumcenter lies outside the triangle (1-forms only).
    pub obtuse_faces: usize,
    /// Floor used for the 1-form star; zero for other degrees.
    pub floor: f64,
}

/// Relative floor for the circumcentric 1-form star.
pub const STAR1_FLOOR: f64 = 1e-8;

pub fn hodge_star(mesh: &TriangleMesh, p: u8) -> Result<HodgeStar> {
    match p {
        0 => Ok(HodgeStar {
            degree: 0,
            diagonal: surface_measures(mesh).vertex_areas,
            clamped: 0,
            obtuse_faces: 0,
            floor: 0.0,
        }),
        1 => Ok(star1(mesh)),
        2 => Ok(HodgeStar {
            degree: 2,
            diagonal: surface_measures(mesh).face_areas.iter().map(|a| 1.0 / a).collect(),
            clamped: 0,
            obtuse_faces: 0,
            floor: 0.0,
        }),
        _ => Err(DecError::Degree(p)),
    }
}

/// Dual/primal length ratio per edge. The dual edge is the path between the
/// circumcenters of the incident faces through the edge midpoint, measured
/// with sign (negative when a circumcenter lies beyond the edge).
fn star1(mesh: &TriangleMesh) -> HodgeStar {
    let n = mesh.ambient_dim();
    let mut ratio = vec![0.0; mesh.edge_count()];
    let mut obtuse_faces = 0;
    let mut center = vec![0.0; n];
    for (f, face) in mesh.faces().iter().enumerate() {
        let p = [mesh.vertex(face[0]), mesh.vertex(face[1]), mesh.vertex(face[2])];
        // squared length of the side opposite each corner
        let opp2 = |k: usize| {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
        };
        let l2 = [opp2(0), opp2(1), opp2(2)];
        let w = [
            l2[0] * (l2[1] + l2[2] - l2[0]),
            l2[1] * (l2[2] + l2[0] - l2[1]),
            l2[2] * (l2[0] + l2[1] - l2[2]),
        ];
        if w.iter().any(|&x| x < 0.0) {
            obtuse_faces += 1;
        }
        let wsum: f64 = w.iter().sum();
        for (k, c) in center.iter_mut().enumerate() {
            *c = (w[0] * p[0][k] + w[1] * p[1][k] + w[2] * p[2][k]) / wsum;
        }
        for (side, &(e, _)) in mesh.face_edges()[f].iter().enumerate() {
            // side k joins corners k and k+1; corner k+2 is opposite
            let (a, b, apex) = (p[side], p[(side + 1) % 3], p[(side + 2) % 3]);
            let len2: f64 = a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum();
            let len = len2.sqrt();
            // in-plane unit normal to the side, pointing at the apex
            let mut normal: Vec<f64> = (0..n).map(|k| apex[k] - 0.5 * (a[k] + b[k])).collect();
            let along: f64 = (0..n).map(|k| normal[k] * (b[k] - a[k])).sum::<f64>() / len2;
            for k in 0..n {
                normal[k] -= along * (b[k] - a[k]);
            }
            let nn = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dual: f64 = (0..n)
                .map(|k| (center[k] - 0.5 * (a[k] + b[k])) * normal[k] / nn)
                .sum();
            ratio[e] += dual / len;
        }
    }
    let mean = ratio.iter().sum::<f64>() / ratio.len() as f64;
    let floor = STAR1_FLOOR * mean;
    let mut clamped = 0;
    for r in &mut ratio {
        if *r < floor {
            *r = floor;
            clamped += 1;
        }
    }
    HodgeStar { degree: 1, diagonal: ratio, clamped, obtuse_faces, floor }
}

/// Weak-form generalized eigenproblem `A x = λ M x`.
#[derive(Debug, Clone)]
pub struct EigenproblemPair {
    pub stiffness: SymmetricSparseOperator,
    pub mass: SymmetricSparseOperator,
    pub degree: u8,
    pub dirichlet: bool,
    /// Mesh simplex (or grid node) index of each retained row.
    pub interior_index_map: Vec<usize>,
}

impl EigenproblemPair {
    pub fn new(
        stiffness: SymmetricSparseOperator,
        mass: SymmetricSparseOperator,
        degree: u8,
        dirichlet: bool,
        interior_index_map: Vec<usize>,
    ) -> Result<Self> {
        if stiffness.dim() != mass.dim() || interior_index_map.len() != stiffness.dim() {
            return Err(DecError::Sparse(SparseError::Dimension(format!(
                "stiffness {}, mass {}, index map {}",
                stiffness.dim(),
                mass.dim(),
                interior_index_map.len()
            ))));
        }
        let diag = mass.as_diagonal().ok_or(DecError::MassNotDiagonal)?;
        if let Some(i) = diag.iter().position(|&m| !(m > 0.0)) {
            return Err(DecError::NonPositiveMass(i));
        }
        if dirichlet && degree != 0 {
            return Err(DecError::DirichletDegree);
        }
        Ok(EigenproblemPair { stiffness, mass, degree, dirichlet, interior_index_map })
    }

    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn mass_diagonal(&self) -> Vec<f64> {
        self.mass.matrix().diagonal()
    }
}

/// 0-form stiffness `d0ᵀ ⋆1 d0` on all vertices (cotangent Laplacian).
pub fn vertex_stiffness(mesh: &TriangleMesh) -> Result<SymmetricSparseOperator> {
    let star = star1(mesh);
    let mut triplets = Vec::with_capacity(4 * mesh.edge_count());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let w = star.diagonal[e];
        triplets.push((a, a, w));
        triplets.push((b, b, w));
        triplets.push((a, b, -w));
        triplets.push((b, a, -w));
    }
    let n = mesh.vertex_count();
    Ok(SymmetricSparseOperator::new(CsrMatrix::from_triplets(n, n, triplets)?)?)
}

/// Hodge–de Rham Laplacian on `p`-forms of a closed mesh.
pub fn hodge_laplacian(mesh: &TriangleMesh, p: u8) -> Result<EigenproblemPair> {
    if p > 2 {
        return Err(DecError::Degree(p));
    }
    if mesh.has_boundary() {
        return Err(DecError::HasBoundary);
    }
    let star0 = hodge_star(mesh, 0)?.diagonal;
    let star1 = hodge_star(mesh, 1)?.diagonal;
    let star2 = hodge_star(mesh, 2)?.diagonal;
    let (n, triplets, mass) = match p {
        0 => {
            let stiffness = vertex_stiffness(mesh)?;
            let mass = SymmetricSparseOperator::diagonal_from(&star0);
            let n = mesh.vertex_count();
            return EigenproblemPair::new(stiffness, mass, 0, false, (0..n).collect());
        }
        1 => {
            let mut triplets = Vec::new();
            // d1ᵀ ⋆2 d1
            for (f, sides) in mesh.face_edges().iter().enumerate() {
                for &(ei, si) in sides {
                    for &(ej, sj) in sides {
                        triplets.push((ei, ej, (si * sj) as f64 * star2[f]));
                    }
                }
            }
            // ⋆1 d0 ⋆0⁻¹ d0ᵀ ⋆1
            let mut incident: Vec<Vec<(usize, f64)>> = vec![Vec::new(); mesh.vertex_count()];
            for (e, &[tail, head]) in mesh.edges().iter().enumerate() {
                incident[tail].push((e, -1.0));
                incident[head].push((e, 1.0));
            }
            for (v, inc) in incident.iter().enumerate() {
                for &(ei, si) in inc {
                    for &(ej, sj) in inc {
                        triplets.push((ei, ej, si * sj * star1[ei] * star1[ej] / star0[v]));
                    }
                }
            }
            (mesh.edge_count(), triplets, star1)
        }
        _ => {
            let mut triplets = Vec::new();
            // ⋆2 d1 ⋆1⁻¹ d1ᵀ ⋆2
            for e in 0..mesh.edge_count() {
                let inc = mesh.edge_faces(e);
                for &(fi, si) in inc {
                    for &(fj, sj) in inc {
                        triplets.push((fi, fj, (si * sj) as f64 * star2[fi] * star2[fj] / star1[e]));
                    }
                }
            }
            (mesh.face_count(), triplets, star2)
        }
    };
    let stiffness = SymmetricSparseOperator::new(CsrMatrix::from_triplets(n, n, triplets)?)?;
    let mass = SymmetricSparseOperator::diagonal_from(&mass);
    EigenproblemPair::new(stiffness, mass, p, false, (0..n).collect())
}

/// Dirichlet problem for `Δ + q` on the interior vertices of a mesh with
/// boundary. `potential` holds one value per mesh vertex.
pub fn dirichlet_laplacian(mesh: &TriangleMesh, potential: &[f64]) -> Result<EigenproblemPair> {
    if mesh.is_closed() {
        return Err(DecError::Closed);
    }
    if potential.len() != mesh.vertex_count() {
        return Err(DecError::PotentialLength { expected: mesh.vertex_count(), got: potential.len() });
    }
    if let Some(v) = potential.iter().position(|q| !q.is_finite()) {
        return Err(DecError::NonFinitePotential(v));
    }
    let interior = mesh.interior_vertices();
    if interior.is_empty() {
        return Err(DecError::NoInterior);
    }
    let star0 = hodge_star(mesh, 0)?.diagonal;
    let full = vertex_stiffness(mesh)?;
    let restricted = full.matrix().principal_submatrix(&interior);
    let mass: Vec<f64> = interior.iter().map(|&v| star0[v]).collect();
    let potential_term: Vec<f64> = interior.iter().zip(&mass).map(|(&v, m)| m * potential[v]).collect();
    let stiffness = restricted.add_scaled(1.0, &CsrMatrix::from_diagonal(&potential_term), 1.0)?;
    EigenproblemPair::new(
        SymmetricSparseOperator::new(stiffness)?,
        SymmetricSparseOperator::diagonal_from(&mass),
        0,
        true,
        interior,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, parse_off, Shape};
    use nalgebra::DMatrix;

    fn dense(m: &Csr<i32>) -> DMatrix<f64> {
        let d = m.to_dense();
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i][j])
    }

    fn rank(m: &DMatrix<f64>) -> usize {
        m.clone().svd(false, false).singular_values.iter().filter(|&&s| s > 1e-9).count()
    }

    const TETRA: &str = "OFF\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    #[test]
    fn single_triangle_d0() {
        let m = TriangleMesh::new(3, vec![0., 0., 0., 1., 0., 0., 0., 1., 0.], vec![[0, 1, 2]]).unwrap();
        let d0 = exterior_derivative(&m, 0).unwrap();
        assert_eq!((d0.nrows(), d0.ncols()), (3, 3));
        for e in 0..3 {
            let mut vals: Vec<i32> = d0.row(e).map(|(_, v)| v).collect();
            vals.sort();
            assert_eq!(vals, vec![-1, 1]);
        }
        // head of each edge is its larger vertex
        for (e, &[tail, head]) in m.edges().iter().enumerate() {
            assert_eq!(d0.get(e, head), 1);
            assert_eq!(d0.get(e, tail), -1);
        }
    }

    #[test]
    fn d1_d0_vanishes_exactly() {
        let m = generate(&Shape::Icosphere { radius: 1.0, refinement: 2 }).unwrap();
        let d0 = exterior_derivative(&m, 0).unwrap();
        let d1 = exterior_derivative(&m, 1).unwrap();
        let dd = d1.matmul(&d0).unwrap();
        assert!(dd.values().iter().all(|&v| v == 0));
        for f in 0..d1.nrows() {
            assert_eq!(d1.row(f).count(), 3);
        }
        assert!(exterior_derivative(&m, 2).is_err());
    }

    #[test]
    fn tetrahedron_ranks() {
        let m = parse_off(TETRA).unwrap();
        let r0 = rank(&dense(&exterior_derivative(&m, 0).unwrap()));
        let r1 = rank(&dense(&exterior_derivative(&m, 1).unwrap()));
        assert_eq!((r0, r1), (3, 3));
        assert_eq!(m.edge_count() - r0 - r1, 0);
    }

    #[test]
    fn star0_sums_to_sphere_area() {
        let m = generate(&Shape::Icosphere { radius: 1.0, refinement: 3 }).unwrap();
        let total: f64 = hodge_star(&m, 0).unwrap().diagonal.iter().sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI) < 0.01);
        for p in 0..3 {
            let star = hodge_star(&m, p).unwrap();
            assert!(star.diagonal.iter().all(|&x| x > 0.0));
        }
        assert!(hodge_star(&m, 3).is_err());
    }

    /// Independent evaluation: half the sum of the cotangents of the angles
    /// opposite the edge, from `acos` of the corner angle.
    fn cotan_weights(m: &TriangleMesh) -> Vec<f64> {
        let mut w = vec![0.0; m.edge_count()];
        for (f, face) in m.faces().iter().enumerate() {
            for (side, &(e, _)) in m.face_edges()[f].iter().enumerate() {
                let apex = m.vertex(face[(side + 2) % 3]);
                let a = m.vertex(face[side]);
                let b = m.vertex(face[(side + 1) % 3]);
                let u: Vec<f64> = a.iter().zip(apex).map(|(x, y)| x - y).collect();
                let v: Vec<f64> = b.iter().zip(apex).map(|(x, y)| x - y).collect();
                let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
                let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let angle = (dot / (nu * nv)).clamp(-1.0, 1.0).acos();
                w[e] += 0.5 / angle.tan();
            }
        }
        w
    }

    #[test]
    fn star1_matches_cotangent_weights() {
        for shape in [
            Shape::FlatRectangle { a: 1.0, b: 1.0, n_x: 16, n_y: 16 },
            Shape::FlatRectangle { a: 2.0, b: 1.0, n_x: 8, n_y: 12 },
            Shape::Icosphere { radius: 1.0, refinement: 2 },
        ] {
            let m = generate(&shape).unwrap();
            let star = hodge_star(&m, 1).unwrap();
            let oracle = cotan_weights(&m);
            let mut clamped = 0;
            for (e, (&s, &c)) in star.diagonal.iter().zip(&oracle).enumerate() {
                if c < star.floor {
                    // right-angle diagonals: dual length vanishes, star is floored
                    assert_eq!(s, star.floor, "edge {e}");
                    clamped += 1;
                } else {
                    assert!((s - c).abs() < 1e-10, "edge {e}: {s} vs {c}");
                }
            }
            assert_eq!(clamped, star.clamped);
        }
    }

    #[test]
    fn closed_laplacians_are_symmetric_and_annihilate_constants() {
        let m = generate(&Shape::Icosphere { radius: 1.0, refinement: 2 }).unwrap();
        for p in 0..3 {
            let pair = hodge_laplacian(&m, p).unwrap();
            assert_eq!(pair.stiffness.max_asymmetry(), 0.0);
            assert_eq!(pair.degree, p);
        }
        let pair = hodge_laplacian(&m, 0).unwrap();
        let ones = vec![1.0; m.vertex_count()];
        let r = pair.stiffness.matvec(&ones);
        let scale = pair.stiffness.matrix().max_abs();
        assert!(r.iter().all(|x| x.abs() <= 1e-10 * scale));
    }

    #[test]
    fn laplacian_rejects_boundary_and_dirichlet_rejects_closed() {
        let flat = generate(&Shape::FlatRectangle { a: 1.0, b: 1.0, n_x: 4, n_y: 4 }).unwrap();
        assert!(matches!(hodge_laplacian(&flat, 0), Err(DecError::HasBoundary)));
        let sphere = generate(&Shape::Icosphere { radius: 1.0, refinement: 1 }).unwrap();
        let q = vec![0.0; sphere.vertex_count()];
        assert!(matches!(dirichlet_laplacian(&sphere, &q), Err(DecError::Closed)));
        let mut q = vec![0.0; flat.vertex_count()];
        q[7] = f64::NAN;
        assert!(matches!(dirichlet_laplacian(&flat, &q), Err(DecError::NonFinitePotential(7))));
        assert!(matches!(dirichlet_laplacian(&flat, &[0.0; 3]), Err(DecError::PotentialLength { .. })));
    }

    #[test]
    fn dirichlet_restricts_to_interior() {
        let flat = generate(&Shape::FlatRectangle { a: 1.0, b: 1.0, n_x: 6, n_y: 5 }).unwrap();
        let q: Vec<f64> = (0..flat.vertex_count()).map(|v| v as f64 * 0.1).collect();
        let pair = dirichlet_laplacian(&flat, &q).unwrap();
        assert_eq!(pair.dim(), 5 * 4);
        assert!(pair.dirichlet);
        assert!(pair.interior_index_map.iter().all(|&v| !flat.is_boundary_vertex(v)));
        let zero = dirichlet_laplacian(&flat, &vec![0.0; flat.vertex_count()]).unwrap();
        let mass = pair.mass_diagonal();
        for (k, &v) in pair.interior_index_map.iter().enumerate() {
            let shift = pair.stiffness.matrix().get(k, k) - zero.stiffness.matrix().get(k, k);
            assert!((shift - mass[k] * q[v]).abs() < 1e-14);
        }
    }

    #[test]
    fn pair_invariants() {
        let a = SymmetricSparseOperator::diagonal_from(&[1.0, 2.0]);
        let bad_mass = SymmetricSparseOperator::diagonal_from(&[1.0, 0.0]);
        assert!(matches!(
            EigenproblemPair::new(a.clone(), bad_mass, 0, false, vec![0, 1]),
            Err(DecError::NonPositiveMass(1))
        ));
        let m = SymmetricSparseOperator::diagonal_from(&[1.0, 1.0]);
        assert!(matches!(
            EigenproblemPair::new(a, m, 1, true, vec![0, 1]),
            Err(DecError::DirichletDegree)
        ));
    }
}
