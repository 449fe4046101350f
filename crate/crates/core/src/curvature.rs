//! Extrinsic curvature fields of a surface mesh.
//!
//! `H` is the cotangent Laplacian of the embedding divided by the lumped
//! vertex area, `K` the angle defect over the same area, and `|h|²` follows
//! from the Gauss equation `|H|² − |h|² = 2K`.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::dec::{vertex_stiffness, DecError};
use crate::mesh::{surface_measures, TriangleMesh};

/// Per-vertex curvature fields. Values at boundary vertices are set to zero
/// and excluded from every sup/inf.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub mean_curvature: Vec<Vec<f64>>,
    pub gaussian: Vec<f64>,
    pub mean_norm2: Vec<f64>,
    pub second_fundamental_norm2: Vec<f64>,
    pub interior: Vec<bool>,
    pub vertex_areas: Vec<f64>,
    /// Vertices where `|H|² − 2K` was negative and clamped to zero.
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiField {
    pub degree: u8,
    pub values: Vec<f64>,
    /// `max |φ|` over interior vertices.
    pub sup_norm: f64,
    /// Vertices whose radicand `2|h|² − |H|²` was negative.
    pub clamped: usize,
}

/// `H(v) = (A X)_v / area(v)` per ambient coordinate.
pub fn mean_curvature_vector(mesh: &TriangleMesh) -> Result<Vec<Vec<f64>>, DecError> {
    let stiffness = vertex_stiffness(mesh)?;
    let areas = surface_measures(mesh).vertex_areas;
    let n = mesh.ambient_dim();
    let nv = mesh.vertex_count();
    let mut out = vec![vec![0.0; n]; nv];
    for c in 0..n {
        let x: Vec<f64> = (0..nv).map(|v| mesh.vertex(v)[c]).collect();
        let ax = stiffness.matvec(&x);
        for v in 0..nv {
            if !mesh.is_boundary_vertex(v) {
                out[v][c] = ax[v] / areas[v];
            }
        }
    }
    Ok(out)
}

fn corner_angle(p: &[f64], q: &[f64], r: &[f64]) -> f64 {
    let u: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let w: Vec<f64> = r.iter().zip(p).map(|(a, b)| a - b).collect();
    let uu: f64 = u.iter().map(|x| x * x).sum();
    let ww: f64 = w.iter().map(|x| x * x).sum();
    let uw: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum();
    // atan2 of |u × w| and u·w stays accurate for small and obtuse angles
    let cross2 = (uu * ww - uw * uw).max(0.0);
    cross2.sqrt().atan2(uw)
}

/// Angle defect `2π − Σ θ` over the lumped area; zero on boundary vertices.
pub fn gaussian_curvature(mesh: &TriangleMesh) -> Vec<f64> {
    let areas = surface_measures(mesh).vertex_areas;
    let mut angle_sum = vec![0.0; mesh.vertex_count()];
    for face in mesh.faces() {
        for k in 0..3 {
            let (a, b, c) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
            angle_sum[a] += corner_angle(mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
        }
    }
    (0..mesh.vertex_count())
        .map(|v| {
            if mesh.is_boundary_vertex(v) {
                0.0
            } else {
                (2.0 * std::f64::consts::PI - angle_sum[v]) / areas[v]
            }
        })
        .collect()
}

/// `max(|H|² − 2K, 0)` and the number of clamped entries.
pub fn second_fundamental_norm(mean_norm2: &[f64], gaussian: &[f64]) -> (Vec<f64>, usize) {
    let mut clamped = 0;
    let values = mean_norm2
        .iter()
        .zip(gaussian)
        .map(|(&h2, &k)| {
            let v = h2 - 2.0 * k;
            if v < 0.0 {
                clamped += 1;
                0.0
            } else {
                v
            }
        })
        .collect();
    (values, clamped)
}

pub fn curvature_data(mesh: &TriangleMesh) -> Result<CurvatureData, DecError> {
    let mean_curvature = mean_curvature_vector(mesh)?;
    let gaussian = gaussian_curvature(mesh);
    let mean_norm2: Vec<f64> = mean_curvature.iter().map(|h| h.iter().map(|x| x * x).sum()).collect();
    let (second, clamped) = second_fundamental_norm(&mean_norm2, &gaussian);
    let interior: Vec<bool> = (0..mesh.vertex_count()).map(|v| !mesh.is_boundary_vertex(v)).collect();
    Ok(CurvatureData {
        mean_curvature,
        gaussian,
        mean_norm2,
        second_fundamental_norm2: second,
        interior,
        vertex_areas: surface_measures(mesh).vertex_areas,
        clamped,
    })
}

/// φ(h, H) at `m = 2` from `|H|²` and `|h|²`.
///
/// With `m = 2` the general expression reduces to
/// `p²[−¾|H|² + |h|² − ¼(2|h|² − |H|²)] + ½√p (p − 1)(|H|² + |h|²) + ¼|H|²`.
/// The second value reports whether the radicand had to be clamped.
pub fn phi_value(p: u8, mean_norm2: f64, second_norm2: f64) -> (f64, bool) {
    let m = 2.0_f64;
    let p = p as f64;
    let radicand = m * second_norm2 - mean_norm2;
    let clamped = radicand < 0.0;
    let root = radicand.max(0.0).sqrt();
    let inner = (m - 1.0).sqrt() * (m - 2.0) * mean_norm2.sqrt() - 2.0 * root;
    let bracket = (m - 5.0) / 4.0 * mean_norm2 + second_norm2 - inner * inner / (4.0 * m * m);
    let value = p * p * bracket + 0.5 * p.sqrt() * (p - 1.0) * (mean_norm2 + second_norm2) + 0.25 * mean_norm2;
    (value, clamped)
}

pub fn phi_field(curv: &CurvatureData, p: u8) -> PhiField {
    let mut clamped = 0;
    let mut sup_norm = 0.0_f64;
    let values = (0..curv.mean_norm2.len())
        .map(|v| {
            if !curv.interior[v] {
                return 0.0;
            }
            let (phi, c) = phi_value(p, curv.mean_norm2[v], curv.second_fundamental_norm2[v]);
            clamped += c as usize;
            sup_norm = sup_norm.max(phi.abs());
            phi
        })
        .collect();
    PhiField { degree: p, values, sup_norm, clamped }
}

impl CurvatureData {
    fn interior_values<'a>(&'a self, field: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        field.iter().zip(&self.interior).filter(|(_, &i)| i).map(|(&x, _)| x)
    }

    /// δ₂ = max |H|².
    pub fn sup_mean_norm2(&self) -> f64 {
        self.interior_values(&self.mean_norm2).fold(f64::NEG_INFINITY, f64::max)
    }

    /// δ₁ for 1-forms: the curvature endomorphism on a surface is K·id.
    pub fn inf_gaussian(&self) -> f64 {
        self.interior_values(&self.gaussian).fold(f64::INFINITY, f64::min)
    }

    /// `Σ f(v) area(v)` over interior vertices.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        field
            .iter()
            .zip(&self.vertex_areas)
            .zip(&self.interior)
            .filter(|(_, &i)| i)
            .map(|((f, a), _)| f * a)
            .sum()
    }

    /// CSV with columns `vertex,K,H2,h2,phi0,phi1,phi2`.
    pub fn to_csv(&self) -> String {
        let phis: Vec<PhiField> = (0..3).map(|p| phi_field(self, p)).collect();
        let mut out = String::from("vertex,K,H2,h2,phi0,phi1,phi2\n");
        for v in 0..self.gaussian.len() {
            let _ = writeln!(
                out,
                "{v},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.gaussian[v],
                self.mean_norm2[v],
                self.second_fundamental_norm2[v],
                phis[0].values[v],
                phis[1].values[v],
                phis[2].values[v]
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}
