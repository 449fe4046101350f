//! Evaluation of eigenvalue inequalities on computed spectra.
//!
//! Every record keeps both sides, the slack `rhs − lhs` and the named
//! constituents of the right-hand side. A record passes when
//! `lhs ≤ rhs + |rhs|·(tol_audit + allowance)`, where the allowance is a
//! per-mesh discretization margin.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curvature::{phi_field, CurvatureData};
use crate::eigensolve::SpectrumResult;
use crate::mesh::{surface_measures, SurfaceMeasures, TriangleMesh};

pub const TOL_AUDIT: f64 = 1e-6;
/// Intrinsic dimension of the audited surfaces.
pub const M: usize = 2;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("{what}: need {needed} eigenvalues, spectrum has {available}")]
    MissingSpectrum { what: String, needed: usize, available: usize },
    #[error("{ineq} is not defined for {p}-forms")]
    UnsupportedDegree { ineq: &'static str, p: u8 },
    #[error("no spectrum of degree {0} supplied")]
    MissingDegree(u8),
    #[error("the p = 0 spectrum has no zero mode")]
    NoZeroMode,
    #[error("mesh has no boundary")]
    ClosedMesh,
    #[error("vertex {vertex} lies at distance {radius} from the origin, not on the unit sphere")]
    OffSphere { vertex: usize, radius: f64 },
    #[error("eigenvector length {found} does not match {expected} unknowns")]
    EigenvectorLength { expected: usize, found: usize },
    #[error("potential has {found} values for {expected} vertices")]
    PotentialLength { expected: usize, found: usize },
    #[error("density renormalization factor {0} outside [0.99, 1.01]")]
    Reconstruction(f64),
    #[error("record {ineq} p={p} j={j} has a non-finite {field}")]
    NonFinite { ineq: String, p: u8, j: usize, field: String },
    #[error("empty report")]
    EmptyReport,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AuditError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub ineq: String,
    pub p: u8,
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub terms: BTreeMap<String, f64>,
}

impl AuditRecord {
    /// Builds a record; `tol_audit` and `allowance` are stored among the terms.
    pub fn new(
        ineq: &str,
        p: u8,
        j: usize,
        lhs: f64,
        rhs: f64,
        terms: &[(&str, f64)],
        allowance: f64,
    ) -> Self {
        let mut map: BTreeMap<String, f64> = terms.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        map.insert("tol_audit".into(), TOL_AUDIT);
        map.insert("allowance".into(), allowance);
        AuditRecord {
            ineq: ineq.to_string(),
            p,
            j,
            lhs,
            rhs,
            slack: rhs - lhs,
            pass: lhs <= rhs + rhs.abs() * (TOL_AUDIT + allowance),
            terms: map,
        }
    }
}

fn sort_records(records: &mut [AuditRecord]) {
    records.sort_by(|a, b| (a.ineq.as_str(), a.p, a.j).cmp(&(b.ineq.as_str(), b.p, b.j)));
}

// ---------------------------------------------------------------------------
// densities

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensitySupport {
    Vertices,
    Faces,
}

/// Pointwise `|ω|²` of an eigenform, normalized to unit integral.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenformDensity {
    pub degree: u8,
    pub support: DensitySupport,
    pub values: Vec<f64>,
    /// Integral before renormalization.
    pub renormalization: f64,
}

impl EigenformDensity {
    /// `∫ f ρ` for a vertex field `f`; on faces `f` is averaged over corners.
    pub fn integrate(&self, mesh: &TriangleMesh, measures: &SurfaceMeasures, field: &[f64]) -> f64 {
        match self.support {
            DensitySupport::Vertices => {
                self.values.iter().zip(&measures.vertex_areas).zip(field).map(|((r, a), f)| r * a * f).sum()
            }
            DensitySupport::Faces => mesh
                .faces()
                .iter()
                .zip(&self.values)
                .zip(&measures.face_areas)
                .map(|((face, r), a)| r * a * (field[face[0]] + field[face[1]] + field[face[2]]) / 3.0)
                .sum(),
        }
    }

    pub fn total(&self, measures: &SurfaceMeasures) -> f64 {
        let weights = match self.support {
            DensitySupport::Vertices => &measures.vertex_areas,
            DensitySupport::Faces => &measures.face_areas,
        };
        self.values.iter().zip(weights).map(|(r, a)| r * a).sum()
    }
}

/// `M_ab = ∫_T W_a · W_b` for the three Whitney 1-forms of the sides
/// `(v0→v1), (v1→v2), (v2→v0)` of a triangle.
pub fn whitney_mass(p0: &[f64], p1: &[f64], p2: &[f64]) -> Matrix3<f64> {
    let e1: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
    let e2: Vec<f64> = p2.iter().zip(p0).map(|(a, b)| a - b).collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let gram = Matrix2::new(dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e1), dot(&e2, &e2));
    let area = 0.5 * gram.determinant().max(0.0).sqrt();
    let inv = gram.try_inverse().expect("non-degenerate triangle");
    // ∇λ_a · ∇λ_b with ∇λ_0 = −∇λ_1 − ∇λ_2
    let mut d = Matrix3::zeros();
    for a in 1..3 {
        for b in 1..3 {
            d[(a, b)] = inv[(a - 1, b - 1)];
        }
    }
    for a in 1..3 {
        let v = -(d[(a, 1)] + d[(a, 2)]);
        d[(a, 0)] = v;
        d[(0, a)] = v;
    }
    d[(0, 0)] = -(d[(0, 1)] + d[(0, 2)]);
    let mass = |a: usize, b: usize| area * if a == b { 2.0 } else { 1.0 } / 12.0;
    let sides = [(0, 1), (1, 2), (2, 0)];
    let mut out = Matrix3::zeros();
    for (s, &(a, b)) in sides.iter().enumerate() {
        for (t, &(c, e)) in sides.iter().enumerate() {
            // (λa∇λb − λb∇λa)·(λc∇λe − λe∇λc)
            out[(s, t)] = mass(a, c) * d[(b, e)] - mass(a, e) * d[(b, c)] - mass(b, c) * d[(a, e)]
                + mass(b, e) * d[(a, c)];
        }
    }
    out
}

/// Pointwise density of an eigenvector. `index_map` lists the mesh simplex
/// of each unknown (for Dirichlet problems); `None` means all simplices in
/// order.
pub fn reconstruct_density(
    mesh: &TriangleMesh,
    degree: u8,
    eigenvector: &[f64],
    index_map: Option<&[usize]>,
) -> Result<EigenformDensity> {
    let count = match degree {
        0 => mesh.vertex_count(),
        1 => mesh.edge_count(),
        2 => mesh.face_count(),
        p => return Err(AuditError::UnsupportedDegree { ineq: "density", p }),
    };
    let expected = index_map.map_or(count, <[usize]>::len);
    if eigenvector.len() != expected {
        return Err(AuditError::EigenvectorLength { expected, found: eigenvector.len() });
    }
    let mut full = vec![0.0; count];
    match index_map {
        Some(map) => map.iter().zip(eigenvector).for_each(|(&i, &x)| full[i] = x),
        None => full.copy_from_slice(eigenvector),
    }
    let measures = surface_measures(mesh);
    let (support, values) = match degree {
        0 => (DensitySupport::Vertices, full.iter().map(|u| u * u).collect::<Vec<_>>()),
        1 => {
            let values = mesh
                .faces()
                .iter()
                .zip(mesh.face_edges())
                .zip(&measures.face_areas)
                .map(|((face, sides), area)| {
                    let mass = whitney_mass(mesh.vertex(face[0]), mesh.vertex(face[1]), mesh.vertex(face[2]));
                    let c = nalgebra::Vector3::from_fn(|s, _| sides[s].1 as f64 * full[sides[s].0]);
                    (c.transpose() * mass * c)[(0, 0)] / area
                })
                .collect();
            (DensitySupport::Faces, values)
        }
        _ => (
            DensitySupport::Faces,
            full.iter().zip(&measures.face_areas).map(|(z, a)| (z / a) * (z / a)).collect(),
        ),
    };
    let mut density = EigenformDensity { degree, support, values, renormalization: 1.0 };
    let total = density.total(&measures);
    if !(0.99..=1.01).contains(&total) {
        return Err(AuditError::Reconstruction(total));
    }
    density.values.iter_mut().for_each(|v| *v /= total);
    density.renormalization = total;
    Ok(density)
}

// ---------------------------------------------------------------------------
// constants

/// `d(m)` for the compact rank-one symmetric spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetricSpace {
    Sphere,
    RealProjective,
    ComplexProjective,
    QuaternionicProjective,
}

pub fn d_constant(space: SymmetricSpace, m: usize) -> f64 {
    let m = m as f64;
    match space {
        SymmetricSpace::Sphere => m * m,
        SymmetricSpace::RealProjective => 2.0 * m * (m + 1.0),
        SymmetricSpace::ComplexProjective => 2.0 * m * (m + 2.0),
        SymmetricSpace::QuaternionicProjective => 2.0 * m * (m + 4.0),
    }
}

/// Three times the largest relative error estimate `|λ_c − λ_f| / (3 λ_f)`
/// over eigenvalues of two refinements (second-order convergence, step
/// halved). Zero modes are skipped.
pub fn richardson_allowance(coarse: &[f64], fine: &[f64]) -> f64 {
    let scale = fine.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let worst = coarse
        .iter()
        .zip(fine)
        .filter(|(_, &f)| f.abs() > 1e-6 * scale)
        .map(|(c, f)| (c - f).abs() / 3.0 / f.abs())
        .fold(0.0, f64::max);
    3.0 * worst
}

// ---------------------------------------------------------------------------
// closed surfaces

fn need(spectrum: &SpectrumResult, count: usize, what: &str) -> Result<()> {
    if spectrum.len() < count {
        return Err(AuditError::MissingSpectrum {
            what: what.to_string(),
            needed: count,
            available: spectrum.len(),
        });
    }
    Ok(())
}

/// Per-degree data shared by the closed-surface audits.
struct DegreeData<'a> {
    p: u8,
    lambda: Vec<f64>,
    densities: Vec<EigenformDensity>,
    phi: Vec<f64>,
    phi_sup: f64,
    /// `(p/Vol) ∫ [(m−p)|H|² + (p−1)|h|²]`.
    asada_integral: f64,
    spectrum: &'a SpectrumResult,
}

struct ClosedContext<'a> {
    mesh: &'a TriangleMesh,
    measures: SurfaceMeasures,
    curv: &'a CurvatureData,
    allowance: f64,
}

impl<'a> ClosedContext<'a> {
    fn degree(&self, spectrum: &'a SpectrumResult, count: usize) -> Result<DegreeData<'a>> {
        let p = spectrum.degree;
        let lambda = spectrum.clamped_eigenvalues();
        let densities = spectrum
            .eigenvectors
            .iter()
            .take(count)
            .map(|x| reconstruct_density(self.mesh, p, x, None))
            .collect::<Result<Vec<_>>>()?;
        let field = phi_field(self.curv, p);
        let m = M as f64;
        let pf = p as f64;
        let integrand: Vec<f64> = self
            .curv
            .mean_norm2
            .iter()
            .zip(&self.curv.second_fundamental_norm2)
            .map(|(h2, s2)| (m - pf) * h2 + (pf - 1.0) * s2)
            .collect();
        let asada_integral = pf / self.measures.volume * self.curv.integrate(&integrand);
        Ok(DegreeData { p, lambda, densities, phi: field.values, phi_sup: field.sup_norm, asada_integral, spectrum })
    }

    fn integral(&self, density: &EigenformDensity, field: &[f64]) -> f64 {
        density.integrate(self.mesh, &self.measures, field)
    }
}

/// THM1 for one degree: `λ_{j+1} + λ_{j+2} ≤ 4[(3/2)λ_j − ∫⟨R_p ω, ω⟩ + ¼∫|H|²|ω|²]`
/// with `R_0 = 0`, `R_1 = K`.
pub fn thm1_records(
    mesh: &TriangleMesh,
    spectrum: &SpectrumResult,
    curv: &CurvatureData,
    j_max: usize,
    allowance: f64,
) -> Result<Vec<AuditRecord>> {
    if spectrum.degree > 1 {
        return Err(AuditError::UnsupportedDegree { ineq: "THM1", p: spectrum.degree });
    }
    need(spectrum, j_max + M, "THM1")?;
    let ctx = ClosedContext { mesh, measures: surface_measures(mesh), curv, allowance };
    let d = ctx.degree(spectrum, j_max)?;
    Ok(thm1(&ctx, &d, j_max))
}

fn thm1(ctx: &ClosedContext, d: &DegreeData, j_max: usize) -> Vec<AuditRecord> {
    let zero = vec![0.0; ctx.curv.gaussian.len()];
    let curvature_term = if d.p == 0 { &zero } else { &ctx.curv.gaussian };
    (1..=j_max)
        .map(|j| {
            let rho = &d.densities[j - 1];
            let int_r = ctx.integral(rho, curvature_term);
            let int_h2 = ctx.integral(rho, &ctx.curv.mean_norm2);
            let lhs = d.lambda[j] + d.lambda[j + 1];
            let rhs = 4.0 * (1.5 * d.lambda[j - 1] - int_r + 0.25 * int_h2);
            AuditRecord::new(
                "THM1",
                d.p,
                j,
                lhs,
                rhs,
                &[("lambda_j", d.lambda[j - 1]), ("int_R", int_r), ("int_H2", int_h2)],
                ctx.allowance,
            )
        })
        .collect()
}

fn closed_records(ctx: &ClosedContext, d: &DegreeData, j_max: usize) -> Vec<AuditRecord> {
    let mut out = Vec::new();
    let p = d.p;
    let l = &d.lambda;
    let a = ctx.allowance;
    if p <= 1 {
        out.extend(thm1(ctx, d, j_max));
        let delta1 = if p == 0 { 0.0 } else { ctx.curv.inf_gaussian() };
        let delta2 = ctx.curv.sup_mean_norm2();
        for j in 1..=j_max {
            let rhs = 4.0 * (1.5 * l[j - 1] - delta1 + 0.25 * delta2);
            out.push(AuditRecord::new(
                "COR1",
                p,
                j,
                l[j] + l[j + 1],
                rhs,
                &[("lambda_j", l[j - 1]), ("delta1", delta1), ("delta2", delta2)],
                a,
            ));
        }
    }
    let int_data = d.asada_integral;
    let phi_sup = d.phi_sup;
    for j in 1..=j_max {
        let lhs = l[j] + l[j + 1];
        let int_phi = ctx.integral(&d.densities[j - 1], &d.phi);
        out.push(AuditRecord::new(
            "THM-PHI",
            p,
            j,
            lhs,
            4.0 * (1.5 * l[j - 1] + int_phi),
            &[("lambda_j", l[j - 1]), ("int_phi", int_phi)],
            a,
        ));
        out.push(AuditRecord::new(
            "COR-PHI-SUP",
            p,
            j,
            lhs,
            4.0 * (1.5 * l[j - 1] + phi_sup),
            &[("lambda_j", l[j - 1]), ("phi_sup", phi_sup)],
            a,
        ));
        let growth = 3f64.powi(j as i32 - 1);
        out.push(AuditRecord::new(
            "REC-S",
            p,
            j,
            l[j - 1],
            0.5 * growth * int_data + (growth - 1.0) * phi_sup,
            &[("asada_integral", int_data), ("phi_sup", phi_sup), ("growth", growth)],
            a,
        ));
        let d1 = 0.5 * 1.5 * growth;
        let d2 = 1.5 * growth - 0.5;
        out.push(AuditRecord::new(
            "REC-T",
            p,
            j,
            l[j + 1],
            4.0 * (d1 * int_data + d2 * phi_sup),
            &[("asada_integral", int_data), ("phi_sup", phi_sup), ("d1", d1), ("d2", d2)],
            a,
        ));
    }
    // Φ(h, H) with the Asada bound in place of λ_1
    out.push(AuditRecord::new(
        "COR-J1",
        p,
        1,
        l[1] + l[2],
        4.0 * (1.5 * 0.5 * int_data + phi_sup),
        &[("asada_integral", int_data), ("phi_sup", phi_sup)],
        a,
    ));
    if p >= 1 {
        out.push(AuditRecord::new(
            "ASADA",
            p,
            1,
            l[0],
            0.5 * int_data,
            &[("asada_integral", int_data)],
            a,
        ));
    }
    out
}

/// Runs the closed-surface catalog on every supplied spectrum (one per
/// degree). Spectra need `j_max + 2` eigenpairs.
pub fn audit_closed(
    mesh: &TriangleMesh,
    spectra: &[SpectrumResult],
    curv: &CurvatureData,
    j_max: usize,
    allowance: f64,
) -> Result<Vec<AuditRecord>> {
    let ctx = ClosedContext { mesh, measures: surface_measures(mesh), curv, allowance };
    let mut records = Vec::new();
    for spectrum in spectra {
        need(spectrum, (j_max + M).max(3), &format!("closed audit, p = {}", spectrum.degree))?;
        let d = ctx.degree(spectrum, j_max)?;
        records.extend(closed_records(&ctx, &d, j_max));
        if d.p == 0 {
            if d.spectrum.zero_count < 1 {
                return Err(AuditError::NoZeroMode);
            }
            let int_h2 = curv.integrate(&curv.mean_norm2);
            let vol = ctx.measures.volume;
            records.push(AuditRecord::new(
                "REILLY-GEN",
                0,
                1,
                d.lambda[1] + d.lambda[2],
                int_h2 / vol,
                &[("int_H2", int_h2), ("volume", vol)],
                allowance,
            ));
            records.push(AuditRecord::new(
                "REILLY-1",
                0,
                1,
                d.lambda[1],
                int_h2 / (M as f64 * vol),
                &[("int_H2", int_h2), ("volume", vol)],
                allowance,
            ));
        }
    }
    sort_records(&mut records);
    Ok(records)
}

/// Number of records [`audit_closed`] emits for the given degrees.
pub fn closed_record_count(degrees: &[u8], j_max: usize) -> usize {
    degrees
        .iter()
        .map(|&p| {
            let per_j = if p <= 1 { 6 } else { 4 };
            let single = 1 + usize::from(p >= 1) + if p == 0 { 2 } else { 0 };
            per_j * j_max + single
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Dirichlet problems

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmbientCase {
    Euclidean,
    /// Vertices on the unit sphere; adds the LP-RSS records.
    Sphere,
}

/// Dirichlet catalog for `Δ + q` on a mesh with boundary. `potential` is per
/// mesh vertex; the spectrum's vectors are indexed by `interior` (the
/// problem's index map).
#[allow(clippy::too_many_arguments)]
pub fn audit_dirichlet(
    mesh: &TriangleMesh,
    spectrum: &SpectrumResult,
    interior: &[usize],
    curv: &CurvatureData,
    potential: &[f64],
    ambient: AmbientCase,
    j_max: usize,
    allowance: f64,
) -> Result<Vec<AuditRecord>> {
    if !mesh.has_boundary() {
        return Err(AuditError::ClosedMesh);
    }
    if potential.len() != mesh.vertex_count() {
        return Err(AuditError::PotentialLength { expected: mesh.vertex_count(), found: potential.len() });
    }
    if ambient == AmbientCase::Sphere {
        for v in 0..mesh.vertex_count() {
            let r = mesh.vertex(v).iter().map(|x| x * x).sum::<f64>().sqrt();
            if (r - 1.0).abs() > 1e-10 {
                return Err(AuditError::OffSphere { vertex: v, radius: r });
            }
        }
    }
    need(spectrum, j_max + M, "Dirichlet audit")?;
    let measures = surface_measures(mesh);
    let l = &spectrum.eigenvalues;
    let a = allowance;
    let n = M as f64;

    let inner: Vec<f64> = (0..mesh.vertex_count())
        .map(|v| if curv.interior[v] { curv.mean_norm2[v] - 4.0 * potential[v] } else { 0.0 })
        .collect();
    let sup_inner = interior.iter().map(|&v| inner[v].abs()).fold(0.0, f64::max);
    let d_sphere = d_constant(SymmetricSpace::Sphere, M);
    // intrinsic |H|² in the sphere: |H_R3|² − m², not clamped
    let inner_sphere: Vec<f64> = inner.iter().map(|x| x - n * n + d_sphere).collect();
    let sup_inner_sphere = interior.iter().map(|&v| inner_sphere[v].abs()).fold(0.0, f64::max);
    let flat = interior.iter().all(|&v| curv.mean_norm2[v] <= 1e-16 * mesh.bounding_box_diagonal().powi(-2));
    let zero_potential = potential.iter().all(|&q| q == 0.0);

    let mut records = Vec::new();
    for j in 1..=j_max {
        let rho = reconstruct_density(mesh, 0, &spectrum.eigenvectors[j - 1], Some(interior))?;
        let lhs = l[j] + l[j + 1];
        let int_inner = rho.integrate(mesh, &measures, &inner);
        records.push(AuditRecord::new(
            "LP-DIR-INT",
            0,
            j,
            lhs,
            (4.0 + n) * l[j - 1] + int_inner,
            &[("lambda_j", l[j - 1]), ("int_H2_minus_4q", int_inner)],
            a,
        ));
        records.push(AuditRecord::new(
            "LP-DIR-SUP",
            0,
            j,
            lhs,
            (4.0 + n) * l[j - 1] + sup_inner,
            &[("lambda_j", l[j - 1]), ("sup_H2_minus_4q", sup_inner)],
            a,
        ));
        if ambient == AmbientCase::Sphere {
            let int_sphere = rho.integrate(mesh, &measures, &inner_sphere);
            records.push(AuditRecord::new(
                "LP-RSS-INT",
                0,
                j,
                lhs,
                (4.0 + n) * l[j - 1] + int_sphere,
                &[("lambda_j", l[j - 1]), ("int_HS2_plus_d_minus_4q", int_sphere), ("d_m", d_sphere)],
                a,
            ));
            records.push(AuditRecord::new(
                "LP-RSS-SUP",
                0,
                j,
                lhs,
                (4.0 + n) * l[j - 1] + sup_inner_sphere,
                &[("lambda_j", l[j - 1]), ("sup_HS2_plus_d_minus_4q", sup_inner_sphere), ("d_m", d_sphere)],
                a,
            ));
        }
        if flat && zero_potential {
            records.push(AuditRecord::new(
                "LP-CLASSIC",
                0,
                j,
                lhs,
                (4.0 + n) * l[j - 1],
                &[("lambda_k", l[j - 1])],
                a,
            ));
        }

        // universal inequalities of the Dirichlet Laplacian, k = j
        let k = j;
        let sum: f64 = l[..k].iter().sum();
        let next = l[k];
        records.push(AuditRecord::new(
            "PPW",
            0,
            k,
            next - l[k - 1],
            4.0 / (n * k as f64) * sum,
            &[("sum_lambda", sum)],
            a,
        ));
        if l[..k].iter().all(|&x| next - x > 1e-8 * next.abs()) {
            let hp: f64 = l[..k].iter().map(|&x| x / (next - x)).sum();
            records.push(AuditRecord::new("HP", 0, k, n * k as f64 / 4.0, hp, &[("sum_ratio", hp)], a));
        }
        let yang_lhs: f64 = l[..k].iter().map(|&x| (next - x).powi(2)).sum();
        let yang_rhs: f64 = 4.0 / n * l[..k].iter().map(|&x| x * (next - x)).sum::<f64>();
        records.push(AuditRecord::new("YANG", 0, k, yang_lhs, yang_rhs, &[("lambda_next", next)], a));
    }
    sort_records(&mut records);
    Ok(records)
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mesh: String,
    pub refinement: usize,
    pub records: Vec<AuditRecord>,
}

impl AuditReport {
    pub fn new(mesh: impl Into<String>, refinement: usize, mut records: Vec<AuditRecord>) -> Self {
        sort_records(&mut records);
        AuditReport { mesh: mesh.into(), refinement, records }
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(AuditError::EmptyReport);
        }
        for r in &self.records {
            let bad = [("lhs", r.lhs), ("rhs", r.rhs), ("slack", r.slack)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .chain(r.terms.iter().map(|(k, &v)| (format!("term {k}"), v)))
                .find(|(_, v)| !v.is_finite());
            if let Some((field, _)) = bad {
                return Err(AuditError::NonFinite { ineq: r.ineq.clone(), p: r.p, j: r.j, field });
            }
        }
        Ok(())
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        self.validate()?;
        let mut sorted = self.clone();
        sort_records(&mut sorted.records);
        Ok(match format {
            ReportFormat::Json => serde_json::to_string_pretty(&sorted)? + "\n",
            ReportFormat::Csv => {
                let mut out = String::from("mesh,refinement,ineq,p,j,lhs,rhs,slack,pass,terms\n");
                for r in &sorted.records {
                    let terms: Vec<String> = r.terms.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{:e},{:e},{:e},{},{}",
                        sorted.mesh,
                        sorted.refinement,
                        r.ineq,
                        r.p,
                        r.j,
                        r.lhs,
                        r.rhs,
                        r.slack,
                        r.pass,
                        terms.join(";")
                    );
                }
                out
            }
        })
    }
}

pub fn emit_report(report: &AuditReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = report.render(format)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<AuditReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
