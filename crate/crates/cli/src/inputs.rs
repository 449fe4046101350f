//! Argument interpretation: fixture names, shape parameters, potential
//! files and the thread cap.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use clap::ValueEnum;
use thiserror::Error;

use spectra_core::audit::AuditError;
use spectra_core::commutator::CommutatorError;
use spectra_core::dec::DecError;
use spectra_core::eigensolve::EigenError;
use spectra_core::heisenberg::HeisenbergError;
use spectra_core::mesh::{generate, load_mesh, MeshError, Shape, TriangleMesh};

/// Opening angle of the `cap<R>` fixtures.
pub const CAP_ANGLE: f64 = PI / 3.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("potential file: {0}")]
    Potential(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Dec(#[from] DecError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Heisenberg(#[from] HeisenbergError),
    #[error(transparent)]
    Commutator(#[from] CommutatorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeKind {
    Icosphere,
    CliffordTorus,
    FlatRectangle,
    GeodesicCap,
}

pub fn shape_from_params(kind: ShapeKind, params: &[String]) -> Result<Shape, CliError> {
    let mut map = BTreeMap::new();
    for p in params.iter().filter(|p| !p.is_empty()) {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("parameter `{p}` is not key=value")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut take_f = |key: &str, default: f64| -> Result<f64, CliError> {
        match map.remove(key) {
            Some(v) => v.parse().map_err(|_| CliError::Config(format!("{key}: `{v}` is not a number"))),
            None => Ok(default),
        }
    };
    let shape = match kind {
        ShapeKind::Icosphere => Shape::Icosphere {
            radius: take_f("radius", 1.0)?,
            refinement: as_count("refinement", take_f("refinement", 4.0)?)?,
        },
        ShapeKind::CliffordTorus => Shape::CliffordTorus {
            n_u: as_count("n_u", take_f("n_u", 64.0)?)?,
            n_v: as_count("n_v", take_f("n_v", 64.0)?)?,
        },
        ShapeKind::FlatRectangle => Shape::FlatRectangle {
            a: take_f("a", 1.0)?,
            b: take_f("b", 1.0)?,
            n_x: as_count("n_x", take_f("n_x", 64.0)?)?,
            n_y: as_count("n_y", take_f("n_y", 64.0)?)?,
        },
        ShapeKind::GeodesicCap => Shape::GeodesicCap {
            opening_angle: take_f("opening_angle", CAP_ANGLE)?,
            refinement: as_count("refinement", take_f("refinement", 4.0)?)?,
        },
    };
    if let Some(key) = map.keys().next() {
        return Err(CliError::Config(format!("unknown parameter `{key}` for {kind:?}")));
    }
    Ok(shape)
}

fn as_count(key: &str, v: f64) -> Result<usize, CliError> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(CliError::Config(format!("{key} must be a non-negative integer, got {v}")))
    }
}

pub struct ResolvedMesh {
    pub mesh: TriangleMesh,
    pub name: String,
    pub refinement: usize,
    /// Next coarser fixture, for the discretization allowance.
    pub coarse: Option<Shape>,
}

fn fixture(name: &str) -> Option<(Shape, usize, Option<Shape>)> {
    let split = name.find(|c: char| c.is_ascii_digit())?;
    let (stem, digits) = name.split_at(split);
    let r: usize = digits.parse().ok()?;
    let (shape, coarse) = match stem {
        "icosphere" => (
            Shape::Icosphere { radius: 1.0, refinement: r },
            (r > 0).then(|| Shape::Icosphere { radius: 1.0, refinement: r - 1 }),
        ),
        "torus" => (
            Shape::CliffordTorus { n_u: r, n_v: r },
            (r.is_multiple_of(2) && r >= 16).then_some(Shape::CliffordTorus { n_u: r / 2, n_v: r / 2 }),
        ),
        "square" => (
            Shape::FlatRectangle { a: 1.0, b: 1.0, n_x: r, n_y: r },
            (r.is_multiple_of(2) && r >= 4).then_some(Shape::FlatRectangle { a: 1.0, b: 1.0, n_x: r / 2, n_y: r / 2 }),
        ),
        "cap" => (
            Shape::GeodesicCap { opening_angle: CAP_ANGLE, refinement: r },
            (r > 1).then(|| Shape::GeodesicCap { opening_angle: CAP_ANGLE, refinement: r - 1 }),
        ),
        _ => return None,
    };
    Some((shape, r, coarse))
}

/// An existing OFF file, or a fixture name such as `icosphere4`, `torus64`,
/// `square64` or `cap4`.
pub fn resolve_mesh(spec: &str) -> Result<ResolvedMesh, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let name = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
        return Ok(ResolvedMesh { mesh: load_mesh(path)?, name, refinement: 0, coarse: None });
    }
    let (shape, refinement, coarse) = fixture(spec).ok_or_else(|| {
        CliError::Config(format!("`{spec}` is neither a file nor a fixture (icosphereR, torusN, squareN, capR)"))
    })?;
    Ok(ResolvedMesh { mesh: generate(&shape)?, name: spec.to_string(), refinement, coarse })
}

/// Per-vertex potential from CSV rows `vertex,value`; a non-numeric first row
/// is taken as a header and missing vertices default to zero.
pub fn read_potential(path: &Path, vertex_count: usize) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Potential(e.to_string()))?;
    let mut q = vec![0.0; vertex_count];
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Potential(e.to_string()))?;
        if row.len() != 2 {
            return Err(CliError::Potential(format!("row {} has {} fields, expected 2", line + 1, row.len())));
        }
        let (Ok(v), Ok(value)) = (row[0].parse::<usize>(), row[1].parse::<f64>()) else {
            if line == 0 {
                continue;
            }
            return Err(CliError::Potential(format!("row {} is not `vertex,value`", line + 1)));
        };
        if v >= vertex_count {
            return Err(CliError::Potential(format!("vertex {v} out of range ({vertex_count} vertices)")));
        }
        if !value.is_finite() {
            return Err(CliError::Potential(format!("vertex {v} has non-finite value")));
        }
        q[v] = value;
    }
    Ok(q)
}

/// `SPECTRA_THREADS`, default 1.
pub fn thread_cap() -> Result<usize, CliError> {
    match std::env::var("SPECTRA_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("SPECTRA_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(1),
    }
}
