//! Oriented triangle meshes embedded in Euclidean space.
//!
//! A [`TriangleMesh`] is validated on construction and immutable afterwards.
//! Edges are stored once per unordered vertex pair, sorted lexicographically
//! by `(min endpoint, max endpoint)` and oriented from the smaller to the
//! larger vertex index. Every incidence operator in [`crate::dec`] refers to
//! that ordering.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ambient dimension must be at least 3, got {0}")]
    AmbientDim(usize),
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteVertex { vertex: usize },
    #[error("face {face}: face index out of range ({index} >= {vertex_count})")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("face {face} repeats vertex {vertex}")]
    RepeatedVertex { face: usize, vertex: usize },
    #[error("edge ({0}, {1}) is not manifold: {2} incident faces")]
    NonManifoldEdge(usize, usize, usize),
    #[error("orientation error: faces {0} and {1} traverse edge ({2}, {3}) in the same direction")]
    Orientation(usize, usize, usize, usize),
    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },
    #[error("vertex {0} is not referenced by any face")]
    UnreferencedVertex(usize),
    #[error("closed mesh has Euler characteristic {chi} with {components} components: no integer genus")]
    Euler { chi: i64, components: usize },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MeshError>;

/// Oriented triangulated surface in `R^N`, `N >= 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    ambient_dim: usize,
    coords: Vec<f64>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// Per face: global edge index and orientation sign of its three sides
    /// `(v0,v1)`, `(v1,v2)`, `(v2,v0)`.
    face_edges: Vec<[(usize, i8); 3]>,
    /// Per edge: incident faces with the sign of the edge in that face.
    edge_faces: Vec<Vec<(usize, i8)>>,
    boundary_vertex: Vec<bool>,
    components: usize,
}

impl TriangleMesh {
    /// Builds and validates a mesh from flat coordinates (stride `ambient_dim`)
    /// and oriented faces.
    pub fn new(ambient_dim: usize, coords: Vec<f64>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if ambient_dim < 3 {
            return Err(MeshError::AmbientDim(ambient_dim));
        }
        if !coords.len().is_multiple_of(ambient_dim) {
            return Err(MeshError::Parse {
                line: 0,
                message: format!(
                    "coordinate array of length {} is not a multiple of {ambient_dim}",
                    coords.len()
                ),
            });
        }
        let n_vertices = coords.len() / ambient_dim;
        for (v, chunk) in coords.chunks(ambient_dim).enumerate() {
            if chunk.iter().any(|c| !c.is_finite()) {
                return Err(MeshError::NonFiniteVertex { vertex: v });
            }
        }

        let mut referenced = vec![false; n_vertices];
        for (f, face) in faces.iter().enumerate() {
            for &i in face {
                if i >= n_vertices {
                    return Err(MeshError::FaceIndexOutOfRange {
                        face: f,
                        index: i,
                        vertex_count: n_vertices,
                    });
                }
                referenced[i] = true;
            }
            if face[0] == face[1] || face[0] == face[2] {
                return Err(MeshError::RepeatedVertex { face: f, vertex: face[0] });
            }
            if face[1] == face[2] {
                return Err(MeshError::RepeatedVertex { face: f, vertex: face[1] });
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(MeshError::UnreferencedVertex(v));
        }

        // directed sides grouped by unordered pair
        let mut sides: HashMap<(usize, usize), Vec<(usize, i8)>> = HashMap::new();
        for (f, face) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let sign = if a < b { 1 } else { -1 };
                sides.entry(key).or_default().push((f, sign));
            }
        }
        let mut keys: Vec<(usize, usize)> = sides.keys().copied().collect();
        keys.sort_unstable();
        for key in &keys {
            let inc = &sides[key];
            if inc.len() > 2 {
                return Err(MeshError::NonManifoldEdge(key.0, key.1, inc.len()));
            }
            if inc.len() == 2 && inc[0].1 == inc[1].1 {
                return Err(MeshError::Orientation(inc[0].0, inc[1].0, key.0, key.1));
            }
        }

        let edge_index: HashMap<(usize, usize), usize> =
            keys.iter().enumerate().map(|(e, &k)| (k, e)).collect();
        let edges: Vec<[usize; 2]> = keys.iter().map(|&(a, b)| [a, b]).collect();
        let mut edge_faces: Vec<Vec<(usize, i8)>> = keys.iter().map(|k| sides[k].clone()).collect();
        for inc in &mut edge_faces {
            inc.sort_unstable();
        }
        let face_edges: Vec<[(usize, i8); 3]> = faces
            .iter()
            .map(|face| {
                let mut out = [(0usize, 0i8); 3];
                for (k, slot) in out.iter_mut().enumerate() {
                    let (a, b) = (face[k], face[(k + 1) % 3]);
                    let e = edge_index[&(a.min(b), a.max(b))];
                    *slot = (e, if a < b { 1 } else { -1 });
                }
                out
            })
            .collect();

        let mut boundary_vertex = vec![false; n_vertices];
        for (e, inc) in edge_faces.iter().enumerate() {
            if inc.len() == 1 {
                boundary_vertex[edges[e][0]] = true;
                boundary_vertex[edges[e][1]] = true;
            }
        }

        let components = count_components(n_vertices, &edges);
        let mut mesh = TriangleMesh {
            ambient_dim,
            coords,
            faces,
            edges,
            face_edges,
            edge_faces,
            boundary_vertex,
            components,
        };

        let diag2 = mesh.bounding_box_diagonal().powi(2);
        for f in 0..mesh.faces.len() {
            let area = mesh.face_area(f);
            if !(area > 1e-12 * diag2) {
                return Err(MeshError::DegenerateFace { face: f, area });
            }
        }

        if mesh.is_closed() {
            let chi = mesh.euler_characteristic();
            let twice_genus = 2 * mesh.components as i64 - chi;
            if twice_genus < 0 || twice_genus % 2 != 0 {
                return Err(MeshError::Euler { chi, components: mesh.components });
            }
        }
        mesh.coords.shrink_to_fit();
        Ok(mesh)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len() / self.ambient_dim
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.ambient_dim..(v + 1) * self.ambient_dim]
    }

    /// Flat coordinate array with stride [`Self::ambient_dim`].
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn face_edges(&self) -> &[[(usize, i8); 3]] {
        &self.face_edges
    }

    pub fn edge_faces(&self, e: usize) -> &[(usize, i8)] {
        &self.edge_faces[e]
    }

    pub fn boundary_vertices(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary_vertex.iter().any(|&b| b)
    }

    pub fn is_closed(&self) -> bool {
        !self.has_boundary()
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    /// Genus of a closed mesh (summed over components); `None` with boundary.
    pub fn genus(&self) -> Option<usize> {
        if !self.is_closed() {
            return None;
        }
        Some(((2 * self.components as i64 - self.euler_characteristic()) / 2) as usize)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let n = self.ambient_dim;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in self.coords.chunks(n) {
            for k in 0..n {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let (p, q, r) = (self.vertex(a), self.vertex(b), self.vertex(c));
        let mut uu = 0.0;
        let mut vv = 0.0;
        let mut uv = 0.0;
        for k in 0..self.ambient_dim {
            let u = q[k] - p[k];
            let v = r[k] - p[k];
            uu += u * u;
            vv += v * v;
            uv += u * v;
        }
        0.5 * (uu * vv - uv * uv).max(0.0).sqrt()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        dist(self.vertex(a), self.vertex(b))
    }

    /// Applies `f` to every vertex position, keeping the combinatorics.
    pub fn map_vertices(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut coords = Vec::with_capacity(self.coords.len());
        let mut dim = self.ambient_dim;
        for v in 0..self.vertex_count() {
            let p = f(self.vertex(v));
            dim = p.len();
            coords.extend(p);
        }
        TriangleMesh::new(dim, coords, self.faces.clone())
    }

    /// Vertex indices with `boundary_vertex == false`, ascending.
    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| !self.boundary_vertex[v]).collect()
    }
}

fn count_components(n: usize, edges: &[[usize; 2]]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &[a, b] in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..n).filter(|&v| find(&mut parent, v) == v).count()
}

pub(crate) fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Per-face areas, lumped vertex areas and total area.
///
/// Vertex areas are mixed Voronoi areas: each non-obtuse triangle gives its
/// corners their circumcentric dual pieces, an obtuse triangle gives half its
/// area to the obtuse corner and a quarter to the other two.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMeasures {
    pub face_areas: Vec<f64>,
    pub vertex_areas: Vec<f64>,
    pub volume: f64,
}

pub fn surface_measures(mesh: &TriangleMesh) -> SurfaceMeasures {
    let face_areas: Vec<f64> = (0..mesh.face_count()).map(|f| mesh.face_area(f)).collect();
    let mut vertex_areas = vec![0.0; mesh.vertex_count()];
    for (face, &area) in mesh.faces().iter().zip(&face_areas) {
        let p = [mesh.vertex(face[0]), mesh.vertex(face[1]), mesh.vertex(face[2])];
        // squared side lengths opposite each corner
        let l2: [f64; 3] = std::array::from_fn(|k| {
            let d = dist(p[(k + 1) % 3], p[(k + 2) % 3]);
            d * d
        });
        // cot of the corner angle: (b² + c² − a²) / (4 area)
        let cot: [f64; 3] =
            std::array::from_fn(|k| (l2[(k + 1) % 3] + l2[(k + 2) % 3] - l2[k]) / (4.0 * area));
        match (0..3).find(|&k| cot[k] < 0.0) {
            None => {
                for k in 0..3 {
                    // corner k sees sides k+1 and k+2 (opposite the other corners)
                    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                    vertex_areas[face[k]] += (l2[j] * cot[j] + l2[i] * cot[i]) / 8.0;
                }
            }
            Some(obtuse) => {
                for k in 0..3 {
                    vertex_areas[face[k]] += if k == obtuse { area / 2.0 } else { area / 4.0 };
                }
            }
        }
    }
    let volume = face_areas.iter().sum();
    SurfaceMeasures { face_areas, vertex_areas, volume }
}

// ---------------------------------------------------------------------------
// OFF files

/// Parses the OFF text format. A `# ambient N` comment anywhere before the
/// vertex block switches the coordinate count per vertex to `N`.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut ambient = 3usize;
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim();
        if line.is_empty() {
            return None;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            if it.next() == Some("ambient") {
                return Some((i + 1, Err(it.next().map(str::to_owned))));
            }
            return None;
        }
        Some((i + 1, Ok(line)))
    });

    let perr = |line: usize, message: String| MeshError::Parse { line, message };
    let mut next_data = |ambient: &mut usize| -> Result<(usize, &str)> {
        loop {
            match lines.next() {
                None => return Err(perr(0, "unexpected end of file".into())),
                Some((i, Err(value))) => {
                    *ambient = value
                        .as_deref()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| perr(i, "malformed '# ambient' comment".into()))?;
                }
                Some((i, Ok(line))) => return Ok((i, line)),
            }
        }
    };

    let (i, header) = next_data(&mut ambient)?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("OFF") {
        return Err(perr(i, format!("expected 'OFF' header, found '{header}'")));
    }
    let mut counts: Vec<&str> = tokens.collect();
    let mut count_line = i;
    if counts.is_empty() {
        let (i, line) = next_data(&mut ambient)?;
        count_line = i;
        counts = line.split_whitespace().collect();
    }
    if counts.len() < 2 {
        return Err(perr(count_line, "expected 'V F E' counts".into()));
    }
    let parse_count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| perr(count_line, format!("invalid count '{s}'")))
    };
    let n_vertices = parse_count(counts[0])?;
    let n_faces = parse_count(counts[1])?;

    let mut coords = Vec::with_capacity(n_vertices * ambient);
    for _ in 0..n_vertices {
        let (i, line) = next_data(&mut ambient)?;
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != ambient {
            return Err(perr(i, format!("expected {ambient} coordinates, found {}", values.len())));
        }
        for s in values {
            coords.push(s.parse::<f64>().map_err(|_| perr(i, format!("invalid coordinate '{s}'")))?);
        }
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (i, line) = next_data(&mut ambient)?;
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != 4 || values[0] != "3" {
            return Err(perr(i, format!("expected '3 i j k', found '{line}'")));
        }
        let mut face = [0usize; 3];
        for (slot, s) in face.iter_mut().zip(&values[1..]) {
            *slot = s.parse().map_err(|_| perr(i, format!("invalid vertex index '{s}'")))?;
        }
        faces.push(face);
    }
    TriangleMesh::new(ambient, coords, faces)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    parse_off(&std::fs::read_to_string(path)?)
}

/// OFF text with 17 significant digits per coordinate.
pub fn to_off_string(mesh: &TriangleMesh) -> String {
    let mut out = String::from("OFF\n");
    if mesh.ambient_dim() != 3 {
        let _ = writeln!(out, "# ambient {}", mesh.ambient_dim());
    }
    let _ = writeln!(out, "{} {} {}", mesh.vertex_count(), mesh.face_count(), mesh.edge_count());
    for v in 0..mesh.vertex_count() {
        let line: Vec<String> = mesh.vertex(v).iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

pub fn write_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_off_string(mesh))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Generators

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Icosphere { radius: f64, refinement: usize },
    CliffordTorus { n_u: usize, n_v: usize },
    FlatRectangle { a: f64, b: f64, n_x: usize, n_y: usize },
    /// Unit-sphere cap of polar angle `opening_angle` around `(0, 0, 1)`.
    GeodesicCap { opening_angle: f64, refinement: usize },
}

pub fn generate(shape: &Shape) -> Result<TriangleMesh> {
    match *shape {
        Shape::Icosphere { radius, refinement } => {
            check_positive("radius", radius)?;
            icosphere(radius, refinement)
        }
        Shape::CliffordTorus { n_u, n_v } => {
            check_min("n_u", n_u, 8)?;
            check_min("n_v", n_v, 8)?;
            clifford_torus(n_u, n_v)
        }
        Shape::FlatRectangle { a, b, n_x, n_y } => {
            check_positive("a", a)?;
            check_positive("b", b)?;
            check_min("n_x", n_x, 2)?;
            check_min("n_y", n_y, 2)?;
            flat_rectangle(a, b, n_x, n_y)
        }
        Shape::GeodesicCap { opening_angle, refinement } => {
            if !(opening_angle > 0.0 && opening_angle < std::f64::consts::PI) {
                return Err(MeshError::InvalidParameter {
                    name: "opening_angle",
                    value: opening_angle.to_string(),
                });
            }
            geodesic_cap(opening_angle, refinement)
        }
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(MeshError::InvalidParameter { name, value: value.to_string() })
    }
}

fn check_min(name: &'static str, value: usize, min: usize) -> Result<()> {
    if value >= min {
        Ok(())
    } else {
        Err(MeshError::InvalidParameter { name, value: value.to_string() })
    }
}

fn normalize3(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Unit icosphere vertices and outward-oriented faces.
fn unit_icosphere(refinement: usize) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize3)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..refinement {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize3([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (verts, faces)
}

fn icosphere(radius: f64, refinement: usize) -> Result<TriangleMesh> {
    let (verts, faces) = unit_icosphere(refinement);
    let coords = verts.iter().flat_map(|p| p.map(|x| x * radius)).collect();
    TriangleMesh::new(3, coords, faces)
}

fn clifford_torus(n_u: usize, n_v: usize) -> Result<TriangleMesh> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let tau = 2.0 * std::f64::consts::PI;
    let mut coords = Vec::with_capacity(4 * n_u * n_v);
    for i in 0..n_u {
        let u = tau * i as f64 / n_u as f64;
        for j in 0..n_v {
            let v = tau * j as f64 / n_v as f64;
            coords.extend([s * u.cos(), s * u.sin(), s * v.cos(), s * v.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % n_u) * n_v + (j % n_v);
    let mut faces = Vec::with_capacity(2 * n_u * n_v);
    for i in 0..n_u {
        for j in 0..n_v {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(4, coords, faces)
}

fn flat_rectangle(a: f64, b: f64, n_x: usize, n_y: usize) -> Result<TriangleMesh> {
    let mut coords = Vec::with_capacity(3 * (n_x + 1) * (n_y + 1));
    for j in 0..=n_y {
        for i in 0..=n_x {
            coords.extend([a * i as f64 / n_x as f64, b * j as f64 / n_y as f64, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (n_x + 1) + i;
    let mut faces = Vec::with_capacity(2 * n_x * n_y);
    for j in 0..n_y {
        for i in 0..n_x {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(3, coords, faces)
}

/// Rotation taking unit vector `from` onto `(0, 0, 1)`.
fn rotation_to_pole(from: [f64; 3]) -> [[f64; 3]; 3] {
    let [x, y, z] = from;
    // axis = from × e3, cos = z
    let axis = [y, -x, 0.0];
    let s = (x * x + y * y).sqrt();
    if s < 1e-15 {
        return if z > 0.0 {
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        } else {
            [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]
        };
    }
    let k = [axis[0] / s, axis[1] / s, 0.0];
    let (c, one_c) = (z, 1.0 - z);
    [
        [c + k[0] * k[0] * one_c, k[0] * k[1] * one_c, k[1] * s],
        [k[1] * k[0] * one_c, c + k[1] * k[1] * one_c, -k[0] * s],
        [-k[1] * s, k[0] * s, c],
    ]
}

fn geodesic_cap(opening_angle: f64, refinement: usize) -> Result<TriangleMesh> {
    let (verts, faces) = unit_icosphere(refinement);
    let rot = rotation_to_pole(verts[0]);
    let rotated: Vec<[f64; 3]> = verts
        .iter()
        .map(|p| {
            let mut q = [0.0; 3];
            for (r, row) in q.iter_mut().zip(&rot) {
                *r = row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
            }
            normalize3(q)
        })
        .collect();
    let polar = |p: &[f64; 3]| p[2].clamp(-1.0, 1.0).acos();
    let inside: Vec<bool> = rotated.iter().map(|p| polar(p) <= opening_angle + 1e-9).collect();
    let kept: Vec<[usize; 3]> = faces
        .into_iter()
        .filter(|f| f.iter().all(|&v| inside[v]))
        .collect();

    let mut new_index = vec![usize::MAX; rotated.len()];
    let mut order = Vec::new();
    for f in &kept {
        for &v in f {
            if new_index[v] == usize::MAX {
                new_index[v] = 0;
                order.push(v);
            }
        }
    }
    order.sort_unstable();
    for (k, &v) in order.iter().enumerate() {
        new_index[v] = k;
    }
    let faces: Vec<[usize; 3]> = kept.iter().map(|f| f.map(|v| new_index[v])).collect();
    let coords: Vec<f64> = order.iter().flat_map(|&v| rotated[v]).collect();
    let trimmed = TriangleMesh::new(3, coords, faces)?;

    let (st, ct) = opening_angle.sin_cos();
    let snapped = (0..trimmed.vertex_count())
        .flat_map(|v| {
            let p = trimmed.vertex(v);
            if trimmed.is_boundary_vertex(v) {
                let phi = p[1].atan2(p[0]);
                [st * phi.cos(), st * phi.sin(), ct]
            } else {
                [p[0], p[1], p[2]]
            }
        })
        .collect();
    let mesh = TriangleMesh::new(3, snapped, trimmed.faces().to_vec())?;
    // snapping must not fold any triangle over
    for (f, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let (p, q, r) = (mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
        let u = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
        let w = [r[0] - p[0], r[1] - p[1], r[2] - p[2]];
        let n = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
        let centroid = [p[0] + q[0] + r[0], p[1] + q[1] + r[1], p[2] + q[2] + r[2]];
        if n[0] * centroid[0] + n[1] * centroid[1] + n[2] * centroid[2] <= 0.0 {
            return Err(MeshError::DegenerateFace { face: f, area: mesh.face_area(f) });
        }
    }
    Ok(mesh)
}
