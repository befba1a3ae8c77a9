//! Structured simplicial meshes of the unit interval, square and cube.
//!
//! Every mesh carries its boundary facets with their surface measure and
//! outward unit normal. In 1D the boundary is the point set `{0, 1}` and each
//! facet has counting measure 1.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{invalid, Result};

/// Coordinates are always stored in three components; unused ones are zero.
pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Interval,
    Square,
    Cube,
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::Interval => 1,
            Domain::Square => 2,
            Domain::Cube => 3,
        }
    }

    /// σ(∂Ω) for the unit box of this dimension.
    pub fn boundary_measure(self) -> f64 {
        2.0 * self.dim() as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Interval => "interval",
            Domain::Square => "square",
            Domain::Cube => "cube",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    /// `dim` vertex indices.
    pub vertices: Vec<usize>,
    /// Surface measure; 1 for the endpoint facets of the interval.
    pub measure: f64,
    pub outward_normal: Point,
    pub parent_cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    domain: Domain,
    n: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    cell_measures: Vec<f64>,
    boundary_facets: Vec<BoundaryFacet>,
}

/// Uniform mesh of (0,1) with `n` segments.
pub fn build_interval_mesh(n: usize) -> Result<Mesh> {
    check_n(n)?;
    let vertices = (0..=n).map(|i| [i as f64 / n as f64, 0.0, 0.0]).collect();
    let cells = (0..n).flat_map(|i| [i, i + 1]).collect();
    Mesh::from_parts(Domain::Interval, n, vertices, cells)
}

/// Uniform grid on (0,1)² with every square cut along the same diagonal.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh> {
    check_n(n)?;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64, 0.0]);
        }
    }
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            cells.extend_from_slice(&[v00, v10, v11]);
            cells.extend_from_slice(&[v00, v11, v01]);
        }
    }
    Mesh::from_parts(Domain::Square, n, vertices, cells)
}

/// Uniform grid on (0,1)³ with every sub-cube split into the six Kuhn
/// tetrahedra sharing the main diagonal.
pub fn build_unit_cube_mesh(n: usize) -> Result<Mesh> {
    check_n(n)?;
    let idx = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
            }
        }
    }
    // Each tetrahedron walks from corner (0,0,0) to (1,1,1) along the axes in
    // one of the six orders.
    const PATHS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cells = Vec::with_capacity(24 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for path in PATHS {
                    let mut corner = [i, j, k];
                    cells.push(idx(corner[0], corner[1], corner[2]));
                    for axis in path {
                        corner[axis] += 1;
                        cells.push(idx(corner[0], corner[1], corner[2]));
                    }
                }
            }
        }
    }
    Mesh::from_parts(Domain::Cube, n, vertices, cells)
}

pub fn build_mesh(domain: Domain, n: usize) -> Result<Mesh> {
    match domain {
        Domain::Interval => build_interval_mesh(n),
        Domain::Square => build_unit_square_mesh(n),
        Domain::Cube => build_unit_cube_mesh(n),
    }
}

/// Sorted, deduplicated indices of all vertices lying on a boundary facet.
pub fn boundary_vertex_indices(mesh: &Mesh) -> Vec<usize> {
    let mut on_boundary = vec![false; mesh.num_vertices()];
    for facet in &mesh.boundary_facets {
        for &v in &facet.vertices {
            on_boundary[v] = true;
        }
    }
    on_boundary
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("mesh parameter n must be at least 1"));
    }
    Ok(())
}

impl Mesh {
    fn from_parts(domain: Domain, n: usize, vertices: Vec<Point>, cells: Vec<usize>) -> Result<Mesh> {
        let dim = domain.dim();
        let mut mesh = Mesh {
            domain,
            n,
            vertices,
            cells,
            cell_measures: Vec::new(),
            boundary_facets: Vec::new(),
        };
        mesh.cell_measures = (0..mesh.num_cells())
            .map(|c| simplex_measure(&mesh.cell_points(c), dim))
            .collect();
        mesh.boundary_facets = mesh.find_boundary_facets();
        Ok(mesh)
    }

    /// Faces seen by exactly one cell form the boundary. Facets come out in
    /// cell order, then in local-face order, so the numbering is deterministic.
    fn find_boundary_facets(&self) -> Vec<BoundaryFacet> {
        let dim = self.dim();
        let mut counts: HashMap<Vec<usize>, u32> = HashMap::new();
        for c in 0..self.num_cells() {
            for face in local_faces(self.cell(c)) {
                *counts.entry(sorted(&face.1)).or_insert(0) += 1;
            }
        }
        let mut facets = Vec::new();
        for c in 0..self.num_cells() {
            for (opposite, face) in local_faces(self.cell(c)) {
                if counts[&sorted(&face)] != 1 {
                    continue;
                }
                let pts: Vec<Point> = face.iter().map(|&v| self.vertices[v]).collect();
                let measure = if dim == 1 { 1.0 } else { simplex_measure(&pts, dim - 1) };
                let mut normal = facet_normal(&pts, dim);
                // Flip towards the side away from the opposite vertex.
                let apex = self.vertices[opposite];
                if dot(&normal, &sub(&pts[0], &apex)) < 0.0 {
                    normal = normal.map(|x| -x);
                }
                facets.push(BoundaryFacet {
                    vertices: face,
                    measure,
                    outward_normal: normal,
                    parent_cell: c,
                });
            }
        }
        facets
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of subdivisions per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Characteristic mesh size `1/n`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim() + 1)
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim() + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.dim() + 1)
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_measures(&self) -> &[f64] {
        &self.cell_measures
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    pub fn facet_points(&self, f: usize) -> Vec<Point> {
        self.boundary_facets[f]
            .vertices
            .iter()
            .map(|&v| self.vertices[v])
            .collect()
    }

    /// Plain-text dump: `v x y z`, `c i0 i1 ...`, `f i0 ... | measure | nx ny nz`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
        }
        for cell in self.cells() {
            out.push('c');
            for i in cell {
                let _ = write!(out, " {i}");
            }
            out.push('\n');
        }
        for f in &self.boundary_facets {
            out.push('f');
            for i in &f.vertices {
                let _ = write!(out, " {i}");
            }
            let n = f.outward_normal;
            let _ = writeln!(out, " | {} | {} {} {}", f.measure, n[0], n[1], n[2]);
        }
        out
    }
}

/// `(opposite vertex, face vertices)` for each face of a simplex.
fn local_faces(cell: &[usize]) -> impl Iterator<Item = (usize, Vec<usize>)> + '_ {
    (0..cell.len()).map(move |skip| {
        let face = cell
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (i != skip).then_some(v))
            .collect();
        (cell[skip], face)
    })
}

fn sorted(face: &[usize]) -> Vec<usize> {
    let mut key = face.to_vec();
    key.sort_unstable();
    key
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

/// Length, area or volume of a `k`-simplex embedded in 3-space (k ≤ 3).
pub(crate) fn simplex_measure(pts: &[Point], k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => norm(&sub(&pts[1], &pts[0])),
        2 => 0.5 * norm(&cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]))),
        3 => {
            let e1 = sub(&pts[1], &pts[0]);
            let e2 = sub(&pts[2], &pts[0]);
            let e3 = sub(&pts[3], &pts[0]);
            dot(&e1, &cross(&e2, &e3)).abs() / 6.0
        }
        _ => unreachable!("simplices of dimension > 3 are not supported"),
    }
}

/// Unit normal of a facet in a `dim`-dimensional mesh, orientation unspecified.
fn facet_normal(pts: &[Point], dim: usize) -> Point {
    let raw = match dim {
        1 => [1.0, 0.0, 0.0],
        2 => {
            let t = sub(&pts[1], &pts[0]);
            [-t[1], t[0], 0.0]
        }
        3 => cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0])),
        _ => unreachable!(),
    };
    let len = norm(&raw);
    raw.map(|x| x / len)
}
