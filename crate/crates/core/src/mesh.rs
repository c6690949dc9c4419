//! Quadrilateral meshes of the channel domain.
//!
//! The benchmark mesh is a graded tensor grid over the rectangle: uniform
//! cells of the hole block width near the hole center, coarser cells
//! elsewhere. Its 2x2 block of cells around the hole center is replaced by a
//! ring of eight quadrilaterals with inner vertices on the hole circle. The mesh is fitted to the outer
//! boundary and the hole, never to the fluid-solid interface.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{self, Write};

use thiserror::Error;

use crate::geometry::{self, dist, norm, polygon_area, sub, BilinearMap, Point};

pub const CHANNEL_LENGTH: f64 = 2.2;
pub const CHANNEL_HEIGHT: f64 = 0.41;
pub const BENCHMARK_CENTER: Point = [0.2, 0.2];
pub const HOLE_RADIUS: f64 = 0.01;
/// Target spacing of the level-0 background grid.
const BASE_SPACING: f64 = 1.0 / 15.0;
/// Half width of the 2x2 block of cells replaced by the hole ring. The
/// ring's outer corners sit at `0.025 * sqrt(2) < 0.05` from the center,
/// so the ring stays inside the benchmark disc on every level.
pub const HOLE_BLOCK_HALF_WIDTH: f64 = 0.025;
/// Half width of the square around the hole center meshed with cells of
/// width [`HOLE_BLOCK_HALF_WIDTH`].
const FINE_ZONE_HALF_WIDTH: f64 = 0.1;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("grid lines must be strictly increasing with at least two entries")]
    InvalidGrid,
    #[error("hole touches or crosses the outer boundary")]
    HoleTouchesBoundary,
    #[error("hole center {0:?} is not an interior grid vertex")]
    HoleNotOnGridVertex(Point),
    #[error("hole radius {radius} does not fit inside the surrounding cell block (limit {limit})")]
    HoleTooLarge { radius: f64, limit: f64 },
    #[error("edge ({0}, {1}) is shared by more than two cells")]
    NonManifoldEdge(usize, usize),
    #[error("boundary edge ({0}, {1}) has no marker")]
    MissingBoundaryMarker(usize, usize),
    #[error("cell {0} has a non-positive Jacobian determinant")]
    InvertedCell(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMarker {
    Inflow,
    Outflow,
    Wall,
    Hole,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hole {
    pub center: Point,
    pub radius: f64,
}

impl Hole {
    pub fn benchmark() -> Self {
        Self {
            center: BENCHMARK_CENTER,
            radius: HOLE_RADIUS,
        }
    }
}

/// One cell's view of a face: the cell, which of its four edges the face
/// is, and the outward unit normal seen from that cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceSide {
    pub cell: usize,
    pub local_edge: usize,
    pub normal: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub vertices: [usize; 2],
    pub first: FaceSide,
    pub second: Option<FaceSide>,
    pub marker: Option<BoundaryMarker>,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.second.is_some()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.first.cell).chain(self.second.map(|s| s.cell))
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex indices.
    pub cells: Vec<[usize; 4]>,
    pub faces: Vec<Face>,
    /// Face index of local edge `e` (from vertex `e` to vertex `e+1`).
    pub cell_faces: Vec<[usize; 4]>,
    pub refinement_level: usize,
    pub hole: Option<Hole>,
}

/// The benchmark channel `[0, 2.2] x [0, 0.41]`, optionally with a fitted
/// hole, refined `level` times.
pub fn build_channel_mesh(level: usize, hole: Option<Hole>) -> Result<Mesh, MeshError> {
    let center = hole.map_or(BENCHMARK_CENTER, |h| h.center);
    if let Some(h) = hole {
        let [cx, cy] = h.center;
        if cx - h.radius <= 0.0
            || cx + h.radius >= CHANNEL_LENGTH
            || cy - h.radius <= 0.0
            || cy + h.radius >= CHANNEL_HEIGHT
        {
            return Err(MeshError::HoleTouchesBoundary);
        }
    }
    let x_lines = split_lines(0.0, center[0], CHANNEL_LENGTH);
    let y_lines = split_lines(0.0, center[1], CHANNEL_HEIGHT);
    debug_assert!(x_lines.len() > 3 && y_lines.len() > 3);
    let mut mesh = build_rect_mesh(&x_lines, &y_lines, hole)?;
    for _ in 0..level {
        mesh = refine_uniform(&mesh)?;
    }
    Ok(mesh)
}

/// Grid lines from `a` to `b`: cells of width `d` (the hole block half
/// width) on `[c - z, c + z]`, near-uniform cells of roughly the base
/// spacing outside. `z` is a multiple of `d`, shrunk when the fine zone
/// would leave less than `d` to either end.
fn split_lines(a: f64, c: f64, b: f64) -> Vec<f64> {
    let d = HOLE_BLOCK_HALF_WIDTH;
    let mut m = ((FINE_ZONE_HALF_WIDTH / d).round() as usize).max(1);
    while m > 1 && (c - m as f64 * d - a < d || b - c - m as f64 * d < d) {
        m -= 1;
    }
    let (l, r) = (c - m as f64 * d, c + m as f64 * d);
    let n1 = (((l - a) / BASE_SPACING).round() as usize).max(1);
    let n2 = (((b - r) / BASE_SPACING).round() as usize).max(1);
    let mut lines: Vec<f64> = (0..n1)
        .map(|i| a + (l - a) * i as f64 / n1 as f64)
        .collect();
    lines.extend((0..2 * m).map(|i| c + (i as f64 - m as f64) * d));
    lines.extend((0..n2).map(|i| r + (b - r) * i as f64 / n2 as f64));
    lines.push(b);
    lines
}

/// Tensor-product grid over `x_lines x y_lines`. With a hole, its center
/// must be an interior grid vertex; the four cells around it are replaced
/// by a ring of eight cells whose inner vertices lie on the hole circle.
pub fn build_rect_mesh(
    x_lines: &[f64],
    y_lines: &[f64],
    hole: Option<Hole>,
) -> Result<Mesh, MeshError> {
    let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
    if !increasing(x_lines) || !increasing(y_lines) {
        return Err(MeshError::InvalidGrid);
    }
    let nx = x_lines.len() - 1;
    let ny = y_lines.len() - 1;
    let (x0, x1) = (x_lines[0], x_lines[nx]);
    let (y0, y1) = (y_lines[0], y_lines[ny]);

    let hole_block = match hole {
        None => None,
        Some(h) => {
            let [cx, cy] = h.center;
            if cx - h.radius <= x0
                || cx + h.radius >= x1
                || cy - h.radius <= y0
                || cy + h.radius >= y1
            {
                return Err(MeshError::HoleTouchesBoundary);
            }
            let tol = 1e-12 * (x1 - x0).max(y1 - y0);
            let i = x_lines.iter().position(|&x| (x - cx).abs() < tol);
            let j = y_lines.iter().position(|&y| (y - cy).abs() < tol);
            let (i, j) = match (i, j) {
                (Some(i), Some(j)) if i > 0 && i < nx && j > 0 && j < ny => (i, j),
                _ => return Err(MeshError::HoleNotOnGridVertex(h.center)),
            };
            let limit = (x_lines[i] - x_lines[i - 1])
                .min(x_lines[i + 1] - x_lines[i])
                .min(y_lines[j] - y_lines[j - 1])
                .min(y_lines[j + 1] - y_lines[j]);
            if h.radius >= 0.5 * limit {
                return Err(MeshError::HoleTooLarge {
                    radius: h.radius,
                    limit: 0.5 * limit,
                });
            }
            Some((i, j, h))
        }
    };

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + 8);
    let mut grid_vertex = vec![usize::MAX; (nx + 1) * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            if matches!(hole_block, Some((hi, hj, _)) if hi == i && hj == j) {
                continue;
            }
            grid_vertex[j * (nx + 1) + i] = vertices.len();
            vertices.push([x_lines[i], y_lines[j]]);
        }
    }
    let gv = |i: usize, j: usize| grid_vertex[j * (nx + 1) + i];

    let mut cells = Vec::with_capacity(nx * ny + 4);
    for j in 0..ny {
        for i in 0..nx {
            if let Some((hi, hj, _)) = hole_block {
                if (i + 1 == hi || i == hi) && (j + 1 == hj || j == hj) {
                    continue;
                }
            }
            cells.push([gv(i, j), gv(i + 1, j), gv(i + 1, j + 1), gv(i, j + 1)]);
        }
    }

    let mut hole_vertices = Vec::new();
    if let Some((i, j, h)) = hole_block {
        let outer = [
            gv(i - 1, j - 1),
            gv(i, j - 1),
            gv(i + 1, j - 1),
            gv(i + 1, j),
            gv(i + 1, j + 1),
            gv(i, j + 1),
            gv(i - 1, j + 1),
            gv(i - 1, j),
        ];
        let inner: Vec<usize> = outer
            .iter()
            .map(|&o| {
                let d = sub(vertices[o], h.center);
                let n = norm(d);
                let p = [
                    h.center[0] + h.radius * d[0] / n,
                    h.center[1] + h.radius * d[1] / n,
                ];
                vertices.push(p);
                vertices.len() - 1
            })
            .collect();
        for k in 0..8 {
            let k1 = (k + 1) % 8;
            cells.push([outer[k], outer[k1], inner[k1], inner[k]]);
        }
        hole_vertices = inner;
    }

    let tol = 1e-12 * (x1 - x0).max(y1 - y0);
    let classify = |a: Point, b: Point| -> Option<BoundaryMarker> {
        let on = |u: f64, v: f64, c: f64| (u - c).abs() < tol && (v - c).abs() < tol;
        if on(a[0], b[0], x0) {
            Some(BoundaryMarker::Inflow)
        } else if on(a[0], b[0], x1) {
            Some(BoundaryMarker::Outflow)
        } else if on(a[1], b[1], y0) || on(a[1], b[1], y1) {
            Some(BoundaryMarker::Wall)
        } else {
            None
        }
    };
    let mut markers = HashMap::new();
    for c in &cells {
        for e in 0..4 {
            let (a, b) = (c[e], c[(e + 1) % 4]);
            let m = if hole_vertices.contains(&a) && hole_vertices.contains(&b) {
                Some(BoundaryMarker::Hole)
            } else {
                classify(vertices[a], vertices[b])
            };
            if let Some(m) = m {
                markers.insert(edge_key(a, b), m);
            }
        }
    }
    Mesh::from_cells(vertices, cells, &markers, 0, hole)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Splits every quadrilateral into four. New vertices on hole faces are
/// projected back onto the hole circle; boundary markers are inherited.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh, MeshError> {
    let nv = mesh.vertices.len();
    let nf = mesh.faces.len();
    let mut vertices = mesh.vertices.clone();
    vertices.reserve(nf + mesh.cells.len());
    let mut markers = HashMap::new();
    for (f, face) in mesh.faces.iter().enumerate() {
        let [a, b] = face.vertices;
        let mut m = geometry::lerp(mesh.vertices[a], mesh.vertices[b], 0.5);
        if face.marker == Some(BoundaryMarker::Hole) {
            if let Some(h) = mesh.hole {
                let d = sub(m, h.center);
                let n = norm(d);
                m = [
                    h.center[0] + h.radius * d[0] / n,
                    h.center[1] + h.radius * d[1] / n,
                ];
            }
        }
        vertices.push(m);
        if let Some(marker) = face.marker {
            markers.insert(edge_key(a, nv + f), marker);
            markers.insert(edge_key(nv + f, b), marker);
        }
    }
    let mut cells = Vec::with_capacity(4 * mesh.cells.len());
    for (c, cell) in mesh.cells.iter().enumerate() {
        let mids: [usize; 4] = std::array::from_fn(|e| nv + mesh.cell_faces[c][e]);
        // Coons-patch center: reduces to the vertex average for straight edges.
        let mut center = [0.0; 2];
        for k in 0..4 {
            for d in 0..2 {
                center[d] += 0.5 * vertices[mids[k]][d] - 0.25 * vertices[cell[k]][d];
            }
        }
        let ci = vertices.len();
        vertices.push(center);
        let [v0, v1, v2, v3] = *cell;
        let [m0, m1, m2, m3] = mids;
        cells.push([v0, m0, ci, m3]);
        cells.push([m0, v1, m1, ci]);
        cells.push([ci, m1, v2, m2]);
        cells.push([m3, ci, m2, v3]);
    }
    Mesh::from_cells(
        vertices,
        cells,
        &markers,
        mesh.refinement_level + 1,
        mesh.hole,
    )
}

impl Mesh {
    fn from_cells(
        vertices: Vec<Point>,
        cells: Vec<[usize; 4]>,
        markers: &HashMap<(usize, usize), BoundaryMarker>,
        refinement_level: usize,
        hole: Option<Hole>,
    ) -> Result<Mesh, MeshError> {
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(2 * cells.len());
        let mut faces: Vec<Face> = Vec::with_capacity(2 * cells.len() + 8);
        let mut cell_faces = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let mut cf = [0; 4];
            for e in 0..4 {
                let (a, b) = (cell[e], cell[(e + 1) % 4]);
                let d = sub(vertices[b], vertices[a]);
                let len = norm(d);
                let side = FaceSide {
                    cell: c,
                    local_edge: e,
                    normal: [d[1] / len, -d[0] / len],
                };
                let key = edge_key(a, b);
                match lookup.get(&key) {
                    Some(&f) => {
                        if faces[f].second.is_some() {
                            return Err(MeshError::NonManifoldEdge(a, b));
                        }
                        faces[f].second = Some(side);
                        cf[e] = f;
                    }
                    None => {
                        lookup.insert(key, faces.len());
                        cf[e] = faces.len();
                        faces.push(Face {
                            vertices: [a, b],
                            first: side,
                            second: None,
                            marker: None,
                        });
                    }
                }
            }
            cell_faces.push(cf);
        }
        for face in faces.iter_mut().filter(|f| f.second.is_none()) {
            let [a, b] = face.vertices;
            face.marker = Some(
                *markers
                    .get(&edge_key(a, b))
                    .ok_or(MeshError::MissingBoundaryMarker(a, b))?,
            );
        }
        let mesh = Mesh {
            vertices,
            cells,
            faces,
            cell_faces,
            refinement_level,
            hole,
        };
        mesh.check_orientation()?;
        Ok(mesh)
    }

    fn check_orientation(&self) -> Result<(), MeshError> {
        let g = 0.5 / 3f64.sqrt();
        let probes = [
            [0.5 - g, 0.5 - g],
            [0.5 + g, 0.5 - g],
            [0.5 + g, 0.5 + g],
            [0.5 - g, 0.5 + g],
        ];
        for c in 0..self.cells.len() {
            let map = self.cell_map(c);
            let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
            if probes
                .iter()
                .chain(corners.iter())
                .any(|&r| geometry::det2(&map.jacobian(r)) <= 0.0)
            {
                return Err(MeshError::InvertedCell(c));
            }
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_vertices(&self, c: usize) -> [Point; 4] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn cell_map(&self, c: usize) -> BilinearMap {
        BilinearMap::new(self.cell_vertices(c))
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        polygon_area(&self.cell_vertices(c))
    }

    /// Largest vertex-to-vertex distance of the cell.
    pub fn cell_diameter(&self, c: usize) -> f64 {
        let v = self.cell_vertices(c);
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                d = d.max(dist(v[i], v[j]));
            }
        }
        d
    }

    /// The global mesh size `h` used by the stabilization scalings.
    pub fn max_cell_diameter(&self) -> f64 {
        (0..self.cells.len())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_area(c)).sum()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(|f| f.is_interior())
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(|f| !f.is_interior())
    }

    /// Area of the exact domain the mesh approximates: the bounding
    /// rectangle minus the hole disc.
    pub fn nominal_domain_area(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        let hole = self.hole.map_or(0.0, |h| PI * h.radius * h.radius);
        (hi[0] - lo[0]) * (hi[1] - lo[1]) - hole
    }

    pub fn write_vtk<W: Write>(&self, w: &mut W) -> io::Result<()> {
        crate::vtk::write_quads(w, "cutfsi mesh", &self.vertices, &self.cells, &[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn unit_grid(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn level0_area_matches_domain_with_octagonal_hole() {
        let mesh = build_channel_mesh(0, Some(Hole::benchmark())).unwrap();
        // inner ring vertices sit on the circle in the directions of the
        // surrounding block vertices
        let (dxl, dxr) = (HOLE_BLOCK_HALF_WIDTH, HOLE_BLOCK_HALF_WIDTH);
        let (dyl, dyr) = (HOLE_BLOCK_HALF_WIDTH, HOLE_BLOCK_HALF_WIDTH);
        let dirs = [
            (-dxl, -dyl),
            (0.0, -dyl),
            (dxr, -dyl),
            (dxr, 0.0),
            (dxr, dyr),
            (0.0, dyr),
            (-dxl, dyr),
            (-dxl, 0.0),
        ];
        let angles: Vec<f64> = dirs.iter().map(|&(x, y): &(f64, f64)| y.atan2(x)).collect();
        let octagon: f64 = (0..8)
            .map(|k| {
                let mut d = angles[(k + 1) % 8] - angles[k];
                if d < 0.0 {
                    d += 2.0 * PI;
                }
                0.5 * HOLE_RADIUS * HOLE_RADIUS * d.sin()
            })
            .sum();
        let exact_polygonal = CHANNEL_LENGTH * CHANNEL_HEIGHT - octagon;
        let diff = mesh.total_area() - exact_polygonal;
        assert!(diff.abs() < 1e-12, "{diff}");
        let nominal = mesh.nominal_domain_area();
        assert!(((mesh.total_area() - nominal) / nominal).abs() < 0.02);
    }

    #[test]
    fn refinement_quadruples_cells_and_preserves_area() {
        let m0 = build_channel_mesh(0, None).unwrap();
        let m1 = refine_uniform(&m0).unwrap();
        assert_eq!(m1.num_cells(), 4 * m0.num_cells());
        assert!(((m1.total_area() - m0.total_area()) / m0.total_area()).abs() < 1e-12);
        assert_eq!(m1.refinement_level, 1);
        let m2 = refine_uniform(&m1).unwrap();
        assert_eq!(m2.refinement_level, 2);
        let ratio = m1.max_cell_diameter() / m0.max_cell_diameter();
        assert!((ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hole_ring_refinement_keeps_vertices_on_circle() {
        let m = build_channel_mesh(2, Some(Hole::benchmark())).unwrap();
        let hole_faces: Vec<_> = m
            .boundary_faces()
            .filter(|f| f.marker == Some(BoundaryMarker::Hole))
            .collect();
        assert_eq!(hole_faces.len(), 8 * 4);
        for f in hole_faces {
            for v in f.vertices {
                let r = dist(m.vertices[v], BENCHMARK_CENTER);
                assert!((r - HOLE_RADIUS).abs() < 1e-14);
            }
        }
        // the polygonal hole area converges to the disc
        let defect = m.total_area() - m.nominal_domain_area();
        assert!(defect > 0.0 && defect < 0.01 * PI * HOLE_RADIUS * HOLE_RADIUS);
    }

    #[test]
    fn interior_face_counts_on_small_patches() {
        let two = build_rect_mesh(&[0.0, 1.0, 2.0], &[0.0, 1.0], None).unwrap();
        assert_eq!(two.interior_faces().count(), 1);
        let four = build_rect_mesh(&unit_grid(2), &unit_grid(2), None).unwrap();
        assert_eq!(four.interior_faces().count(), 4);
    }

    #[test]
    fn face_incidence_matches_brute_force_edge_count() {
        let mesh = build_channel_mesh(1, Some(Hole::benchmark())).unwrap();
        // brute force: count every cell edge by unordered vertex pair
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for c in &mesh.cells {
            for e in 0..4 {
                *count.entry(edge_key(c[e], c[(e + 1) % 4])).or_default() += 1;
            }
        }
        let interior = count.values().filter(|&&n| n == 2).count();
        let boundary = count.values().filter(|&&n| n == 1).count();
        assert_eq!(interior + boundary, count.len());
        assert_eq!(mesh.interior_faces().count(), interior);
        assert_eq!(mesh.boundary_faces().count(), boundary);
        assert_eq!(2 * interior + boundary, 4 * mesh.num_cells());
    }

    #[test]
    fn interior_normals_are_antiparallel() {
        let mesh = build_channel_mesh(1, Some(Hole::benchmark())).unwrap();
        for f in mesh.interior_faces() {
            let n1 = f.first.normal;
            let n2 = f.second.unwrap().normal;
            assert!((geometry::dot(n1, n2) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_markers_follow_channel_sides() {
        let mesh = build_channel_mesh(0, Some(Hole::benchmark())).unwrap();
        for f in mesh.boundary_faces() {
            let [a, b] = f.vertices.map(|v| mesh.vertices[v]);
            let mid = geometry::lerp(a, b, 0.5);
            let expected = if mid[0].abs() < 1e-12 {
                BoundaryMarker::Inflow
            } else if (mid[0] - CHANNEL_LENGTH).abs() < 1e-12 {
                BoundaryMarker::Outflow
            } else if mid[1].abs() < 1e-12 || (mid[1] - CHANNEL_HEIGHT).abs() < 1e-12 {
                BoundaryMarker::Wall
            } else {
                BoundaryMarker::Hole
            };
            assert_eq!(f.marker, Some(expected));
        }
    }

    #[test]
    fn vertices_are_distinct_and_referenced() {
        let mesh = build_channel_mesh(1, Some(Hole::benchmark())).unwrap();
        let used: HashSet<usize> = mesh.cells.iter().flatten().copied().collect();
        assert_eq!(used.len(), mesh.vertices.len());
        let mut sorted = mesh.vertices.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in sorted.windows(2) {
            assert!(dist(w[0], w[1]) > 1e-12);
        }
    }

    #[test]
    fn rejects_hole_touching_boundary() {
        let hole = Hole {
            center: [0.2, 0.005],
            radius: 0.01,
        };
        assert!(matches!(
            build_channel_mesh(0, Some(hole)),
            Err(MeshError::HoleTouchesBoundary)
        ));
    }

    #[test]
    fn rejects_hole_off_grid_vertex() {
        let hole = Hole {
            center: [0.5, 0.5],
            radius: 0.01,
        };
        let g = [0.0, 0.3, 0.6, 1.0];
        assert!(matches!(
            build_rect_mesh(&g, &g, Some(hole)),
            Err(MeshError::HoleNotOnGridVertex(_))
        ));
    }
}
