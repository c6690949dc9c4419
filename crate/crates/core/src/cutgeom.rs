//! Level-set interface description and cut-cell integration.
//!
//! Each cell is classified from the signs of the level set at its
//! vertices. Cut cells are split by a marching-squares reconstruction: the
//! interface crosses each sign-changing edge at the exact zero of the level
//! set along that edge, and consecutive crossings are joined by straight
//! segments. Both sides of the split are convex polygons (or corner
//! triangles in the saddle case) that are fan-triangulated and integrated
//! with collapsed Gauss rules.

use std::io::{self, Write};

use thiserror::Error;

use crate::geometry::{self, add, dist, lerp, norm, polygon_area, scale, sub, Point};
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, points_for_degree, square_rule, triangle_rule};

/// Polynomial degree integrated exactly on every cut sub-triangle.
pub const DEFAULT_ORDER: usize = 4;

#[derive(Debug, Error)]
pub enum CutError {
    #[error("interface reconstruction in cell {0} produced a degenerate polygon")]
    DegeneratePolygon(usize),
}

/// Signed distance-like description of the interface. Positive values are
/// fluid, negative values solid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelSet {
    /// `phi(x) = |x - center| - radius`: a solid disc.
    Circle { center: Point, radius: f64 },
    /// `phi(x) = normal . x - offset` with a unit normal pointing into the
    /// fluid.
    Line { normal: Point, offset: f64 },
}

impl LevelSet {
    pub fn circle(center: Point, radius: f64) -> Self {
        LevelSet::Circle { center, radius }
    }

    pub fn line(normal: Point, offset: f64) -> Self {
        let n = norm(normal);
        LevelSet::Line {
            normal: scale(normal, 1.0 / n),
            offset: offset / n,
        }
    }

    pub fn value(&self, x: Point) -> f64 {
        match *self {
            LevelSet::Circle { center, radius } => dist(x, center) - radius,
            LevelSet::Line { normal, offset } => geometry::dot(normal, x) - offset,
        }
    }

    /// `grad phi / |grad phi|`, pointing from the solid into the fluid.
    pub fn unit_normal(&self, x: Point) -> Point {
        match *self {
            LevelSet::Circle { center, .. } => {
                let d = sub(x, center);
                scale(d, 1.0 / norm(d))
            }
            LevelSet::Line { normal, .. } => normal,
        }
    }

    /// Fluid part of the straight segment `a -> b` with the end values
    /// snapped as for cell vertices. A segment whose ends are both fluid
    /// is kept whole.
    pub fn fluid_segment(&self, a: Point, b: Point) -> Option<[Point; 2]> {
        let h = dist(a, b);
        let snap = |phi: f64| {
            if phi.abs() < 1e-12 * h {
                1e-12 * h
            } else {
                phi
            }
        };
        let (fa, fb) = (snap(self.value(a)), snap(self.value(b)));
        match (fa > 0.0, fb > 0.0) {
            (true, true) => Some([a, b]),
            (false, false) => None,
            (true, false) => Some([a, self.crossing(a, b, fa, fb)]),
            (false, true) => Some([self.crossing(a, b, fa, fb), b]),
        }
    }

    /// Zero of the level set on the segment `a -> b`, given (possibly
    /// perturbed) end values of opposite sign.
    fn crossing(&self, a: Point, b: Point, fa: f64, fb: f64) -> Point {
        let linear = fa / (fa - fb);
        let s = match *self {
            LevelSet::Line { .. } => linear,
            LevelSet::Circle { center, radius } => {
                let d = sub(b, a);
                let e = sub(a, center);
                let qa = geometry::dot(d, d);
                let qb = 2.0 * geometry::dot(d, e);
                let qc = geometry::dot(e, e) - radius * radius;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    linear
                } else {
                    let sq = disc.sqrt();
                    // numerically stable pair of roots
                    let q = -0.5 * (qb + qb.signum() * sq);
                    let roots = [q / qa, if q != 0.0 { qc / q } else { f64::NAN }];
                    roots
                        .into_iter()
                        .filter(|r| r.is_finite() && (-1e-9..=1.0 + 1e-9).contains(r))
                        .min_by(|x, y| (x - linear).abs().total_cmp(&(y - linear).abs()))
                        .unwrap_or(linear)
                }
            }
        };
        lerp(a, b, s.clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Fluid,
    Solid,
    Cut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Fluid,
    Solid,
}

impl Subdomain {
    fn index(self) -> usize {
        match self {
            Subdomain::Fluid => 0,
            Subdomain::Solid => 1,
        }
    }
}

/// Physical quadrature points and weights.
#[derive(Debug, Clone, Default)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn push_triangle(&mut self, a: Point, b: Point, c: Point, order: usize, min_area: f64) {
        if geometry::triangle_area(a, b, c).abs() <= min_area {
            return;
        }
        let (p, w) = triangle_rule(a, b, c, order);
        self.points.extend(p);
        self.weights.extend(w);
    }
}

/// Interface quadrature: points on the reconstructed segments, weights
/// (segment length elements) and the segments' unit normals, pointing
/// into the fluid.
#[derive(Debug, Clone, Default)]
pub struct InterfaceRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub normals: Vec<Point>,
}

impl InterfaceRule {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Linear reconstruction of the interface inside one cell.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub kind: CellKind,
    pub fluid: Vec<Vec<Point>>,
    pub solid: Vec<Vec<Point>>,
    pub segments: Vec<[Point; 2]>,
}

/// Level-set values at the cell vertices; values within `1e-12 h` of zero
/// are moved to `+1e-12 h` so that a vertex never lies on the interface.
fn vertex_values(vertices: &[Point; 4], ls: &LevelSet) -> [f64; 4] {
    let h = (0..4)
        .map(|i| dist(vertices[i], vertices[(i + 2) % 4]))
        .fold(0.0, f64::max);
    vertices.map(|v| {
        let phi = ls.value(v);
        if phi.abs() < 1e-12 * h {
            1e-12 * h
        } else {
            phi
        }
    })
}

pub fn reconstruct(vertices: [Point; 4], ls: &LevelSet) -> Reconstruction {
    let phi = vertex_values(&vertices, ls);
    let fluid = phi.map(|f| f > 0.0);
    if fluid.iter().all(|&f| f) {
        return Reconstruction {
            kind: CellKind::Fluid,
            fluid: vec![vertices.to_vec()],
            solid: vec![],
            segments: vec![],
        };
    }
    if fluid.iter().all(|&f| !f) {
        return Reconstruction {
            kind: CellKind::Solid,
            fluid: vec![],
            solid: vec![vertices.to_vec()],
            segments: vec![],
        };
    }
    let crossings: [Option<Point>; 4] = std::array::from_fn(|e| {
        let e1 = (e + 1) % 4;
        (fluid[e] != fluid[e1]).then(|| ls.crossing(vertices[e], vertices[e1], phi[e], phi[e1]))
    });
    let n_cross = crossings.iter().flatten().count();

    let mut rec = Reconstruction {
        kind: CellKind::Cut,
        fluid: vec![],
        solid: vec![],
        segments: vec![],
    };
    if n_cross == 2 {
        let mut f = Vec::with_capacity(5);
        let mut s = Vec::with_capacity(5);
        for e in 0..4 {
            if fluid[e] {
                f.push(vertices[e])
            } else {
                s.push(vertices[e])
            }
            if let Some(c) = crossings[e] {
                f.push(c);
                s.push(c);
            }
        }
        let ends: Vec<Point> = crossings.iter().flatten().copied().collect();
        rec.fluid.push(f);
        rec.solid.push(s);
        rec.segments.push([ends[0], ends[1]]);
        return rec;
    }

    // Saddle: alternating signs. The side holding the cell center is the
    // connected one; the two other corners are cut off as triangles.
    let center = geometry::BilinearMap::new(vertices).map([0.5, 0.5]);
    let center_fluid = ls.value(center) > 0.0;
    let mut connected = Vec::with_capacity(6);
    let mut corners = Vec::with_capacity(2);
    for e in 0..4 {
        let prev = (e + 3) % 4;
        if fluid[e] == center_fluid {
            connected.push(vertices[e]);
        } else {
            let a = crossings[prev].expect("saddle edge crossing");
            let b = crossings[e].expect("saddle edge crossing");
            corners.push(vec![a, vertices[e], b]);
            rec.segments.push([a, b]);
        }
        if let Some(c) = crossings[e] {
            connected.push(c);
        }
    }
    if center_fluid {
        rec.fluid.push(connected);
        rec.solid = corners;
    } else {
        rec.solid.push(connected);
        rec.fluid = corners;
    }
    rec
}

fn is_convex_ccw(poly: &[Point], tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        cross >= -tol
    })
}

fn polygon_rule(polys: &[Vec<Point>], order: usize, min_area: f64) -> QuadRule {
    let mut rule = QuadRule::default();
    for poly in polys {
        for k in 1..poly.len() - 1 {
            rule.push_triangle(poly[0], poly[k], poly[k + 1], order, min_area);
        }
    }
    rule
}

fn full_cell_rule(vertices: [Point; 4], order: usize) -> QuadRule {
    let map = geometry::BilinearMap::new(vertices);
    let (pts, wts) = square_rule(points_for_degree(order + 1));
    QuadRule {
        points: pts.iter().map(|&r| map.map(r)).collect(),
        weights: pts
            .iter()
            .zip(&wts)
            .map(|(&r, w)| w * geometry::det2(&map.jacobian(r)))
            .collect(),
    }
}

fn segment_rule(segments: &[[Point; 2]], ls: &LevelSet, order: usize) -> InterfaceRule {
    let (x, w) = gauss_legendre(points_for_degree(order));
    let mut rule = InterfaceRule::default();
    for &[a, b] in segments {
        let len = dist(a, b);
        if len == 0.0 {
            continue;
        }
        // normal of the straight segment, so that bulk and interface
        // integrals see the same polygon
        let t = scale(sub(b, a), 1.0 / len);
        let mut n = [t[1], -t[0]];
        if geometry::dot(n, ls.unit_normal(lerp(a, b, 0.5))) < 0.0 {
            n = [-n[0], -n[1]];
        }
        for (xi, wi) in x.iter().zip(&w) {
            rule.points.push(lerp(a, b, *xi));
            rule.weights.push(wi * len);
            rule.normals.push(n);
        }
    }
    rule
}

/// Integration data of one cell.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub kind: CellKind,
    /// Cut fractions `(fluid, solid)`; zero for the subdomain the cell is
    /// not a member of.
    pub kappa: [f64; 2],
    pub fluid: QuadRule,
    pub solid: QuadRule,
    pub interface: InterfaceRule,
    pub reconstruction: Option<Reconstruction>,
}

/// Classification of every mesh cell with its bulk and interface rules.
/// The interface is fixed, so this is built once per run.
#[derive(Debug, Clone)]
pub struct CutGeometry {
    pub level_set: Option<LevelSet>,
    pub cells: Vec<CellGeometry>,
    pub fluid_cells: Vec<usize>,
    pub solid_cells: Vec<usize>,
    pub order: usize,
}

impl CutGeometry {
    /// Without a level set every cell is fluid.
    pub fn new(mesh: &Mesh, level_set: Option<LevelSet>, order: usize) -> Result<Self, CutError> {
        let cells = (0..mesh.num_cells())
            .map(|c| cell_geometry(mesh, c, level_set.as_ref(), order))
            .collect::<Result<Vec<_>, _>>()?;
        let fluid_cells = (0..cells.len())
            .filter(|&c| cells[c].kind != CellKind::Solid)
            .collect();
        let solid_cells = (0..cells.len())
            .filter(|&c| cells[c].kind != CellKind::Fluid)
            .collect();
        Ok(Self {
            level_set,
            cells,
            fluid_cells,
            solid_cells,
            order,
        })
    }

    pub fn kind(&self, c: usize) -> CellKind {
        self.cells[c].kind
    }

    pub fn contains(&self, c: usize, sub: Subdomain) -> bool {
        match sub {
            Subdomain::Fluid => self.cells[c].kind != CellKind::Solid,
            Subdomain::Solid => self.cells[c].kind != CellKind::Fluid,
        }
    }

    pub fn kappa(&self, c: usize, sub: Subdomain) -> f64 {
        self.cells[c].kappa[sub.index()]
    }

    pub fn rule(&self, c: usize, sub: Subdomain) -> &QuadRule {
        match sub {
            Subdomain::Fluid => &self.cells[c].fluid,
            Subdomain::Solid => &self.cells[c].solid,
        }
    }

    pub fn members(&self, sub: Subdomain) -> &[usize] {
        match sub {
            Subdomain::Fluid => &self.fluid_cells,
            Subdomain::Solid => &self.solid_cells,
        }
    }

    pub fn cut_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).filter(|&c| self.cells[c].kind == CellKind::Cut)
    }

    pub fn interface_length(&self) -> f64 {
        self.cells.iter().map(|c| c.interface.total_weight()).sum()
    }

    /// Side of the interface a point lies on, using the exact level set
    /// and the same vertex perturbation rule as the classification.
    pub fn subdomain_at(&self, x: Point, h: f64) -> Subdomain {
        match self.level_set {
            None => Subdomain::Fluid,
            Some(ls) => {
                if ls.value(x) > -1e-12 * h {
                    Subdomain::Fluid
                } else {
                    Subdomain::Solid
                }
            }
        }
    }

    /// Debug dump: `cell,kind,kappa_fluid,kappa_solid`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "cell,kind,kappa_fluid,kappa_solid")?;
        for (c, g) in self.cells.iter().enumerate() {
            let kind = match g.kind {
                CellKind::Fluid => "fluid",
                CellKind::Solid => "solid",
                CellKind::Cut => "cut",
            };
            writeln!(w, "{c},{kind},{},{}", g.kappa[0], g.kappa[1])?;
        }
        Ok(())
    }
}

fn cell_geometry(
    mesh: &Mesh,
    c: usize,
    ls: Option<&LevelSet>,
    order: usize,
) -> Result<CellGeometry, CutError> {
    let vertices = mesh.cell_vertices(c);
    let Some(ls) = ls else {
        return Ok(CellGeometry {
            kind: CellKind::Fluid,
            kappa: [1.0, 0.0],
            fluid: full_cell_rule(vertices, order),
            solid: QuadRule::default(),
            interface: InterfaceRule::default(),
            reconstruction: None,
        });
    };
    let rec = reconstruct(vertices, ls);
    match rec.kind {
        CellKind::Fluid => Ok(CellGeometry {
            kind: CellKind::Fluid,
            kappa: [1.0, 0.0],
            fluid: full_cell_rule(vertices, order),
            solid: QuadRule::default(),
            interface: InterfaceRule::default(),
            reconstruction: None,
        }),
        CellKind::Solid => Ok(CellGeometry {
            kind: CellKind::Solid,
            kappa: [0.0, 1.0],
            fluid: QuadRule::default(),
            solid: full_cell_rule(vertices, order),
            interface: InterfaceRule::default(),
            reconstruction: None,
        }),
        CellKind::Cut => {
            let area = polygon_area(&vertices);
            let tol = 1e-12 * area;
            let mut parts = [0.0; 2];
            for (k, polys) in [&rec.fluid, &rec.solid].into_iter().enumerate() {
                for p in polys {
                    let a = polygon_area(p);
                    if a < -tol || !is_convex_ccw(p, tol) {
                        return Err(CutError::DegeneratePolygon(c));
                    }
                    parts[k] += a;
                }
            }
            let min_area = 1e-14 * area;
            Ok(CellGeometry {
                kind: CellKind::Cut,
                kappa: [parts[0] / area, parts[1] / area],
                fluid: polygon_rule(&rec.fluid, order, min_area),
                solid: polygon_rule(&rec.solid, order, min_area),
                interface: segment_rule(&rec.segments, ls, order),
                reconstruction: Some(rec),
            })
        }
    }
}

/// Classification, bulk and interface rules for every cell with the
/// default quadrature order.
pub fn classify_cells(mesh: &Mesh, ls: &LevelSet) -> Result<CutGeometry, CutError> {
    CutGeometry::new(mesh, Some(*ls), DEFAULT_ORDER)
}

/// `(fluid part, solid part)` rules of one cell. Uncut cells get the full
/// tensor Gauss rule on their side and an empty rule on the other.
pub fn cut_cell_quadrature(
    mesh: &Mesh,
    cell: usize,
    ls: &LevelSet,
    order: usize,
) -> Result<(QuadRule, QuadRule), CutError> {
    let g = cell_geometry(mesh, cell, Some(ls), order)?;
    Ok((g.fluid, g.solid))
}

pub fn interface_quadrature(
    mesh: &Mesh,
    cell: usize,
    ls: &LevelSet,
    order: usize,
) -> InterfaceRule {
    let rec = reconstruct(mesh.cell_vertices(cell), ls);
    segment_rule(&rec.segments, ls, order)
}

/// `meas(K_in) / meas(K)` for the part of the cell inside `sub`.
pub fn cut_fraction(mesh: &Mesh, cell: usize, ls: &LevelSet, sub: Subdomain) -> f64 {
    let vertices = mesh.cell_vertices(cell);
    let rec = reconstruct(vertices, ls);
    let polys = match sub {
        Subdomain::Fluid => &rec.fluid,
        Subdomain::Solid => &rec.solid,
    };
    polys.iter().map(|p| polygon_area(p)).sum::<f64>() / polygon_area(&vertices)
}

/// A face carrying ghost-penalty terms, with the cut fraction of each
/// adjacent cell for the subdomain in question.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostFace {
    pub face: usize,
    pub cells: [usize; 2],
    pub kappas: [f64; 2],
}

/// Interior faces of the sub-triangulation of `sub` with at least one cut
/// neighbor.
pub fn ghost_faces(mesh: &Mesh, geom: &CutGeometry, sub: Subdomain) -> Vec<GhostFace> {
    mesh.faces
        .iter()
        .enumerate()
        .filter_map(|(f, face)| {
            let second = face.second?;
            let cells = [face.first.cell, second.cell];
            if !cells.iter().all(|&c| geom.contains(c, sub)) {
                return None;
            }
            if !cells.iter().any(|&c| geom.kind(c) == CellKind::Cut) {
                return None;
            }
            Some(GhostFace {
                face: f,
                cells,
                kappas: cells.map(|c| geom.kappa(c, sub)),
            })
        })
        .collect()
}

/// Centroid of a polygon, used by tests and diagnostics.
pub fn polygon_centroid(poly: &[Point]) -> Point {
    let a = polygon_area(poly);
    let n = poly.len();
    let mut c = [0.0; 2];
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        c = add(c, scale(add(p, q), cross));
    }
    scale(c, 1.0 / (6.0 * a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_channel_mesh, build_rect_mesh, Hole};

    fn unit_square() -> Mesh {
        build_rect_mesh(&[0.0, 1.0], &[0.0, 1.0], None).unwrap()
    }

    fn plane_x(offset: f64) -> LevelSet {
        LevelSet::line([1.0, 0.0], offset)
    }

    #[test]
    fn plane_cut_of_unit_square() {
        let mesh = unit_square();
        let ls = plane_x(0.3);
        let geom = classify_cells(&mesh, &ls).unwrap();
        assert_eq!(geom.kind(0), CellKind::Cut);
        assert!(geom.contains(0, Subdomain::Fluid) && geom.contains(0, Subdomain::Solid));
        let (f, s) = cut_cell_quadrature(&mesh, 0, &ls, DEFAULT_ORDER).unwrap();
        assert!((f.total_weight() - 0.7).abs() < 1e-12);
        assert!((s.total_weight() - 0.3).abs() < 1e-12);
        assert!(f.points.iter().all(|&p| ls.value(p) >= -1e-14));
        assert!(s.points.iter().all(|&p| ls.value(p) <= 1e-14));
        assert!(f.weights.iter().chain(&s.weights).all(|&w| w > 0.0));
        assert!((cut_fraction(&mesh, 0, &ls, Subdomain::Solid) - 0.3).abs() < 1e-12);
        assert!((cut_fraction(&mesh, 0, &ls, Subdomain::Fluid) - 0.7).abs() < 1e-12);

        let iface = interface_quadrature(&mesh, 0, &ls, DEFAULT_ORDER);
        assert!((iface.total_weight() - 1.0).abs() < 1e-14);
        for (p, n) in iface.points.iter().zip(&iface.normals) {
            assert!((p[0] - 0.3).abs() < 1e-14);
            assert!((n[0] - 1.0).abs() < 1e-14 && n[1].abs() < 1e-14, "{n:?}");
        }
    }

    #[test]
    fn uncut_cells_get_full_gauss_rules() {
        let mesh = build_rect_mesh(&[0.0, 0.5, 1.0], &[0.0, 1.0], None).unwrap();
        let ls = LevelSet::circle([10.0, 10.0], 0.05);
        let geom = classify_cells(&mesh, &ls).unwrap();
        for c in 0..2 {
            assert_eq!(geom.kind(c), CellKind::Fluid);
            assert_eq!(geom.kappa(c, Subdomain::Fluid), 1.0);
            assert!((geom.rule(c, Subdomain::Fluid).total_weight() - 0.5).abs() < 1e-14);
            assert!(geom.rule(c, Subdomain::Solid).is_empty());
        }
        let inside = LevelSet::circle([0.5, 0.5], 10.0);
        let geom = classify_cells(&mesh, &inside).unwrap();
        assert!(geom.cells.iter().all(|g| g.kind == CellKind::Solid));
        assert!(geom.fluid_cells.is_empty());
    }

    #[test]
    fn vertex_on_interface_is_assigned_to_fluid() {
        let mesh = unit_square();
        // passes exactly through vertex (0, 0) and cuts no edge otherwise
        let ls = LevelSet::line([1.0, 1.0], 0.0);
        let geom = classify_cells(&mesh, &ls).unwrap();
        assert_eq!(geom.kind(0), CellKind::Fluid);
        // flipped: the vertex becomes a sliver of fluid in a solid cell
        let flipped = LevelSet::line([-1.0, -1.0], 0.0);
        let geom = classify_cells(&mesh, &flipped).unwrap();
        assert_eq!(geom.kind(0), CellKind::Cut);
        assert!(geom.kappa(0, Subdomain::Fluid) < 1e-20);
        assert!((geom.rule(0, Subdomain::Solid).total_weight() - 1.0).abs() < 1e-12);
        let mid = LevelSet::line([1.0, 0.0], 0.0);
        let geom = classify_cells(&mesh, &mid).unwrap();
        assert_eq!(geom.kind(0), CellKind::Fluid);
    }

    #[test]
    fn saddle_configuration_partitions_the_cell() {
        // rhombus whose short diagonal lies inside the disc
        let quad = [[-0.3, 0.0], [0.0, -1.0], [0.3, 0.0], [0.0, 1.0]];
        let ls = LevelSet::circle([0.0, 0.0], 0.5);
        let rec = reconstruct(quad, &ls);
        assert_eq!(rec.kind, CellKind::Cut);
        assert_eq!(rec.solid.len(), 1);
        assert_eq!(rec.solid[0].len(), 6);
        assert_eq!(rec.fluid.len(), 2);
        assert_eq!(rec.segments.len(), 2);
        let total: f64 = rec
            .fluid
            .iter()
            .chain(&rec.solid)
            .map(|p| polygon_area(p))
            .sum();
        assert!((total - polygon_area(&quad)).abs() < 1e-14);
        for [a, b] in &rec.segments {
            assert!(ls.value(*a).abs() < 1e-14 && ls.value(*b).abs() < 1e-14);
        }
    }

    #[test]
    fn benchmark_cut_cells_partition_their_area() {
        for level in 0..3 {
            let mesh = build_channel_mesh(level, Some(Hole::benchmark())).unwrap();
            let ls = LevelSet::circle(Hole::benchmark().center, 0.05);
            let geom = classify_cells(&mesh, &ls).unwrap();
            for c in geom.cut_cells() {
                let g = &geom.cells[c];
                let area = mesh.cell_area(c);
                let sum = g.fluid.total_weight() + g.solid.total_weight();
                assert!(((sum - area) / area).abs() < 1e-10);
                assert!((g.kappa[0] + g.kappa[1] - 1.0).abs() < 1e-10);
                assert!(g.kappa.iter().all(|&k| k > 0.0 && k <= 1.0));
                for (p, n) in g.interface.points.iter().zip(&g.interface.normals) {
                    assert!((norm(*n) - 1.0).abs() < 1e-12);
                    assert!(geometry::dot(*n, sub(*p, ls_center(&ls))) > 0.0);
                }
            }
        }
    }

    fn ls_center(ls: &LevelSet) -> Point {
        match ls {
            LevelSet::Circle { center, .. } => *center,
            LevelSet::Line { .. } => unreachable!(),
        }
    }

    #[test]
    fn quadrature_points_lie_in_reconstructed_pieces() {
        let mesh = build_channel_mesh(1, Some(Hole::benchmark())).unwrap();
        let ls = LevelSet::circle(Hole::benchmark().center, 0.05);
        let geom = classify_cells(&mesh, &ls).unwrap();
        for c in geom.cut_cells() {
            let g = &geom.cells[c];
            let rec = g.reconstruction.as_ref().unwrap();
            let tol = 1e-12;
            for p in &g.fluid.points {
                assert!(rec
                    .fluid
                    .iter()
                    .any(|poly| geometry::convex_polygon_contains(poly, *p, tol)));
            }
            for p in &g.solid.points {
                assert!(rec
                    .solid
                    .iter()
                    .any(|poly| geometry::convex_polygon_contains(poly, *p, tol)));
            }
        }
    }

    #[test]
    fn ghost_faces_edge_cases() {
        // three cells in a row, interface inside the middle one
        let mesh = build_rect_mesh(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0], None).unwrap();
        let ls = plane_x(1.4);
        let geom = classify_cells(&mesh, &ls).unwrap();
        assert_eq!(geom.kind(0), CellKind::Solid);
        assert_eq!(geom.kind(1), CellKind::Cut);
        assert_eq!(geom.kind(2), CellKind::Fluid);
        let gf = ghost_faces(&mesh, &geom, Subdomain::Fluid);
        assert_eq!(gf.len(), 1);
        let f = gf[0];
        let pos_cut = f.cells.iter().position(|&c| c == 1).unwrap();
        assert!((f.kappas[pos_cut] - 0.6).abs() < 1e-12);
        assert_eq!(f.kappas[1 - pos_cut], 1.0);
        let gs = ghost_faces(&mesh, &geom, Subdomain::Solid);
        assert_eq!(gs.len(), 1);

        // all fluid: no ghost faces
        let far = LevelSet::circle([100.0, 0.0], 1.0);
        let geom = classify_cells(&mesh, &far).unwrap();
        assert!(ghost_faces(&mesh, &geom, Subdomain::Fluid).is_empty());
    }
}
