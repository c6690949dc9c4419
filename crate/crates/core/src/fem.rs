//! Lagrange bases on quadrilaterals and the global numbering of the
//! monolithic unknown vector.
//!
//! Fluid velocity and pressure form the Taylor-Hood pair Q2/Q1 on the
//! fluid sub-triangulation; solid velocity and displacement are Q1 vectors
//! on the solid sub-triangulation. Cut cells carry both.
//!
//! Local Q2 node order: the four vertices, the four edge midpoints (edge
//! `e` joins vertex `e` and `e + 1`), then the cell center.

use crate::cutgeom::{CutGeometry, Subdomain};
use crate::geometry::{inv2, matvec2, BilinearMap, Mat2, Point};
use crate::mesh::{BoundaryMarker, Mesh};

pub type Hessian = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Element {
    Q1,
    Q2,
}

impl Element {
    pub fn num_nodes(self) -> usize {
        match self {
            Element::Q1 => 4,
            Element::Q2 => 9,
        }
    }
}

/// Tensor indices `(ix, iy)` of the Q2 nodes in the 1D node set
/// `{0, 1/2, 1}`.
const Q2_NODES: [(usize, usize); 9] = [
    (0, 0),
    (2, 0),
    (2, 2),
    (0, 2),
    (1, 0),
    (2, 1),
    (1, 2),
    (0, 1),
    (1, 1),
];

/// Reference coordinates of the Q2 nodes.
pub fn q2_node_coords() -> [Point; 9] {
    Q2_NODES.map(|(i, j)| [0.5 * i as f64, 0.5 * j as f64])
}

fn lagrange2(x: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    (
        [
            2.0 * (x - 0.5) * (x - 1.0),
            -4.0 * x * (x - 1.0),
            2.0 * x * (x - 0.5),
        ],
        [4.0 * x - 3.0, -8.0 * x + 4.0, 4.0 * x - 1.0],
        [4.0, -8.0, 4.0],
    )
}

/// Q1 values and reference gradients.
pub fn q1_reference(r: Point) -> ([f64; 4], [Point; 4]) {
    let (s, t) = (r[0], r[1]);
    (
        [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t],
        [
            [-(1.0 - t), -(1.0 - s)],
            [1.0 - t, -s],
            [t, s],
            [-t, 1.0 - s],
        ],
    )
}

/// Q2 values, reference gradients and reference Hessians.
pub fn q2_reference(r: Point) -> ([f64; 9], [Point; 9], [Hessian; 9]) {
    let (lx, dx, ddx) = lagrange2(r[0]);
    let (ly, dy, ddy) = lagrange2(r[1]);
    let mut v = [0.0; 9];
    let mut g = [[0.0; 2]; 9];
    let mut h = [[[0.0; 2]; 2]; 9];
    for (k, &(i, j)) in Q2_NODES.iter().enumerate() {
        v[k] = lx[i] * ly[j];
        g[k] = [dx[i] * ly[j], lx[i] * dy[j]];
        h[k] = [
            [ddx[i] * ly[j], dx[i] * dy[j]],
            [dx[i] * dy[j], lx[i] * ddy[j]],
        ];
    }
    (v, g, h)
}

/// `J^{-T} g` maps a reference gradient to a physical one.
#[inline]
fn push_gradient(jinv_t: &Mat2, g: Point) -> Point {
    matvec2(jinv_t, g)
}

fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Physical Q1 values and gradients at reference point `r`.
pub fn q1_physical(map: &BilinearMap, r: Point) -> ([f64; 4], [Point; 4]) {
    let (v, g) = q1_reference(r);
    let jinv_t = transpose(&inv2(&map.jacobian(r)));
    (v, g.map(|g| push_gradient(&jinv_t, g)))
}

/// Physical Q2 values and gradients at reference point `r`.
pub fn q2_physical(map: &BilinearMap, r: Point) -> ([f64; 9], [Point; 9]) {
    let (v, g, _) = q2_reference(r);
    let jinv_t = transpose(&inv2(&map.jacobian(r)));
    (v, g.map(|g| push_gradient(&jinv_t, g)))
}

/// Physical Q2 values, gradients and Hessians. With `x = F(r)`,
/// `H_x = J^{-T} (H_r - sum_i (d_i N) D^2 F_i) J^{-1}`; the second
/// derivatives of a bilinear map are its mixed twist only.
pub fn q2_physical_with_hessian(
    map: &BilinearMap,
    r: Point,
) -> ([f64; 9], [Point; 9], [Hessian; 9]) {
    let (v, g, h) = q2_reference(r);
    let jinv = inv2(&map.jacobian(r));
    let jinv_t = transpose(&jinv);
    let twist = map.twist();
    let grads = g.map(|g| push_gradient(&jinv_t, g));
    let mut hess = [[[0.0; 2]; 2]; 9];
    for k in 0..9 {
        let mixed = grads[k][0] * twist[0] + grads[k][1] * twist[1];
        let mut hr = h[k];
        hr[0][1] -= mixed;
        hr[1][0] -= mixed;
        // J^{-T} hr J^{-1}
        for a in 0..2 {
            for b in 0..2 {
                let mut s = 0.0;
                for c in 0..2 {
                    for d in 0..2 {
                        s += jinv[c][a] * hr[c][d] * jinv[d][b];
                    }
                }
                hess[k][a][b] = s;
            }
        }
    }
    (v, grads, hess)
}

/// Basis evaluation at a reference point in a mesh cell.
#[derive(Debug, Clone)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub gradients: Vec<Point>,
    /// Empty for Q1.
    pub hessians: Vec<Hessian>,
}

pub fn eval_basis(mesh: &Mesh, cell: usize, r: Point, element: Element) -> BasisValues {
    let map = mesh.cell_map(cell);
    match element {
        Element::Q1 => {
            let (v, g) = q1_physical(&map, r);
            BasisValues {
                values: v.to_vec(),
                gradients: g.to_vec(),
                hessians: vec![],
            }
        }
        Element::Q2 => {
            let (v, g, h) = q2_physical_with_hessian(&map, r);
            BasisValues {
                values: v.to_vec(),
                gradients: g.to_vec(),
                hessians: h.to_vec(),
            }
        }
    }
}

/// Global Q2 node ids of a cell: vertex ids, then `nv + face`, then
/// `nv + nf + cell`.
pub fn q2_cell_nodes(mesh: &Mesh, c: usize) -> [usize; 9] {
    let nv = mesh.vertices.len();
    let nf = mesh.faces.len();
    let v = mesh.cells[c];
    let f = mesh.cell_faces[c];
    [
        v[0],
        v[1],
        v[2],
        v[3],
        nv + f[0],
        nv + f[1],
        nv + f[2],
        nv + f[3],
        nv + nf + c,
    ]
}

/// Physical coordinates of all Q2 nodes, indexed by global node id.
pub fn q2_node_positions(mesh: &Mesh) -> Vec<Point> {
    let mut pos = mesh.vertices.clone();
    for f in &mesh.faces {
        let [a, b] = f.vertices;
        pos.push(crate::geometry::lerp(
            mesh.vertices[a],
            mesh.vertices[b],
            0.5,
        ));
    }
    for c in 0..mesh.num_cells() {
        pos.push(mesh.cell_map(c).map([0.5, 0.5]));
    }
    pos
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    FluidVelocity,
    Pressure,
    SolidVelocity,
    Displacement,
}

impl Field {
    pub const ALL: [Field; 4] = [
        Field::FluidVelocity,
        Field::Pressure,
        Field::SolidVelocity,
        Field::Displacement,
    ];

    pub fn components(self) -> usize {
        match self {
            Field::Pressure => 1,
            _ => 2,
        }
    }

    pub fn element(self) -> Element {
        match self {
            Field::FluidVelocity => Element::Q2,
            _ => Element::Q1,
        }
    }

    pub fn subdomain(self) -> Subdomain {
        match self {
            Field::FluidVelocity | Field::Pressure => Subdomain::Fluid,
            _ => Subdomain::Solid,
        }
    }

    fn index(self) -> usize {
        match self {
            Field::FluidVelocity => 0,
            Field::Pressure => 1,
            Field::SolidVelocity => 2,
            Field::Displacement => 3,
        }
    }
}

/// Numbering of the monolithic vector: the blocks `v_f, p, v_s, u` follow
/// each other; vector components are interleaved per node.
#[derive(Debug, Clone)]
pub struct SystemDofMap {
    /// Per field, the first DoF of each global node (`None` if inactive).
    node_dofs: [Vec<Option<usize>>; 4],
    offsets: [usize; 5],
}

impl SystemDofMap {
    pub fn new(mesh: &Mesh, geom: &CutGeometry) -> Self {
        let nq2 = mesh.vertices.len() + mesh.faces.len() + mesh.num_cells();
        let nq1 = mesh.vertices.len();
        let mut node_dofs: [Vec<Option<usize>>; 4] = [
            vec![None; nq2],
            vec![None; nq1],
            vec![None; nq1],
            vec![None; nq1],
        ];
        let mut offsets = [0; 5];
        let mut next = 0;
        for field in Field::ALL {
            let k = field.index();
            offsets[k] = next;
            let ncomp = field.components();
            for &c in geom.members(field.subdomain()) {
                let nodes: Vec<usize> = match field.element() {
                    Element::Q2 => q2_cell_nodes(mesh, c).to_vec(),
                    Element::Q1 => mesh.cells[c].to_vec(),
                };
                for n in nodes {
                    if node_dofs[k][n].is_none() {
                        node_dofs[k][n] = Some(next);
                        next += ncomp;
                    }
                }
            }
        }
        offsets[4] = next;
        Self { node_dofs, offsets }
    }

    pub fn num_dofs(&self) -> usize {
        self.offsets[4]
    }

    /// Index range of a field's block.
    pub fn block(&self, field: Field) -> std::ops::Range<usize> {
        let k = field.index();
        self.offsets[k]..self.offsets[k + 1]
    }

    /// First DoF of node `n` for `field`, if the node is active.
    pub fn node_dof(&self, field: Field, n: usize) -> Option<usize> {
        self.node_dofs[field.index()][n]
    }

    pub fn num_nodes(&self, field: Field) -> usize {
        self.node_dofs[field.index()].len()
    }

    /// Local DoFs of `field` in cell `c`, component-interleaved per local
    /// node. Panics if the cell does not carry the field.
    pub fn cell_dofs(&self, mesh: &Mesh, field: Field, c: usize) -> Vec<usize> {
        let nodes: Vec<usize> = match field.element() {
            Element::Q2 => q2_cell_nodes(mesh, c).to_vec(),
            Element::Q1 => mesh.cells[c].to_vec(),
        };
        let ncomp = field.components();
        let mut out = Vec::with_capacity(nodes.len() * ncomp);
        for n in nodes {
            let d = self.node_dofs[field.index()][n].expect("field not active in cell");
            for comp in 0..ncomp {
                out.push(d + comp);
            }
        }
        out
    }

    /// Which field a global DoF belongs to.
    pub fn field_of(&self, dof: usize) -> Field {
        Field::ALL
            .into_iter()
            .find(|f| self.block(*f).contains(&dof))
            .expect("dof out of range")
    }
}

/// Channel inflow profile with mean velocity `mean`: parabolic across the
/// inlet `[y0, y1]`, peak `1.5 * mean`.
pub fn inflow_profile(y: f64, y0: f64, y1: f64, mean: f64) -> f64 {
    let h = y1 - y0;
    1.5 * mean * 4.0 * (y - y0) * (y1 - y) / (h * h)
}

/// Smooth start-up factor `(1 - cos(pi t / 2)) / 2` for `t < 2`, then 1.
pub fn inflow_ramp(t: f64) -> f64 {
    if t < 2.0 {
        0.5 * (1.0 - (std::f64::consts::PI * t / 2.0).cos())
    } else {
        1.0
    }
}

/// Constrained DoFs with their values at a given time.
#[derive(Debug, Clone, Default)]
pub struct Dirichlet {
    pub dofs: Vec<usize>,
    /// Values at full inflow (ramp factor 1).
    base_values: Vec<f64>,
    /// Whether the value is scaled by the inflow ramp.
    ramped: Vec<bool>,
    pub mask: Vec<bool>,
    pub use_ramp: bool,
}

impl Dirichlet {
    /// No-slip walls, parabolic inflow and zero displacement at the hole.
    pub fn benchmark(mesh: &Mesh, dofs: &SystemDofMap, mean_inflow: f64, use_ramp: bool) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let pos = q2_node_positions(mesh);
        let nv = mesh.vertices.len();
        let mut entries: std::collections::BTreeMap<usize, (f64, bool)> = Default::default();
        for (fi, face) in mesh.faces.iter().enumerate() {
            let Some(marker) = face.marker else { continue };
            let q2_nodes = [face.vertices[0], face.vertices[1], nv + fi];
            match marker {
                BoundaryMarker::Wall => {
                    for n in q2_nodes {
                        if let Some(d) = dofs.node_dof(Field::FluidVelocity, n) {
                            entries.insert(d, (0.0, false));
                            entries.insert(d + 1, (0.0, false));
                        }
                    }
                }
                BoundaryMarker::Inflow => {
                    for n in q2_nodes {
                        if let Some(d) = dofs.node_dof(Field::FluidVelocity, n) {
                            let y = pos[n][1];
                            let value = inflow_profile(y, lo[1], hi[1], mean_inflow);
                            // walls win at the shared corners
                            entries.entry(d).or_insert((value, true));
                            entries.entry(d + 1).or_insert((0.0, false));
                        }
                    }
                }
                BoundaryMarker::Hole => {
                    // displacement only; the solid velocity stays free
                    for n in face.vertices {
                        if let Some(d) = dofs.node_dof(Field::Displacement, n) {
                            entries.insert(d, (0.0, false));
                            entries.insert(d + 1, (0.0, false));
                        }
                    }
                }
                BoundaryMarker::Outflow => {}
            }
        }
        let mut mask = vec![false; dofs.num_dofs()];
        let mut out = Dirichlet {
            use_ramp,
            ..Default::default()
        };
        for (d, (v, r)) in entries {
            mask[d] = true;
            out.dofs.push(d);
            out.base_values.push(v);
            out.ramped.push(r);
        }
        out.mask = mask;
        out
    }

    pub fn values_at(&self, t: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        let ramp = if self.use_ramp { inflow_ramp(t) } else { 1.0 };
        self.dofs
            .iter()
            .zip(&self.base_values)
            .zip(&self.ramped)
            .map(move |((&d, &v), &r)| (d, if r { v * ramp } else { v }))
    }

    /// Overwrites the constrained entries of `x` with their values at `t`.
    pub fn apply(&self, x: &mut [f64], t: f64) {
        for (d, v) in self.values_at(t) {
            x[d] = v;
        }
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.mask.get(dof).copied().unwrap_or(false)
    }
}

pub fn apply_dirichlet(x: &mut [f64], bc: &Dirichlet, t: f64) {
    bc.apply(x, t);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutgeom::LevelSet;
    use crate::mesh::{build_channel_mesh, build_rect_mesh, Hole};

    #[test]
    fn reference_bases_are_nodal_and_sum_to_one() {
        let nodes = q2_node_coords();
        for (i, &r) in nodes.iter().enumerate() {
            let (v, _, _) = q2_reference(r);
            for (j, &vj) in v.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((vj - expect).abs() < 1e-14);
            }
        }
        let r = [0.3, 0.8];
        let (v, g, h) = q2_reference(r);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for d in 0..2 {
            assert!(g.iter().map(|g| g[d]).sum::<f64>().abs() < 1e-13);
        }
        assert!(h.iter().map(|h| h[0][1]).sum::<f64>().abs() < 1e-12);
        let (v1, g1) = q1_reference(r);
        assert!((v1.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(g1.iter().map(|g| g[0]).sum::<f64>().abs() < 1e-15);
    }

    fn distorted() -> BilinearMap {
        BilinearMap::new([[0.0, 0.0], [1.2, 0.1], [1.0, 0.9], [-0.1, 1.1]])
    }

    #[test]
    fn physical_derivatives_match_finite_differences() {
        let map = distorted();
        let r = [0.37, 0.61];
        let x = map.map(r);
        let eps = 1e-6;
        let value_at = |x: Point| q2_reference(map.inverse(x).unwrap()).0;
        let (_, g, h) = q2_physical_with_hessian(&map, r);
        for d in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += eps;
            xm[d] -= eps;
            let (vp, vm) = (value_at(xp), value_at(xm));
            let gradient_at = |x: Point| q2_physical(&map, map.inverse(x).unwrap()).1;
            let (gp, gm) = (gradient_at(xp), gradient_at(xm));
            for k in 0..9 {
                let fd = (vp[k] - vm[k]) / (2.0 * eps);
                assert!((fd - g[k][d]).abs() < 1e-7, "grad k={k} d={d}");
                for e in 0..2 {
                    let fd2 = (gp[k][e] - gm[k][e]) / (2.0 * eps);
                    assert!(
                        (fd2 - h[k][e][d]).abs() < 1e-5,
                        "hess k={k} {e}{d}: {fd2} vs {}",
                        h[k][e][d]
                    );
                }
            }
        }
    }

    #[test]
    fn q2_reproduces_quadratics_on_affine_cells() {
        // parallelogram: the map is affine, so Q2 contains all quadratics
        let map = BilinearMap::new([[0.0, 0.0], [1.0, 0.2], [1.3, 1.2], [0.3, 1.0]]);
        let f = |p: Point| {
            1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[0] - 3.0 * p[0] * p[1] + p[1] * p[1]
        };
        let coeffs: Vec<f64> = q2_node_coords().iter().map(|&r| f(map.map(r))).collect();
        for &r in &[[0.1, 0.2], [0.77, 0.45], [0.5, 0.95]] {
            let (v, g, h) = q2_physical_with_hessian(&map, r);
            let x = map.map(r);
            let val: f64 = v.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
            assert!((val - f(x)).abs() < 1e-13);
            let gx: f64 = g.iter().zip(&coeffs).map(|(a, b)| a[0] * b).sum();
            assert!((gx - (2.0 + x[0] - 3.0 * x[1])).abs() < 1e-12);
            let hxy: f64 = h.iter().zip(&coeffs).map(|(a, b)| a[0][1] * b).sum();
            assert!((hxy + 3.0).abs() < 1e-11);
        }
    }

    #[test]
    fn dof_map_blocks_are_contiguous_and_shared_nodes_unique() {
        let mesh = build_rect_mesh(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0], None).unwrap();
        let geom = CutGeometry::new(&mesh, Some(LevelSet::line([1.0, 0.0], 1.5)), 4).unwrap();
        let dofs = SystemDofMap::new(&mesh, &geom);
        // fluid cells 1, 2: 3x5 Q2 nodes; pressure 2x3 vertices; solid
        // cells 0, 1: 2x3 vertices for both solid fields
        assert_eq!(dofs.block(Field::FluidVelocity).len(), 2 * 15);
        assert_eq!(dofs.block(Field::Pressure).len(), 6);
        assert_eq!(dofs.block(Field::SolidVelocity).len(), 12);
        assert_eq!(dofs.block(Field::Displacement).len(), 12);
        assert_eq!(dofs.num_dofs(), 60);
        let a = dofs.cell_dofs(&mesh, Field::FluidVelocity, 1);
        let b = dofs.cell_dofs(&mesh, Field::FluidVelocity, 2);
        // cell 1 edge 1 is cell 2 edge 3
        assert_eq!(a[2..4], b[0..2]);
        assert_eq!(a[2 * 5..2 * 5 + 2], b[2 * 7..2 * 7 + 2]);
        assert_eq!(dofs.field_of(a[0]), Field::FluidVelocity);
        let u = dofs.cell_dofs(&mesh, Field::Displacement, 0);
        assert_eq!(dofs.field_of(u[0]), Field::Displacement);
    }

    #[test]
    fn benchmark_dirichlet_values() {
        let mesh = build_channel_mesh(0, Some(Hole::benchmark())).unwrap();
        let geom = CutGeometry::new(&mesh, Some(LevelSet::circle([0.2, 0.2], 0.05)), 4).unwrap();
        let dofs = SystemDofMap::new(&mesh, &geom);
        let bc = Dirichlet::benchmark(&mesh, &dofs, 0.2, true);
        let pos = q2_node_positions(&mesh);
        let mut x = vec![0.0; dofs.num_dofs()];
        bc.apply(&mut x, 5.0);
        let mut max_inflow: f64 = 0.0;
        for n in 0..pos.len() {
            let Some(d) = dofs.node_dof(Field::FluidVelocity, n) else {
                continue;
            };
            if pos[n][0] == 0.0 {
                assert!(bc.is_constrained(d) && bc.is_constrained(d + 1));
                let expect = inflow_profile(pos[n][1], 0.0, 0.41, 0.2);
                assert!((x[d] - expect).abs() < 1e-15);
                max_inflow = max_inflow.max(x[d]);
            }
            if (pos[n][1] == 0.0 || pos[n][1] == 0.41) && pos[n][0] > 0.0 {
                assert!(bc.is_constrained(d));
                assert_eq!(x[d], 0.0);
            }
            if pos[n][0] == 2.2 && pos[n][1] > 0.0 && pos[n][1] < 0.41 {
                assert!(!bc.is_constrained(d));
            }
        }
        // no inlet node sits exactly on the centerline
        assert!(max_inflow <= 0.3 && max_inflow > 0.29);
        let ramped = bc.values_at(1.0).map(|(_, v)| v).fold(0.0, f64::max);
        assert!((ramped - 0.5 * max_inflow).abs() < 1e-15);
        let hole_dofs = mesh
            .faces
            .iter()
            .filter(|f| f.marker == Some(BoundaryMarker::Hole))
            .flat_map(|f| f.vertices)
            .filter_map(|v| dofs.node_dof(Field::Displacement, v));
        for d in hole_dofs {
            assert!(bc.is_constrained(d) && bc.is_constrained(d + 1));
        }
        assert!(bc
            .dofs
            .iter()
            .all(|&d| dofs.field_of(d) != Field::SolidVelocity));
        assert!(bc.dofs.iter().all(|&d| dofs.field_of(d) != Field::Pressure));
    }

    #[test]
    fn ramp_is_smooth_and_saturates() {
        assert_eq!(inflow_ramp(0.0), 0.0);
        assert!((inflow_ramp(1.0) - 0.5).abs() < 1e-15);
        assert!((inflow_ramp(2.0 - 1e-12) - 1.0).abs() < 1e-12);
        assert_eq!(inflow_ramp(3.0), 1.0);
    }
}
