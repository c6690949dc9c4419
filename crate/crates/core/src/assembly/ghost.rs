//! Face matrices of the weighted ghost penalties.
//!
//! Every ghost face stores one dense matrix over the nodes of its two
//! cells (first cell's nodes, then the second's). The jump of a normal
//! derivative is taken with the first cell's outward normal; both
//! neighbors contribute their weight `w(kappa_K)` to the face.

use crate::cutgeom::{ghost_faces, CutGeometry, GhostFace, Subdomain};
use crate::fem::{q1_physical, q2_cell_nodes, q2_physical_with_hessian};
use crate::geometry::{dot, lerp, Point};
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, points_for_degree};

use super::materials::weight;
use super::AssemblyError;

/// Exact polynomial degree of the face rules.
const FACE_ORDER: usize = 4;

#[derive(Debug, Clone)]
pub struct FaceMatrix {
    pub face: usize,
    /// Global node ids (Q2 or Q1 numbering) of both cells.
    pub nodes: Vec<usize>,
    /// Row-major `nodes.len()^2` matrix.
    pub matrix: Vec<f64>,
}

impl FaceMatrix {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

/// Precomputed ghost-penalty forms. The fluid Q2 matrices already contain
/// the `h` and `h^3/4` scalings of first and second derivative jumps;
/// the Q1 matrices hold the bare weighted first-derivative jump products.
#[derive(Debug, Clone, Default)]
pub struct GhostForms {
    pub fluid_q2: Vec<FaceMatrix>,
    pub fluid_q1: Vec<FaceMatrix>,
    pub solid_q1: Vec<FaceMatrix>,
}

fn face_points(mesh: &Mesh, face: usize) -> (Vec<Point>, Vec<f64>, Point) {
    let f = &mesh.faces[face];
    let [a, b] = f.vertices.map(|v| mesh.vertices[v]);
    let len = crate::geometry::dist(a, b);
    let (x, w) = gauss_legendre(points_for_degree(FACE_ORDER));
    (
        x.iter().map(|&s| lerp(a, b, s)).collect(),
        w.iter().map(|&w| w * len).collect(),
        f.first.normal,
    )
}

fn invert(mesh: &Mesh, cell: usize, x: Point) -> Result<Point, AssemblyError> {
    mesh.cell_map(cell)
        .inverse(x)
        .ok_or(AssemblyError::PointInversion { cell })
}

fn outer(jumps: &[Vec<f64>], weights: &[f64], scale: f64, out: &mut [f64]) {
    let n = jumps.first().map_or(0, |j| j.len());
    for (j, &w) in jumps.iter().zip(weights) {
        for a in 0..n {
            let ja = j[a] * w * scale;
            if ja == 0.0 {
                continue;
            }
            for b in 0..n {
                out[a * n + b] += ja * j[b];
            }
        }
    }
}

fn q2_face(mesh: &Mesh, gf: &GhostFace, h: f64, w_max: f64) -> Result<FaceMatrix, AssemblyError> {
    let (pts, wts, n) = face_points(mesh, gf.face);
    let mut first = Vec::with_capacity(pts.len());
    let mut second = Vec::with_capacity(pts.len());
    for &x in &pts {
        let mut j1 = Vec::with_capacity(18);
        let mut j2 = Vec::with_capacity(18);
        for (side, &c) in gf.cells.iter().enumerate() {
            let sign = if side == 0 { 1.0 } else { -1.0 };
            let r = invert(mesh, c, x)?;
            let (_, g, hess) = q2_physical_with_hessian(&mesh.cell_map(c), r);
            for k in 0..9 {
                j1.push(sign * dot(g[k], n));
                let hn = [
                    hess[k][0][0] * n[0] + hess[k][0][1] * n[1],
                    hess[k][1][0] * n[0] + hess[k][1][1] * n[1],
                ];
                j2.push(sign * dot(n, hn));
            }
        }
        first.push(j1);
        second.push(j2);
    }
    let wsum = weight(gf.kappas[0], w_max)? + weight(gf.kappas[1], w_max)?;
    let mut matrix = vec![0.0; 18 * 18];
    outer(&first, &wts, wsum * h, &mut matrix);
    outer(&second, &wts, wsum * h.powi(3) / 4.0, &mut matrix);
    let mut nodes = q2_cell_nodes(mesh, gf.cells[0]).to_vec();
    nodes.extend(q2_cell_nodes(mesh, gf.cells[1]));
    Ok(FaceMatrix {
        face: gf.face,
        nodes,
        matrix,
    })
}

fn q1_face(mesh: &Mesh, gf: &GhostFace, w_max: f64) -> Result<FaceMatrix, AssemblyError> {
    let (pts, wts, n) = face_points(mesh, gf.face);
    let mut jumps = Vec::with_capacity(pts.len());
    for &x in &pts {
        let mut j = Vec::with_capacity(8);
        for (side, &c) in gf.cells.iter().enumerate() {
            let sign = if side == 0 { 1.0 } else { -1.0 };
            let r = invert(mesh, c, x)?;
            let (_, g) = q1_physical(&mesh.cell_map(c), r);
            j.extend(g.iter().map(|g| sign * dot(*g, n)));
        }
        jumps.push(j);
    }
    let wsum = weight(gf.kappas[0], w_max)? + weight(gf.kappas[1], w_max)?;
    let mut matrix = vec![0.0; 8 * 8];
    outer(&jumps, &wts, wsum, &mut matrix);
    let mut nodes = mesh.cells[gf.cells[0]].to_vec();
    nodes.extend(mesh.cells[gf.cells[1]]);
    Ok(FaceMatrix {
        face: gf.face,
        nodes,
        matrix,
    })
}

impl GhostForms {
    pub fn build(
        mesh: &Mesh,
        geom: &CutGeometry,
        h: f64,
        w_max: f64,
    ) -> Result<Self, AssemblyError> {
        let fluid = ghost_faces(mesh, geom, Subdomain::Fluid);
        let solid = ghost_faces(mesh, geom, Subdomain::Solid);
        Ok(Self {
            fluid_q2: fluid
                .iter()
                .map(|gf| q2_face(mesh, gf, h, w_max))
                .collect::<Result<_, _>>()?,
            fluid_q1: fluid
                .iter()
                .map(|gf| q1_face(mesh, gf, w_max))
                .collect::<Result<_, _>>()?,
            solid_q1: solid
                .iter()
                .map(|gf| q1_face(mesh, gf, w_max))
                .collect::<Result<_, _>>()?,
        })
    }
}
