//! Condition number estimates and a scalar cut-cell toy problem used to
//! probe how stabilization affects conditioning.

use crate::assembly::ghost::GhostForms;
use crate::cutgeom::{CutGeometry, LevelSet, Subdomain, DEFAULT_ORDER};
use crate::fem::{q2_cell_nodes, q2_node_positions, q2_physical};
use crate::geometry::dot;
use crate::linalg::{norm2, CsrMatrix};
use crate::mesh::build_rect_mesh;

use super::linear::SparseLu;
use super::SolverError;

/// Largest size handled by a dense singular value decomposition.
pub const DENSE_LIMIT: usize = 2000;

const POWER_ITERATIONS: usize = 500;
const POWER_TOLERANCE: f64 = 1e-10;

/// 2-norm condition number: exact (dense SVD) up to [`DENSE_LIMIT`]
/// unknowns, otherwise power and inverse power iteration on `A^T A`.
/// Singular matrices give `inf`.
pub fn estimate_condition(a: &CsrMatrix) -> f64 {
    if a.nrows == 0 {
        return 1.0;
    }
    if a.nrows <= DENSE_LIMIT {
        dense_condition(a)
    } else {
        iterative_condition(a)
    }
}

fn dense_condition(a: &CsrMatrix) -> f64 {
    let m = faer::Mat::<f64>::from_fn(a.nrows, a.ncols, |i, j| a.get(i, j));
    match m.singular_values() {
        Ok(s) => {
            let (max, min) = (s[0], s[s.len() - 1]);
            if min == 0.0 {
                f64::INFINITY
            } else {
                max / min
            }
        }
        Err(_) => f64::NAN,
    }
}

/// Largest eigenvalue of a symmetric positive operator by power iteration.
fn power_iteration(n: usize, mut op: impl FnMut(&[f64]) -> Option<Vec<f64>>) -> Option<f64> {
    // deterministic start with components in every direction
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract())
        .collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let y = op(&x)?;
        let next = dot_slices(&x, &y);
        let ny = norm2(&y);
        if ny == 0.0 {
            return Some(0.0);
        }
        x = y.into_iter().map(|v| v / ny).collect();
        if (next - lambda).abs() <= POWER_TOLERANCE * next.abs() {
            return Some(next);
        }
        lambda = next;
    }
    Some(lambda)
}

fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn iterative_condition(a: &CsrMatrix) -> f64 {
    let at = a.transpose();
    let Some(max2) = power_iteration(a.nrows, |x| Some(at.matvec(&a.matvec(x)))) else {
        return f64::NAN;
    };
    let mut lu = SparseLu::new();
    if lu.factorize(a).is_err() {
        return f64::INFINITY;
    }
    // (A^T A)^{-1} = A^{-1} A^{-T}
    let inv = power_iteration(a.nrows, |x| {
        let y = lu.apply_inverse_transpose(x).ok()?;
        lu.apply_inverse(&y).ok()
    });
    match inv {
        Some(inv_max2) if inv_max2 > 0.0 => (max2 * inv_max2).sqrt(),
        _ => f64::INFINITY,
    }
}

/// Scalar Q2 Laplace problem on the part `x < 1/2 + kappa h` of the unit
/// square, meshed with `n x n` cells, so that one column of cells keeps
/// only the fraction `kappa`. Dirichlet conditions hold on `x = 0`,
/// `y = 0` and `y = 1`; the cut boundary is natural. The returned matrix
/// is restricted to the free unknowns and carries the weighted fluid
/// ghost penalty scaled by `gamma` (no penalty for `gamma = 0`).
pub fn cut_poisson_matrix(
    n: usize,
    kappa: f64,
    gamma: f64,
    w_max: f64,
) -> Result<CsrMatrix, SolverError> {
    assert!(
        n >= 2 && n % 2 == 0,
        "need an even number of cells per side"
    );
    let lines: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mesh =
        build_rect_mesh(&lines, &lines, None).map_err(|e| SolverError::Setup(e.to_string()))?;
    let h = 1.0 / n as f64;
    // fluid (positive side) is x < x_g
    let ls = LevelSet::line([-1.0, 0.0], -(0.5 + kappa * h));
    let geom = CutGeometry::new(&mesh, Some(ls), DEFAULT_ORDER)
        .map_err(|e| SolverError::Setup(e.to_string()))?;

    let pos = q2_node_positions(&mesh);
    let mut dof = vec![None; pos.len()];
    let mut ndof = 0;
    for &c in geom.members(Subdomain::Fluid) {
        for node in q2_cell_nodes(&mesh, c) {
            if dof[node].is_none() {
                dof[node] = Some(ndof);
                ndof += 1;
            }
        }
    }
    let mut triplets = Vec::new();
    for &c in geom.members(Subdomain::Fluid) {
        let map = mesh.cell_map(c);
        let nodes = q2_cell_nodes(&mesh, c);
        let rule = geom.rule(c, Subdomain::Fluid);
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let r = map
                .inverse(*x)
                .ok_or(SolverError::Setup(format!("cannot invert cell {c}")))?;
            let (_, g) = q2_physical(&map, r);
            for a in 0..9 {
                for b in 0..9 {
                    let (i, j) = (dof[nodes[a]].unwrap(), dof[nodes[b]].unwrap());
                    triplets.push((i, j, w * dot(g[a], g[b])));
                }
            }
        }
    }
    if gamma > 0.0 {
        let forms = GhostForms::build(&mesh, &geom, h, w_max)?;
        for fm in &forms.fluid_q2 {
            let m = fm.size();
            for a in 0..m {
                for b in 0..m {
                    let (i, j) = (dof[fm.nodes[a]].unwrap(), dof[fm.nodes[b]].unwrap());
                    triplets.push((i, j, gamma * fm.matrix[a * m + b]));
                }
            }
        }
    }
    let full = CsrMatrix::from_triplets(ndof, ndof, &triplets);

    let tol = 1e-12;
    let mut free_index = vec![None; ndof];
    let mut nfree = 0;
    for (node, d) in dof.iter().enumerate() {
        if let Some(d) = *d {
            let p = pos[node];
            let fixed = p[0].abs() < tol || p[1].abs() < tol || (p[1] - 1.0).abs() < tol;
            if !fixed {
                free_index[d] = Some(nfree);
                nfree += 1;
            }
        }
    }
    let mut reduced = Vec::new();
    for r in 0..ndof {
        let Some(fr) = free_index[r] else { continue };
        let (cols, vals) = full.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if let Some(fc) = free_index[c] {
                reduced.push((fr, fc, v));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(nfree, nfree, &reduced))
}
