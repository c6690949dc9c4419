//! Monolithic residual and analytic Jacobian of one backward Euler step.
//!
//! Unknowns are `(v_f, p, v_s, u)`. Test functions are paired with rows as
//! follows: fluid momentum in the `v_f` rows, incompressibility in the `p`
//! rows, the displacement transport equation in the `v_s` rows and solid
//! momentum in the `u` rows. Fluid and solid are coupled on the interface
//! by Nitsche terms; all four fields carry weighted ghost penalties.
//!
//! Quadrature data is computed once in [`System::new`]; the interface is
//! fixed in time.

pub mod ghost;
pub mod materials;

use rayon::prelude::*;
use thiserror::Error;

use crate::cutgeom::{CellKind, CutError, CutGeometry, LevelSet, DEFAULT_ORDER};
use crate::fem::{q1_physical, q2_physical, Dirichlet, Field, SystemDofMap};
use crate::geometry::{dot, lerp, scale, Point};
use crate::linalg::CsrMatrix;
use crate::mesh::{BoundaryMarker, Mesh};
use crate::quadrature::{gauss_legendre, points_for_degree};

pub use ghost::GhostForms;
pub use materials::{
    strain_solid, strain_solid_derivative, stress_fluid, stress_from_strain, stress_solid, weight,
    Tensor2,
};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("parameter {name} = {value} violates the bound {bound}")]
    InvalidParameter {
        name: &'static str,
        bound: &'static str,
        value: f64,
    },
    #[error("could not invert the geometry map of cell {cell}")]
    PointInversion { cell: usize },
    #[error("non-finite {what} entry in row {dof} ({field:?} block)")]
    NonFinite {
        what: &'static str,
        dof: usize,
        field: Field,
    },
    #[error("state vector has length {got}, expected {expected}")]
    StateLength { got: usize, expected: usize },
    #[error(transparent)]
    Cut(#[from] CutError),
}

/// Physical, discretization and stabilization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub rho_f: f64,
    pub rho_s: f64,
    pub nu_f: f64,
    pub mu_s: f64,
    pub lambda_s: f64,
    /// Nitsche penalty.
    pub gamma_n: f64,
    pub gamma_vf: f64,
    pub gamma_p: f64,
    pub gamma_vs: f64,
    pub gamma_u: f64,
    pub w_max: f64,
    /// Time step `k`.
    pub dt: f64,
    /// Solid momentum convection and displacement transport.
    pub include_solid_convection: bool,
}

impl Default for Parameters {
    fn default() -> Self {
        Self {
            rho_f: 1000.0,
            rho_s: 1000.0,
            nu_f: 1e-3,
            mu_s: 0.5e6,
            lambda_s: 2.0e6,
            gamma_n: 10.0,
            gamma_vf: 1e-3,
            gamma_p: 1e-3,
            gamma_vs: 1e-3,
            gamma_u: 1e-3,
            w_max: 3.0,
            dt: 1.0,
            include_solid_convection: false,
        }
    }
}

impl Parameters {
    pub fn validate(&self) -> Result<(), AssemblyError> {
        let positive = [
            ("rho_f", self.rho_f),
            ("rho_s", self.rho_s),
            ("nu_f", self.nu_f),
            ("mu_s", self.mu_s),
            ("gamma_n", self.gamma_n),
            ("dt", self.dt),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AssemblyError::InvalidParameter {
                    name,
                    bound: "> 0",
                    value,
                });
            }
        }
        let non_negative = [
            ("lambda_s", self.lambda_s),
            ("gamma_vf", self.gamma_vf),
            ("gamma_p", self.gamma_p),
            ("gamma_vs", self.gamma_vs),
            ("gamma_u", self.gamma_u),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(AssemblyError::InvalidParameter {
                    name,
                    bound: ">= 0",
                    value,
                });
            }
        }
        weight(0.5, self.w_max).map(|_| ())
    }
}

/// Coefficient vector in the monolithic layout at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub values: Vec<f64>,
    pub t: f64,
}

impl SystemState {
    pub fn zeros(n: usize, t: f64) -> Self {
        Self {
            values: vec![0.0; n],
            t,
        }
    }
}

/// Inflow data of the benchmark channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inflow {
    pub mean_velocity: f64,
    pub ramp: bool,
}

impl Default for Inflow {
    fn default() -> Self {
        Self {
            mean_velocity: 0.2,
            ramp: true,
        }
    }
}

/// Which groups of terms enter the assembled forms. Everything is on by
/// default; tests switch groups off to inspect individual blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub bulk: bool,
    pub outflow: bool,
    pub nitsche_penalty: bool,
    pub nitsche_consistency: bool,
    pub ghost: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Self {
            bulk: true,
            outflow: true,
            nitsche_penalty: true,
            nitsche_consistency: true,
            ghost: true,
        }
    }
}

/// Basis values at one quadrature point of a cell.
#[derive(Debug, Clone, Copy)]
struct QPoint {
    w: f64,
    q2: [f64; 9],
    dq2: [Point; 9],
    q1: [f64; 4],
    dq1: [Point; 4],
}

/// A boundary or interface point with the outward normal of the fluid.
#[derive(Debug, Clone, Copy)]
struct NPoint {
    qp: QPoint,
    n: Point,
}

#[derive(Debug, Clone)]
struct CellData {
    /// Global DoFs in local order `v_f, p, v_s, u`; absent fields are
    /// empty.
    dofs: Vec<usize>,
    n_vf: usize,
    n_p: usize,
    n_vs: usize,
    fluid: Vec<QPoint>,
    solid: Vec<QPoint>,
    interface: Vec<NPoint>,
    outflow: Vec<NPoint>,
}

impl CellData {
    fn has_fluid(&self) -> bool {
        self.n_vf > 0
    }

    fn has_solid(&self) -> bool {
        self.n_vs > 0
    }
}

fn qpoint(mesh: &Mesh, cell: usize, x: Point, w: f64) -> Result<QPoint, AssemblyError> {
    let map = mesh.cell_map(cell);
    let r = map
        .inverse(x)
        .ok_or(AssemblyError::PointInversion { cell })?;
    let (q2, dq2) = q2_physical(&map, r);
    let (q1, dq1) = q1_physical(&map, r);
    Ok(QPoint {
        w,
        q2,
        dq2,
        q1,
        dq1,
    })
}

/// Assembled problem on a fixed mesh and interface.
#[derive(Debug, Clone)]
pub struct System {
    pub mesh: Mesh,
    pub geom: CutGeometry,
    pub dofs: SystemDofMap,
    pub bc: Dirichlet,
    pub params: Parameters,
    /// Global mesh size: the largest cell diameter.
    pub h: f64,
    pub terms: Terms,
    pub ghost: GhostForms,
    cells: Vec<CellData>,
    pattern: CsrMatrix,
}

/// Cells per parallel batch; results are scattered in cell order so the
/// sums do not depend on the thread count.
const BATCH: usize = 256;

impl System {
    /// Builds geometry, spaces, quadrature data and the sparsity pattern.
    /// Without a level set the whole mesh is fluid.
    pub fn new(
        mesh: Mesh,
        level_set: Option<LevelSet>,
        params: Parameters,
        inflow: Inflow,
    ) -> Result<Self, AssemblyError> {
        params.validate()?;
        let geom = CutGeometry::new(&mesh, level_set, DEFAULT_ORDER)?;
        let dofs = SystemDofMap::new(&mesh, &geom);
        let bc = Dirichlet::benchmark(&mesh, &dofs, inflow.mean_velocity, inflow.ramp);
        let h = mesh.max_cell_diameter();
        let ghost = GhostForms::build(&mesh, &geom, h, params.w_max)?;
        let cells = build_cell_data(&mesh, &geom, &dofs)?;
        let pattern = build_pattern(&dofs, &cells, &ghost);
        Ok(Self {
            mesh,
            geom,
            dofs,
            bc,
            params,
            h,
            terms: Terms::default(),
            ghost,
            cells,
            pattern,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.num_dofs()
    }

    /// Zero state with the Dirichlet values of time `t`.
    pub fn initial_state(&self, t: f64) -> SystemState {
        let mut s = SystemState::zeros(self.num_dofs(), t);
        self.bc.apply(&mut s.values, t);
        s
    }

    /// An empty matrix with the system's sparsity pattern.
    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    fn check_len(&self, x: &[f64]) -> Result<(), AssemblyError> {
        if x.len() != self.num_dofs() {
            return Err(AssemblyError::StateLength {
                got: x.len(),
                expected: self.num_dofs(),
            });
        }
        Ok(())
    }

    /// Residual of the step from `prev` to `state`. Rows of constrained
    /// DoFs are zero.
    pub fn residual(
        &self,
        state: &SystemState,
        prev: &SystemState,
    ) -> Result<Vec<f64>, AssemblyError> {
        let (r, _) = self.assemble(&state.values, &prev.values, true, false)?;
        Ok(r.expect("residual requested"))
    }

    /// Jacobian at `state`, with identity rows for constrained DoFs and
    /// their columns eliminated.
    pub fn jacobian(&self, state: &SystemState) -> Result<CsrMatrix, AssemblyError> {
        let (_, j) = self.assemble(&state.values, &state.values, false, true)?;
        Ok(j.expect("jacobian requested"))
    }

    pub fn residual_and_jacobian(
        &self,
        state: &SystemState,
        prev: &SystemState,
    ) -> Result<(Vec<f64>, CsrMatrix), AssemblyError> {
        let (r, j) = self.assemble(&state.values, &prev.values, true, true)?;
        Ok((
            r.expect("residual requested"),
            j.expect("jacobian requested"),
        ))
    }

    fn assemble(
        &self,
        x: &[f64],
        xp: &[f64],
        want_res: bool,
        want_jac: bool,
    ) -> Result<(Option<Vec<f64>>, Option<CsrMatrix>), AssemblyError> {
        self.check_len(x)?;
        self.check_len(xp)?;
        let n = self.num_dofs();
        let mut res = want_res.then(|| vec![0.0; n]);
        let mut jac = want_jac.then(|| self.pattern.clone());

        for batch in self.cells.chunks(BATCH) {
            let locals: Vec<(Vec<f64>, Vec<f64>)> = batch
                .par_iter()
                .map(|cd| self.element(cd, x, xp, want_jac))
                .collect();
            for (cd, (r_loc, j_loc)) in batch.iter().zip(locals) {
                if let Some(res) = res.as_mut() {
                    for (&d, v) in cd.dofs.iter().zip(&r_loc) {
                        res[d] += v;
                    }
                }
                if let Some(jac) = jac.as_mut() {
                    let m = cd.dofs.len();
                    for (a, &ra) in cd.dofs.iter().enumerate() {
                        for (b, &cb) in cd.dofs.iter().enumerate() {
                            let v = j_loc[a * m + b];
                            if v != 0.0 {
                                jac.add(ra, cb, v);
                            }
                        }
                    }
                }
            }
        }

        if self.terms.ghost {
            self.add_ghost(x, xp, res.as_deref_mut(), jac.as_mut());
        }

        if let Some(res) = res.as_mut() {
            for &d in &self.bc.dofs {
                res[d] = 0.0;
            }
            if let Some(dof) = res.iter().position(|v| !v.is_finite()) {
                return Err(AssemblyError::NonFinite {
                    what: "residual",
                    dof,
                    field: self.dofs.field_of(dof),
                });
            }
        }
        if let Some(jac) = jac.as_mut() {
            self.reduce_dirichlet(jac);
            if let Some(k) = jac.values.iter().position(|v| !v.is_finite()) {
                let dof = jac.row_ptr.partition_point(|&p| p <= k) - 1;
                return Err(AssemblyError::NonFinite {
                    what: "jacobian",
                    dof,
                    field: self.dofs.field_of(dof),
                });
            }
        }
        Ok((res, jac))
    }

    fn reduce_dirichlet(&self, jac: &mut CsrMatrix) {
        let mask = &self.bc.mask;
        for r in 0..jac.nrows {
            let range = jac.row_ptr[r]..jac.row_ptr[r + 1];
            if mask[r] {
                for k in range {
                    jac.values[k] = if jac.col_idx[k] == r { 1.0 } else { 0.0 };
                }
            } else {
                for k in range {
                    if mask[jac.col_idx[k]] {
                        jac.values[k] = 0.0;
                    }
                }
            }
        }
    }

    /// Scale factors of the four ghost-penalty forms as they enter the
    /// residual: `(v_f, p, v_s, u)`.
    fn ghost_scales(&self) -> [f64; 4] {
        let p = &self.params;
        let k = p.dt;
        let h = self.h;
        [
            2.0 * p.rho_f * p.nu_f * k * p.gamma_vf,
            k * p.gamma_p * h.powi(3),
            p.rho_s * p.gamma_vs * h.powi(3),
            2.0 * p.mu_s * k * p.gamma_u * h,
        ]
    }

    fn add_ghost(
        &self,
        x: &[f64],
        xp: &[f64],
        mut res: Option<&mut [f64]>,
        mut jac: Option<&mut CsrMatrix>,
    ) {
        let [s_vf, s_p, s_vs, s_u] = self.ghost_scales();
        let groups: [(&[ghost::FaceMatrix], Field, Field, f64, bool); 4] = [
            (
                &self.ghost.fluid_q2,
                Field::FluidVelocity,
                Field::FluidVelocity,
                s_vf,
                false,
            ),
            (
                &self.ghost.fluid_q1,
                Field::Pressure,
                Field::Pressure,
                s_p,
                false,
            ),
            // solid velocity jumps are tested against the momentum rows
            (
                &self.ghost.solid_q1,
                Field::Displacement,
                Field::SolidVelocity,
                s_vs,
                true,
            ),
            (
                &self.ghost.solid_q1,
                Field::Displacement,
                Field::Displacement,
                s_u,
                false,
            ),
        ];
        for (faces, row_field, col_field, scale, use_increment) in groups {
            if scale == 0.0 {
                continue;
            }
            let ncomp = col_field.components();
            for fm in faces {
                let m = fm.size();
                let rows: Vec<usize> = fm
                    .nodes
                    .iter()
                    .map(|&n| {
                        self.dofs
                            .node_dof(row_field, n)
                            .expect("ghost node without DoF")
                    })
                    .collect();
                let cols: Vec<usize> = fm
                    .nodes
                    .iter()
                    .map(|&n| {
                        self.dofs
                            .node_dof(col_field, n)
                            .expect("ghost node without DoF")
                    })
                    .collect();
                for comp in 0..ncomp {
                    for a in 0..m {
                        let mut acc = 0.0;
                        for b in 0..m {
                            let v = scale * fm.matrix[a * m + b];
                            if v == 0.0 {
                                continue;
                            }
                            let c = cols[b] + comp;
                            if res.is_some() {
                                let val = if use_increment { x[c] - xp[c] } else { x[c] };
                                acc += v * val;
                            }
                            if let Some(j) = jac.as_deref_mut() {
                                j.add(rows[a] + comp, c, v);
                            }
                        }
                        if let Some(r) = res.as_deref_mut() {
                            r[rows[a] + comp] += acc;
                        }
                    }
                }
            }
        }
    }

    /// `g(x, phi_i)` for every test function of `field`'s row block, with
    /// the stabilization scalings (`gamma`, powers of `h`, weights) but
    /// without the physical prefactors. For the solid velocity the penalty
    /// is tested in the displacement rows.
    pub fn ghost_penalty(&self, field: Field, coefficients: &[f64]) -> Vec<f64> {
        let p = &self.params;
        let h = self.h;
        let (faces, row_field, scale) = match field {
            Field::FluidVelocity => (&self.ghost.fluid_q2, Field::FluidVelocity, p.gamma_vf),
            Field::Pressure => (&self.ghost.fluid_q1, Field::Pressure, p.gamma_p * h.powi(3)),
            Field::SolidVelocity => (
                &self.ghost.solid_q1,
                Field::Displacement,
                p.gamma_vs * h.powi(3),
            ),
            Field::Displacement => (&self.ghost.solid_q1, Field::Displacement, p.gamma_u * h),
        };
        let mut out = vec![0.0; self.num_dofs()];
        for fm in faces {
            let m = fm.size();
            for comp in 0..field.components() {
                for a in 0..m {
                    let row = self
                        .dofs
                        .node_dof(row_field, fm.nodes[a])
                        .expect("ghost node")
                        + comp;
                    let mut acc = 0.0;
                    for b in 0..m {
                        let col =
                            self.dofs.node_dof(field, fm.nodes[b]).expect("ghost node") + comp;
                        acc += scale * fm.matrix[a * m + b] * coefficients[col];
                    }
                    out[row] += acc;
                }
            }
        }
        out
    }

    fn element(
        &self,
        cd: &CellData,
        x: &[f64],
        xp: &[f64],
        want_jac: bool,
    ) -> (Vec<f64>, Vec<f64>) {
        let m = cd.dofs.len();
        let xl: Vec<f64> = cd.dofs.iter().map(|&d| x[d]).collect();
        let xpl: Vec<f64> = cd.dofs.iter().map(|&d| xp[d]).collect();
        let mut r = vec![0.0; m];
        let mut j = if want_jac {
            vec![0.0; m * m]
        } else {
            Vec::new()
        };
        let mut k = LocalKernel {
            p: &self.params,
            terms: self.terms,
            beta: self.params.dt * self.params.rho_f * self.params.nu_f * self.params.gamma_n
                / self.h,
            ovf: 0,
            op: cd.n_vf,
            ovs: cd.n_vf + cd.n_p,
            ou: cd.n_vf + cd.n_p + cd.n_vs,
            m,
            xl: &xl,
            xpl: &xpl,
            r: &mut r,
            j: &mut j,
            want_jac,
        };
        if cd.has_fluid() && self.terms.bulk {
            for q in &cd.fluid {
                k.fluid_point(q);
            }
        }
        if cd.has_fluid() && self.terms.outflow {
            for q in &cd.outflow {
                k.outflow_point(q);
            }
        }
        if cd.has_solid() && self.terms.bulk {
            for q in &cd.solid {
                k.solid_point(q);
            }
        }
        if cd.has_fluid() && cd.has_solid() {
            for q in &cd.interface {
                k.interface_point(q);
            }
        }
        (r, j)
    }
}

/// Per-cell evaluation of the weak form at quadrature points.
struct LocalKernel<'a> {
    p: &'a Parameters,
    terms: Terms,
    beta: f64,
    ovf: usize,
    op: usize,
    ovs: usize,
    ou: usize,
    m: usize,
    xl: &'a [f64],
    xpl: &'a [f64],
    r: &'a mut [f64],
    j: &'a mut [f64],
    want_jac: bool,
}

impl LocalKernel<'_> {
    #[inline]
    fn vf(&self, a: usize, i: usize) -> usize {
        self.ovf + 2 * a + i
    }
    #[inline]
    fn pr(&self, c: usize) -> usize {
        self.op + c
    }
    #[inline]
    fn vs(&self, a: usize, i: usize) -> usize {
        self.ovs + 2 * a + i
    }
    #[inline]
    fn u(&self, a: usize, i: usize) -> usize {
        self.ou + 2 * a + i
    }
    #[inline]
    fn jadd(&mut self, row: usize, col: usize, v: f64) {
        self.j[row * self.m + col] += v;
    }

    /// Value and gradient of a vector field with `nb` basis functions.
    fn vector_field(
        &self,
        x: &[f64],
        off: usize,
        vals: &[f64],
        grads: &[Point],
    ) -> (Point, Tensor2) {
        let mut v = [0.0; 2];
        let mut g = [[0.0; 2]; 2];
        for (a, (&n, dn)) in vals.iter().zip(grads).enumerate() {
            for i in 0..2 {
                let c = x[off + 2 * a + i];
                v[i] += n * c;
                g[i][0] += dn[0] * c;
                g[i][1] += dn[1] * c;
            }
        }
        (v, g)
    }

    fn vector_value(&self, x: &[f64], off: usize, vals: &[f64]) -> Point {
        let mut v = [0.0; 2];
        for (a, &n) in vals.iter().enumerate() {
            v[0] += n * x[off + 2 * a];
            v[1] += n * x[off + 2 * a + 1];
        }
        v
    }

    fn pressure(&self, q1: &[f64; 4]) -> f64 {
        (0..4).map(|c| q1[c] * self.xl[self.op + c]).sum()
    }

    fn fluid_point(&mut self, q: &QPoint) {
        let p = self.p;
        let (rho, k) = (p.rho_f, p.dt);
        let mu = p.rho_f * p.nu_f;
        let (v, g) = self.vector_field(self.xl, self.ovf, &q.q2, &q.dq2);
        let vprev = self.vector_value(self.xpl, self.ovf, &q.q2);
        let pres = self.pressure(&q.q1);
        let sigma = stress_fluid(&g, pres, p.rho_f, p.nu_f);
        let w = q.w;
        for a in 0..9 {
            let (phi, dphi) = (q.q2[a], q.dq2[a]);
            for i in 0..2 {
                let conv = g[i][0] * v[0] + g[i][1] * v[1];
                let val = rho * (v[i] - vprev[i]) * phi
                    + rho * k * conv * phi
                    + k * (sigma[i][0] * dphi[0] + sigma[i][1] * dphi[1]);
                let row = self.vf(a, i);
                self.r[row] += w * val;
            }
        }
        let div = g[0][0] + g[1][1];
        for c in 0..4 {
            let row = self.pr(c);
            self.r[row] += w * div * q.q1[c];
        }
        if !self.want_jac {
            return;
        }
        for a in 0..9 {
            let (phi_a, dphi_a) = (q.q2[a], q.dq2[a]);
            for b in 0..9 {
                let (phi_b, dphi_b) = (q.q2[b], q.dq2[b]);
                let mass = rho * phi_b * phi_a;
                let adv = rho * k * dot(v, dphi_b) * phi_a;
                let lap = k * mu * dot(dphi_b, dphi_a);
                for i in 0..2 {
                    for kk in 0..2 {
                        let mut val =
                            rho * k * g[i][kk] * phi_b * phi_a + k * mu * dphi_b[i] * dphi_a[kk];
                        if i == kk {
                            val += mass + adv + lap;
                        }
                        let (row, col) = (self.vf(a, i), self.vf(b, kk));
                        self.jadd(row, col, w * val);
                    }
                }
            }
            for c in 0..4 {
                for i in 0..2 {
                    let (row, col) = (self.vf(a, i), self.pr(c));
                    self.jadd(row, col, -w * k * q.q1[c] * dphi_a[i]);
                }
            }
        }
        for c in 0..4 {
            for b in 0..9 {
                for kk in 0..2 {
                    let (row, col) = (self.pr(c), self.vf(b, kk));
                    self.jadd(row, col, w * q.dq2[b][kk] * q.q1[c]);
                }
            }
        }
    }

    /// Removes the transposed viscous part on the outflow boundary so
    /// that the natural condition is `rho nu dv/dn - p n = 0`.
    fn outflow_point(&mut self, np: &NPoint) {
        let (q, n) = (&np.qp, np.n);
        let kmu = self.p.dt * self.p.rho_f * self.p.nu_f;
        let (_, g) = self.vector_field(self.xl, self.ovf, &q.q2, &q.dq2);
        let w = q.w;
        for a in 0..9 {
            for i in 0..2 {
                let gtn = g[0][i] * n[0] + g[1][i] * n[1];
                let row = self.vf(a, i);
                self.r[row] -= w * kmu * gtn * q.q2[a];
            }
        }
        if !self.want_jac {
            return;
        }
        for a in 0..9 {
            for b in 0..9 {
                for i in 0..2 {
                    for kk in 0..2 {
                        let (row, col) = (self.vf(a, i), self.vf(b, kk));
                        self.jadd(row, col, -w * kmu * q.dq2[b][i] * n[kk] * q.q2[a]);
                    }
                }
            }
        }
    }

    fn solid_point(&mut self, q: &QPoint) {
        let p = self.p;
        let (rho, k, conv) = (p.rho_s, p.dt, p.include_solid_convection);
        let (vs, gs) = self.vector_field(self.xl, self.ovs, &q.q1, &q.dq1);
        let vs_prev = self.vector_value(self.xpl, self.ovs, &q.q1);
        let (u, h) = self.vector_field(self.xl, self.ou, &q.q1, &q.dq1);
        let u_prev = self.vector_value(self.xpl, self.ou, &q.q1);
        let sigma = stress_solid(&h, p.mu_s, p.lambda_s);
        let w = q.w;
        for a in 0..4 {
            let (chi, dchi) = (q.q1[a], q.dq1[a]);
            for i in 0..2 {
                let mut mom = rho * (vs[i] - vs_prev[i]) * chi
                    + k * (sigma[i][0] * dchi[0] + sigma[i][1] * dchi[1]);
                let mut kin = (u[i] - u_prev[i]) * chi - k * vs[i] * chi;
                if conv {
                    mom += rho * k * (gs[i][0] * vs[0] + gs[i][1] * vs[1]) * chi;
                    kin += k * (h[i][0] * vs[0] + h[i][1] * vs[1]) * chi;
                }
                let (ru, rv) = (self.u(a, i), self.vs(a, i));
                self.r[ru] += w * mom;
                self.r[rv] += w * kin;
            }
        }
        if !self.want_jac {
            return;
        }
        for b in 0..4 {
            let (psi_b, dpsi_b) = (q.q1[b], q.dq1[b]);
            for kk in 0..2 {
                let mut dh = [[0.0; 2]; 2];
                dh[kk] = dpsi_b;
                let ds = stress_from_strain(&strain_solid_derivative(&h, &dh), p.mu_s, p.lambda_s);
                for a in 0..4 {
                    let (chi, dchi) = (q.q1[a], q.dq1[a]);
                    for i in 0..2 {
                        let delta = if i == kk { 1.0 } else { 0.0 };
                        // momentum rows
                        let mut d_vs = rho * delta * psi_b * chi;
                        if conv {
                            d_vs += rho * k * (dot(vs, dpsi_b) * delta + gs[i][kk] * psi_b) * chi;
                        }
                        let d_u = k * (ds[i][0] * dchi[0] + ds[i][1] * dchi[1]);
                        let (ru, cu, cvs) = (self.u(a, i), self.u(b, kk), self.vs(b, kk));
                        self.jadd(ru, cvs, w * d_vs);
                        self.jadd(ru, cu, w * d_u);
                        // transport rows
                        let mut t_u = delta * psi_b * chi;
                        let mut t_vs = -k * delta * psi_b * chi;
                        if conv {
                            t_u += k * delta * dot(vs, dpsi_b) * chi;
                            t_vs += k * psi_b * h[i][kk] * chi;
                        }
                        let rv = self.vs(a, i);
                        self.jadd(rv, cu, w * t_u);
                        self.jadd(rv, cvs, w * t_vs);
                    }
                }
            }
        }
    }

    fn interface_point(&mut self, np: &NPoint) {
        let p = self.p;
        let (q, n) = (&np.qp, np.n);
        let k = p.dt;
        let kmu = k * p.rho_f * p.nu_f;
        let beta = self.beta;
        let pen = if self.terms.nitsche_penalty { 1.0 } else { 0.0 };
        let con = if self.terms.nitsche_consistency {
            1.0
        } else {
            0.0
        };
        let (v, g) = self.vector_field(self.xl, self.ovf, &q.q2, &q.dq2);
        let vs = self.vector_value(self.xl, self.ovs, &q.q1);
        let pres = self.pressure(&q.q1);
        let sigma = stress_fluid(&g, pres, p.rho_f, p.nu_f);
        let t = [
            sigma[0][0] * n[0] + sigma[0][1] * n[1],
            sigma[1][0] * n[0] + sigma[1][1] * n[1],
        ];
        let jump = [v[0] - vs[0], v[1] - vs[1]];
        let jn = dot(jump, n);
        let w = q.w;

        for a in 0..9 {
            let (phi, dphi) = (q.q2[a], q.dq2[a]);
            let dn_phi = dot(dphi, n);
            let j_dphi = dot(jump, dphi);
            for i in 0..2 {
                let val = pen * beta * jump[i] * phi
                    - con * k * t[i] * phi
                    - con * kmu * (jump[i] * dn_phi + n[i] * j_dphi);
                let row = self.vf(a, i);
                self.r[row] += w * val;
            }
        }
        for c in 0..4 {
            let row = self.pr(c);
            self.r[row] -= w * con * k * jn * q.q1[c];
        }
        for a in 0..4 {
            let chi = q.q1[a];
            for i in 0..2 {
                let row = self.u(a, i);
                self.r[row] += w * (-pen * beta * jump[i] * chi + con * k * t[i] * chi);
            }
        }
        if !self.want_jac {
            return;
        }
        // fluid rows
        for a in 0..9 {
            let (phi_a, dphi_a) = (q.q2[a], q.dq2[a]);
            let dn_a = dot(dphi_a, n);
            for i in 0..2 {
                let row = self.vf(a, i);
                for b in 0..9 {
                    let (phi_b, dphi_b) = (q.q2[b], q.dq2[b]);
                    let dn_b = dot(dphi_b, n);
                    for kk in 0..2 {
                        let delta = if i == kk { 1.0 } else { 0.0 };
                        let val = pen * beta * delta * phi_b * phi_a
                            - con * kmu * (delta * dn_b + dphi_b[i] * n[kk]) * phi_a
                            - con * kmu * (delta * phi_b * dn_a + n[i] * phi_b * dphi_a[kk]);
                        let col = self.vf(b, kk);
                        self.jadd(row, col, w * val);
                    }
                }
                for c in 0..4 {
                    let col = self.pr(c);
                    self.jadd(row, col, w * con * k * q.q1[c] * n[i] * phi_a);
                }
                for b in 0..4 {
                    let psi_b = q.q1[b];
                    for kk in 0..2 {
                        let delta = if i == kk { 1.0 } else { 0.0 };
                        let val = -pen * beta * delta * psi_b * phi_a
                            + con * kmu * (delta * psi_b * dn_a + n[i] * psi_b * dphi_a[kk]);
                        let col = self.vs(b, kk);
                        self.jadd(row, col, w * val);
                    }
                }
            }
        }
        // pressure rows
        for c in 0..4 {
            let xi = q.q1[c];
            let row = self.pr(c);
            for b in 0..9 {
                for kk in 0..2 {
                    let col = self.vf(b, kk);
                    self.jadd(row, col, -w * con * k * q.q2[b] * n[kk] * xi);
                }
            }
            for b in 0..4 {
                for kk in 0..2 {
                    let col = self.vs(b, kk);
                    self.jadd(row, col, w * con * k * q.q1[b] * n[kk] * xi);
                }
            }
        }
        // solid momentum rows
        for a in 0..4 {
            let chi = q.q1[a];
            for i in 0..2 {
                let row = self.u(a, i);
                for b in 0..9 {
                    let (phi_b, dphi_b) = (q.q2[b], q.dq2[b]);
                    let dn_b = dot(dphi_b, n);
                    for kk in 0..2 {
                        let delta = if i == kk { 1.0 } else { 0.0 };
                        let val = -pen * beta * delta * phi_b * chi
                            + con * kmu * (delta * dn_b + dphi_b[i] * n[kk]) * chi;
                        let col = self.vf(b, kk);
                        self.jadd(row, col, w * val);
                    }
                }
                for c in 0..4 {
                    let col = self.pr(c);
                    self.jadd(row, col, -w * con * k * q.q1[c] * n[i] * chi);
                }
                for b in 0..4 {
                    let col = self.vs(b, i);
                    self.jadd(row, col, w * pen * beta * q.q1[b] * chi);
                }
            }
        }
    }
}

fn build_cell_data(
    mesh: &Mesh,
    geom: &CutGeometry,
    dofs: &SystemDofMap,
) -> Result<Vec<CellData>, AssemblyError> {
    let (gx, gw) = gauss_legendre(points_for_degree(DEFAULT_ORDER));
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let fluid = geom.contains(c, crate::cutgeom::Subdomain::Fluid);
            let solid = geom.contains(c, crate::cutgeom::Subdomain::Solid);
            let mut cell_dofs = Vec::with_capacity(38);
            let (mut n_vf, mut n_p, mut n_vs) = (0, 0, 0);
            if fluid {
                let vf = dofs.cell_dofs(mesh, Field::FluidVelocity, c);
                let p = dofs.cell_dofs(mesh, Field::Pressure, c);
                n_vf = vf.len();
                n_p = p.len();
                cell_dofs.extend(vf);
                cell_dofs.extend(p);
            }
            if solid {
                let vs = dofs.cell_dofs(mesh, Field::SolidVelocity, c);
                n_vs = vs.len();
                cell_dofs.extend(vs);
                cell_dofs.extend(dofs.cell_dofs(mesh, Field::Displacement, c));
            }
            let g = &geom.cells[c];
            let rule = |r: &crate::cutgeom::QuadRule| -> Result<Vec<QPoint>, AssemblyError> {
                r.points
                    .iter()
                    .zip(&r.weights)
                    .map(|(&x, &w)| qpoint(mesh, c, x, w))
                    .collect()
            };
            let fluid_pts = if fluid { rule(&g.fluid)? } else { Vec::new() };
            let solid_pts = if solid { rule(&g.solid)? } else { Vec::new() };
            let interface = g
                .interface
                .points
                .iter()
                .zip(&g.interface.weights)
                .zip(&g.interface.normals)
                .map(|((&x, &w), &n)| {
                    Ok(NPoint {
                        qp: qpoint(mesh, c, x, w)?,
                        n: scale(n, -1.0),
                    })
                })
                .collect::<Result<Vec<_>, AssemblyError>>()?;
            let mut outflow = Vec::new();
            if fluid {
                for &f in &mesh.cell_faces[c] {
                    let face = &mesh.faces[f];
                    if face.marker != Some(BoundaryMarker::Outflow) {
                        continue;
                    }
                    let [a, b] = face.vertices.map(|v| mesh.vertices[v]);
                    let clipped = match &geom.level_set {
                        Some(ls) if geom.kind(c) == CellKind::Cut => ls.fluid_segment(a, b),
                        _ => Some([a, b]),
                    };
                    let Some([a, b]) = clipped else { continue };
                    let len = crate::geometry::dist(a, b);
                    for (&s, &w) in gx.iter().zip(&gw) {
                        outflow.push(NPoint {
                            qp: qpoint(mesh, c, lerp(a, b, s), w * len)?,
                            n: face.first.normal,
                        });
                    }
                }
            }
            Ok(CellData {
                dofs: cell_dofs,
                n_vf,
                n_p,
                n_vs,
                fluid: fluid_pts,
                solid: solid_pts,
                interface,
                outflow,
            })
        })
        .collect()
}

fn build_pattern(dofs: &SystemDofMap, cells: &[CellData], ghost: &GhostForms) -> CsrMatrix {
    let n = dofs.num_dofs();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for cd in cells {
        for &r in &cd.dofs {
            rows[r].extend_from_slice(&cd.dofs);
        }
    }
    let mut couple = |faces: &[ghost::FaceMatrix], row_field: Field, col_field: Field| {
        for fm in faces {
            let ncomp = col_field.components();
            let cols: Vec<usize> = fm
                .nodes
                .iter()
                .flat_map(|&nd| {
                    let d = dofs
                        .node_dof(col_field, nd)
                        .expect("ghost node without DoF");
                    (0..ncomp).map(move |c| d + c)
                })
                .collect();
            for &nd in &fm.nodes {
                let d = dofs
                    .node_dof(row_field, nd)
                    .expect("ghost node without DoF");
                for c in 0..ncomp {
                    rows[d + c].extend_from_slice(&cols);
                }
            }
        }
    };
    couple(&ghost.fluid_q2, Field::FluidVelocity, Field::FluidVelocity);
    couple(&ghost.fluid_q1, Field::Pressure, Field::Pressure);
    couple(&ghost.solid_q1, Field::Displacement, Field::SolidVelocity);
    couple(&ghost.solid_q1, Field::Displacement, Field::Displacement);
    // keep the pattern structurally symmetric
    couple(&ghost.solid_q1, Field::SolidVelocity, Field::Displacement);
    CsrMatrix::from_pattern(n, rows)
}

/// Free function form of [`System::residual`].
pub fn assemble_residual(
    system: &System,
    state: &SystemState,
    prev: &SystemState,
) -> Result<Vec<f64>, AssemblyError> {
    system.residual(state, prev)
}

/// Free function form of [`System::jacobian`].
pub fn assemble_jacobian(system: &System, state: &SystemState) -> Result<CsrMatrix, AssemblyError> {
    system.jacobian(state)
}

/// Free function form of [`System::ghost_penalty`].
pub fn assemble_ghost_penalties(system: &System, field: Field, coefficients: &[f64]) -> Vec<f64> {
    system.ghost_penalty(field, coefficients)
}
