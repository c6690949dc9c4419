//! Quantities of interest, line profiles and field export.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::assembly::{stress_fluid, System, SystemState, Tensor2};
use crate::cutgeom::Subdomain;
use crate::fem::{eval_basis, Field};
use crate::geometry::{norm, Point};
use crate::vtk::{write_quads, PointData};

/// Outflow sample point, centered on the outlet.
pub const OUTFLOW_POINT: Point = [2.2, 0.205];

/// Abscissae of the exported vertical profiles.
pub const PROFILE_LINES: [f64; 3] = [0.15, 0.25, 2.2];

const SNAP: f64 = 1e-12;
const REFERENCE_SLACK: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PostprocError {
    #[error("point ({x}, {y}) is not inside any {sub:?} cell")]
    PointNotFound { x: f64, y: f64, sub: Subdomain },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> PostprocError + '_ {
    move |source| PostprocError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Orientation of the normal used in the force integral. Flipping it
/// negates both force components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DragNormal {
    #[default]
    TowardFluid,
    TowardSolid,
}

impl FromStr for DragNormal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "toward_fluid" => Ok(Self::TowardFluid),
            "toward_solid" => Ok(Self::TowardSolid),
            other => Err(format!(
                "expected toward_fluid or toward_solid, got {other:?}"
            )),
        }
    }
}

impl fmt::Display for DragNormal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TowardFluid => "toward_fluid",
            Self::TowardSolid => "toward_solid",
        })
    }
}

/// Value and gradient of a field inside one cell.
fn eval_field(
    system: &System,
    state: &SystemState,
    field: Field,
    cell: usize,
    x: Point,
) -> Option<([f64; 2], Tensor2)> {
    let r = system.mesh.cell_map(cell).inverse(x)?;
    let basis = eval_basis(&system.mesh, cell, r, field.element());
    let dofs = system.dofs.cell_dofs(&system.mesh, field, cell);
    let ncomp = field.components();
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for (a, (phi, g)) in basis.values.iter().zip(&basis.gradients).enumerate() {
        for comp in 0..ncomp {
            let c = state.values[dofs[a * ncomp + comp]];
            val[comp] += c * phi;
            grad[comp][0] += c * g[0];
            grad[comp][1] += c * g[1];
        }
    }
    Some((val, grad))
}

fn frobenius2(g: &Tensor2) -> f64 {
    g.iter().flatten().map(|v| v * v).sum()
}

/// `(|grad v_f|, |p|, |grad u|)` in L2 over the physical subdomains.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct L2Norms {
    pub grad_vf: f64,
    pub p: f64,
    pub grad_u: f64,
}

pub fn l2_norms(system: &System, state: &SystemState) -> L2Norms {
    let geom = &system.geom;
    let (mut gv, mut pp, mut gu) = (0.0, 0.0, 0.0);
    for &c in geom.members(Subdomain::Fluid) {
        let rule = geom.rule(c, Subdomain::Fluid);
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            if let Some((_, g)) = eval_field(system, state, Field::FluidVelocity, c, *x) {
                gv += w * frobenius2(&g);
            }
            if let Some((p, _)) = eval_field(system, state, Field::Pressure, c, *x) {
                pp += w * p[0] * p[0];
            }
        }
    }
    for &c in geom.members(Subdomain::Solid) {
        let rule = geom.rule(c, Subdomain::Solid);
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            if let Some((_, g)) = eval_field(system, state, Field::Displacement, c, *x) {
                gu += w * frobenius2(&g);
            }
        }
    }
    L2Norms {
        grad_vf: gv.sqrt(),
        p: pp.sqrt(),
        grad_u: gu.sqrt(),
    }
}

/// `(F_D, F_L)`: the line integral of `sigma_f n` over the interface, with
/// fluid-side values.
pub fn drag_lift(system: &System, state: &SystemState, normal: DragNormal) -> [f64; 2] {
    let prm = &system.params;
    let sign = match normal {
        DragNormal::TowardFluid => 1.0,
        DragNormal::TowardSolid => -1.0,
    };
    let mut f = [0.0; 2];
    for c in system.geom.cut_cells() {
        let rule = &system.geom.cells[c].interface;
        for ((x, w), n) in rule.points.iter().zip(&rule.weights).zip(&rule.normals) {
            let (Some((_, gv)), Some((p, _))) = (
                eval_field(system, state, Field::FluidVelocity, c, *x),
                eval_field(system, state, Field::Pressure, c, *x),
            ) else {
                continue;
            };
            let s = stress_fluid(&gv, p[0], prm.rho_f, prm.nu_f);
            for i in 0..2 {
                f[i] += sign * w * (s[i][0] * n[0] + s[i][1] * n[1]);
            }
        }
    }
    f
}

/// `int_Gamma |v_f - v_s|^2`.
pub fn interface_jump(system: &System, state: &SystemState) -> f64 {
    let mut total = 0.0;
    for c in system.geom.cut_cells() {
        let rule = &system.geom.cells[c].interface;
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let (Some((vf, _)), Some((vs, _))) = (
                eval_field(system, state, Field::FluidVelocity, c, *x),
                eval_field(system, state, Field::SolidVelocity, c, *x),
            ) else {
                continue;
            };
            total += w * ((vf[0] - vs[0]).powi(2) + (vf[1] - vs[1]).powi(2));
        }
    }
    total
}

/// First cell (in index order) carrying `sub` whose reference square
/// contains `x`, after pulling `x` inside the mesh bounding box.
fn locate(system: &System, x: Point, sub: Subdomain) -> Result<(usize, Point), PostprocError> {
    let (lo, hi) = system.mesh.bounding_box();
    let p = [
        x[0].clamp(lo[0] + SNAP, hi[0] - SNAP),
        x[1].clamp(lo[1] + SNAP, hi[1] - SNAP),
    ];
    for &c in system.geom.members(sub) {
        let v = system.mesh.cell_vertices(c);
        let (mut cl, mut ch) = (v[0], v[0]);
        for q in &v[1..] {
            cl = [cl[0].min(q[0]), cl[1].min(q[1])];
            ch = [ch[0].max(q[0]), ch[1].max(q[1])];
        }
        if p[0] < cl[0] - SNAP || p[0] > ch[0] + SNAP || p[1] < cl[1] - SNAP || p[1] > ch[1] + SNAP
        {
            continue;
        }
        if let Some(r) = system.mesh.cell_map(c).inverse(p) {
            let inside = r
                .iter()
                .all(|&t| (-REFERENCE_SLACK..=1.0 + REFERENCE_SLACK).contains(&t));
            if inside {
                return Ok((c, p));
            }
        }
    }
    Err(PostprocError::PointNotFound {
        x: x[0],
        y: x[1],
        sub,
    })
}

/// Fluid velocity at `x`; points on the boundary are pulled inside by
/// 1e-12.
pub fn point_velocity(
    system: &System,
    state: &SystemState,
    x: Point,
) -> Result<[f64; 2], PostprocError> {
    let (c, p) = locate(system, x, Subdomain::Fluid)?;
    let (v, _) =
        eval_field(system, state, Field::FluidVelocity, c, p).expect("located point inverts");
    Ok(v)
}

fn point_pressure(system: &System, state: &SystemState, x: Point) -> Result<f64, PostprocError> {
    let (c, p) = locate(system, x, Subdomain::Fluid)?;
    Ok(eval_field(system, state, Field::Pressure, c, p)
        .expect("located point inverts")
        .0[0])
}

fn point_solid_velocity(
    system: &System,
    state: &SystemState,
    x: Point,
) -> Result<[f64; 2], PostprocError> {
    let (c, p) = locate(system, x, Subdomain::Solid)?;
    Ok(eval_field(system, state, Field::SolidVelocity, c, p)
        .expect("located point inverts")
        .0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSample {
    pub y: f64,
    pub speed: f64,
    /// Absent in the solid.
    pub pressure: Option<f64>,
    pub region: Subdomain,
}

/// `n` equispaced samples along the vertical line `x = x0` across the
/// channel. Fluid samples report `|v_f|` and `p`, solid samples `|v_s|`.
/// Samples in the unmeshed part of the hole are dropped.
pub fn line_profile(
    system: &System,
    state: &SystemState,
    x0: f64,
    n: usize,
) -> Result<Vec<ProfileSample>, PostprocError> {
    assert!(n >= 2, "a profile needs at least two samples");
    let (lo, hi) = system.mesh.bounding_box();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let y = lo[1] + (hi[1] - lo[1]) * i as f64 / (n - 1) as f64;
        let x = [x0, y];
        let region = system.geom.subdomain_at(x, system.h);
        let in_hole = system
            .mesh
            .hole
            .is_some_and(|h| norm([x[0] - h.center[0], x[1] - h.center[1]]) < h.radius);
        let sample = match profile_sample(system, state, x, region) {
            Err(PostprocError::PointNotFound { .. }) if in_hole => continue,
            other => other?,
        };
        out.push(sample);
    }
    Ok(out)
}

fn profile_sample(
    system: &System,
    state: &SystemState,
    x: Point,
    region: Subdomain,
) -> Result<ProfileSample, PostprocError> {
    let y = x[1];
    Ok(match region {
        Subdomain::Fluid => ProfileSample {
            y,
            speed: norm(point_velocity(system, state, x)?),
            pressure: Some(point_pressure(system, state, x)?),
            region,
        },
        Subdomain::Solid => ProfileSample {
            y,
            speed: norm(point_solid_velocity(system, state, x)?),
            pressure: None,
            region,
        },
    })
}

pub const PROFILE_HEADER: &str = "y,speed,pressure,region";

fn region_name(s: Subdomain) -> &'static str {
    match s {
        Subdomain::Fluid => "fluid",
        Subdomain::Solid => "solid",
    }
}

pub fn write_profile_csv(path: &Path, samples: &[ProfileSample]) -> Result<(), PostprocError> {
    let write = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{PROFILE_HEADER}")?;
        for s in samples {
            let p = s.pressure.map(|p| p.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", s.y, s.speed, p, region_name(s.region))?;
        }
        w.flush()
    };
    write().map_err(io_error(path))
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64, PostprocError> {
    field.parse().map_err(|_| PostprocError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("not a number: {field:?}"),
    })
}

fn read_rows(
    path: &Path,
    header: &str,
    ncols: usize,
) -> Result<Vec<(usize, Vec<String>)>, PostprocError> {
    let file = File::open(path).map_err(io_error(path))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_error(path))?;
        let bad = |message: String| PostprocError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        if i == 0 {
            if line != header {
                return Err(bad(format!("expected header {header:?}")));
            }
            continue;
        }
        let cols: Vec<String> = line.split(',').map(str::to_owned).collect();
        if cols.len() != ncols {
            return Err(bad(format!(
                "expected {ncols} columns, found {}",
                cols.len()
            )));
        }
        rows.push((i + 1, cols));
    }
    Ok(rows)
}

pub fn read_profile_csv(path: &Path) -> Result<Vec<ProfileSample>, PostprocError> {
    read_rows(path, PROFILE_HEADER, 4)?
        .into_iter()
        .map(|(line, c)| {
            let region = match c[3].as_str() {
                "fluid" => Subdomain::Fluid,
                "solid" => Subdomain::Solid,
                other => {
                    return Err(PostprocError::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("unknown region {other:?}"),
                    })
                }
            };
            Ok(ProfileSample {
                y: parse_f64(path, line, &c[0])?,
                speed: parse_f64(path, line, &c[1])?,
                pressure: if c[2].is_empty() {
                    None
                } else {
                    Some(parse_f64(path, line, &c[2])?)
                },
                region,
            })
        })
        .collect()
}

/// Per-step quantities of interest.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QoiRecord {
    pub t: f64,
    pub grad_vf_l2: f64,
    pub p_l2: f64,
    pub grad_u_l2: f64,
    pub drag: f64,
    pub lift: f64,
    pub vx_out: f64,
    pub vy_out: f64,
}

pub const QOI_HEADER: &str = "t,grad_vf_l2,p_l2,grad_u_l2,drag,lift,vx_out,vy_out";

impl QoiRecord {
    pub fn compute(
        system: &System,
        state: &SystemState,
        normal: DragNormal,
    ) -> Result<Self, PostprocError> {
        let norms = l2_norms(system, state);
        let [drag, lift] = drag_lift(system, state, normal);
        let [vx_out, vy_out] = point_velocity(system, state, OUTFLOW_POINT)?;
        Ok(Self {
            t: state.t,
            grad_vf_l2: norms.grad_vf,
            p_l2: norms.p,
            grad_u_l2: norms.grad_u,
            drag,
            lift,
            vx_out,
            vy_out,
        })
    }

    fn columns(&self) -> [f64; 8] {
        [
            self.t,
            self.grad_vf_l2,
            self.p_l2,
            self.grad_u_l2,
            self.drag,
            self.lift,
            self.vx_out,
            self.vy_out,
        ]
    }
}

/// Arithmetic means over the records (the `t` entry is the mean time).
/// A trajectory's records sample `t_0 = 0, ..., t_N = T`, so the mean
/// runs over `N + 1` values.
pub fn time_average(records: &[QoiRecord]) -> QoiRecord {
    let n = records.len().max(1) as f64;
    let mut sum = [0.0; 8];
    for r in records {
        for (s, v) in sum.iter_mut().zip(r.columns()) {
            *s += v;
        }
    }
    let m = sum.map(|s| s / n);
    QoiRecord {
        t: m[0],
        grad_vf_l2: m[1],
        p_l2: m[2],
        grad_u_l2: m[3],
        drag: m[4],
        lift: m[5],
        vx_out: m[6],
        vy_out: m[7],
    }
}

pub fn write_qoi_csv(path: &Path, records: &[QoiRecord]) -> Result<(), PostprocError> {
    let write = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{QOI_HEADER}")?;
        for r in records {
            let cols: Vec<String> = r.columns().iter().map(f64::to_string).collect();
            writeln!(w, "{}", cols.join(","))?;
        }
        w.flush()
    };
    write().map_err(io_error(path))
}

pub fn read_qoi_csv(path: &Path) -> Result<Vec<QoiRecord>, PostprocError> {
    read_rows(path, QOI_HEADER, 8)?
        .into_iter()
        .map(|(line, c)| {
            let mut v = [0.0; 8];
            for (slot, s) in v.iter_mut().zip(&c) {
                *slot = parse_f64(path, line, s)?;
            }
            Ok(QoiRecord {
                t: v[0],
                grad_vf_l2: v[1],
                p_l2: v[2],
                grad_u_l2: v[3],
                drag: v[4],
                lift: v[5],
                vx_out: v[6],
                vy_out: v[7],
            })
        })
        .collect()
}

/// File name of the profile along `x = x0`.
pub fn profile_file_name(x0: f64) -> String {
    format!("profile_{x0}.csv")
}

/// Writes `<stem>.vtk` with vertex values of all fields (zero where a
/// field is inactive) and the level set, plus the profile CSVs along
/// [`PROFILE_LINES`] with `samples` points each.
pub fn export_fields(
    system: &System,
    state: &SystemState,
    dir: &Path,
    stem: &str,
    samples: usize,
) -> Result<Vec<PathBuf>, PostprocError> {
    let mesh = &system.mesh;
    let nv = mesh.vertices.len();
    let vector = |field: Field| -> Vec<Point> {
        (0..nv)
            .map(|n| match system.dofs.node_dof(field, n) {
                Some(d) => [state.values[d], state.values[d + 1]],
                None => [0.0, 0.0],
            })
            .collect()
    };
    let vf = vector(Field::FluidVelocity);
    let vs = vector(Field::SolidVelocity);
    let u = vector(Field::Displacement);
    let p: Vec<f64> = (0..nv)
        .map(|n| {
            system
                .dofs
                .node_dof(Field::Pressure, n)
                .map_or(0.0, |d| state.values[d])
        })
        .collect();
    let phi: Vec<f64> = match system.geom.level_set {
        Some(ls) => mesh.vertices.iter().map(|&x| ls.value(x)).collect(),
        None => vec![1.0; nv],
    };
    let speed: Vec<f64> = vf.iter().map(|v| norm(*v)).collect();
    let vtk = dir.join(format!("{stem}.vtk"));
    let write = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(&vtk)?);
        write_quads(
            &mut w,
            &format!("fields at t = {}", state.t),
            &mesh.vertices,
            &mesh.cells,
            &[
                ("fluid_velocity", PointData::Vectors(&vf)),
                ("fluid_speed", PointData::Scalars(&speed)),
                ("pressure", PointData::Scalars(&p)),
                ("solid_velocity", PointData::Vectors(&vs)),
                ("displacement", PointData::Vectors(&u)),
                ("level_set", PointData::Scalars(&phi)),
            ],
        )?;
        w.flush()
    };
    write().map_err(io_error(&vtk))?;
    let mut written = vec![vtk];
    for x0 in PROFILE_LINES {
        let path = dir.join(profile_file_name(x0));
        write_profile_csv(&path, &line_profile(system, state, x0, samples)?)?;
        written.push(path);
    }
    Ok(written)
}
