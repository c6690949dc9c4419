//! Run configuration files, the benchmark run and its summary table.
//!
//! Config files are flat `key = value` lines; `#` starts a comment.
//! Omitted keys keep their defaults.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::postproc::{export_fields, time_average, write_qoi_csv, DragNormal, PostprocError};
use crate::solver::{time_loop, RunConfig, SolverError, Trajectory};

/// Stem of the field snapshot written at the final time.
pub const SNAPSHOT_STEM: &str = "solution";
pub const QOI_FILE: &str = "qoi.csv";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: cannot read `{value}` as a value of `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("`{key}` = {value} violates {bound}")]
    OutOfRange {
        key: String,
        bound: String,
        value: String,
    },
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("writing results: {0}")]
    Output(#[from] PostprocError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub const CONFIG_KEYS: &[&str] = &[
    "level",
    "t_end",
    "dt",
    "w_max",
    "rho_f",
    "rho_s",
    "nu_f",
    "mu_s",
    "lambda_s",
    "gamma_n",
    "gamma_vf",
    "gamma_p",
    "gamma_vs",
    "gamma_u",
    "include_solid_convection",
    "mean_inflow",
    "inflow_ramp",
    "fluid_only",
    "drag_normal",
    "newton_tolerance",
    "newton_max_iterations",
    "newton_max_halvings",
    "out_dir",
    "profile_samples",
];

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = key.trim();
        let value = unquote(value.trim());
        if !CONFIG_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        set_key(&mut cfg, key, value).ok_or_else(|| ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        })?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v)
}

fn set_key(cfg: &mut RunConfig, key: &str, value: &str) -> Option<()> {
    let f = || value.parse::<f64>().ok();
    let u = || value.parse::<usize>().ok();
    let b = || value.parse::<bool>().ok();
    let p = &mut cfg.params;
    match key {
        "level" => cfg.level = u()?,
        "t_end" => cfg.t_end = f()?,
        "dt" => p.dt = f()?,
        "w_max" => p.w_max = f()?,
        "rho_f" => p.rho_f = f()?,
        "rho_s" => p.rho_s = f()?,
        "nu_f" => p.nu_f = f()?,
        "mu_s" => p.mu_s = f()?,
        "lambda_s" => p.lambda_s = f()?,
        "gamma_n" => p.gamma_n = f()?,
        "gamma_vf" => p.gamma_vf = f()?,
        "gamma_p" => p.gamma_p = f()?,
        "gamma_vs" => p.gamma_vs = f()?,
        "gamma_u" => p.gamma_u = f()?,
        "include_solid_convection" => p.include_solid_convection = b()?,
        "mean_inflow" => cfg.inflow.mean_velocity = f()?,
        "inflow_ramp" => cfg.inflow.ramp = b()?,
        "fluid_only" => cfg.fluid_only = b()?,
        "drag_normal" => cfg.drag_normal = value.parse::<DragNormal>().ok()?,
        "newton_tolerance" => cfg.newton.tolerance = f()?,
        "newton_max_iterations" => cfg.newton.max_iterations = u()?,
        "newton_max_halvings" => cfg.newton.max_halvings = u()?,
        "out_dir" => cfg.out_dir = PathBuf::from(value),
        "profile_samples" => cfg.profile_samples = u()?,
        _ => return None,
    }
    Some(())
}

/// Bounds on a complete configuration; also applied after command-line
/// overrides.
pub fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let out = |key: &str, bound: &str, value: String| ConfigError::OutOfRange {
        key: key.to_string(),
        bound: bound.to_string(),
        value,
    };
    cfg.params.validate().map_err(|e| match e {
        crate::assembly::AssemblyError::InvalidParameter { name, bound, value } => {
            out(name, bound, value.to_string())
        }
        other => out("w_max", ">= 1", format!("{} ({other})", cfg.params.w_max)),
    })?;
    if !(cfg.t_end > 0.0 && cfg.t_end.is_finite()) {
        return Err(out("t_end", "> 0", cfg.t_end.to_string()));
    }
    cfg.num_steps().map_err(|_| {
        out(
            "t_end",
            "a whole multiple of dt",
            format!("{} (dt = {})", cfg.t_end, cfg.params.dt),
        )
    })?;
    let v = cfg.inflow.mean_velocity;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(out("mean_inflow", ">= 0", v.to_string()));
    }
    let tol = cfg.newton.tolerance;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(out("newton_tolerance", "> 0", tol.to_string()));
    }
    if cfg.newton.max_iterations == 0 {
        return Err(out("newton_max_iterations", ">= 1", "0".to_string()));
    }
    if cfg.profile_samples < 2 {
        return Err(out(
            "profile_samples",
            ">= 2",
            cfg.profile_samples.to_string(),
        ));
    }
    Ok(())
}

/// One line of the summary table: norms at the final time, forces and
/// the outflow velocity averaged over the run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub level: usize,
    pub w_max: f64,
    pub dofs: usize,
    pub grad_vf_l2: f64,
    pub p_l2: f64,
    pub grad_u_l2: f64,
    pub drag: f64,
    pub lift: f64,
    pub vx_out: f64,
    pub vy_out: f64,
}

impl BenchmarkRow {
    pub fn from_trajectory(level: usize, trajectory: &Trajectory) -> Self {
        let last = trajectory.qoi.last().copied().unwrap_or_default();
        let avg = time_average(&trajectory.qoi);
        Self {
            level,
            w_max: trajectory.system.params.w_max,
            dofs: trajectory.system.num_dofs(),
            grad_vf_l2: last.grad_vf_l2,
            p_l2: last.p_l2,
            grad_u_l2: last.grad_u_l2,
            drag: avg.drag,
            lift: avg.lift,
            vx_out: avg.vx_out,
            vy_out: avg.vy_out,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    pub const HEADER: &'static str =
        "| w_max | level | dofs | ‖∇v_f‖ (T) | ‖p‖ (T) | ‖∇u‖ (T) | F_D | F_L | v_x(2.2, 0.205) | v_y(2.2, 0.205) |";
    pub const RULE: &'static str = "|---|---|---|---|---|---|---|---|---|---|";

    /// Rows grouped by `w_max` (largest first), then by level.
    pub fn sorted(&self) -> Vec<&BenchmarkRow> {
        let mut rows: Vec<&BenchmarkRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.w_max.total_cmp(&a.w_max).then(a.level.cmp(&b.level)));
        rows
    }
}

impl fmt::Display for BenchmarkRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "| {} | {} | {} | {:.4} | {:.4e} | {:.4e} | {:.4} | {:.4e} | {:.6} | {:.4e} |",
            self.w_max,
            self.level,
            self.dofs,
            self.grad_vf_l2,
            self.p_l2,
            self.grad_u_l2,
            self.drag,
            self.lift,
            self.vx_out,
            self.vy_out
        )
    }
}

impl fmt::Display for BenchmarkTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", Self::HEADER)?;
        writeln!(f, "{}", Self::RULE)?;
        for row in self.sorted() {
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

/// What a finished run produced.
#[derive(Debug)]
pub struct BenchmarkRun {
    pub trajectory: Trajectory,
    pub row: BenchmarkRow,
    pub files: Vec<PathBuf>,
}

/// Runs the time loop and writes `qoi.csv`, the profile CSVs and a VTK
/// snapshot of the final state into `config.out_dir`.
pub fn run_benchmark(config: &RunConfig) -> Result<BenchmarkRun, DriverError> {
    validate(config)?;
    let trajectory = time_loop(config)?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|source| DriverError::Io {
        path: dir.clone(),
        source,
    })?;
    let qoi_path = dir.join(QOI_FILE);
    write_qoi_csv(&qoi_path, &trajectory.qoi)?;
    let mut files = vec![qoi_path];
    files.extend(export_fields(
        &trajectory.system,
        trajectory.final_state(),
        dir,
        SNAPSHOT_STEM,
        config.profile_samples,
    )?);
    let row = BenchmarkRow::from_trajectory(config.level, &trajectory);
    Ok(BenchmarkRun {
        trajectory,
        row,
        files,
    })
}
