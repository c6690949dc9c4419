//! Newton's method, sparse linear solves, the backward Euler time loop
//! and condition estimates.

mod condition;
mod linear;
mod newton;

use std::path::PathBuf;

use thiserror::Error;

use crate::assembly::{AssemblyError, Inflow, Parameters, System, SystemState};
use crate::cutgeom::LevelSet;
use crate::mesh::{build_channel_mesh, Hole};
use crate::postproc::{DragNormal, PostprocError, QoiRecord};

pub use condition::{cut_poisson_matrix, estimate_condition, DENSE_LIMIT};
pub use linear::{linear_solve, LinearSolution, SparseLu, LINEAR_TOLERANCE};
pub use newton::{newton_solve, NewtonOptions, NewtonReport};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Postproc(#[from] PostprocError),
    #[error("singular matrix (zero pivot at unknown {index:?})")]
    Singular { index: Option<usize> },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("solve requested before factorization")]
    NotFactorized,
    #[error("Newton did not converge after {iterations} residual evaluations (|R| = {norm:e})")]
    NotConverged {
        iterations: usize,
        norm: f64,
        report: Box<NewtonReport>,
    },
    #[error("time step {step} (t = {t}): {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<SolverError>,
    },
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
}

/// Everything a benchmark run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub level: usize,
    /// Final time `T`; the step `k` is `params.dt`.
    pub t_end: f64,
    pub params: Parameters,
    pub inflow: Inflow,
    /// Channel without disc and hole.
    pub fluid_only: bool,
    pub drag_normal: DragNormal,
    pub newton: NewtonOptions,
    pub out_dir: PathBuf,
    /// Samples per exported profile line.
    pub profile_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            level: 0,
            t_end: 25.0,
            params: Parameters::default(),
            inflow: Inflow::default(),
            fluid_only: false,
            drag_normal: DragNormal::default(),
            newton: NewtonOptions::default(),
            out_dir: PathBuf::from("output"),
            profile_samples: 101,
        }
    }
}

pub const DISC_CENTER: [f64; 2] = [0.2, 0.2];
pub const DISC_RADIUS: f64 = 0.05;

impl RunConfig {
    /// Number of steps `N = T / k`; `T / k` must be integral.
    pub fn num_steps(&self) -> Result<usize, SolverError> {
        let (t, k) = (self.t_end, self.params.dt);
        if !(t > 0.0 && k > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "need T > 0 and k > 0, got T = {t}, k = {k}"
            )));
        }
        let n = (t / k).round();
        if (n * k - t).abs() > 1e-9 * t || n < 1.0 {
            return Err(SolverError::InvalidConfig(format!(
                "T / k = {} is not a whole number of steps",
                t / k
            )));
        }
        Ok(n as usize)
    }

    /// Mesh, interface and spaces of the run. The geometry is built once
    /// and stays fixed for all steps.
    pub fn build_system(&self) -> Result<System, SolverError> {
        let (hole, ls) = if self.fluid_only {
            (None, None)
        } else {
            (
                Some(Hole::benchmark()),
                Some(LevelSet::circle(DISC_CENTER, DISC_RADIUS)),
            )
        };
        let mesh =
            build_channel_mesh(self.level, hole).map_err(|e| SolverError::Setup(e.to_string()))?;
        Ok(System::new(mesh, ls, self.params.clone(), self.inflow)?)
    }
}

/// Result of a time loop.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: System,
    /// Initial state followed by one state per step.
    pub states: Vec<SystemState>,
    /// Quantities of interest of every state, the initial one included,
    /// so `qoi[n]` belongs to `t_n = n k`.
    pub qoi: Vec<QoiRecord>,
    pub reports: Vec<NewtonReport>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SystemState {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Backward Euler from the homogeneous state at `t = 0` to `T`. Each step
/// starts Newton from the previous solution.
pub fn time_loop(config: &RunConfig) -> Result<Trajectory, SolverError> {
    let system = config.build_system()?;
    run_steps(system, config)
}

/// [`time_loop`] on an already built system.
pub fn run_steps(system: System, config: &RunConfig) -> Result<Trajectory, SolverError> {
    let n = config.num_steps()?;
    let k = system.params.dt;
    let mut lu = SparseLu::new();
    let initial = system.initial_state(0.0);
    let mut qoi = Vec::with_capacity(n + 1);
    qoi.push(QoiRecord::compute(&system, &initial, config.drag_normal)?);
    let mut states = vec![initial];
    let mut reports = Vec::with_capacity(n);
    for step in 1..=n {
        let t = step as f64 * k;
        let prev = states.last().expect("initial state present");
        let guess = SystemState {
            values: prev.values.clone(),
            t,
        };
        let wrap = |e: SolverError| SolverError::Step {
            step,
            t,
            source: Box::new(e),
        };
        let (state, report) =
            newton_solve(&system, guess, prev, &config.newton, &mut lu).map_err(wrap)?;
        log::info!(
            "step {step}/{n}, t = {t}: {} residual evaluations, |R| = {:e}",
            report.iterations,
            report.final_norm()
        );
        qoi.push(
            QoiRecord::compute(&system, &state, config.drag_normal).map_err(|e| wrap(e.into()))?,
        );
        reports.push(report);
        states.push(state);
    }
    Ok(Trajectory {
        system,
        states,
        qoi,
        reports,
    })
}

/// Thread setup. `0` means deterministic single-threaded execution of both
/// assembly and factorization.
pub fn configure_threads(threads: usize) {
    let (par, n) = if threads == 0 {
        (faer::Par::Seq, 1)
    } else {
        (faer::Par::rayon(threads), threads)
    };
    faer::set_global_parallelism(par);
    if rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .is_err()
    {
        log::debug!("rayon pool already initialized; keeping it");
    }
}
