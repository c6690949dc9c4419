//! Damped Newton iteration on one time step.

use crate::assembly::{System, SystemState};
use crate::linalg::norm2;

use super::linear::SparseLu;
use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Absolute tolerance on the free-DoF residual 2-norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 30,
            max_halvings: 12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonReport {
    /// Residual evaluations on accepted iterates, the initial guess
    /// included.
    pub iterations: usize,
    pub residual_norms: Vec<f64>,
    /// Step length of every accepted update.
    pub step_lengths: Vec<f64>,
    /// Updates taken at full length after the line search failed.
    pub fallback_steps: Vec<usize>,
    pub converged: bool,
}

impl NewtonReport {
    pub fn final_norm(&self) -> f64 {
        self.residual_norms.last().copied().unwrap_or(f64::NAN)
    }
}

/// Solves `R(U; prev) = 0` starting from `initial`, which is first made
/// to satisfy the Dirichlet values of its time. Constrained rows of the
/// residual vanish, so its 2-norm is the norm over free DoFs.
pub fn newton_solve(
    system: &System,
    initial: SystemState,
    prev: &SystemState,
    options: &NewtonOptions,
    lu: &mut SparseLu,
) -> Result<(SystemState, NewtonReport), SolverError> {
    let mut u = initial;
    system.bc.apply(&mut u.values, u.t);
    let mut report = NewtonReport::default();
    let mut r = system.residual(&u, prev)?;
    let mut norm = norm2(&r);
    report.residual_norms.push(norm);
    report.iterations = 1;
    loop {
        if norm < options.tolerance {
            report.converged = true;
            return Ok((u, report));
        }
        if report.step_lengths.len() == options.max_iterations {
            return Err(SolverError::NotConverged {
                iterations: report.iterations,
                norm,
                report: Box::new(report),
            });
        }
        let jac = system.jacobian(&u)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = lu.solve(&jac, &rhs)?.x;

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let trial = step(&u, &delta, alpha);
            let rt = system.residual(&trial, prev)?;
            let nt = norm2(&rt);
            if nt < norm {
                accepted = Some((trial, rt, nt));
                break;
            }
            alpha *= 0.5;
        }
        let (next, rn, nn) = match accepted {
            Some(a) => a,
            None => {
                alpha = 1.0;
                log::warn!(
                    "line search failed at Newton update {} (t = {}); taking the full step",
                    report.step_lengths.len() + 1,
                    u.t
                );
                report.fallback_steps.push(report.step_lengths.len());
                let trial = step(&u, &delta, 1.0);
                let rt = system.residual(&trial, prev)?;
                let nt = norm2(&rt);
                (trial, rt, nt)
            }
        };
        if !nn.is_finite() {
            return Err(SolverError::NotConverged {
                iterations: report.iterations,
                norm: nn,
                report: Box::new(report),
            });
        }
        u = next;
        r = rn;
        norm = nn;
        report.step_lengths.push(alpha);
        report.residual_norms.push(norm);
        report.iterations += 1;
        log::debug!(
            "t = {}: Newton update {} with alpha {alpha}, |R| = {norm:e}",
            u.t,
            report.step_lengths.len()
        );
    }
}

fn step(u: &SystemState, delta: &[f64], alpha: f64) -> SystemState {
    SystemState {
        values: u
            .values
            .iter()
            .zip(delta)
            .map(|(u, d)| u + alpha * d)
            .collect(),
        t: u.t,
    }
}
