mod common;

use common::small_system;
use cutfsi::assembly::{Inflow, Parameters};
use cutfsi::linalg::CsrMatrix;
use cutfsi::solver::{
    linear_solve, newton_solve, time_loop, NewtonOptions, RunConfig, SolverError, SparseLu,
};
use faer::linalg::solvers::Solve;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn short_run(t_end: f64) -> RunConfig {
    RunConfig {
        t_end,
        ..RunConfig::default()
    }
}

#[test]
fn sparse_lu_agrees_with_dense_lu() {
    let n = 50;
    let mut rng = StdRng::seed_from_u64(11);
    let mut triplets = Vec::new();
    for i in 0..n {
        triplets.push((i, i, 4.0 + rng.random_range(0.0..1.0)));
        for _ in 0..4 {
            let j = rng.random_range(0..n);
            triplets.push((i, j, rng.random_range(-1.0..1.0)));
        }
    }
    let a = CsrMatrix::from_triplets(n, n, &triplets);
    let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let x = linear_solve(&a, &b).unwrap();

    let dense = faer::Mat::<f64>::from_fn(n, n, |i, j| a.get(i, j));
    let rhs = faer::Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let reference = dense.partial_piv_lu().solve(&rhs);
    for i in 0..n {
        assert!(
            (x[i] - reference[(i, 0)]).abs() < 1e-12 * (1.0 + reference[(i, 0)].abs()),
            "row {i}"
        );
    }
}

#[test]
fn zero_inflow_stays_at_rest() {
    let mut cfg = short_run(2.0);
    cfg.inflow.mean_velocity = 0.0;
    let traj = time_loop(&cfg).unwrap();
    assert_eq!(traj.reports.len(), 2);
    assert_eq!(traj.states.len(), 3);
    assert_eq!(traj.qoi.len(), 3);
    for (n, q) in traj.qoi.iter().enumerate() {
        assert_eq!(q.t, n as f64);
    }
    for r in &traj.reports {
        assert!(r.converged);
        assert_eq!(r.iterations, 1, "the resting state already solves the step");
    }
    assert!(traj.final_state().values.iter().all(|&v| v == 0.0));
}

#[test]
fn first_benchmark_step_converges_without_fallback() {
    let traj = time_loop(&short_run(1.0)).unwrap();
    let report = &traj.reports[0];
    assert!(report.converged);
    assert!(report.fallback_steps.is_empty(), "{report:?}");
    assert!(report.final_norm() < NewtonOptions::default().tolerance);
    assert!(traj.qoi[1].drag > 0.0);
}

#[test]
fn newton_converges_quadratically_on_channel_flow() {
    let cfg = RunConfig {
        t_end: 1.0,
        fluid_only: true,
        inflow: Inflow {
            mean_velocity: 0.2,
            ramp: false,
        },
        ..RunConfig::default()
    };
    let traj = time_loop(&cfg).unwrap();
    let norms = &traj.reports[0].residual_norms;
    assert!(
        traj.reports[0].step_lengths.iter().all(|&a| a == 1.0),
        "{:?}",
        traj.reports[0]
    );
    // each error-dominated update squares the residual up to a moderate constant
    let pairs: Vec<_> = norms
        .windows(2)
        .filter(|w| w[0] < 1e-2 && w[1] > 1e-13)
        .collect();
    assert!(!pairs.is_empty(), "{norms:?}");
    for w in pairs {
        assert!(w[1] < 1e3 * w[0] * w[0], "{norms:?}");
    }
}

#[test]
fn iteration_budget_exhaustion_is_reported() {
    let sys = small_system(Parameters::default());
    let prev = sys.initial_state(0.0);
    let mut guess = sys.initial_state(1.0);
    guess.t = 1.0;
    let options = NewtonOptions {
        tolerance: 1e-300,
        max_iterations: 1,
        ..NewtonOptions::default()
    };
    let err = newton_solve(&sys, guess, &prev, &options, &mut SparseLu::new()).unwrap_err();
    match err {
        SolverError::NotConverged {
            iterations, report, ..
        } => {
            assert_eq!(iterations, 2);
            assert_eq!(report.step_lengths.len(), 1);
            assert!(!report.converged);
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn step_count_must_be_whole() {
    let mut cfg = short_run(2.5);
    assert_eq!(
        cfg.num_steps().unwrap_err().to_string().contains("whole"),
        true
    );
    cfg.t_end = 3.0;
    assert_eq!(cfg.num_steps().unwrap(), 3);
    cfg.params.dt = 0.0;
    assert!(matches!(
        cfg.num_steps(),
        Err(SolverError::InvalidConfig(_))
    ));
}
