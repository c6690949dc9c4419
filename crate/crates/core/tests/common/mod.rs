#![allow(dead_code)]

use cutfsi::assembly::{Inflow, Parameters, System, SystemState};
use cutfsi::cutgeom::LevelSet;
use cutfsi::fem::Field;
use cutfsi::mesh::{build_rect_mesh, Hole};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// A 4x4 patch of the channel around the hole, small enough for dense
/// checks, with inflow on the left and outflow on the right.
pub fn small_system(params: Parameters) -> System {
    let xs = [0.0, 0.1, 0.2, 0.3, 0.4];
    let ys = [0.0, 0.1, 0.2, 0.3, 0.41];
    let mesh = build_rect_mesh(&xs, &ys, Some(Hole::benchmark())).unwrap();
    System::new(
        mesh,
        Some(LevelSet::circle([0.2, 0.2], 0.05)),
        params,
        Inflow::default(),
    )
    .unwrap()
}

/// Random state with realistic magnitudes per field; constrained entries
/// carry their Dirichlet values at `t`.
pub fn random_state(system: &System, seed: u64, t: f64, displacement: f64) -> SystemState {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut s = SystemState::zeros(system.num_dofs(), t);
    for (field, scale) in [
        (Field::FluidVelocity, 0.3),
        (Field::Pressure, 20.0),
        (Field::SolidVelocity, 0.01),
        (Field::Displacement, displacement),
    ] {
        for d in system.dofs.block(field) {
            s.values[d] = scale * rng.random_range(-1.0..1.0);
        }
    }
    system.bc.apply(&mut s.values, t);
    s
}
