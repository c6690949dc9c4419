use std::f64::consts::PI;

use cutfsi::cutgeom::{CutGeometry, LevelSet, Subdomain, DEFAULT_ORDER};
use cutfsi::mesh::{build_channel_mesh, Hole, CHANNEL_HEIGHT, CHANNEL_LENGTH};
use cutfsi::solver::{DISC_CENTER, DISC_RADIUS};

fn measures(level: usize) -> (f64, f64, f64, f64) {
    let mesh = build_channel_mesh(level, Some(Hole::benchmark())).unwrap();
    let geom = CutGeometry::new(
        &mesh,
        Some(LevelSet::circle(DISC_CENTER, DISC_RADIUS)),
        DEFAULT_ORDER,
    )
    .unwrap();
    let area = |sub| -> f64 {
        geom.members(sub)
            .iter()
            .map(|&c| geom.rule(c, sub).weights.iter().sum::<f64>())
            .sum()
    };
    let length: f64 = geom
        .cut_cells()
        .map(|c| geom.cells[c].interface.weights.iter().sum::<f64>())
        .sum();
    (
        area(Subdomain::Fluid),
        area(Subdomain::Solid),
        length,
        mesh.total_area(),
    )
}

#[test]
fn subdomains_partition_the_mesh() {
    let (fluid, solid, _, total) = measures(0);
    assert!(
        (fluid + solid - total).abs() < 1e-12 * total,
        "{fluid} + {solid} vs {total}"
    );
}

#[test]
fn interface_and_disc_converge_under_refinement() {
    let circumference = 2.0 * PI * DISC_RADIUS;
    let disc = PI * DISC_RADIUS * DISC_RADIUS;
    let mut length_errors = Vec::new();
    let mut fluid_errors = Vec::new();
    for level in 0..3 {
        let (fluid, _, length, _) = measures(level);
        length_errors.push((length - circumference).abs() / circumference);
        fluid_errors.push((fluid - (CHANNEL_LENGTH * CHANNEL_HEIGHT - disc)).abs());
    }
    assert!(length_errors[0] < 2e-2, "{length_errors:?}");
    for w in length_errors.windows(2).chain(fluid_errors.windows(2)) {
        assert!(w[1] < 0.5 * w[0], "{length_errors:?} {fluid_errors:?}");
    }
}
