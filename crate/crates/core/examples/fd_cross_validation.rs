//! Spectral solver against the independent finite-difference solver, with the
//! disagreement shrinking at second order under FD refinement.

use std::f64::consts::PI;

use hydrostat::oracle_fd::cross_validate;
use hydrostat::spectral::{Grid3, PhysicalField3D};
use hydrostat::state::{make_state, Params};
use hydrostat::stepper::{Scheme, StepperConfig};

fn main() -> hydrostat::Result<()> {
    let params = Params {
        r1: 10.0,
        r2: 10.0,
        r3: 10.0,
        ..Params::default()
    };
    let grid = Grid3::cube(32, 1.0)?;
    let a = 0.5;
    let v1 = PhysicalField3D::from_fn(grid, |x, y, z| {
        a * ((2.0 * PI * y).sin() + 0.5 * (PI * z).cos() * (2.0 * PI * x).cos())
    });
    let v2 = PhysicalField3D::from_fn(grid, |x, y, z| {
        a * (0.5 * (2.0 * PI * x).sin() + 0.5 * (PI * z).cos() * (2.0 * PI * y).sin())
    });
    let t = PhysicalField3D::from_fn(grid, |x, y, z| {
        a * (PI * z).sin() * (1.0 + 0.5 * (2.0 * PI * x).cos() * (2.0 * PI * y).cos())
    });
    let initial = make_state([&v1, &v2], &t, params)?;
    let spectral = StepperConfig::fixed(Scheme::ImexRk2, 1e-4, 0.05);

    let mut previous = None;
    for n in [8, 16, 32] {
        let r = cross_validate(&initial, Grid3::cube(n, 1.0)?, 1e-3, &spectral, None)?;
        let err = r.rel_v.hypot(r.rel_t);
        let ratio = previous.map_or(String::new(), |p: f64| format!(", ratio {:.2}", p / err));
        println!(
            "FD {n}^3: rel L2 v {:.3e}, T {:.3e}, w {:.3e}{ratio}",
            r.rel_v, r.rel_t, r.rel_w
        );
        previous = Some(err);
    }
    Ok(())
}
