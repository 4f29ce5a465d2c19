//! Horizontal shear `v = (sin 2 pi y, 0)`: the nonlinear terms vanish and the
//! Coriolis force is balanced by the surface pressure, so the flow decays at
//! the viscous rate.

use std::f64::consts::PI;

use hydrostat::dynamics::derived_fields;
use hydrostat::spectral::{Grid3, PhysicalField3D};
use hydrostat::state::{make_state, Params};
use hydrostat::stepper::{integrate, Scheme, StepperConfig};

fn main() -> hydrostat::Result<()> {
    let grid = Grid3::cube(16, 1.0)?;
    let params = Params {
        r1: 2.0,
        f0: 1.0,
        ..Params::default()
    };
    let zero = PhysicalField3D::zeros(grid);
    let v1 = PhysicalField3D::from_fn(grid, |_, y, _| (2.0 * PI * y).sin());
    let initial = make_state([&v1, &zero], &zero, params)?;
    let p_s = derived_fields(&initial, None)?.p_s.inverse();
    println!(
        "surface pressure amplitude {:.4} (expected f0 / 2 pi = {:.4})",
        p_s.max_abs(),
        params.f0 / (2.0 * PI)
    );

    let cfg = StepperConfig::fixed(Scheme::ImexRk2, 1e-3, 0.2);
    let s = integrate(initial, &cfg, None, &mut [])?.final_state;
    let decay = (-4.0 * PI * PI * s.time / params.r1).exp();
    let exact = PhysicalField3D::from_fn(grid, |_, y, _| decay * (2.0 * PI * y).sin());
    let err = s.v1.inverse().zip_map(&exact, |a, b| a - b).max_abs();
    println!(
        "t = {}: amplitude {:.6}, exact {decay:.6}, max error {err:.3e}",
        s.time,
        s.v1.inverse().max_abs()
    );
    Ok(())
}
