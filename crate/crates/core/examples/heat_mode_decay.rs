//! Pure vertical diffusion of `T = sin(pi z / h)` against its exact decay.

use std::f64::consts::PI;

use hydrostat::spectral::{Grid3, PhysicalField3D};
use hydrostat::state::{make_state, Params};
use hydrostat::stepper::{integrate, Scheme, StepperConfig};

fn main() -> hydrostat::Result<()> {
    let grid = Grid3::new(4, 4, 16, 1.0)?;
    let params = Params::default();
    let zero = PhysicalField3D::zeros(grid);
    let t0 = PhysicalField3D::from_fn(grid, |_, _, z| (PI * z).sin());
    let initial = make_state([&zero, &zero], &t0, params)?;

    for scheme in [Scheme::ImexEuler, Scheme::ImexRk2] {
        for dt in [1e-2, 1e-3, 1e-4] {
            let cfg = StepperConfig::fixed(scheme, dt, 0.1);
            let s = integrate(initial.clone(), &cfg, None, &mut [])?.final_state;
            let decay = (-PI * PI * s.time / params.r3).exp();
            let exact = PhysicalField3D::from_fn(grid, |_, _, z| decay * (PI * z).sin());
            let err = s
                .temperature
                .inverse()
                .zip_map(&exact, |a, b| a - b)
                .max_abs();
            println!("{scheme:?} dt = {dt:e}: max error {err:.3e}");
        }
    }
    Ok(())
}
