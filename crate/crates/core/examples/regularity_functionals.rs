//! Time series of the regularity functionals X, Y and Z = log X with their
//! largest contributions.

use hydrostat::config::smooth_fields;
use hydrostat::diagnostics::{regularity_functionals, X_TERM_NAMES};
use hydrostat::spectral::Grid3;
use hydrostat::state::{make_state, Params};
use hydrostat::stepper::{integrate, Callback, Scheme, StepperConfig, Trigger};

fn main() -> hydrostat::Result<()> {
    let grid = Grid3::cube(16, 1.0)?;
    let params = Params {
        r2: 1.0,
        r3: 2.0,
        ..Params::default()
    };
    let [v1, v2, t] = smooth_fields(grid, 2, 0.5);
    let initial = make_state([&v1, &v2], &t, params)?;
    println!("C_R = {}", params.c_r());

    let mut print = |s: &hydrostat::state::State| -> hydrostat::Result<()> {
        let r = regularity_functionals(s, s.time);
        let (k, top) =
            r.x_terms.iter().enumerate().fold(
                (0, 0.0),
                |best, (i, v)| if *v > best.1 { (i, *v) } else { best },
            );
        println!(
            "t = {:.2}: X = {:.4e}, Y = {:.4e}, Z = {:.4}, largest X term {} = {:.3e}",
            s.time, r.x, r.y, r.z, X_TERM_NAMES[k], top
        );
        Ok(())
    };
    let cfg = StepperConfig::fixed(Scheme::ImexRk2, 1e-3, 0.1);
    integrate(
        initial,
        &cfg,
        None,
        &mut [Callback::new(Trigger::EverySteps(20), &mut print)],
    )?;
    Ok(())
}
