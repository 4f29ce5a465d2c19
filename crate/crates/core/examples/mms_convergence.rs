//! Manufactured solution with forcing: spectral convergence in space and
//! second order in time.

use hydrostat::mms::{spatial_convergence, Manufactured};
use hydrostat::state::Params;
use hydrostat::stepper::Scheme;

fn main() -> hydrostat::Result<()> {
    let mms = Manufactured::new(Params::default());
    println!("space (dt = 1e-5, t = 0.002):");
    for p in spatial_convergence(&mms, &[8, 12, 16, 24, 32], Scheme::ImexRk2, 1e-5, 0.002)? {
        println!("  N = {:>2}: max error {:.3e}", p.n, p.max_error);
    }
    println!("time (N = 16, t = 0.1):");
    let mut previous: Option<f64> = None;
    for dt in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
        let e = spatial_convergence(&mms, &[16], Scheme::ImexRk2, dt, 0.1)?[0].max_error;
        let ratio = previous.map_or(String::new(), |p| format!(", ratio {:.2}", p / e));
        println!("  dt = {dt:e}: max error {e:.3e}{ratio}");
        previous = Some(e);
    }
    Ok(())
}
