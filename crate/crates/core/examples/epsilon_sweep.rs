//! Runs the same smooth data for decreasing artificial heat diffusivity and
//! reports the distance to the epsilon = 0 solution.

use hydrostat::config::{GridConfig, Preset, RunConfig};
use hydrostat::runner::{epsilon_sweep, RunOptions};

fn main() -> hydrostat::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.grid = GridConfig {
        nx: 16,
        ny: 16,
        nz: 16,
    };
    cfg.initial.preset = Preset::Smooth;
    cfg.initial.amplitude = 0.5;
    cfg.stepper.t_end = 0.2;
    cfg.diagnostics.every = 0.02;
    cfg.sweep.epsilons = vec![1e-1, 1e-2, 1e-3, 0.0];

    let out = std::env::temp_dir().join("hydrostat-epsilon-sweep");
    let report = epsilon_sweep(&cfg, &RunOptions::new(&out))?;
    for m in &report.members {
        println!(
            "epsilon {:>6e}: |(v, T) - (v0, T0)| = {:.4e}, sup H2 = {:.4}",
            m.epsilon,
            m.difference.unwrap_or(f64::NAN),
            m.sup_h2.unwrap_or(f64::NAN)
        );
    }
    println!(
        "monotone: {}, H2 spread: {:.2e}",
        report.monotone, report.h2_spread
    );
    println!("artifacts in {}", out.display());
    Ok(())
}
