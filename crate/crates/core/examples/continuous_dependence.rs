//! Perturbs smooth data by two magnitudes and compares the difference with
//! the Gronwall-type envelope built from the base trajectory.

use hydrostat::config::{GridConfig, Preset, RunConfig};
use hydrostat::runner::{dependence_study, RunOptions};

fn main() -> hydrostat::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.grid = GridConfig {
        nx: 16,
        ny: 16,
        nz: 16,
    };
    cfg.initial.preset = Preset::Smooth;
    cfg.initial.amplitude = 0.5;
    cfg.stepper.t_end = 0.1;
    cfg.diagnostics.every = 0.01;
    cfg.dependence.magnitudes = vec![1e-3, 1e-4];

    let out = std::env::temp_dir().join("hydrostat-dependence");
    let report = dependence_study(&cfg, &RunOptions::new(&out))?;
    for (m, d) in report.magnitudes.iter().zip(&report.final_differences) {
        println!("perturbation {m:e}: final difference {d:.4e}");
    }
    println!("scaling vs linear: {:?}", report.scaling);
    for (m, env) in report.magnitudes.iter().zip(&report.envelopes) {
        let last = env.times.len() - 1;
        println!(
            "perturbation {m:e}: d(t_end) = {:.3e}, envelope = {:.3e}, max d/envelope = {:.3}",
            env.difference[last],
            env.envelope[last],
            env.max_ratio()
        );
    }
    println!("passed: {}", report.passed);
    Ok(())
}
