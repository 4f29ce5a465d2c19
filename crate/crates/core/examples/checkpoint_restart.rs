//! Writes a snapshot mid-run, resumes from it, and checks that the resumed
//! trace matches the uninterrupted one bit for bit.

use hydrostat::config::{GridConfig, Preset, RunConfig};
use hydrostat::runner::{run, RunOptions};
use hydrostat::trace::read_trace;

fn main() -> hydrostat::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.grid = GridConfig {
        nx: 12,
        ny: 12,
        nz: 12,
    };
    cfg.initial.preset = Preset::Smooth;
    cfg.stepper.dt = 2e-3;
    cfg.stepper.t_end = 0.1;
    cfg.diagnostics.every = 0.01;
    cfg.diagnostics.snapshot_times = vec![0.05];

    let root = std::env::temp_dir().join("hydrostat-restart");
    let full = root.join("full");
    let first = run(&cfg, &RunOptions::new(&full))?;

    let mut opts = RunOptions::new(root.join("resumed"));
    opts.resume = Some(full.join("snapshot_t0.05.bin"));
    let second = run(&cfg, &opts)?;
    println!(
        "full run: {} steps; resumed at t = {} and finished at step {}",
        first.steps, second.start_time, second.steps
    );

    let (_, a) = read_trace(&full.join("trace.csv"))?;
    let (_, b) = read_trace(&opts.out_dir.join("trace.csv"))?;
    let tail: Vec<_> = a.into_iter().filter(|r| r[0] >= 0.05).collect();
    let identical = tail.len() == b.len()
        && tail
            .iter()
            .flatten()
            .zip(b.iter().flatten())
            .all(|(x, y)| x.to_bits() == y.to_bits());
    println!("{} overlapping rows, bit-identical: {identical}", b.len());
    Ok(())
}
