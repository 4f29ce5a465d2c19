//! Energy budget of a nonlinear run: dissipation, coupling and the residual
//! of the discrete energy identity over each sampling interval.

use hydrostat::config::smooth_fields;
use hydrostat::diagnostics::{energy_identity_residual, norms};
use hydrostat::spectral::Grid3;
use hydrostat::state::{make_state, Params};
use hydrostat::stepper::{integrate, Callback, Scheme, StepperConfig, Trajectory, Trigger};

fn main() -> hydrostat::Result<()> {
    let grid = Grid3::cube(16, 1.0)?;
    let [v1, v2, t] = smooth_fields(grid, 5, 0.5);
    let initial = make_state([&v1, &v2], &t, Params::default())?;

    let mut traj = Trajectory::default();
    let cfg = StepperConfig::fixed(Scheme::ImexRk2, 1e-3, 0.05);
    integrate(
        initial,
        &cfg,
        None,
        &mut [Callback::new(Trigger::EverySteps(1), &mut traj)],
    )?;

    let reports = traj
        .states
        .iter()
        .map(|s| norms(s, None))
        .collect::<hydrostat::Result<Vec<_>>>()?;
    println!(
        "{:>6} {:>10} {:>10} {:>11} {:>11} {:>11} {:>11}",
        "t", "|v|", "|T|", "diss_v", "diss_t", "coup_v", "coup_t"
    );
    for r in reports.iter().step_by(10) {
        println!(
            "{:>6.3} {:>10.4e} {:>10.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e}",
            r.time,
            r.v_l2,
            r.t_l2,
            r.dissipation_v(),
            r.dissipation_t(),
            r.coupling_v,
            r.coupling_t
        );
    }
    let semi = reports
        .iter()
        .map(|r| r.residual_v.max(r.residual_t))
        .fold(0.0, f64::max);
    println!("largest semi-discrete pairing residual: {semi:.2e}");
    // Per-step identity defects, summarized over blocks of 10 steps.
    let per_step = energy_identity_residual(&reports)?;
    for block in per_step.chunks(10) {
        let worst = |f: fn(&hydrostat::diagnostics::IdentityResidual) -> f64| {
            block.iter().map(f).fold(0.0, f64::max)
        };
        println!(
            "[{:.3}, {:.3}] largest per-step identity residual v {:.3e}, T {:.3e}",
            block[0].t_start,
            block[block.len() - 1].t_end,
            worst(|r| r.residual_v),
            worst(|r| r.residual_t)
        );
    }
    Ok(())
}
