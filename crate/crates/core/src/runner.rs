//! Run orchestration: single runs, epsilon sweeps, continuous-dependence,
//! cross-validation and convergence studies. Every study writes its
//! artifacts under one output directory; member runs of a study execute on a
//! rayon pool capped by `HYDROSTAT_THREADS`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{smooth_fields, RunConfig};
use crate::diagnostics::{
    difference_gronwall, norms, regularity_functionals, EnergyReport, GronwallReport,
};
use crate::dynamics::SourceSpec;
use crate::error::{Error, Result};
use crate::mms::{spatial_convergence, ConvergencePoint};
use crate::oracle_fd::{cross_validate, CrossValidationReport};
use crate::snapshot::{read_snapshot, write_snapshot};
use crate::spectral::Grid3;
use crate::state::State;
use crate::stepper::{integrate, Callback, Trigger};
use crate::trace::{Sample, TraceWriter};

pub const THREADS_ENV: &str = "HYDROSTAT_THREADS";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub resume: Option<PathBuf>,
    pub quiet: bool,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            resume: None,
            quiet: true,
        }
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn child(&self, name: &str) -> Self {
        Self {
            out_dir: self.out_dir.join(name),
            resume: None,
            quiet: self.quiet,
        }
    }
}

/// Rayon pool with at most `HYDROSTAT_THREADS` workers (default: all cores).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        builder = builder.num_threads(parse_threads(&raw)?);
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

fn parse_threads(raw: &str) -> Result<usize> {
    raw.trim()
        .parse::<usize>()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={raw:?} is not a positive integer")))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Full diagnostic sample of one state.
pub fn sample(state: &State, source: Option<&SourceSpec>) -> Result<Sample> {
    Ok(Sample {
        energy: norms(state, source)?,
        regularity: regularity_functionals(state, state.time),
        barotropic_div: state.barotropic_divergence(),
    })
}

/// Integer multiples of `every` in `[t0, t_end]`, plus `t_end`.
pub fn sample_times(t0: f64, t_end: f64, every: f64) -> Vec<f64> {
    let mut times = Vec::new();
    let mut i = (t0 / every).floor() as u64;
    loop {
        let t = i as f64 * every;
        if t > t_end * (1.0 + 1e-12) {
            break;
        }
        if t >= t0 {
            times.push(t.min(t_end));
        }
        i += 1;
    }
    if times.last().is_none_or(|t| *t < t_end) {
        times.push(t_end);
    }
    times.dedup();
    times
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub start_time: f64,
    pub final_time: f64,
    pub steps: u64,
    pub samples: usize,
    pub blow_up: bool,
    /// Last valid time when `blow_up` is set.
    pub blow_up_time: Option<f64>,
    pub final_energy: Option<EnergyReport>,
    pub final_x: Option<f64>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

/// Result of one integration with its artifacts written.
pub struct RunOutcome {
    pub summary: RunSummary,
    pub final_state: State,
    pub samples: Vec<Sample>,
    /// States at the sample times, kept only when requested.
    pub states: Vec<State>,
}

fn run_from(
    cfg: &RunConfig,
    initial: State,
    start_steps: u64,
    opts: &RunOptions,
    keep_states: bool,
) -> Result<RunOutcome> {
    let clock = Instant::now();
    ensure_dir(&opts.out_dir)?;
    let source = cfg.source();
    let src = source.as_ref();
    let stepper = cfg.stepper_config();
    let start_time = initial.time;
    let times = sample_times(start_time, stepper.t_end, cfg.diagnostics.every);
    let snap_times: Vec<f64> = cfg
        .diagnostics
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t >= start_time && *t <= stepper.t_end)
        .collect();

    let mut trace = TraceWriter::create(&opts.out_dir.join("trace.csv"))?;
    let mut samples: Vec<Sample> = Vec::new();
    let mut states: Vec<State> = Vec::new();
    let mut steps = start_steps;

    let result = {
        let mut on_sample = |s: &State| -> Result<()> {
            let row = sample(s, src)?;
            trace.write(&row)?;
            samples.push(row);
            if keep_states {
                states.push(s.clone());
            }
            Ok(())
        };
        let out_dir = opts.out_dir.clone();
        // Notified with the initial state and after every step.
        let seen = std::cell::Cell::new(0u64);
        let mut on_step = |_: &State| -> Result<()> {
            seen.set(seen.get() + 1);
            Ok(())
        };
        let mut on_snapshot = |s: &State| -> Result<()> {
            let path = out_dir.join(format!("snapshot_t{}.bin", s.time));
            write_snapshot(&path, s, start_steps + seen.get() - 1)
        };
        let mut callbacks = [
            Callback::new(Trigger::EverySteps(1), &mut on_step),
            Callback::new(Trigger::Times(times), &mut on_sample),
            Callback::new(Trigger::Times(snap_times), &mut on_snapshot),
        ];
        let r = integrate(initial, &stepper, src, &mut callbacks);
        if let Ok(out) = &r {
            steps += out.steps as u64;
        }
        r
    };
    trace.flush()?;

    match result {
        Ok(out) => {
            write_snapshot(&opts.out_dir.join("final.bin"), &out.final_state, steps)?;
            let summary = RunSummary {
                start_time,
                final_time: out.final_state.time,
                steps,
                samples: samples.len(),
                blow_up: false,
                blow_up_time: None,
                final_energy: samples.last().map(|s| s.energy.clone()),
                final_x: samples.last().map(|s| s.regularity.x),
                wall_time_s: clock.elapsed().as_secs_f64(),
                error: None,
            };
            write_json(&opts.out_dir.join("summary.json"), &summary)?;
            opts.note(format!(
                "run finished at t = {} after {} steps ({} samples)",
                summary.final_time, summary.steps, summary.samples
            ));
            Ok(RunOutcome {
                summary,
                final_state: out.final_state,
                samples,
                states,
            })
        }
        Err(err) => {
            let blow_up_time = match &err {
                Error::BlowUp { time } => Some(*time),
                _ => None,
            };
            let summary = RunSummary {
                start_time,
                final_time: blow_up_time.unwrap_or(start_time),
                steps,
                samples: samples.len(),
                blow_up: blow_up_time.is_some(),
                blow_up_time,
                final_energy: samples.last().map(|s| s.energy.clone()),
                final_x: samples.last().map(|s| s.regularity.x),
                wall_time_s: clock.elapsed().as_secs_f64(),
                error: Some(err.to_string()),
            };
            write_json(&opts.out_dir.join("summary.json"), &summary)?;
            Err(err)
        }
    }
}

fn initial_for(cfg: &RunConfig, opts: &RunOptions) -> Result<(State, u64)> {
    match &opts.resume {
        Some(path) => {
            let snap = read_snapshot(path)?;
            if snap.state.grid() != &cfg.grid()? || snap.state.params != cfg.params {
                return Err(Error::Config(format!(
                    "snapshot {} does not match the configured grid and parameters",
                    path.display()
                )));
            }
            Ok((snap.state, snap.steps))
        }
        None => Ok((cfg.initial_state()?, 0)),
    }
}

/// Single run: `trace.csv`, snapshots at the configured times, `final.bin`
/// and `summary.json` in `opts.out_dir`. On blow-up the partial trace and a
/// summary with `blow_up = true` are written before the error is returned.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let (initial, steps) = initial_for(cfg, opts)?;
    opts.note(format!(
        "run from t = {} to t = {}",
        initial.time, cfg.stepper.t_end
    ));
    Ok(run_from(cfg, initial, steps, opts, false)?.summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMember {
    pub epsilon: f64,
    /// `||(v_eps, T_eps) - (v_0, T_0)||_2` at the final time.
    pub difference: Option<f64>,
    /// `sup_t (||v||_{H^2}^2 + ||T||_{H^2}^2)^{1/2}` over the samples.
    pub sup_h2: Option<f64>,
    pub sup_v_h2: Option<f64>,
    pub sup_t_h2: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub final_time: f64,
    pub members: Vec<SweepMember>,
    /// Differences strictly decrease as epsilon decreases (over epsilon > 0).
    pub monotone: bool,
    /// `(max - min) / max` of `sup_h2` across all members.
    pub h2_spread: f64,
}

/// Runs every epsilon of `cfg.sweep` from the same initial data. A failing
/// member is recorded and the others continue.
pub fn epsilon_sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<SweepReport> {
    cfg.validate()?;
    let eps = &cfg.sweep.epsilons;
    if !eps.contains(&0.0) {
        return Err(Error::Config("sweep epsilons must include 0".into()));
    }
    ensure_dir(&opts.out_dir)?;
    let initial = cfg.initial_state()?;
    let pool = worker_pool()?;
    let outcomes: Vec<Result<RunOutcome>> = pool.install(|| {
        eps.par_iter()
            .enumerate()
            .map(|(i, e)| {
                let mut member = cfg.clone();
                member.params.epsilon = *e;
                let mut start = initial.clone();
                start.params.epsilon = *e;
                run_from(&member, start, 0, &opts.child(&format!("eps_{i}")), false)
            })
            .collect()
    });
    let reference = eps
        .iter()
        .position(|e| *e == 0.0)
        .and_then(|i| outcomes[i].as_ref().ok())
        .map(|o| o.final_state.clone());

    let members: Vec<SweepMember> = eps
        .iter()
        .zip(&outcomes)
        .map(|(e, out)| match out {
            Ok(o) => {
                let sup = |f: &dyn Fn(&EnergyReport) -> f64| {
                    o.samples.iter().map(|s| f(&s.energy)).fold(0.0, f64::max)
                };
                SweepMember {
                    epsilon: *e,
                    difference: reference
                        .as_ref()
                        .map(|r| o.final_state.distance_sq(r).sqrt()),
                    sup_h2: Some(sup(&|r| r.v_h2.hypot(r.t_h2))),
                    sup_v_h2: Some(sup(&|r| r.v_h2)),
                    sup_t_h2: Some(sup(&|r| r.t_h2)),
                    error: None,
                }
            }
            Err(err) => SweepMember {
                epsilon: *e,
                difference: None,
                sup_h2: None,
                sup_v_h2: None,
                sup_t_h2: None,
                error: Some(err.to_string()),
            },
        })
        .collect();

    let positive: Vec<f64> = members
        .iter()
        .filter(|m| m.epsilon > 0.0)
        .map(|m| m.difference.unwrap_or(f64::NAN))
        .collect();
    let monotone = positive.windows(2).all(|w| w[1] < w[0]);
    let sups: Vec<f64> = members.iter().filter_map(|m| m.sup_h2).collect();
    let max = sups.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = sups.iter().copied().fold(f64::INFINITY, f64::min);
    let h2_spread = if max > 0.0 { (max - min) / max } else { 0.0 };
    let report = SweepReport {
        final_time: cfg.stepper.t_end,
        members,
        monotone,
        h2_spread,
    };
    write_json(&opts.out_dir.join("sweep.json"), &report)?;
    opts.note(format!(
        "sweep: monotone = {}, H2 spread = {:.3e}",
        report.monotone, report.h2_spread
    ));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub magnitudes: Vec<f64>,
    /// `||(v, T)_perturbed - (v, T)_base||_2` at the final time.
    pub final_differences: Vec<f64>,
    /// Observed over expected ratio of final differences for consecutive
    /// magnitudes; 1 means exactly linear.
    pub scaling: Vec<f64>,
    pub linear: bool,
    pub envelopes: Vec<GronwallReport>,
    pub passed: bool,
}

/// Unit-L2 perturbation in the admissible class, deterministic in `seed`.
pub fn unit_perturbation(grid: Grid3, cfg: &RunConfig, seed: u64) -> Result<State> {
    let [v1, v2, t] = smooth_fields(grid, seed, 1.0);
    let s = crate::state::make_state([&v1, &v2], &t, cfg.params)?;
    let n = s.l2_sq().sqrt();
    Ok(State {
        v1: s.v1.scaled(1.0 / n),
        v2: s.v2.scaled(1.0 / n),
        temperature: s.temperature.scaled(1.0 / n),
        ..s
    })
}

/// Base run against runs perturbed by each configured magnitude, compared
/// with the continuous-dependence envelope of the base trajectory.
pub fn dependence_study(cfg: &RunConfig, opts: &RunOptions) -> Result<DependenceReport> {
    cfg.validate()?;
    ensure_dir(&opts.out_dir)?;
    let dep = &cfg.dependence;
    let base = cfg.initial_state()?;
    let unit = unit_perturbation(*base.grid(), cfg, dep.seed)?;
    let mut starts = vec![base.clone()];
    for m in &dep.magnitudes {
        let mut s = base.clone();
        s.v1.axpy(*m, &unit.v1);
        s.v2.axpy(*m, &unit.v2);
        s.temperature.axpy(*m, &unit.temperature);
        starts.push(s);
    }
    let pool = worker_pool()?;
    let runs: Vec<Result<RunOutcome>> = pool.install(|| {
        starts
            .into_par_iter()
            .enumerate()
            .map(|(i, s)| {
                let name = if i == 0 {
                    "base".to_string()
                } else {
                    format!("perturbed_{}", i - 1)
                };
                run_from(cfg, s, 0, &opts.child(&name), true)
            })
            .collect()
    });
    let runs: Vec<RunOutcome> = runs.into_iter().collect::<Result<_>>()?;
    let base_states = &runs[0].states;

    let mut envelopes = Vec::new();
    let mut finals = Vec::new();
    for (i, r) in runs[1..].iter().enumerate() {
        let report = difference_gronwall(&r.states, base_states, dep.multiplier)?;
        let mut w = csv::Writer::from_path(opts.out_dir.join(format!("envelope_{i}.csv")))?;
        w.write_record(["time", "difference", "envelope"])?;
        for ((t, d), e) in report
            .times
            .iter()
            .zip(&report.difference)
            .zip(&report.envelope)
        {
            w.write_record([t.to_string(), d.to_string(), e.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&opts.out_dir, e))?;
        finals.push(report.difference.last().copied().unwrap_or(0.0).sqrt());
        envelopes.push(report);
    }
    let scaling: Vec<f64> = dep
        .magnitudes
        .windows(2)
        .zip(finals.windows(2))
        .map(|(m, d)| {
            if m[1] == 0.0 || d[1] == 0.0 {
                f64::NAN
            } else {
                (d[0] / d[1]) / (m[0] / m[1])
            }
        })
        .collect();
    let linear = scaling.iter().all(|s| (0.5..=2.0).contains(s));
    let passed = linear && envelopes.iter().all(|e| e.passed());
    let report = DependenceReport {
        magnitudes: dep.magnitudes.clone(),
        final_differences: finals,
        scaling,
        linear,
        envelopes,
        passed,
    };
    write_json(&opts.out_dir.join("dependence.json"), &report)?;
    opts.note(format!(
        "dependence: linear = {}, passed = {}",
        report.linear, report.passed
    ));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationStudy {
    pub reports: Vec<CrossValidationReport>,
    /// `err(n_i) / err(n_{i+1})` with `err = (rel_v^2 + rel_t^2)^{1/2}`.
    pub refinement_ratios: Vec<f64>,
}

impl CrossValidationStudy {
    pub fn combined(r: &CrossValidationReport) -> f64 {
        r.rel_v.hypot(r.rel_t)
    }
}

/// Spectral reference at `reference_n^3` against the FD solver at each
/// configured size.
pub fn cross_validate_study(cfg: &RunConfig, opts: &RunOptions) -> Result<CrossValidationStudy> {
    cfg.validate()?;
    ensure_dir(&opts.out_dir)?;
    let cv = &cfg.cross_validate;
    let h = cfg.params.h;
    let initial = cfg.initial_state_on(Grid3::cube(cv.reference_n, h)?)?;
    let source = cfg.source();
    let stepper = cfg.stepper_config();
    let pool = worker_pool()?;
    let reports: Vec<CrossValidationReport> = pool.install(|| {
        cv.fd_sizes
            .par_iter()
            .map(|n| {
                cross_validate(
                    &initial,
                    Grid3::cube(*n, h)?,
                    cv.fd_dt,
                    &stepper,
                    source.as_ref(),
                )
            })
            .collect::<Result<_>>()
    })?;
    let refinement_ratios = reports
        .windows(2)
        .map(|w| CrossValidationStudy::combined(&w[0]) / CrossValidationStudy::combined(&w[1]))
        .collect();
    let study = CrossValidationStudy {
        reports,
        refinement_ratios,
    };
    write_json(&opts.out_dir.join("cross_validation.json"), &study)?;
    opts.note(format!(
        "cross-validation ratios: {:?}",
        study.refinement_ratios
    ));
    Ok(study)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalPoint {
    pub dt: f64,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub spatial: Vec<ConvergencePoint>,
    pub temporal: Vec<TemporalPoint>,
    /// `error(dt) / error(dt / 2)` for consecutive temporal points.
    pub temporal_ratios: Vec<f64>,
}

/// Spatial and time-step convergence on the manufactured solution, using the
/// configured parameters, scheme, `dt` and `t_end`.
pub fn convergence(cfg: &RunConfig, opts: &RunOptions) -> Result<ConvergenceReport> {
    cfg.validate()?;
    ensure_dir(&opts.out_dir)?;
    let mms = cfg.manufactured();
    let st = &cfg.stepper;
    let conv = &cfg.convergence;
    let pool = worker_pool()?;
    let (spatial, temporal) = pool.install(|| {
        rayon::join(
            || spatial_convergence(&mms, &conv.sizes, st.scheme, st.dt, st.t_end),
            || {
                (0..=conv.halvings)
                    .into_par_iter()
                    .map(|k| {
                        let dt = st.dt / f64::from(1u32 << k);
                        let pts =
                            spatial_convergence(&mms, &[conv.temporal_n], st.scheme, dt, st.t_end)?;
                        Ok(TemporalPoint {
                            dt,
                            max_error: pts[0].max_error,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            },
        )
    });
    let (spatial, temporal) = (spatial?, temporal?);
    let temporal_ratios = temporal
        .windows(2)
        .map(|w| w[0].max_error / w[1].max_error)
        .collect();
    let report = ConvergenceReport {
        spatial,
        temporal,
        temporal_ratios,
    };
    write_json(&opts.out_dir.join("convergence.json"), &report)?;
    let mut w = csv::Writer::from_path(opts.out_dir.join("convergence.csv"))?;
    w.write_record(["kind", "n_or_dt", "max_error"])?;
    for p in &report.spatial {
        w.write_record([
            "spatial".to_string(),
            p.n.to_string(),
            p.max_error.to_string(),
        ])?;
    }
    for p in &report.temporal {
        w.write_record([
            "temporal".to_string(),
            p.dt.to_string(),
            p.max_error.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&opts.out_dir, e))?;
    opts.note(format!("convergence: {:?}", report.spatial));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GridConfig, Preset};
    use crate::trace::read_trace;

    fn small(preset: Preset) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.grid = GridConfig {
            nx: 8,
            ny: 8,
            nz: 8,
        };
        cfg.initial.preset = preset;
        cfg.stepper.dt = 0.01;
        cfg.stepper.t_end = 0.05;
        cfg.diagnostics.every = 0.02;
        cfg
    }

    #[test]
    fn sample_times_are_multiples() {
        assert_eq!(sample_times(0.0, 0.05, 0.02), vec![0.0, 0.02, 0.04, 0.05]);
        assert_eq!(sample_times(0.03, 0.05, 0.02), vec![0.04, 0.05]);
        assert_eq!(sample_times(0.04, 0.04, 0.02), vec![0.04]);
    }

    #[test]
    fn zero_preset_gives_zero_rows() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(&small(Preset::Zero), &RunOptions::new(dir.path())).unwrap();
        assert!(!s.blow_up);
        let (header, rows) = read_trace(&dir.path().join("trace.csv")).unwrap();
        assert_eq!(rows.len(), 4);
        let x = header.iter().position(|c| c == "x").unwrap();
        let z = header.iter().position(|c| c == "z").unwrap();
        for row in rows {
            for (i, v) in row.iter().enumerate().skip(1) {
                if i == x {
                    assert_eq!(*v, 1.0);
                } else if header[i] != "c_r" {
                    assert_eq!(*v, 0.0, "column {} at i = {i} (z col {z})", header[i]);
                }
            }
        }
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("final.bin").exists());
    }

    #[test]
    fn thread_cap_parsing() {
        assert_eq!(parse_threads(" 3").unwrap(), 3);
        assert_eq!(parse_threads("0").unwrap_err().exit_code(), 2);
        assert!(parse_threads("many").is_err());
    }
}
