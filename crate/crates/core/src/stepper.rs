//! IMEX time integration. `L1`, `L2` and `eps lap_H` are treated implicitly
//! and are diagonal in Fourier space, so every implicit solve is a per-mode
//! division; all other terms come from [`crate::dynamics::tendency`].

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    apply_temperature_operator, apply_velocity_operator, temperature_symbol, tendency,
    velocity_symbol, SourceSpec, Tendency,
};
use crate::error::{Error, Result};
use crate::spectral::SpectralField3D;
use crate::state::{compute_w, State};

/// Any norm above this (or a NaN) is reported as blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// Diagonal coefficient of the two-stage implicit part, `(3 + sqrt 3) / 6`.
/// With equal weights `b = (1/2, 1/2)` this choice makes the implicit half
/// third-order accurate on linear problems while the IMEX pair is second order.
pub const RK2_GAMMA: f64 = 0.788_675_134_594_812_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImexEuler,
    ImexRk2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// CFL-controlled step capped at `dt_max`.
    Adaptive {
        dt_max: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: TimeStep,
    pub cfl_safety: f64,
    pub t_end: f64,
    /// Re-apply parity, truncation and barotropic projection after each stage.
    pub reproject: bool,
}

impl StepperConfig {
    pub fn fixed(scheme: Scheme, dt: f64, t_end: f64) -> Self {
        Self {
            scheme,
            dt: TimeStep::Fixed(dt),
            cfl_safety: 0.5,
            t_end,
            reproject: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dt = match self.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Adaptive { dt_max } => dt_max,
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step {dt} must be positive")));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "cfl_safety {} must lie in (0, 1]",
                self.cfl_safety
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end {} must be positive",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// `(v1, v2, T)` coefficient triple used for stage arithmetic.
#[derive(Clone)]
struct Fields([SpectralField3D; 3]);

impl Fields {
    fn of(state: &State) -> Self {
        Fields([
            state.v1.clone(),
            state.v2.clone(),
            state.temperature.clone(),
        ])
    }

    fn of_tendency(t: Tendency) -> Self {
        Fields([t.dv1, t.dv2, t.dt])
    }

    fn axpy(&mut self, a: f64, other: &Fields) {
        for (s, o) in self.0.iter_mut().zip(&other.0) {
            s.axpy(a, o);
        }
    }

    /// `(-L1 v1, -L1 v2, -(L2 - eps lap_H) T)`.
    fn linear(&self, state: &State) -> Fields {
        let p = &state.params;
        Fields([
            apply_velocity_operator(&self.0[0], p.r1, p.r2),
            apply_velocity_operator(&self.0[1], p.r1, p.r2),
            apply_temperature_operator(&self.0[2], p.r3, p.epsilon),
        ])
    }

    /// Solves `(1 + factor * L) u = self` mode by mode.
    fn implicit_solve(mut self, state: &State, factor: f64) -> Fields {
        let p = state.params;
        let [v1, v2, t] = &mut self.0;
        v1.map_modes(|kv, c| c / (1.0 + factor * velocity_symbol(kv, p.r1, p.r2)));
        v2.map_modes(|kv, c| c / (1.0 + factor * velocity_symbol(kv, p.r1, p.r2)));
        t.map_modes(|kv, c| c / (1.0 + factor * temperature_symbol(kv, p.r3, p.epsilon)));
        self
    }

    fn into_state(self, template: &State, time: f64, reproject: bool) -> State {
        let [v1, v2, t] = self.0;
        let mut s = State {
            v1: v1.with_parity(template.v1.parity()),
            v2: v2.with_parity(template.v2.parity()),
            temperature: t.with_parity(template.temperature.parity()),
            params: template.params,
            time,
        };
        if reproject {
            s.project();
        }
        s
    }
}

fn check_finite(next: &State, last_valid: f64) -> Result<()> {
    let bad = !next.is_finite()
        || next.l2_sq().sqrt() > BLOW_UP_THRESHOLD
        || [&next.v1, &next.v2, &next.temperature]
            .iter()
            .any(|f| f.max_abs_coeff() > BLOW_UP_THRESHOLD);
    if bad {
        Err(Error::BlowUp { time: last_valid })
    } else {
        Ok(())
    }
}

/// Advances `state` by `dt`.
pub fn step(
    state: &State,
    dt: f64,
    cfg: &StepperConfig,
    source: Option<&SourceSpec>,
) -> Result<State> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step {dt} must be positive")));
    }
    let t0 = state.time;
    let u = Fields::of(state);
    let next = match cfg.scheme {
        Scheme::ImexEuler => {
            let n = Fields::of_tendency(tendency(state, source)?);
            let mut rhs = u;
            rhs.axpy(dt, &n);
            rhs.implicit_solve(state, dt)
                .into_state(state, t0 + dt, cfg.reproject)
        }
        Scheme::ImexRk2 => {
            let g = RK2_GAMMA;
            let s1 = u
                .clone()
                .implicit_solve(state, g * dt)
                .into_state(state, t0, cfg.reproject);
            let k1 = Fields::of_tendency(tendency(&s1, source)?);
            let l1 = Fields::of(&s1).linear(state);

            let mut rhs = u.clone();
            rhs.axpy(dt, &k1);
            rhs.axpy((1.0 - 2.0 * g) * dt, &l1);
            let s2 = rhs
                .implicit_solve(state, g * dt)
                .into_state(state, t0 + dt, cfg.reproject);
            let k2 = Fields::of_tendency(tendency(&s2, source)?);
            let l2 = Fields::of(&s2).linear(state);

            let mut out = u;
            out.axpy(0.5 * dt, &k1);
            out.axpy(0.5 * dt, &k2);
            out.axpy(0.5 * dt, &l1);
            out.axpy(0.5 * dt, &l2);
            out.into_state(state, t0 + dt, cfg.reproject)
        }
    };
    check_finite(&next, t0)?;
    Ok(next)
}

/// Advective step limit `safety * min(dx / max|v1|, dy / max|v2|, dz / max|w|)`,
/// capped by the configured maximum step.
pub fn cfl_dt(state: &State, cfg: &StepperConfig) -> Result<f64> {
    let dt_max = match cfg.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Adaptive { dt_max } => dt_max,
    };
    let g = state.grid();
    let w = compute_w(state)?;
    let mut dt = dt_max;
    for (spacing, field) in [(g.dx(), &state.v1), (g.dy(), &state.v2), (g.dz(), &w)] {
        let vmax = field.inverse().max_abs();
        if vmax > 0.0 {
            dt = dt.min(cfg.cfl_safety * spacing / vmax);
        }
    }
    Ok(dt)
}

/// Receives states selected by a [`Trigger`].
pub trait Observer {
    fn observe(&mut self, state: &State) -> Result<()>;
}

impl<F: FnMut(&State) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &State) -> Result<()> {
        self(state)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Trigger {
    /// The initial state and every `n`-th step after it.
    EverySteps(usize),
    /// Exactly these times; steps are shortened to land on them.
    Times(Vec<f64>),
}

pub struct Callback<'a> {
    pub trigger: Trigger,
    pub observer: &'a mut dyn Observer,
}

impl<'a> Callback<'a> {
    pub fn new(trigger: Trigger, observer: &'a mut dyn Observer) -> Self {
        Self { trigger, observer }
    }
}

/// Sampled states of one run.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&State> {
        self.states.last()
    }
}

impl Observer for Trajectory {
    fn observe(&mut self, state: &State) -> Result<()> {
        self.states.push(state.clone());
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct IntegrationSummary {
    pub final_state: State,
    pub steps: usize,
}

/// Steps from `state.time` to `cfg.t_end`, invoking observers on their
/// triggers. Deterministic: identical inputs give bit-identical states.
///
/// On blow-up the error is returned after the observers have seen every valid
/// sample, so anything they recorded is the partial trajectory.
pub fn integrate(
    state: State,
    cfg: &StepperConfig,
    source: Option<&SourceSpec>,
    callbacks: &mut [Callback<'_>],
) -> Result<IntegrationSummary> {
    cfg.validate()?;
    if cfg.t_end <= state.time {
        return Ok(IntegrationSummary {
            final_state: state,
            steps: 0,
        });
    }
    let mut targets: Vec<f64> = callbacks
        .iter()
        .filter_map(|c| match &c.trigger {
            Trigger::Times(ts) => Some(ts.iter().copied()),
            Trigger::EverySteps(_) => None,
        })
        .flatten()
        .filter(|t| *t > state.time && *t < cfg.t_end)
        .collect();
    targets.push(cfg.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let notify = |callbacks: &mut [Callback<'_>], s: &State, steps: usize| -> Result<()> {
        for c in callbacks.iter_mut() {
            let hit = match &c.trigger {
                Trigger::EverySteps(n) => steps.is_multiple_of((*n).max(1)),
                Trigger::Times(ts) => ts.contains(&s.time),
            };
            if hit {
                c.observer.observe(s)?;
            }
        }
        Ok(())
    };

    notify(callbacks, &state, 0)?;
    let mut current = state;
    let mut steps = 0usize;
    let mut next_target = 0usize;
    while current.time < cfg.t_end {
        let nominal = match cfg.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Adaptive { .. } => cfl_dt(&current, cfg)?,
        };
        let target = targets[next_target];
        let (dt, land) = if current.time + nominal >= target - 1e-9 * nominal {
            (target - current.time, true)
        } else {
            (nominal, false)
        };
        let mut next = step(&current, dt, cfg, source)?;
        if land {
            next.time = target;
            next_target += 1;
        }
        current = next;
        steps += 1;
        notify(callbacks, &current, steps)?;
    }
    Ok(IntegrationSummary {
        final_state: current,
        steps,
    })
}
