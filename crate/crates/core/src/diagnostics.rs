//! Norms, energy budgets, vorticity-type fields, regularity functionals and
//! stability envelopes. Everything is evaluated spectrally with physical
//! wavevectors `(2 pi k_x, 2 pi k_y, m pi / h)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{tendency, SourceSpec};
use crate::error::{Error, Result};
use crate::spectral::{
    derivative, horizontal_divergence, vertical_integral_from_bottom, vertical_mean, Axis, Parity,
    SpectralField3D,
};
use crate::state::{compute_w, gradient_h, State};

fn kh2(kv: [f64; 3]) -> f64 {
    kv[0] * kv[0] + kv[1] * kv[1]
}

fn kz2(kv: [f64; 3]) -> f64 {
    kv[2] * kv[2]
}

fn hs_pair(a: &SpectralField3D, b: &SpectralField3D, s: u32) -> f64 {
    (a.hs_norm_sq(s) + b.hs_norm_sq(s)).sqrt()
}

/// Norms and energy-budget terms of one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub time: f64,
    pub v_l2: f64,
    pub v_h1: f64,
    pub v_h2: f64,
    pub t_l2: f64,
    pub t_h1: f64,
    pub t_h2: f64,
    /// `(1/R1) ||grad_H v||^2`
    pub diss_v_h: f64,
    /// `(1/R2) ||d_z v||^2`
    pub diss_v_z: f64,
    /// `(1/R3) ||d_z T||^2`
    pub diss_t_z: f64,
    /// `eps ||grad_H T||^2`
    pub diss_t_h: f64,
    /// `<grad_H int_{-h}^z T, v>`
    pub coupling_v: f64,
    /// `-(1/h) <w, T> = (1/h) <int div_H v, T>`
    pub coupling_t: f64,
    /// `<Q_v, v>`, zero without forcing.
    pub source_v: f64,
    /// `<Q_T, T>`, zero without forcing.
    pub source_t: f64,
    /// Relative mismatch between `<N_v, v>` and `coupling_v + source_v`, with
    /// `N_v` the explicit momentum tendency (semi-discrete identity).
    pub residual_v: f64,
    /// Same for temperature.
    pub residual_t: f64,
}

impl EnergyReport {
    pub fn dissipation_v(&self) -> f64 {
        self.diss_v_h + self.diss_v_z
    }

    pub fn dissipation_t(&self) -> f64 {
        self.diss_t_z + self.diss_t_h
    }
}

fn relative(defect: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        defect.abs() / scale
    } else {
        defect.abs()
    }
}

/// Norms, dissipation, coupling and semi-discrete energy residuals.
pub fn norms(state: &State, source: Option<&SourceSpec>) -> Result<EnergyReport> {
    let p = &state.params;
    let (v1, v2, t) = (&state.v1, &state.v2, &state.temperature);
    let both = |w: &dyn Fn([f64; 3]) -> f64| v1.weighted_norm_sq(w) + v2.weighted_norm_sq(w);

    let column = vertical_integral_from_bottom(t)?;
    let [gx, gy] = gradient_h(&column);
    let coupling_v = gx.inner(v1) + gy.inner(v2);
    let w = compute_w(state)?;
    let coupling_t = -w.inner(t) / p.h;

    let (source_v, source_t) = match source.filter(|s| !s.is_empty()) {
        Some(src) => {
            let sampled = src.sample(*state.grid(), state.time);
            let sv = sampled
                .momentum
                .as_ref()
                .map_or(0.0, |[q1, q2]| q1.inner(v1) + q2.inner(v2));
            let st = sampled.heat.as_ref().map_or(0.0, |q| q.inner(t));
            (sv, st)
        }
        None => (0.0, 0.0),
    };

    let n = tendency(state, source)?;
    let pair_v = n.dv1.inner(v1) + n.dv2.inner(v2);
    let pair_t = n.dt.inner(t);
    let v_l2 = (v1.norm_sq() + v2.norm_sq()).sqrt();
    let t_l2 = t.norm();
    let scale_v = (n.dv1.norm_sq() + n.dv2.norm_sq()).sqrt() * v_l2;
    let scale_t = n.dt.norm() * t_l2;

    Ok(EnergyReport {
        time: state.time,
        v_l2,
        v_h1: hs_pair(v1, v2, 1),
        v_h2: hs_pair(v1, v2, 2),
        t_l2,
        t_h1: t.hs_norm_sq(1).sqrt(),
        t_h2: t.hs_norm_sq(2).sqrt(),
        diss_v_h: both(&kh2) / p.r1,
        diss_v_z: both(&kz2) / p.r2,
        diss_t_z: t.weighted_norm_sq(kz2) / p.r3,
        diss_t_h: p.epsilon * t.weighted_norm_sq(kh2),
        coupling_v,
        coupling_t,
        source_v,
        source_t,
        residual_v: relative(pair_v - coupling_v - source_v, scale_v),
        residual_t: relative(pair_t - coupling_t - source_t, scale_t),
    })
}

/// `eta = d_x u2 - d_y u1` and `theta = div_H u + R1 T` with `u = d_z v`.
pub fn eta_theta(state: &State) -> (SpectralField3D, SpectralField3D) {
    let u1 = derivative(&state.v1, Axis::Z, 1);
    let u2 = derivative(&state.v2, Axis::Z, 1);
    let mut eta = derivative(&u2, Axis::X, 1);
    eta.axpy(-1.0, &derivative(&u1, Axis::Y, 1));
    let mut theta = horizontal_divergence(&u1, &u2);
    theta.axpy(state.params.r1, &state.temperature);
    (eta.with_parity(Parity::Odd), theta.with_parity(Parity::Odd))
}

pub const X_TERM_NAMES: [&str; 7] = [
    "grad_lap_vbar",
    "cr_lap_t",
    "cr_grad_dz_t",
    "lap_eta",
    "grad_dz_eta",
    "lap_theta",
    "grad_dz_theta",
];

pub const Y_TERM_NAMES: [&str; 7] = [
    "lap2_vbar",
    "lap_dz_t",
    "grad_dz2_t",
    "grad_lap_eta",
    "lap_dz_eta",
    "grad_lap_theta",
    "lap_dz_theta",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub time: f64,
    pub c_r: f64,
    pub eta_l2: f64,
    pub eta_h1: f64,
    pub eta_h2: f64,
    pub theta_l2: f64,
    pub theta_h1: f64,
    pub theta_h2: f64,
    /// Terms of `X` after the leading 1, in [`X_TERM_NAMES`] order.
    pub x_terms: [f64; 7],
    /// Terms of `Y` in [`Y_TERM_NAMES`] order.
    pub y_terms: [f64; 7],
    pub x: f64,
    pub y: f64,
    /// `log X`.
    pub z: f64,
    /// `t^2 (||eta||_{H^2}^2 + ||theta||_{H^2}^2)`
    pub weighted_eta_theta: f64,
    /// `t ||u||_{H^2}^2`
    pub weighted_u: f64,
    /// Both forms of the anisotropic trilinear ratio for the triple
    /// `(div_H v, d_z v1, v1)`.
    pub anisotropic: [f64; 2],
}

/// Regularity functionals `X`, `Y`, `Z = log X` with itemized terms.
///
/// Terms in the barotropic velocity are norms over the horizontal torus `M`;
/// all others are over the full box.
pub fn regularity_functionals(state: &State, t: f64) -> RegularityReport {
    let p = &state.params;
    let c_r = p.c_r();
    let (eta, theta) = eta_theta(state);
    let vb1 = vertical_mean(&state.v1);
    let vb2 = vertical_mean(&state.v2);
    let area = 1.0 / state.grid().volume();
    let vbar =
        |w: &dyn Fn([f64; 3]) -> f64| (vb1.weighted_norm_sq(w) + vb2.weighted_norm_sq(w)) * area;
    let temp = &state.temperature;

    let x_terms = [
        vbar(&|k| kh2(k).powi(3)),
        c_r * temp.weighted_norm_sq(|k| kh2(k).powi(2)),
        c_r * temp.weighted_norm_sq(|k| kh2(k) * kz2(k)),
        eta.weighted_norm_sq(|k| kh2(k).powi(2)),
        eta.weighted_norm_sq(|k| kh2(k) * kz2(k)),
        theta.weighted_norm_sq(|k| kh2(k).powi(2)),
        theta.weighted_norm_sq(|k| kh2(k) * kz2(k)),
    ];
    let y_terms = [
        vbar(&|k| kh2(k).powi(4)),
        temp.weighted_norm_sq(|k| kh2(k).powi(2) * kz2(k)),
        temp.weighted_norm_sq(|k| kh2(k) * kz2(k).powi(2)),
        eta.weighted_norm_sq(|k| kh2(k).powi(3)),
        eta.weighted_norm_sq(|k| kh2(k).powi(2) * kz2(k)),
        theta.weighted_norm_sq(|k| kh2(k).powi(3)),
        theta.weighted_norm_sq(|k| kh2(k).powi(2) * kz2(k)),
    ];
    let x = 1.0 + x_terms.iter().sum::<f64>();
    let y = y_terms.iter().sum();

    let u1 = derivative(&state.v1, Axis::Z, 1);
    let u2 = derivative(&state.v2, Axis::Z, 1);
    let eh2 = eta.hs_norm_sq(2);
    let th2 = theta.hs_norm_sq(2);
    let div = horizontal_divergence(&state.v1, &state.v2);
    let ratio = anisotropic_ratio(&div, &u1, &state.v1);

    RegularityReport {
        time: t,
        c_r,
        eta_l2: eta.norm(),
        eta_h1: eta.hs_norm_sq(1).sqrt(),
        eta_h2: eh2.sqrt(),
        theta_l2: theta.norm(),
        theta_h1: theta.hs_norm_sq(1).sqrt(),
        theta_h2: th2.sqrt(),
        x_terms,
        y_terms,
        x,
        y,
        z: x.ln(),
        weighted_eta_theta: t * t * (eh2 + th2),
        weighted_u: t * (u1.hs_norm_sq(2) + u2.hs_norm_sq(2)),
        anisotropic: [ratio.ratio1, ratio.ratio2],
    }
}

/// Both sides of the anisotropic trilinear inequality for one triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnisotropicRatio {
    /// `|int_M (int f dz)(int g hh dz) dx dy|`
    pub lhs: f64,
    /// `||f||^{1/2}(||f||^{1/2} + ||grad_H f||^{1/2}) ||g|| ||hh||^{1/2}(||hh||^{1/2} + ||grad_H hh||^{1/2})`
    pub rhs1: f64,
    /// `||f|| ||g||^{1/2}(||g||^{1/2} + ||grad_H g||^{1/2}) ||hh||^{1/2}(||hh||^{1/2} + ||grad_H hh||^{1/2})`
    pub rhs2: f64,
    pub ratio1: f64,
    pub ratio2: f64,
}

/// Evaluates the anisotropic inequality for `(f, g, hh)`. Ratios are 0 when
/// the left side vanishes.
///
/// The left side is computed as the grid quadrature of `F(x, y) g hh` with
/// `F = int f dz`, which is exact when the three bands sum below the grid
/// Nyquist limit (true for dealiased fields).
pub fn anisotropic_ratio(
    f: &SpectralField3D,
    g: &SpectralField3D,
    hh: &SpectralField3D,
) -> AnisotropicRatio {
    let grid = *f.grid();
    let column = vertical_mean(f).scaled(grid.volume()).inverse();
    let gp = g.inverse();
    let hp = hh.inverse();
    let cell = grid.volume() / grid.len() as f64;
    let lhs = column
        .values()
        .iter()
        .zip(gp.values())
        .zip(hp.values())
        .map(|((a, b), c)| a * b * c)
        .sum::<f64>()
        .abs()
        * cell;

    let grad = |q: &SpectralField3D| q.weighted_norm_sq(kh2).sqrt();
    let factor = |q: &SpectralField3D| {
        let n = q.norm();
        n.sqrt() * (n.sqrt() + grad(q).sqrt())
    };
    let rhs1 = factor(f) * g.norm() * factor(hh);
    let rhs2 = f.norm() * factor(g) * factor(hh);
    let ratio = |r: f64| if lhs == 0.0 || r == 0.0 { 0.0 } else { lhs / r };
    AnisotropicRatio {
        lhs,
        rhs1,
        rhs2,
        ratio1: ratio(rhs1),
        ratio2: ratio(rhs2),
    }
}

/// Per-interval energy-identity defects computed from sampled reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub t_start: f64,
    pub t_end: f64,
    pub residual_v: f64,
    pub residual_t: f64,
}

/// `|Delta(1/2 ||v||^2)/Delta t + dissipation - coupling - source|` on each
/// sampling interval, with the right side averaged over the endpoints (a
/// centered, second-order rule).
pub fn energy_identity_residual(window: &[EnergyReport]) -> Result<Vec<IdentityResidual>> {
    if window.len() < 2 {
        return Err(Error::Precondition(format!(
            "energy identity needs at least 2 samples, got {}",
            window.len()
        )));
    }
    let mut out = Vec::with_capacity(window.len() - 1);
    for pair in window.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.time - a.time;
        if !(dt > 0.0) {
            return Err(Error::Precondition(
                "samples must have increasing times".into(),
            ));
        }
        let rate = |x: f64, y: f64| 0.5 * (y * y - x * x) / dt;
        let rhs_v = |r: &EnergyReport| r.coupling_v + r.source_v - r.dissipation_v();
        let rhs_t = |r: &EnergyReport| r.coupling_t + r.source_t - r.dissipation_t();
        out.push(IdentityResidual {
            t_start: a.time,
            t_end: b.time,
            residual_v: (rate(a.v_l2, b.v_l2) - 0.5 * (rhs_v(a) + rhs_v(b))).abs(),
            residual_t: (rate(a.t_l2, b.t_l2) - 0.5 * (rhs_t(a) + rhs_t(b))).abs(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub times: Vec<f64>,
    /// `||vA - vB||^2 + ||TA - TB||^2`
    pub difference: Vec<f64>,
    /// `d(0) exp(int_0^t (1 + ||vB||_{H^2}^4 + ||TB||_{H^2}^4))`
    pub envelope: Vec<f64>,
    pub multiplier: f64,
    /// Sample indices with `d > multiplier * envelope`.
    pub violations: Vec<usize>,
}

impl GronwallReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest `d / envelope` over the samples (0 where both vanish).
    pub fn max_ratio(&self) -> f64 {
        self.difference
            .iter()
            .zip(&self.envelope)
            .map(|(d, e)| {
                if *e > 0.0 {
                    d / e
                } else if *d > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Compares two trajectories sampled at the same times against the
/// continuous-dependence envelope of the second one. The time integral uses
/// the trapezoid rule on the samples.
pub fn difference_gronwall(a: &[State], b: &[State], multiplier: f64) -> Result<GronwallReport> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Precondition(format!(
            "trajectories have {} and {} samples",
            a.len(),
            b.len()
        )));
    }
    for (sa, sb) in a.iter().zip(b) {
        if sa.grid() != sb.grid() || sa.params != sb.params {
            return Err(Error::Precondition(
                "trajectories use different grids or parameters".into(),
            ));
        }
        if (sa.time - sb.time).abs() > 1e-12 * (1.0 + sa.time.abs()) {
            return Err(Error::Precondition(format!(
                "sample times differ: {} vs {}",
                sa.time, sb.time
            )));
        }
    }
    let integrand = |s: &State| {
        let v = s.v1.hs_norm_sq(2) + s.v2.hs_norm_sq(2);
        let t = s.temperature.hs_norm_sq(2);
        1.0 + v * v + t * t
    };
    let difference: Vec<f64> = a.iter().zip(b).map(|(x, y)| x.distance_sq(y)).collect();
    let d0 = difference[0];
    let mut envelope = Vec::with_capacity(b.len());
    let mut integral = 0.0;
    envelope.push(d0);
    for pair in b.windows(2) {
        integral +=
            0.5 * (pair[1].time - pair[0].time) * (integrand(&pair[0]) + integrand(&pair[1]));
        envelope.push(d0 * integral.exp());
    }
    let violations = difference
        .iter()
        .zip(&envelope)
        .enumerate()
        .filter(|(_, (d, e))| **d > multiplier * **e)
        .map(|(i, _)| i)
        .collect();
    Ok(GronwallReport {
        times: a.iter().map(|s| s.time).collect(),
        difference,
        envelope,
        multiplier,
        violations,
    })
}
