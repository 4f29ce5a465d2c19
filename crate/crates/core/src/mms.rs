//! Manufactured solution with matching forcing, for convergence studies.
//!
//! With `phi = pi z / h`, `Es(s) = exp(k sin 2 pi s)`, `Ec(s) = exp(k cos 2 pi s)`:
//!
//! ```text
//! v1 = a(t) [Es(y) + Ec(x) cos phi]
//! v2 = a(t) [Es(x) + Ec(y) cos phi]
//! T  = b(t) Es(x) Ec(y) sin phi exp(k cos phi)
//! ```
//!
//! `v` is even and `T` odd in z, the barotropic part `a (Es(y), Es(x))` is
//! divergence free, and every profile is analytic but not band-limited, so
//! spectral errors decay geometrically with resolution.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::SourceSpec;
use crate::error::Result;
use crate::spectral::{Grid3, PhysicalField3D};
use crate::state::{compute_w, make_state, Params, State};
use crate::stepper::{integrate, Scheme, StepperConfig};

/// `exp(k sin 2 pi s)` and its first two derivatives.
fn es(k: f64, s: f64) -> [f64; 3] {
    let (sn, cs) = (2.0 * PI * s).sin_cos();
    let e = (k * sn).exp();
    [
        e,
        2.0 * PI * k * cs * e,
        4.0 * PI * PI * k * (k * cs * cs - sn) * e,
    ]
}

/// `exp(k cos 2 pi s)` and its first two derivatives.
fn ec(k: f64, s: f64) -> [f64; 3] {
    let (sn, cs) = (2.0 * PI * s).sin_cos();
    let e = (k * cs).exp();
    [
        e,
        -2.0 * PI * k * sn * e,
        4.0 * PI * PI * k * (k * sn * sn - cs) * e,
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manufactured {
    pub params: Params,
    /// Velocity amplitude at `t = 0`; `a(t) = amplitude_v exp(-t)`.
    pub amplitude_v: f64,
    /// Temperature amplitude at `t = 0`; `b(t) = amplitude_t cos t`.
    pub amplitude_t: f64,
    /// Profile sharpness `k`.
    pub kappa: f64,
}

/// Values and derivatives of the vertical profiles at one height.
struct Vertical {
    c: [f64; 3],
    s: [f64; 3],
    /// `int_{-h}^z S`.
    s_int: f64,
    /// `int_{-h}^z C = (h / pi) sin phi`.
    c_int: f64,
}

impl Manufactured {
    pub fn new(params: Params) -> Self {
        Self {
            params,
            amplitude_v: 0.5,
            amplitude_t: 0.5,
            kappa: 0.5,
        }
    }

    fn a(&self, t: f64) -> [f64; 2] {
        let a = self.amplitude_v * (-t).exp();
        [a, -a]
    }

    fn b(&self, t: f64) -> [f64; 2] {
        [self.amplitude_t * t.cos(), -self.amplitude_t * t.sin()]
    }

    fn vertical(&self, z: f64) -> Vertical {
        let (h, k) = (self.params.h, self.kappa);
        let q = PI / h;
        let (sn, cs) = (q * z).sin_cos();
        let e = (k * cs).exp();
        Vertical {
            c: [cs, -q * sn, -q * q * cs],
            s: [
                sn * e,
                q * (cs - k * sn * sn) * e,
                q * q * (-sn - 3.0 * k * sn * cs + k * k * sn * sn * sn) * e,
            ],
            s_int: -(h / (PI * k)) * (e - (-k).exp()),
            c_int: sn / q,
        }
    }

    pub fn velocity(&self, x: f64, y: f64, z: f64, t: f64) -> [f64; 2] {
        let k = self.kappa;
        let [a, _] = self.a(t);
        let c = self.vertical(z).c[0];
        [
            a * (es(k, y)[0] + ec(k, x)[0] * c),
            a * (es(k, x)[0] + ec(k, y)[0] * c),
        ]
    }

    pub fn w(&self, x: f64, y: f64, z: f64, t: f64) -> f64 {
        let k = self.kappa;
        let [a, _] = self.a(t);
        -a * (ec(k, x)[1] + ec(k, y)[1]) * self.vertical(z).c_int
    }

    pub fn temperature(&self, x: f64, y: f64, z: f64, t: f64) -> f64 {
        let k = self.kappa;
        let [b, _] = self.b(t);
        b * es(k, x)[0] * ec(k, y)[0] * self.vertical(z).s[0]
    }

    /// `Q_v` such that the exact fields satisfy the momentum equation with
    /// zero surface pressure.
    pub fn momentum_source(&self, x: f64, y: f64, z: f64, t: f64) -> [f64; 2] {
        let p = &self.params;
        let k = self.kappa;
        let [a, da] = self.a(t);
        let [b, _] = self.b(t);
        let vz = self.vertical(z);
        let [c, cz, czz] = vz.c;
        let (esx, esy, ecx, ecy) = (es(k, x), es(k, y), ec(k, x), ec(k, y));

        let v1 = a * (esy[0] + ecx[0] * c);
        let v2 = a * (esx[0] + ecy[0] * c);
        let w = -a * (ecx[1] + ecy[1]) * vz.c_int;

        let (v1x, v1y, v1z) = (a * ecx[1] * c, a * esy[1], a * ecx[0] * cz);
        let (v2x, v2y, v2z) = (a * esx[1], a * ecy[1] * c, a * ecy[0] * cz);
        let lap1 = a * (esy[2] + ecx[2] * c);
        let lap2 = a * (esx[2] + ecy[2] * c);
        let (v1zz, v2zz) = (a * ecx[0] * czz, a * ecy[0] * czz);

        let col_x = b * esx[1] * ecy[0] * vz.s_int;
        let col_y = b * esx[0] * ecy[1] * vz.s_int;

        let q1 = da * (esy[0] + ecx[0] * c) - lap1 / p.r1 - v1zz / p.r2
            + (v1 * v1x + v2 * v1y + w * v1z)
            - p.f0 * v2
            - col_x;
        let q2 = da * (esx[0] + ecy[0] * c) - lap2 / p.r1 - v2zz / p.r2
            + (v1 * v2x + v2 * v2y + w * v2z)
            + p.f0 * v1
            - col_y;
        [q1, q2]
    }

    /// `Q_T` such that the exact fields satisfy the temperature equation.
    pub fn heat_source(&self, x: f64, y: f64, z: f64, t: f64) -> f64 {
        let p = &self.params;
        let k = self.kappa;
        let [a, _] = self.a(t);
        let [b, db] = self.b(t);
        let vz = self.vertical(z);
        let c = vz.c[0];
        let [s, sz, szz] = vz.s;
        let (esx, esy, ecx, ecy) = (es(k, x), es(k, y), ec(k, x), ec(k, y));

        let v1 = a * (esy[0] + ecx[0] * c);
        let v2 = a * (esx[0] + ecy[0] * c);
        let w = -a * (ecx[1] + ecy[1]) * vz.c_int;

        let tx = b * esx[1] * ecy[0] * s;
        let ty = b * esx[0] * ecy[1] * s;
        let tz = b * esx[0] * ecy[0] * sz;
        let tzz = b * esx[0] * ecy[0] * szz;
        let lap_h = b * (esx[2] * ecy[0] + esx[0] * ecy[2]) * s;

        db * esx[0] * ecy[0] * s - tzz / p.r3 - p.epsilon * lap_h
            + v1 * tx
            + v2 * ty
            + w * (tz + 1.0 / p.h)
    }

    pub fn sources(&self) -> SourceSpec {
        let (m, q) = (*self, *self);
        SourceSpec::new()
            .with_momentum(move |x, y, z, t| m.momentum_source(x, y, z, t))
            .with_heat(move |x, y, z, t| q.heat_source(x, y, z, t))
    }

    /// Projected state sampling the exact fields at time `t`.
    pub fn state(&self, grid: Grid3, t: f64) -> Result<State> {
        let v1 = PhysicalField3D::from_fn(grid, |x, y, z| self.velocity(x, y, z, t)[0]);
        let v2 = PhysicalField3D::from_fn(grid, |x, y, z| self.velocity(x, y, z, t)[1]);
        let temp = PhysicalField3D::from_fn(grid, |x, y, z| self.temperature(x, y, z, t));
        Ok(make_state([&v1, &v2], &temp, self.params)?.at_time(t))
    }

    /// Largest pointwise deviation of `v`, `T` and `w` from the exact solution
    /// at `state.time`.
    pub fn max_error(&self, state: &State) -> Result<f64> {
        let t = state.time;
        let g = *state.grid();
        let v1 = state.v1.inverse();
        let v2 = state.v2.inverse();
        let temp = state.temperature.inverse();
        let w = compute_w(state)?.inverse();
        let mut worst: f64 = 0.0;
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                for k in 0..g.nz() {
                    let (x, y, z) = (g.x(i), g.y(j), g.z(k));
                    let [e1, e2] = self.velocity(x, y, z, t);
                    worst = worst
                        .max((v1.get(i, j, k) - e1).abs())
                        .max((v2.get(i, j, k) - e2).abs())
                        .max((temp.get(i, j, k) - self.temperature(x, y, z, t)).abs())
                        .max((w.get(i, j, k) - self.w(x, y, z, t)).abs());
                }
            }
        }
        Ok(worst)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub max_error: f64,
}

/// Runs the manufactured problem on `n^3` grids (with `n` vertical points) to
/// `t_end` at a fixed step and reports the final max-norm error per grid.
pub fn spatial_convergence(
    mms: &Manufactured,
    ns: &[usize],
    scheme: Scheme,
    dt: f64,
    t_end: f64,
) -> Result<Vec<ConvergencePoint>> {
    let source = mms.sources();
    ns.iter()
        .map(|&n| {
            let grid = Grid3::cube(n, mms.params.h)?;
            let s0 = mms.state(grid, 0.0)?;
            let cfg = StepperConfig::fixed(scheme, dt, t_end);
            let out = integrate(s0, &cfg, Some(&source), &mut [])?;
            Ok(ConvergencePoint {
                n,
                max_error: mms.max_error(&out.final_state)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{apply_temperature_operator, apply_velocity_operator, tendency};

    fn params() -> Params {
        Params {
            r1: 2.0,
            r2: 1.5,
            r3: 0.8,
            h: 0.9,
            f0: 0.6,
            epsilon: 0.05,
        }
    }

    fn fd1(f: impl Fn(f64) -> f64, s: f64) -> f64 {
        let e = 1e-5;
        (f(s + e) - f(s - e)) / (2.0 * e)
    }

    fn fd2(f: impl Fn(f64) -> f64, s: f64) -> f64 {
        let e = 1e-4;
        (f(s + e) - 2.0 * f(s) + f(s - e)) / (e * e)
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let m = Manufactured::new(params());
        for s in [0.0, 0.13, 0.41, 0.77] {
            for prof in [es, ec] {
                let d = prof(m.kappa, s);
                assert!((d[1] - fd1(|u| prof(m.kappa, u)[0], s)).abs() < 1e-7);
                assert!((d[2] - fd2(|u| prof(m.kappa, u)[0], s)).abs() < 1e-4);
            }
            let z = -m.params.h + 2.0 * m.params.h * s;
            let v = m.vertical(z);
            assert!((v.s[1] - fd1(|u| m.vertical(u).s[0], z)).abs() < 1e-7);
            assert!((v.s[2] - fd2(|u| m.vertical(u).s[0], z)).abs() < 1e-4);
            assert!((v.c[2] - fd2(|u| m.vertical(u).c[0], z)).abs() < 1e-4);
            assert!((fd1(|u| m.vertical(u).s_int, z) - v.s[0]).abs() < 1e-7);
            assert!((fd1(|u| m.vertical(u).c_int, z) - v.c[0]).abs() < 1e-7);
        }
        assert!(m.vertical(-m.params.h).s_int.abs() < 1e-15);
    }

    #[test]
    fn exact_fields_satisfy_constraints() {
        let m = Manufactured::new(params());
        let g = Grid3::cube(32, m.params.h).unwrap();
        let s = m.state(g, 0.3).unwrap();
        assert!(s.barotropic_divergence() < 1e-12);
        let (pv, pt) = s.parity_residuals();
        assert!(pv < 1e-13 && pt < 1e-13);
        assert!(m.max_error(&s).unwrap() < 1e-9);
    }

    #[test]
    fn forcing_reproduces_time_derivative() {
        // tendency - L u must equal d/dt of the exact fields.
        let m = Manufactured::new(params());
        let p = m.params;
        let g = Grid3::cube(32, p.h).unwrap();
        let t = 0.2;
        let s = m.state(g, t).unwrap();
        let src = m.sources();
        let n = tendency(&s, Some(&src)).unwrap();
        let mut dv1 = n.dv1.clone();
        dv1.axpy(1.0, &apply_velocity_operator(&s.v1, p.r1, p.r2));
        let mut dtemp = n.dt.clone();
        dtemp.axpy(
            1.0,
            &apply_temperature_operator(&s.temperature, p.r3, p.epsilon),
        );
        let e = 1e-5;
        let before = m.state(g, t - e).unwrap();
        let after = m.state(g, t + e).unwrap();
        let mut fd_v1 = after.v1.clone();
        fd_v1.axpy(-1.0, &before.v1);
        let fd_v1 = fd_v1.scaled(0.5 / e);
        let mut fd_t = after.temperature.clone();
        fd_t.axpy(-1.0, &before.temperature);
        let fd_t = fd_t.scaled(0.5 / e);
        assert!(
            dv1.max_coeff_diff(&fd_v1) < 1e-7,
            "{}",
            dv1.max_coeff_diff(&fd_v1)
        );
        assert!(
            dtemp.max_coeff_diff(&fd_t) < 1e-7,
            "{}",
            dtemp.max_coeff_diff(&fd_t)
        );
        assert!(n.surface_pressure.max_abs_coeff() < 1e-9);
    }
}
