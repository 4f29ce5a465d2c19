//! Prognostic state, physical parameters, diagnostic reconstruction of `w` and
//! pressure, and the half-domain utilities (temperature shift, parity extension).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::dealias;
use crate::error::{Error, Result};
use crate::spectral::{
    derivative, horizontal_divergence, parity_project, parity_residual,
    vertical_integral_from_bottom, vertical_mean, Axis, Grid3, Parity, PhysicalField3D,
    SpectralField3D,
};

/// Tolerance on the odd-compatibility of half-domain temperature data.
pub const EXTENSION_TOL: f64 = 1e-8;

/// Physical parameters of the (regularized) system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Horizontal Reynolds number; horizontal viscosity is `1/r1`.
    pub r1: f64,
    /// Vertical Reynolds number; vertical viscosity is `1/r2`.
    pub r2: f64,
    /// Inverse vertical eddy heat diffusivity.
    pub r3: f64,
    /// Half-height of the periodic box (physical layer depth).
    pub h: f64,
    /// Coriolis parameter.
    pub f0: f64,
    /// Horizontal temperature diffusion added by the regularization; 0 selects
    /// the vertical-diffusion-only system.
    #[serde(default)]
    pub epsilon: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            r1: 1.0,
            r2: 1.0,
            r3: 1.0,
            h: 1.0,
            f0: 1.0,
            epsilon: 0.0,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r1", self.r1),
            ("r2", self.r2),
            ("r3", self.r3),
            ("h", self.h),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if !self.f0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "f0 = {} must be finite",
                self.f0
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon = {} must be nonnegative",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// `2 R1^2 (R1 + R2) (R2 - R3)^2 / (R2^2 R3)`, the weight of the temperature
    /// terms in the regularity functional.
    pub fn c_r(&self) -> f64 {
        2.0 * self.r1.powi(2) * (self.r1 + self.r2) * (self.r2 - self.r3).powi(2)
            / (self.r2.powi(2) * self.r3)
    }
}

/// Horizontal velocity (even in z) and shifted temperature (odd in z) on the
/// extended periodic box.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub v1: SpectralField3D,
    pub v2: SpectralField3D,
    pub temperature: SpectralField3D,
    pub params: Params,
    pub time: f64,
}

/// Diagnostic fields reconstructed from a [`State`].
#[derive(Clone, Debug)]
pub struct DerivedFields {
    /// Vertical velocity (odd).
    pub w: SpectralField3D,
    /// Surface pressure (z-independent, zero horizontal mean).
    pub p_s: SpectralField3D,
    /// Full pressure with `d_z p = -T` (even).
    pub p: SpectralField3D,
}

impl State {
    pub fn zeros(grid: Grid3, params: Params) -> Result<Self> {
        Self::from_spectral(
            SpectralField3D::zeros(grid, Parity::Even),
            SpectralField3D::zeros(grid, Parity::Even),
            SpectralField3D::zeros(grid, Parity::Odd),
            params,
            0.0,
        )
    }

    /// Builds a state from spectral fields and projects it onto the constraint
    /// manifold (see [`State::project`]).
    pub fn from_spectral(
        v1: SpectralField3D,
        v2: SpectralField3D,
        temperature: SpectralField3D,
        params: Params,
        time: f64,
    ) -> Result<Self> {
        params.validate()?;
        let grid = *v1.grid();
        if v2.grid() != &grid || temperature.grid() != &grid {
            return Err(Error::Dimension(
                "state fields live on different grids".into(),
            ));
        }
        if (grid.h() - params.h).abs() > 1e-14 * params.h {
            return Err(Error::Dimension(format!(
                "grid half-height {} differs from params.h {}",
                grid.h(),
                params.h
            )));
        }
        let mut s = Self {
            v1,
            v2,
            temperature,
            params,
            time,
        };
        s.project();
        Ok(s)
    }

    pub fn grid(&self) -> &Grid3 {
        self.v1.grid()
    }

    /// Parity projection (v even, T odd), 2/3-rule truncation, and removal of
    /// the gradient part of the barotropic velocity.
    pub fn project(&mut self) {
        self.v1 = dealias(&parity_project(&self.v1, Parity::Even));
        self.v2 = dealias(&parity_project(&self.v2, Parity::Even));
        self.temperature = dealias(&parity_project(&self.temperature, Parity::Odd));
        project_barotropic(&mut self.v1, &mut self.v2);
    }

    /// Same fields at a different time stamp.
    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// L2 norm over M of the divergence of the vertically averaged velocity.
    pub fn barotropic_divergence(&self) -> f64 {
        let div = horizontal_divergence(&vertical_mean(&self.v1), &vertical_mean(&self.v2));
        (div.norm_sq() / self.grid().volume()).sqrt()
    }

    /// `(odd part of v, even part of T)` L2 norms.
    pub fn parity_residuals(&self) -> (f64, f64) {
        let v = (parity_residual(&self.v1, Parity::Even).powi(2)
            + parity_residual(&self.v2, Parity::Even).powi(2))
        .sqrt();
        (v, parity_residual(&self.temperature, Parity::Odd))
    }

    pub fn is_finite(&self) -> bool {
        self.v1.is_finite() && self.v2.is_finite() && self.temperature.is_finite()
    }

    /// `||v||_2^2 + ||T||_2^2`.
    pub fn l2_sq(&self) -> f64 {
        self.v1.norm_sq() + self.v2.norm_sq() + self.temperature.norm_sq()
    }

    /// `||v - other.v||_2^2 + ||T - other.T||_2^2`.
    pub fn distance_sq(&self, other: &State) -> f64 {
        (&self.v1 - &other.v1).norm_sq()
            + (&self.v2 - &other.v2).norm_sq()
            + (&self.temperature - &other.temperature).norm_sq()
    }
}

/// Transforms physical initial data, then projects it onto the admissible
/// class: v even, T odd, divergence-free barotropic velocity, dealiased.
pub fn make_state(
    v0: [&PhysicalField3D; 2],
    t0: &PhysicalField3D,
    params: Params,
) -> Result<State> {
    let grid = *t0.grid();
    if v0[0].grid() != &grid || v0[1].grid() != &grid {
        return Err(Error::Dimension(
            "initial fields live on different grids".into(),
        ));
    }
    for (name, f) in [("v1", v0[0]), ("v2", v0[1]), ("T", t0)] {
        if !f.is_finite() {
            return Err(Error::NonFinite(format!(
                "initial {name} contains NaN or inf"
            )));
        }
    }
    State::from_spectral(v0[0].forward(), v0[1].forward(), t0.forward(), params, 0.0)
}

/// Removes the gradient part of the z-independent modes of `(a, b)` (2D Leray
/// projection); baroclinic modes are untouched.
pub(crate) fn project_barotropic(a: &mut SpectralField3D, b: &mut SpectralField3D) {
    let g = *a.grid();
    let nz = g.nz();
    let ca = a.coeffs_mut();
    let cb = b.coeffs_mut();
    for idx in (0..g.len()).step_by(nz) {
        let (i, j, k) = g.unravel(idx);
        let kv = g.wavevector(i, j, k);
        let k2 = kv[0] * kv[0] + kv[1] * kv[1];
        if k2 == 0.0 {
            continue;
        }
        let proj = (ca[idx] * kv[0] + cb[idx] * kv[1]) / k2;
        ca[idx] -= proj * kv[0];
        cb[idx] -= proj * kv[1];
    }
}

/// `w = -int_{-h}^z div_H v`, odd in z, zero at `z = -h` by construction.
pub fn compute_w(state: &State) -> Result<SpectralField3D> {
    let div = horizontal_divergence(&state.v1, &state.v2);
    let mut w = vertical_integral_from_bottom(&div)?.scaled(-1.0);
    w.set_parity(state.v1.parity().flip());
    Ok(w)
}

/// Surface pressure and full pressure.
///
/// `tendency_bar` is the vertical average of the assembled momentum tendency
/// before any pressure contribution. `p_s` solves `lap_H p_s = div_H tendency_bar`
/// with zero mean, and `p = p_s - int_{-h}^z T`.
pub fn compute_pressure(
    state: &State,
    tendency_bar: [&SpectralField3D; 2],
) -> Result<(SpectralField3D, SpectralField3D)> {
    let grid = *state.grid();
    let a = vertical_mean(tendency_bar[0]);
    let b = vertical_mean(tendency_bar[1]);
    let mut p_s = SpectralField3D::zeros(grid, Parity::Even);
    {
        let out = p_s.coeffs_mut();
        for idx in (0..grid.len()).step_by(grid.nz()) {
            let (i, j, k) = grid.unravel(idx);
            let kv = grid.wavevector(i, j, k);
            let k2 = kv[0] * kv[0] + kv[1] * kv[1];
            if k2 == 0.0 {
                continue;
            }
            // div of (a, b) is i(kx a + ky b); dividing by -|k|^2 inverts lap_H.
            let div =
                Complex64::new(0.0, 1.0) * (a.coeffs()[idx] * kv[0] + b.coeffs()[idx] * kv[1]);
            out[idx] = div / -k2;
        }
    }
    let column = vertical_integral_from_bottom(&state.temperature)?;
    let mut p = p_s.clone();
    p.axpy(-1.0, &column);
    p.set_parity(Parity::Even);
    Ok((p_s, p))
}

/// Gradient of a scalar field, `(d_x f, d_y f)`.
pub(crate) fn gradient_h(f: &SpectralField3D) -> [SpectralField3D; 2] {
    [derivative(f, Axis::X, 1), derivative(f, Axis::Y, 1)]
}

/// Field sampled on the physical half domain `M x [-h, 0]`: vertical planes
/// `k = 0..=nz/2` of the full grid, endpoints included.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfDomainField {
    grid: Grid3,
    values: Vec<f64>,
}

impl HalfDomainField {
    pub fn planes(grid: &Grid3) -> usize {
        grid.nz() / 2 + 1
    }

    pub fn new(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        let expected = grid.nx() * grid.ny() * Self::planes(&grid);
        if values.len() != expected {
            return Err(Error::Dimension(format!(
                "half-domain field needs {expected} samples, got {}",
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let nk = Self::planes(&grid);
        let mut values = Vec::with_capacity(grid.nx() * grid.ny() * nk);
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                for k in 0..nk {
                    values.push(f(grid.x(i), grid.y(j), grid.z(k)));
                }
            }
        }
        Self { grid, values }
    }

    /// Restriction of a full-box field to `M x [-h, 0]`.
    pub fn restrict(full: &PhysicalField3D) -> Self {
        let grid = *full.grid();
        let nk = Self::planes(&grid);
        let mut values = Vec::with_capacity(grid.nx() * grid.ny() * nk);
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                for k in 0..nk {
                    values.push(full.get(i, j, k));
                }
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.grid.ny() + j) * Self::planes(&self.grid) + k]
    }

    fn extend(&self, sign: f64) -> PhysicalField3D {
        let g = self.grid;
        let half = g.nz() / 2;
        let mut values = Vec::with_capacity(g.len());
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                for k in 0..g.nz() {
                    // z_k for k > nz/2 is the reflection of z_{nz-k}.
                    values.push(if k <= half {
                        self.get(i, j, k)
                    } else {
                        sign * self.get(i, j, g.nz() - k)
                    });
                }
            }
        }
        PhysicalField3D::new(g, values).expect("grid-sized")
    }

    /// Even reflection about `z = 0`, periodic with period `2h`.
    pub fn extend_even(&self) -> PhysicalField3D {
        self.extend(1.0)
    }

    /// Odd reflection about `z = 0`, periodic with period `2h`.
    pub fn extend_odd(&self) -> PhysicalField3D {
        self.extend(-1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDirection {
    /// `T + z/h`: maps the conduction profile to zero.
    Shift,
    /// `T - z/h`.
    Unshift,
}

/// Adds (or removes) the conduction profile `-z/h`, turning the boundary data
/// `T(-h) = 1, T(0) = 0` into homogeneous ones.
pub fn shift_temperature(t: &HalfDomainField, direction: ShiftDirection) -> HalfDomainField {
    let g = t.grid;
    let sign = match direction {
        ShiftDirection::Shift => 1.0,
        ShiftDirection::Unshift => -1.0,
    };
    let nk = HalfDomainField::planes(&g);
    let values = t
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| v + sign * g.z(idx % nk) / g.h())
        .collect();
    HalfDomainField { grid: g, values }
}

/// Even extension of the velocity and odd extension of the shifted
/// temperature from `M x (-h, 0)` to the periodic box.
pub fn extend_to_full_domain(
    v_half: [&HalfDomainField; 2],
    t_half: &HalfDomainField,
) -> Result<([PhysicalField3D; 2], PhysicalField3D)> {
    let g = t_half.grid;
    if v_half[0].grid != g || v_half[1].grid != g {
        return Err(Error::Dimension(
            "half-domain fields live on different grids".into(),
        ));
    }
    let top = g.nz() / 2;
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            for k in [0, top] {
                let v = t_half.get(i, j, k);
                if v.abs() > EXTENSION_TOL {
                    return Err(Error::Incompatible(format!(
                        "shifted temperature is {v:.3e} at z = {}; the odd extension needs zero \
                         boundary values",
                        g.z(k)
                    )));
                }
            }
        }
    }
    Ok((
        [v_half[0].extend_even(), v_half[1].extend_even()],
        t_half.extend_odd(),
    ))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn grid() -> Grid3 {
        Grid3::new(16, 16, 16, 1.0).unwrap()
    }

    fn params() -> Params {
        Params::default()
    }

    #[test]
    fn zero_initial_data() {
        let g = grid();
        let z = PhysicalField3D::zeros(g);
        let s = make_state([&z, &z], &z, params()).unwrap();
        assert_eq!(s.l2_sq(), 0.0);
    }

    #[test]
    fn divergence_free_input_unchanged() {
        let g = grid();
        let v1 = PhysicalField3D::from_fn(g, |_, y, _| (2.0 * PI * y).sin());
        let z = PhysicalField3D::zeros(g);
        let s = make_state([&v1, &z], &z, params()).unwrap();
        assert!(s.v1.max_coeff_diff(&v1.forward()) < 1e-15);
        assert!(s.v2.max_abs_coeff() < 1e-15);
    }

    #[test]
    fn gradient_barotropic_mode_removed() {
        let g = grid();
        let v1 = PhysicalField3D::from_fn(g, |x, _, _| (2.0 * PI * x).sin());
        let z = PhysicalField3D::zeros(g);
        let s = make_state([&v1, &z], &z, params()).unwrap();
        assert!(s.v1.max_abs_coeff() < 1e-15);
        assert!(s.barotropic_divergence() < 1e-14);
    }

    #[test]
    fn projection_enforces_invariants() {
        let g = grid();
        let v1 = PhysicalField3D::from_fn(g, |x, y, z| (2.0 * PI * x).sin() * (1.0 + z) + y);
        let v2 = PhysicalField3D::from_fn(g, |x, y, z| (2.0 * PI * (x + y)).cos() * z * z);
        let t = PhysicalField3D::from_fn(g, |x, _, z| (PI * z).cos() + x * z);
        let s = make_state([&v1, &v2], &t, params()).unwrap();
        let (rv, rt) = s.parity_residuals();
        assert!(rv < 1e-12 && rt < 1e-12);
        assert!(s.barotropic_divergence() < 1e-10);
    }

    #[test]
    fn rejects_nan_and_mismatch() {
        let g = grid();
        let z = PhysicalField3D::zeros(g);
        let bad = z.map(|_| f64::NAN);
        assert!(matches!(
            make_state([&bad, &z], &z, params()),
            Err(Error::NonFinite(_))
        ));
        let other = PhysicalField3D::zeros(Grid3::cube(8, 1.0).unwrap());
        assert!(matches!(
            make_state([&other, &z], &z, params()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn w_vanishes_for_barotropic_flow() {
        let g = grid();
        let v1 = PhysicalField3D::from_fn(g, |_, y, _| (2.0 * PI * y).sin());
        let z = PhysicalField3D::zeros(g);
        let s = make_state([&v1, &z], &z, params()).unwrap();
        assert!(compute_w(&s).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn w_of_baroclinic_shear() {
        let g = grid();
        let h = g.h();
        let v1 = PhysicalField3D::from_fn(g, |x, _, z| (2.0 * PI * x).sin() * (PI * z / h).cos());
        let z = PhysicalField3D::zeros(g);
        let s = make_state([&v1, &z], &z, params()).unwrap();
        let w = compute_w(&s).unwrap();
        let expected = SpectralField3D::from_fn(g, Parity::Odd, |x, _, z| {
            -2.0 * h * (2.0 * PI * x).cos() * (PI * z / h).sin()
        });
        assert!(w.max_coeff_diff(&expected) < 1e-14);
        assert_eq!(w.parity(), Parity::Odd);
    }

    #[test]
    fn pressure_examples() {
        let g = grid();
        let h = g.h();
        let z = PhysicalField3D::zeros(g);
        let t = PhysicalField3D::from_fn(g, |x, y, z| {
            (PI * z / h).sin() * (2.0 * PI * x).cos() * (2.0 * PI * y).sin()
        });
        let s = make_state([&z, &z], &t, params()).unwrap();
        let zero = SpectralField3D::zeros(g, Parity::Even);
        let (p_s, p) = compute_pressure(&s, [&zero, &zero]).unwrap();
        assert_eq!(p_s.max_abs_coeff(), 0.0);
        let expected = SpectralField3D::from_fn(g, Parity::Even, |x, y, z| {
            h / PI * ((PI * z / h).cos() + 1.0) * (2.0 * PI * x).cos() * (2.0 * PI * y).sin()
        });
        assert!(p.max_coeff_diff(&expected) < 1e-14);
        // hydrostatic balance
        let mut balance = derivative(&p, Axis::Z, 1);
        balance.axpy(1.0, &s.temperature);
        assert!(balance.norm() < 1e-10);

        // tendency = grad(cos 2 pi x) gives p_s = cos 2 pi x
        let phi = SpectralField3D::from_fn(g, Parity::Even, |x, _, _| (2.0 * PI * x).cos());
        let grad = gradient_h(&phi);
        let s0 = State::zeros(g, params()).unwrap();
        let (p_s, _) = compute_pressure(&s0, [&grad[0], &grad[1]]).unwrap();
        assert!(p_s.max_coeff_diff(&phi) < 1e-14);
    }

    #[test]
    fn conduction_profile_shifts_to_zero() {
        let g = grid();
        let raw = HalfDomainField::from_fn(g, |_, _, z| -z / g.h());
        let shifted = shift_temperature(&raw, ShiftDirection::Shift);
        assert!(shifted.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shift_roundtrip_and_boundary_values() {
        let g = grid();
        let raw = HalfDomainField::from_fn(g, |x, _, z| {
            -z / g.h() + (PI * z / g.h()).sin() * (2.0 * PI * x).cos()
        });
        let back = shift_temperature(
            &shift_temperature(&raw, ShiftDirection::Unshift),
            ShiftDirection::Shift,
        );
        for (a, b) in back.values().iter().zip(raw.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let shifted = shift_temperature(&raw, ShiftDirection::Shift);
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                assert!(shifted.get(i, j, 0).abs() < 1e-15);
                assert!(shifted.get(i, j, g.nz() / 2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn extension_examples() {
        let g = grid();
        let h = g.h();
        let t_half = HalfDomainField::from_fn(g, |_, _, z| (PI * z / h).sin());
        let v_half = HalfDomainField::from_fn(g, |x, _, _| (2.0 * PI * x).cos());
        let ([v1, v2], t) = extend_to_full_domain([&v_half, &v_half], &t_half).unwrap();
        let expected = PhysicalField3D::from_fn(g, |_, _, z| (PI * z / h).sin());
        for (a, b) in t.values().iter().zip(expected.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let flat = PhysicalField3D::from_fn(g, |x, _, _| (2.0 * PI * x).cos());
        assert_eq!(v1, flat);
        assert_eq!(v2, flat);
        assert_eq!(HalfDomainField::restrict(&t), t_half);
    }

    #[test]
    fn extension_rejects_incompatible_temperature() {
        let g = grid();
        let raw = HalfDomainField::from_fn(g, |_, _, z| -z / g.h());
        let v = HalfDomainField::from_fn(g, |_, _, _| 0.0);
        assert!(matches!(
            extend_to_full_domain([&v, &v], &raw),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn c_r_vanishes_for_equal_vertical_coefficients() {
        let p = Params {
            r1: 2.0,
            r2: 3.0,
            r3: 3.0,
            ..Params::default()
        };
        assert_eq!(p.c_r(), 0.0);
        let q = Params {
            r1: 1.0,
            r2: 2.0,
            r3: 1.0,
            ..Params::default()
        };
        // 2 * 1 * 3 * 1 / (4 * 1)
        assert!((q.c_r() - 1.5).abs() < 1e-15);
    }
}
