//! Explicit tendencies of the pressure-eliminated primitive equations.
//!
//! The stiff operators `L1 v`, `L2 T` and `eps lap_H T` are left to the time
//! stepper. Everything else (advection by `(v, w)`, Coriolis, the buoyancy
//! column, optional sources, and the surface-pressure projection of the
//! barotropic mode) is assembled here.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    derivative, parity_residual, vertical_average_split, vertical_integral_from_bottom, Axis,
    Grid3, Parity, PhysicalField3D, SpectralField3D,
};
use crate::state::{compute_pressure, compute_w, gradient_h, DerivedFields, State};

/// Zeroes every mode with `|k_x| > nx/3`, `|k_y| > ny/3` or `|m| > nz/3`.
pub fn dealias(f: &SpectralField3D) -> SpectralField3D {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place(f: &mut SpectralField3D) {
    let g = *f.grid();
    let (nx, ny, nz) = (g.nx() as i64, g.ny() as i64, g.nz() as i64);
    for (idx, c) in f.coeffs_mut().iter_mut().enumerate() {
        let (i, j, k) = g.unravel(idx);
        let [kx, ky, m] = g.wavenumbers(i, j, k);
        if 3 * kx.abs() > nx || 3 * ky.abs() > ny || 3 * m.abs() > nz {
            *c = Complex64::default();
        }
    }
}

pub type MomentumSource = dyn Fn(f64, f64, f64, f64) -> [f64; 2] + Send + Sync;
pub type HeatSource = dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync;

/// Optional analytic forcing `Q_v(x, y, z, t)` and `Q_T(x, y, z, t)`.
#[derive(Clone, Default)]
pub struct SourceSpec {
    momentum: Option<Arc<MomentumSource>>,
    heat: Option<Arc<HeatSource>>,
}

impl fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceSpec")
            .field("momentum", &self.momentum.is_some())
            .field("heat", &self.heat.is_some())
            .finish()
    }
}

/// Sampled and transformed forcing at one instant.
pub struct SampledSource {
    pub momentum: Option<[SpectralField3D; 2]>,
    pub heat: Option<SpectralField3D>,
}

impl SourceSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_momentum(
        mut self,
        f: impl Fn(f64, f64, f64, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.momentum = Some(Arc::new(f));
        self
    }

    pub fn with_heat(
        mut self,
        f: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.heat = Some(Arc::new(f));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.momentum.is_none() && self.heat.is_none()
    }

    /// Point samples of the forcing on the collocation grid.
    pub fn sample_physical(
        &self,
        grid: Grid3,
        t: f64,
    ) -> (Option<[PhysicalField3D; 2]>, Option<PhysicalField3D>) {
        let momentum = self.momentum.as_ref().map(|q| {
            [
                PhysicalField3D::from_fn(grid, |x, y, z| q(x, y, z, t)[0]),
                PhysicalField3D::from_fn(grid, |x, y, z| q(x, y, z, t)[1]),
            ]
        });
        let heat = self
            .heat
            .as_ref()
            .map(|q| PhysicalField3D::from_fn(grid, |x, y, z| q(x, y, z, t)));
        (momentum, heat)
    }

    /// Forcing at time `t`, transformed and truncated like the state.
    pub fn sample(&self, grid: Grid3, t: f64) -> SampledSource {
        let (momentum, heat) = self.sample_physical(grid, t);
        SampledSource {
            momentum: momentum.map(|[a, b]| {
                [
                    dealias(&a.forward()).with_parity(Parity::Even),
                    dealias(&b.forward()).with_parity(Parity::Even),
                ]
            }),
            heat: heat.map(|f| dealias(&f.forward()).with_parity(Parity::Odd)),
        }
    }

    /// Checks that `Q_v` is even and `Q_T` odd in z at time `t`, relative to
    /// the sampled field norms.
    pub fn check_parity(&self, grid: Grid3, t: f64, tol: f64) -> Result<()> {
        let s = self.sample(grid, t);
        if let Some(q) = &s.momentum {
            for c in q {
                let r = parity_residual(c, Parity::Even);
                if r > tol * c.norm().max(1.0) {
                    return Err(Error::Precondition(format!(
                        "momentum source has odd part {r:.3e}"
                    )));
                }
            }
        }
        if let Some(q) = &s.heat {
            let r = parity_residual(q, Parity::Odd);
            if r > tol * q.norm().max(1.0) {
                return Err(Error::Precondition(format!(
                    "heat source has even part {r:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Explicit right-hand side at one state.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub dv1: SpectralField3D,
    pub dv2: SpectralField3D,
    pub dt: SpectralField3D,
    /// Surface pressure used to project the barotropic momentum tendency.
    pub surface_pressure: SpectralField3D,
}

/// Vertical-mean (barotropic) and fluctuating (baroclinic) parts of a
/// tendency, in the order `[dv1, dv2, dT]`.
#[derive(Clone, Debug)]
pub struct TendencySplit {
    pub barotropic: [SpectralField3D; 3],
    pub baroclinic: [SpectralField3D; 3],
}

impl TendencySplit {
    pub fn reconstruct(&self) -> [SpectralField3D; 3] {
        [0, 1, 2].map(|c| &self.barotropic[c] + &self.baroclinic[c])
    }
}

pub fn barotropic_baroclinic_split(t: &Tendency) -> TendencySplit {
    let (b1, c1) = vertical_average_split(&t.dv1);
    let (b2, c2) = vertical_average_split(&t.dv2);
    let (b3, c3) = vertical_average_split(&t.dt);
    TendencySplit {
        barotropic: [b1, b2, b3],
        baroclinic: [c1, c2, c3],
    }
}

fn products(terms: &[(&PhysicalField3D, &PhysicalField3D)]) -> PhysicalField3D {
    let mut out = PhysicalField3D::zeros(*terms[0].0.grid());
    for (a, b) in terms {
        for ((o, x), y) in out.values_mut().iter_mut().zip(a.values()).zip(b.values()) {
            *o += x * y;
        }
    }
    out
}

/// Nonlinear advection terms `(v . grad_H) v + w d_z v` and
/// `v . grad_H T + w (d_z T + 1/h)`, dealiased.
fn advection(state: &State, w: &SpectralField3D) -> [SpectralField3D; 3] {
    let h = state.params.h;
    let v1 = state.v1.inverse();
    let v2 = state.v2.inverse();
    let wp = w.inverse();
    let grad =
        |f: &SpectralField3D| [Axis::X, Axis::Y, Axis::Z].map(|ax| derivative(f, ax, 1).inverse());
    let [v1x, v1y, v1z] = grad(&state.v1);
    let [v2x, v2y, v2z] = grad(&state.v2);
    let [tx, ty, mut tz] = grad(&state.temperature);
    for v in tz.values_mut() {
        *v += 1.0 / h;
    }
    let a1 = products(&[(&v1, &v1x), (&v2, &v1y), (&wp, &v1z)]);
    let a2 = products(&[(&v1, &v2x), (&v2, &v2y), (&wp, &v2z)]);
    let at = products(&[(&v1, &tx), (&v2, &ty), (&wp, &tz)]);
    [a1, a2, at].map(|f| dealias(&f.forward()))
}

/// Momentum tendency before the surface-pressure projection, and the
/// temperature tendency.
fn unprojected(
    state: &State,
    source: Option<&SourceSpec>,
) -> Result<(SpectralField3D, SpectralField3D, SpectralField3D)> {
    let f0 = state.params.f0;
    let w = compute_w(state)?;
    let [a1, a2, at] = advection(state, &w);

    let column = vertical_integral_from_bottom(&state.temperature)?;
    let [gx, gy] = gradient_h(&column);

    // -f0 k x v = f0 (v2, -v1)
    let mut n1 = a1.scaled(-1.0);
    n1.axpy(f0, &state.v2);
    n1.axpy(1.0, &gx);
    let mut n2 = a2.scaled(-1.0);
    n2.axpy(-f0, &state.v1);
    n2.axpy(1.0, &gy);
    let mut nt = at.scaled(-1.0);

    if let Some(src) = source.filter(|s| !s.is_empty()) {
        let sampled = src.sample(*state.grid(), state.time);
        if let Some([q1, q2]) = &sampled.momentum {
            n1.axpy(1.0, q1);
            n2.axpy(1.0, q2);
        }
        if let Some(q) = &sampled.heat {
            nt.axpy(1.0, q);
        }
    }
    Ok((n1, n2, nt))
}

/// Full explicit right-hand side at `state.time`, excluding `L1 v`, `L2 T` and
/// `eps lap_H T`.
pub fn tendency(state: &State, source: Option<&SourceSpec>) -> Result<Tendency> {
    let (mut n1, mut n2, mut nt) = unprojected(state, source)?;
    let (p_s, _) = compute_pressure(state, [&n1, &n2])?;
    let [px, py] = gradient_h(&p_s);
    n1.axpy(-1.0, &px);
    n2.axpy(-1.0, &py);
    n1.set_parity(Parity::Even);
    n2.set_parity(Parity::Even);
    nt.set_parity(Parity::Odd);
    Ok(Tendency {
        dv1: n1,
        dv2: n2,
        dt: nt,
        surface_pressure: p_s,
    })
}

/// `w`, `p_s` and `p` for a state.
pub fn derived_fields(state: &State, source: Option<&SourceSpec>) -> Result<DerivedFields> {
    let (n1, n2, _) = unprojected(state, source)?;
    let (p_s, p) = compute_pressure(state, [&n1, &n2])?;
    Ok(DerivedFields {
        w: compute_w(state)?,
        p_s,
        p,
    })
}

/// Symbol of the implicit velocity operator `L1`: `|k_H|^2 / R1 + m^2 / R2`
/// with physical wavenumbers.
pub fn velocity_symbol(kv: [f64; 3], r1: f64, r2: f64) -> f64 {
    (kv[0] * kv[0] + kv[1] * kv[1]) / r1 + kv[2] * kv[2] / r2
}

/// Symbol of `L2 - eps lap_H`: `m^2 / R3 + eps |k_H|^2`.
pub fn temperature_symbol(kv: [f64; 3], r3: f64, epsilon: f64) -> f64 {
    kv[2] * kv[2] / r3 + epsilon * (kv[0] * kv[0] + kv[1] * kv[1])
}

/// `-L1 v` for a velocity component.
pub fn apply_velocity_operator(f: &SpectralField3D, r1: f64, r2: f64) -> SpectralField3D {
    let mut out = f.clone();
    out.map_modes(|kv, c| c * -velocity_symbol(kv, r1, r2));
    out
}

/// `-(L2 - eps lap_H) T`.
pub fn apply_temperature_operator(f: &SpectralField3D, r3: f64, epsilon: f64) -> SpectralField3D {
    let mut out = f.clone();
    out.map_modes(|kv, c| c * -temperature_symbol(kv, r3, epsilon));
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::{horizontal_divergence, parity_project, vertical_mean};
    use crate::state::{make_state, Params};

    fn grid() -> Grid3 {
        Grid3::new(16, 16, 16, 1.0).unwrap()
    }

    fn params() -> Params {
        Params {
            r1: 2.0,
            r2: 1.5,
            r3: 0.7,
            h: 1.0,
            f0: 1.3,
            epsilon: 0.0,
        }
    }

    fn smooth_state(g: Grid3, p: Params) -> State {
        let h = g.h();
        let v1 = PhysicalField3D::from_fn(g, |x, y, z| {
            (2.0 * PI * y).sin()
                + 0.4 * (2.0 * PI * x).cos() * (PI * z / h).cos()
                + 0.2 * (2.0 * PI * (x + 2.0 * y)).sin() * (2.0 * PI * z / h).cos()
        });
        let v2 = PhysicalField3D::from_fn(g, |x, y, z| {
            0.5 * (2.0 * PI * x).sin() + 0.3 * (2.0 * PI * y).cos() * (PI * z / h).cos()
        });
        let t = PhysicalField3D::from_fn(g, |x, y, z| {
            (PI * z / h).sin() * (0.5 + (2.0 * PI * x).cos() * (2.0 * PI * y).sin())
                + 0.3 * (2.0 * PI * z / h).sin() * (2.0 * PI * y).cos()
        });
        make_state([&v1, &v2], &t, p).unwrap()
    }

    #[test]
    fn zero_state_has_zero_tendency() {
        let s = State::zeros(grid(), params()).unwrap();
        let t = tendency(&s, None).unwrap();
        assert_eq!(t.dv1.max_abs_coeff(), 0.0);
        assert_eq!(t.dv2.max_abs_coeff(), 0.0);
        assert_eq!(t.dt.max_abs_coeff(), 0.0);
    }

    #[test]
    fn horizontal_shear_tendency_vanishes() {
        let g = grid();
        let e = 0.8;
        let v1 = PhysicalField3D::from_fn(g, |_, y, _| e * (2.0 * PI * y).sin());
        let z = PhysicalField3D::zeros(g);
        let s = make_state([&v1, &z], &z, params()).unwrap();
        let t = tendency(&s, None).unwrap();
        assert!(t.dv1.max_abs_coeff() < 1e-14);
        assert!(t.dv2.max_abs_coeff() < 1e-14);
        // Coriolis is absorbed by p_s = f0 e cos(2 pi y) / (2 pi)
        let expected = SpectralField3D::from_fn(g, Parity::Even, |_, y, _| {
            params().f0 * e * (2.0 * PI * y).cos() / (2.0 * PI)
        });
        assert!(t.surface_pressure.max_coeff_diff(&expected) < 1e-14);
    }

    #[test]
    fn vertical_heat_mode_has_zero_tendency() {
        let g = grid();
        let z = PhysicalField3D::zeros(g);
        let t0 = PhysicalField3D::from_fn(g, |_, _, z| (PI * z).sin());
        let s = make_state([&z, &z], &t0, params()).unwrap();
        let t = tendency(&s, None).unwrap();
        assert!(t.dt.max_abs_coeff() < 1e-15);
        assert!(t.dv1.max_abs_coeff() < 1e-15);
        assert!(t.dv2.max_abs_coeff() < 1e-15);
    }

    #[test]
    fn dealias_examples() {
        let g = grid();
        let low = SpectralField3D::from_fn(g, Parity::Even, |x, y, z| {
            (2.0 * PI * 5.0 * x).cos() * (2.0 * PI * 3.0 * y).sin() * (5.0 * PI * z).cos()
        });
        assert!(dealias(&low).max_coeff_diff(&low) < 1e-15);
        let mut nyq = SpectralField3D::zeros(g, Parity::Even);
        nyq.set_mode(8, 0, 0, Complex64::new(1.0, 0.0));
        assert_eq!(dealias(&nyq).max_abs_coeff(), 0.0);
        let mut six = SpectralField3D::zeros(g, Parity::Even);
        six.set_mode(0, 6, 0, Complex64::new(1.0, 0.0));
        assert_eq!(dealias(&six).max_abs_coeff(), 0.0);
        let f = SpectralField3D::from_fn(g, Parity::None, |x, y, z| (x * y + z).exp());
        let once = dealias(&f);
        assert_eq!(dealias(&once), once);
    }

    #[test]
    fn parity_closure_of_tendency() {
        let s = smooth_state(grid(), params());
        let t = tendency(&s, None).unwrap();
        for c in [&t.dv1, &t.dv2] {
            assert!(parity_residual(c, Parity::Even) < 1e-10 * c.norm().max(1.0));
        }
        assert!(parity_residual(&t.dt, Parity::Odd) < 1e-10 * t.dt.norm().max(1.0));
    }

    #[test]
    fn projected_barotropic_tendency_is_divergence_free() {
        let s = smooth_state(grid(), params());
        let t = tendency(&s, None).unwrap();
        let div = horizontal_divergence(&vertical_mean(&t.dv1), &vertical_mean(&t.dv2));
        assert!(div.norm() < 1e-10);
        // pressure work on v vanishes
        let [px, py] = gradient_h(&t.surface_pressure);
        let work = px.inner(&s.v1) + py.inner(&s.v2);
        assert!(work.abs() < 1e-10);
    }

    #[test]
    fn buoyancy_exchange_identity() {
        let s = smooth_state(grid(), params());
        let column = vertical_integral_from_bottom(&s.temperature).unwrap();
        let [gx, gy] = gradient_h(&column);
        let lhs = gx.inner(&s.v1) + gy.inner(&s.v2);
        let rhs = -column.inner(&horizontal_divergence(&s.v1, &s.v2));
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn advection_vanishes_for_depth_dependent_flow() {
        let g = grid();
        let v1 = PhysicalField3D::from_fn(g, |_, _, z| 1.0 + (PI * z).cos());
        let v2 = PhysicalField3D::from_fn(g, |_, _, z| 0.5 * (2.0 * PI * z).cos());
        let z = PhysicalField3D::zeros(g);
        let s = make_state([&v1, &v2], &z, params()).unwrap();
        let w = compute_w(&s).unwrap();
        assert!(w.max_abs_coeff() < 1e-15);
        let adv = advection(&s, &w);
        assert!(adv[0].max_abs_coeff() < 1e-14 && adv[1].max_abs_coeff() < 1e-14);
    }

    #[test]
    fn split_reconstructs_tendency() {
        let s = smooth_state(grid(), params());
        let t = tendency(&s, None).unwrap();
        let split = barotropic_baroclinic_split(&t);
        let [a, b, c] = split.reconstruct();
        assert!(a.max_coeff_diff(&t.dv1) < 1e-10);
        assert!(b.max_coeff_diff(&t.dv2) < 1e-10);
        assert!(c.max_coeff_diff(&t.dt) < 1e-10);
        // the temperature tendency of an odd state has no barotropic part
        assert!(split.barotropic[2].max_abs_coeff() < 1e-12);
    }

    #[test]
    fn split_of_simple_tendencies() {
        let g = grid();
        let flat = SpectralField3D::from_fn(g, Parity::Even, |x, _, _| (2.0 * PI * x).sin());
        let odd = SpectralField3D::from_fn(g, Parity::Odd, |x, _, z| {
            (2.0 * PI * x).sin() * (PI * z).sin()
        });
        let t = Tendency {
            dv1: flat.clone(),
            dv2: flat.clone(),
            dt: odd.clone(),
            surface_pressure: SpectralField3D::zeros(g, Parity::Even),
        };
        let split = barotropic_baroclinic_split(&t);
        assert!(split.baroclinic[0].max_abs_coeff() < 1e-15);
        assert!(split.barotropic[2].max_abs_coeff() < 1e-15);
    }

    /// The barotropic momentum tendency written in split form: vertical mean
    /// advection equals `(vb . grad) vb + mean((vt . grad) vt + (div vt) vt)`.
    #[test]
    fn barotropic_advection_matches_split_form() {
        let g = grid();
        let s = smooth_state(g, params());
        let (vb1, vt1) = vertical_average_split(&s.v1);
        let (vb2, vt2) = vertical_average_split(&s.v2);
        let phys = |f: &SpectralField3D| f.inverse();
        let d = |f: &SpectralField3D, ax| derivative(f, ax, 1).inverse();
        let div_t = horizontal_divergence(&vt1, &vt2).inverse();
        let mut expected = Vec::new();
        for (vb, vt) in [(&vb1, &vt1), (&vb2, &vt2)] {
            let f = products(&[
                (&phys(&vb1), &d(vb, Axis::X)),
                (&phys(&vb2), &d(vb, Axis::Y)),
                (&phys(&vt1), &d(vt, Axis::X)),
                (&phys(&vt2), &d(vt, Axis::Y)),
                (&div_t, &phys(vt)),
            ]);
            expected.push(vertical_mean(&dealias(&f.forward())));
        }
        let w = compute_w(&s).unwrap();
        let adv = advection(&s, &w);
        for c in 0..2 {
            let got = vertical_mean(&adv[c]);
            assert!(got.max_coeff_diff(&expected[c]) < 1e-12);
        }
    }

    #[test]
    fn source_parity_check() {
        let g = grid();
        let good = SourceSpec::new()
            .with_momentum(|x, _, z, _| [(PI * z).cos() * x.sin(), 0.0])
            .with_heat(|_, _, z, t| (PI * z).sin() * (1.0 + t));
        assert!(good.check_parity(g, 0.0, 1e-10).is_ok());
        let bad = SourceSpec::new().with_heat(|_, _, z, _| (PI * z).cos());
        assert!(bad.check_parity(g, 0.0, 1e-10).is_err());
    }

    #[test]
    fn source_enters_tendency() {
        let g = grid();
        let s = State::zeros(g, params()).unwrap();
        let src = SourceSpec::new().with_heat(|x, _, z, _| (PI * z).sin() * (2.0 * PI * x).cos());
        let t = tendency(&s, Some(&src)).unwrap();
        let expected = SpectralField3D::from_fn(g, Parity::Odd, |x, _, z| {
            (PI * z).sin() * (2.0 * PI * x).cos()
        });
        assert!(t.dt.max_coeff_diff(&expected) < 1e-14);
        let _ = parity_project(&t.dt, Parity::Odd);
    }
}
