//! Low-order finite-difference solver used only to cross-check the spectral
//! path. Second-order central differences, trapezoidal vertical integrals, a
//! conjugate-gradient surface-pressure solve and explicit RK4 in time. No FFTs.

use crate::dynamics::SourceSpec;
use crate::error::{Error, Result};
use crate::spectral::{Axis, Grid3, PhysicalField3D};
use crate::state::{compute_w, Params, State};
use crate::stepper::{integrate, StepperConfig, BLOW_UP_THRESHOLD};

/// Grid-level tolerance for the parity constraints of [`FdState`].
pub const FD_PARITY_TOL: f64 = 1e-8;

/// Largest `dt * lambda_max` accepted by [`fd_step`]; RK4 is stable on the
/// negative real axis up to about 2.78.
const RK4_DIFFUSIVE_LIMIT: f64 = 2.5;

fn shift_index(i: usize, s: isize, n: usize) -> usize {
    (i as isize + s).rem_euclid(n as isize) as usize
}

/// `f` shifted by `s` grid cells along `axis`: `out(x) = f(x + s * spacing)`.
fn shifted(f: &PhysicalField3D, axis: Axis, s: isize) -> PhysicalField3D {
    let g = *f.grid();
    let src = f.values();
    let mut out = vec![0.0; g.len()];
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            for k in 0..g.nz() {
                let (a, b, c) = match axis {
                    Axis::X => (shift_index(i, s, g.nx()), j, k),
                    Axis::Y => (i, shift_index(j, s, g.ny()), k),
                    Axis::Z => (i, j, shift_index(k, s, g.nz())),
                };
                out[g.index(i, j, k)] = src[g.index(a, b, c)];
            }
        }
    }
    PhysicalField3D::new(g, out).expect("same grid")
}

fn spacing(g: &Grid3, axis: Axis) -> f64 {
    match axis {
        Axis::X => g.dx(),
        Axis::Y => g.dy(),
        Axis::Z => g.dz(),
    }
}

/// Periodic difference quotient `(f(x + l e_axis) - f(x)) / l`.
///
/// `l` must be a nonzero integer multiple of the grid spacing along `axis`.
pub fn difference_quotient(f: &PhysicalField3D, axis: Axis, l: f64) -> Result<PhysicalField3D> {
    let d = spacing(f.grid(), axis);
    let cells = l / d;
    let s = cells.round();
    if l == 0.0 || !l.is_finite() || (cells - s).abs() > 1e-9 * cells.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "shift {l} is not a nonzero multiple of the grid spacing {d}"
        )));
    }
    let fs = shifted(f, axis, s as isize);
    Ok(fs.zip_map(f, |a, b| (a - b) / l))
}

/// Central first difference.
fn d1(f: &PhysicalField3D, axis: Axis) -> PhysicalField3D {
    let inv = 0.5 / spacing(f.grid(), axis);
    shifted(f, axis, 1).zip_map(&shifted(f, axis, -1), |a, b| (a - b) * inv)
}

/// Compact second difference.
fn d2(f: &PhysicalField3D, axis: Axis) -> PhysicalField3D {
    let inv = 1.0 / spacing(f.grid(), axis).powi(2);
    let sum = shifted(f, axis, 1).zip_map(&shifted(f, axis, -1), |a, b| a + b);
    sum.zip_map(f, |s, c| (s - 2.0 * c) * inv)
}

fn axpy(y: &mut PhysicalField3D, a: f64, x: &PhysicalField3D) {
    for (u, v) in y.values_mut().iter_mut().zip(x.values()) {
        *u += a * v;
    }
}

fn scaled(f: &PhysicalField3D, a: f64) -> PhysicalField3D {
    f.map(|v| a * v)
}

/// Cumulative trapezoid `int_{-h}^{z_k} f dz` in every column.
fn integral_from_bottom(f: &PhysicalField3D) -> PhysicalField3D {
    let g = *f.grid();
    let dz = g.dz();
    let src = f.values();
    let mut out = vec![0.0; g.len()];
    for col in 0..g.nx() * g.ny() {
        let base = col * g.nz();
        for k in 1..g.nz() {
            out[base + k] = out[base + k - 1] + 0.5 * dz * (src[base + k - 1] + src[base + k]);
        }
    }
    PhysicalField3D::new(g, out).expect("same grid")
}

/// Column means, one value per `(i, j)`.
fn column_mean(f: &PhysicalField3D) -> Vec<f64> {
    let nz = f.grid().nz();
    f.values()
        .chunks(nz)
        .map(|c| c.iter().sum::<f64>() / nz as f64)
        .collect()
}

/// Horizontal 2D grid functions stored as `i * ny + j`.
struct Plane {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
}

impl Plane {
    fn of(g: &Grid3) -> Self {
        Self {
            nx: g.nx(),
            ny: g.ny(),
            dx: g.dx(),
            dy: g.dy(),
        }
    }

    fn dx(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for i in 0..self.nx {
            let (ip, im) = ((i + 1) % self.nx, (i + self.nx - 1) % self.nx);
            for j in 0..self.ny {
                out[i * self.ny + j] =
                    (f[ip * self.ny + j] - f[im * self.ny + j]) / (2.0 * self.dx);
            }
        }
        out
    }

    fn dy(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for i in 0..self.nx {
            for j in 0..self.ny {
                let (jp, jm) = ((j + 1) % self.ny, (j + self.ny - 1) % self.ny);
                out[i * self.ny + j] =
                    (f[i * self.ny + jp] - f[i * self.ny + jm]) / (2.0 * self.dy);
            }
        }
        out
    }

    fn div(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.dx(a)
            .iter()
            .zip(self.dy(b))
            .map(|(p, q)| p + q)
            .collect()
    }

    /// `-(Dx Dx + Dy Dy) f`: symmetric positive semidefinite.
    fn neg_laplacian(&self, f: &[f64]) -> Vec<f64> {
        let a = self.dx(&self.dx(f));
        let b = self.dy(&self.dy(f));
        a.iter().zip(b).map(|(p, q)| -(p + q)).collect()
    }

    /// Removes the kernel of `Dx Dx + Dy Dy`: constants and the three
    /// checkerboard modes `(-1)^i`, `(-1)^j`, `(-1)^(i+j)`.
    fn deflate(&self, f: &mut [f64]) {
        let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
        let modes: [&dyn Fn(usize, usize) -> f64; 4] =
            [&|_, _| 1.0, &|i, _| sign(i), &|_, j| sign(j), &|i, j| {
                sign(i + j)
            }];
        let n = f.len() as f64;
        for m in modes {
            let mut c = 0.0;
            for i in 0..self.nx {
                for j in 0..self.ny {
                    c += f[i * self.ny + j] * m(i, j);
                }
            }
            c /= n;
            for i in 0..self.nx {
                for j in 0..self.ny {
                    f[i * self.ny + j] -= c * m(i, j);
                }
            }
        }
    }

    /// Conjugate gradients for `-(Dx Dx + Dy Dy) phi = rhs`, started from zero.
    /// The operator is singular; the residual is kept orthogonal to its kernel.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let n = rhs.len();
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        self.deflate(&mut r);
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let stop = 1e-26 * dot(rhs, rhs);
        for _ in 0..4 * n {
            if rr <= stop || rr == 0.0 {
                break;
            }
            let ap = self.neg_laplacian(&p);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            self.deflate(&mut r);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        x
    }
}

/// Removes the discrete-gradient part of the column means of `(a, b)` so the
/// centered-difference divergence of the barotropic velocity vanishes.
fn project_barotropic(a: &mut PhysicalField3D, b: &mut PhysicalField3D) {
    let g = *a.grid();
    let plane = Plane::of(&g);
    let div = plane.div(&column_mean(a), &column_mean(b));
    // -(lap) phi = div, so adding grad phi cancels the divergence.
    let phi = plane.solve(&div);
    let (px, py) = (plane.dx(&phi), plane.dy(&phi));
    let nz = g.nz();
    for (col, (gx, gy)) in px.iter().zip(&py).enumerate() {
        for k in 0..nz {
            a.values_mut()[col * nz + k] += gx;
            b.values_mut()[col * nz + k] += gy;
        }
    }
}

fn parity_defect(f: &PhysicalField3D, sign: f64) -> f64 {
    let g = *f.grid();
    let mut worst: f64 = 0.0;
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            for k in 0..g.nz() {
                let a = f.get(i, j, k);
                let b = f.get(i, j, g.mirror_k(k));
                worst = worst.max((a - sign * b).abs());
            }
        }
    }
    worst
}

/// Grid-function state of the finite-difference solver.
#[derive(Clone, Debug, PartialEq)]
pub struct FdState {
    pub v1: PhysicalField3D,
    pub v2: PhysicalField3D,
    pub temperature: PhysicalField3D,
    pub params: Params,
    pub time: f64,
}

impl FdState {
    /// Validates parities (v even, T odd, to [`FD_PARITY_TOL`]) and applies the
    /// discrete barotropic projection.
    pub fn new(
        v1: PhysicalField3D,
        v2: PhysicalField3D,
        temperature: PhysicalField3D,
        params: Params,
        time: f64,
    ) -> Result<Self> {
        params.validate()?;
        let g = *v1.grid();
        if v2.grid() != &g || temperature.grid() != &g {
            return Err(Error::Dimension("FD fields live on different grids".into()));
        }
        if (g.h() - params.h).abs() > 1e-14 * params.h {
            return Err(Error::Dimension(
                "grid half-height differs from params.h".into(),
            ));
        }
        for (name, f, sign) in [
            ("v1", &v1, 1.0),
            ("v2", &v2, 1.0),
            ("T", &temperature, -1.0),
        ] {
            if !f.is_finite() {
                return Err(Error::NonFinite(format!("FD field {name}")));
            }
            let defect = parity_defect(f, sign);
            if defect > FD_PARITY_TOL * f.max_abs().max(1.0) {
                return Err(Error::Precondition(format!(
                    "FD field {name} violates its z-parity by {defect:.3e}"
                )));
            }
        }
        let mut s = Self {
            v1,
            v2,
            temperature,
            params,
            time,
        };
        project_barotropic(&mut s.v1, &mut s.v2);
        Ok(s)
    }

    /// Collocation values of a spectral state, subsampled onto `grid`, whose
    /// dimensions must divide those of the state's grid.
    pub fn from_state(state: &State, grid: Grid3) -> Result<Self> {
        Self::new(
            subsample(&state.v1.inverse(), grid)?,
            subsample(&state.v2.inverse(), grid)?,
            subsample(&state.temperature.inverse(), grid)?,
            state.params,
            state.time,
        )
    }

    pub fn grid(&self) -> &Grid3 {
        self.v1.grid()
    }

    /// `w = -int_{-h}^z (Dx v1 + Dy v2)` by the trapezoid rule.
    pub fn w(&self) -> PhysicalField3D {
        let mut div = d1(&self.v1, Axis::X);
        axpy(&mut div, 1.0, &d1(&self.v2, Axis::Y));
        scaled(&integral_from_bottom(&div), -1.0)
    }

    /// Quadrature L2 norm of the centered-difference divergence of the column
    /// means, over `M`.
    pub fn barotropic_divergence(&self) -> f64 {
        let plane = Plane::of(self.grid());
        let div = plane.div(&column_mean(&self.v1), &column_mean(&self.v2));
        (div.iter().map(|d| d * d).sum::<f64>() / div.len() as f64).sqrt()
    }

    fn is_finite(&self) -> bool {
        [&self.v1, &self.v2, &self.temperature]
            .iter()
            .all(|f| f.is_finite() && f.max_abs() <= BLOW_UP_THRESHOLD)
    }
}

/// Restricts collocation values to a coarser grid with dimensions dividing
/// those of `f`'s grid (every `r`-th point along each axis).
pub fn subsample(f: &PhysicalField3D, target: Grid3) -> Result<PhysicalField3D> {
    let g = *f.grid();
    if (g.h() - target.h()).abs() > 1e-14 * g.h()
        || !g.nx().is_multiple_of(target.nx())
        || !g.ny().is_multiple_of(target.ny())
        || !g.nz().is_multiple_of(target.nz())
    {
        return Err(Error::Dimension(format!(
            "cannot subsample {}x{}x{} onto {}x{}x{}",
            g.nx(),
            g.ny(),
            g.nz(),
            target.nx(),
            target.ny(),
            target.nz()
        )));
    }
    let (rx, ry, rz) = (
        g.nx() / target.nx(),
        g.ny() / target.ny(),
        g.nz() / target.nz(),
    );
    let mut out = Vec::with_capacity(target.len());
    for i in 0..target.nx() {
        for j in 0..target.ny() {
            for k in 0..target.nz() {
                out.push(f.get(i * rx, j * ry, k * rz));
            }
        }
    }
    PhysicalField3D::new(target, out)
}

type FdFields = [PhysicalField3D; 3];

fn fd_tendency(s: &FdState, source: Option<&SourceSpec>) -> FdFields {
    let p = &s.params;
    let (v1, v2, t) = (&s.v1, &s.v2, &s.temperature);
    let w = s.w();
    let advect = |f: &PhysicalField3D, offset: f64| {
        let fx = d1(f, Axis::X);
        let fy = d1(f, Axis::Y);
        let fz = d1(f, Axis::Z);
        let mut out = PhysicalField3D::zeros(*f.grid());
        let vals = out.values_mut();
        for n in 0..vals.len() {
            vals[n] = v1.values()[n] * fx.values()[n]
                + v2.values()[n] * fy.values()[n]
                + w.values()[n] * (fz.values()[n] + offset);
        }
        out
    };
    let lap_h = |f: &PhysicalField3D| {
        let mut out = d2(f, Axis::X);
        axpy(&mut out, 1.0, &d2(f, Axis::Y));
        out
    };
    let column = integral_from_bottom(t);

    let mut n1 = scaled(&advect(v1, 0.0), -1.0);
    axpy(&mut n1, p.f0, v2);
    axpy(&mut n1, 1.0, &d1(&column, Axis::X));
    axpy(&mut n1, 1.0 / p.r1, &lap_h(v1));
    axpy(&mut n1, 1.0 / p.r2, &d2(v1, Axis::Z));

    let mut n2 = scaled(&advect(v2, 0.0), -1.0);
    axpy(&mut n2, -p.f0, v1);
    axpy(&mut n2, 1.0, &d1(&column, Axis::Y));
    axpy(&mut n2, 1.0 / p.r1, &lap_h(v2));
    axpy(&mut n2, 1.0 / p.r2, &d2(v2, Axis::Z));

    let mut nt = scaled(&advect(t, 1.0 / p.h), -1.0);
    axpy(&mut nt, 1.0 / p.r3, &d2(t, Axis::Z));
    axpy(&mut nt, p.epsilon, &lap_h(t));

    if let Some(src) = source.filter(|q| !q.is_empty()) {
        let (qm, qt) = src.sample_physical(*s.grid(), s.time);
        if let Some([q1, q2]) = qm {
            axpy(&mut n1, 1.0, &q1);
            axpy(&mut n2, 1.0, &q2);
        }
        if let Some(q) = qt {
            axpy(&mut nt, 1.0, &q);
        }
    }
    // Surface pressure: the gradient part of the barotropic tendency.
    project_barotropic(&mut n1, &mut n2);
    [n1, n2, nt]
}

/// Largest magnitude of the discrete diffusion operators' eigenvalues.
fn diffusive_bound(g: &Grid3, p: &Params) -> f64 {
    let h2 = 4.0 / g.dx().powi(2) + 4.0 / g.dy().powi(2);
    let z2 = 4.0 / g.dz().powi(2);
    (h2 / p.r1 + z2 / p.r2).max(z2 / p.r3 + p.epsilon * h2)
}

/// Largest step [`fd_step`] accepts for this grid and parameter set.
pub fn fd_max_dt(g: &Grid3, p: &Params) -> f64 {
    RK4_DIFFUSIVE_LIMIT / diffusive_bound(g, p)
}

/// One classical RK4 step followed by the discrete barotropic projection.
pub fn fd_step(state: &FdState, dt: f64, source: Option<&SourceSpec>) -> Result<FdState> {
    if !(dt > 0.0) || dt > fd_max_dt(state.grid(), &state.params) {
        return Err(Error::Precondition(format!(
            "FD step {dt} outside the explicit stability bound {}",
            fd_max_dt(state.grid(), &state.params)
        )));
    }
    let stage = |base: &FdState, k: &FdFields, a: f64, time: f64| {
        let mut s = base.clone();
        axpy(&mut s.v1, a, &k[0]);
        axpy(&mut s.v2, a, &k[1]);
        axpy(&mut s.temperature, a, &k[2]);
        s.time = time;
        s
    };
    let t0 = state.time;
    let k1 = fd_tendency(state, source);
    let k2 = fd_tendency(&stage(state, &k1, 0.5 * dt, t0 + 0.5 * dt), source);
    let k3 = fd_tendency(&stage(state, &k2, 0.5 * dt, t0 + 0.5 * dt), source);
    let k4 = fd_tendency(&stage(state, &k3, dt, t0 + dt), source);
    let mut next = state.clone();
    for (c, field) in [&mut next.v1, &mut next.v2, &mut next.temperature]
        .into_iter()
        .enumerate()
    {
        axpy(field, dt / 6.0, &k1[c]);
        axpy(field, dt / 3.0, &k2[c]);
        axpy(field, dt / 3.0, &k3[c]);
        axpy(field, dt / 6.0, &k4[c]);
    }
    next.time = t0 + dt;
    project_barotropic(&mut next.v1, &mut next.v2);
    if !next.is_finite() {
        return Err(Error::BlowUp { time: t0 });
    }
    Ok(next)
}

/// Advances with equal steps no longer than `dt_max` so that `t_end` is hit
/// exactly.
pub fn fd_integrate(
    state: FdState,
    t_end: f64,
    dt_max: f64,
    source: Option<&SourceSpec>,
) -> Result<FdState> {
    let span = t_end - state.time;
    if span <= 0.0 {
        return Ok(state);
    }
    let n = (span / dt_max).ceil().max(1.0) as usize;
    let dt = span / n as f64;
    let t0 = state.time;
    let mut s = state;
    for i in 1..=n {
        s = fd_step(&s, dt, source)?;
        s.time = if i == n { t_end } else { t0 + i as f64 * dt };
    }
    Ok(s)
}

/// Relative L2 differences between the finite-difference and spectral
/// solutions at a common time, on the FD grid.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CrossValidationReport {
    pub fd_grid: [usize; 3],
    pub spectral_grid: [usize; 3],
    pub time: f64,
    pub rel_v: f64,
    pub rel_t: f64,
    pub rel_w: f64,
}

fn rel_diff(a: &[&PhysicalField3D], b: &[&PhysicalField3D]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += x.zip_map(y, |p, q| p - q).l2_norm().powi(2);
        den += y.l2_norm().powi(2);
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Runs the spectral solver from `initial` (with `spectral.t_end` as the
/// common time) and the FD solver from the same data subsampled onto
/// `fd_grid`, then compares `v`, `T` and `w` on the FD grid.
pub fn cross_validate(
    initial: &State,
    fd_grid: Grid3,
    fd_dt: f64,
    spectral: &StepperConfig,
    source: Option<&SourceSpec>,
) -> Result<CrossValidationReport> {
    let fd0 = FdState::from_state(initial, fd_grid)?;
    let spec = integrate(initial.clone(), spectral, source, &mut [])?.final_state;
    let fd = fd_integrate(fd0, spectral.t_end, fd_dt, source)?;

    let sv1 = subsample(&spec.v1.inverse(), fd_grid)?;
    let sv2 = subsample(&spec.v2.inverse(), fd_grid)?;
    let st = subsample(&spec.temperature.inverse(), fd_grid)?;
    let sw = subsample(&compute_w(&spec)?.inverse(), fd_grid)?;
    let g = initial.grid();
    Ok(CrossValidationReport {
        fd_grid: [fd_grid.nx(), fd_grid.ny(), fd_grid.nz()],
        spectral_grid: [g.nx(), g.ny(), g.nz()],
        time: spectral.t_end,
        rel_v: rel_diff(&[&fd.v1, &fd.v2], &[&sv1, &sv2]),
        rel_t: rel_diff(&[&fd.temperature], &[&st]),
        rel_w: rel_diff(&[&fd.w()], &[&sw]),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_field(g: Grid3, seed: u64) -> PhysicalField3D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        PhysicalField3D::new(g, values).unwrap()
    }

    fn inner(a: &PhysicalField3D, b: &PhysicalField3D) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn constant_quotient_is_zero() {
        let g = Grid3::cube(8, 1.0).unwrap();
        let f = PhysicalField3D::from_fn(g, |_, _, _| 3.5);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let d = difference_quotient(&f, axis, 2.0 * spacing(&g, axis)).unwrap();
            assert_eq!(d.max_abs(), 0.0);
        }
    }

    #[test]
    fn linear_in_z_interior() {
        let g = Grid3::new(4, 4, 16, 1.0).unwrap();
        let slope = 0.7;
        let f = PhysicalField3D::from_fn(g, |_, _, z| slope * z + 0.2);
        let d = difference_quotient(&f, Axis::Z, g.dz()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                // k = nz - 1 wraps across the periodic seam.
                for k in 0..g.nz() - 1 {
                    assert!((d.get(i, j, k) - slope).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn non_grid_shift_rejected() {
        let g = Grid3::cube(8, 1.0).unwrap();
        let f = PhysicalField3D::zeros(g);
        assert!(difference_quotient(&f, Axis::X, 0.3 * g.dx()).is_err());
        assert!(difference_quotient(&f, Axis::X, 0.0).is_err());
        assert!(difference_quotient(&f, Axis::X, -3.0 * g.dx()).is_ok());
    }

    #[test]
    fn adjoint_and_product_rule() {
        let g = Grid3::new(8, 6, 10, 0.6).unwrap();
        let f = random_field(g, 1);
        let q = random_field(g, 2);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            for cells in [1.0, 2.0, -3.0] {
                let l = cells * spacing(&g, axis);
                let lhs = inner(&difference_quotient(&f, axis, l).unwrap(), &q);
                let rhs = -inner(&f, &difference_quotient(&q, axis, -l).unwrap());
                assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));

                let fq = f.zip_map(&q, |a, b| a * b);
                let dfq = difference_quotient(&fq, axis, l).unwrap();
                let dq = difference_quotient(&q, axis, l).unwrap();
                let df = difference_quotient(&f, axis, l).unwrap();
                let q_shift = shifted(&q, axis, cells as isize);
                for n in 0..g.len() {
                    let expected =
                        f.values()[n] * dq.values()[n] + q_shift.values()[n] * df.values()[n];
                    assert!((dfq.values()[n] - expected).abs() < 1e-11);
                }
            }
        }
    }

    fn params() -> Params {
        Params {
            r1: 2.0,
            r2: 1.5,
            r3: 1.0,
            h: 1.0,
            f0: 0.5,
            epsilon: 0.0,
        }
    }

    #[test]
    fn zero_state_is_fixed() {
        let g = Grid3::cube(8, 1.0).unwrap();
        let z = PhysicalField3D::zeros(g);
        let s = FdState::new(z.clone(), z.clone(), z, params(), 0.0).unwrap();
        let next = fd_step(&s, 1e-3, None).unwrap();
        assert_eq!(
            next.v1.max_abs() + next.v2.max_abs() + next.temperature.max_abs(),
            0.0
        );
    }

    #[test]
    fn parity_violations_rejected() {
        let g = Grid3::cube(8, 1.0).unwrap();
        let z = PhysicalField3D::zeros(g);
        let bad = PhysicalField3D::from_fn(g, |_, _, z| (PI * z).sin());
        assert!(FdState::new(bad, z.clone(), z.clone(), params(), 0.0).is_err());
        let bad_t = PhysicalField3D::from_fn(g, |_, _, z| (PI * z).cos());
        assert!(FdState::new(z.clone(), z, bad_t, params(), 0.0).is_err());
    }

    fn heat_error(nz: usize) -> f64 {
        let g = Grid3::new(4, 4, nz, 1.0).unwrap();
        let z = PhysicalField3D::zeros(g);
        let t = PhysicalField3D::from_fn(g, |_, _, z| (PI * z).sin());
        let s = FdState::new(z.clone(), z, t, params(), 0.0).unwrap();
        let t_end = 0.1;
        let out = fd_integrate(s, t_end, 0.2 * fd_max_dt(&g, &params()), None).unwrap();
        let exact =
            PhysicalField3D::from_fn(g, |_, _, z| (PI * z).sin() * (-PI * PI * t_end).exp());
        out.temperature.zip_map(&exact, |a, b| a - b).max_abs()
    }

    #[test]
    fn vertical_diffusion_second_order() {
        let (e16, e32) = (heat_error(16), heat_error(32));
        assert!(e16 < 2e-2 * (-PI * PI * 0.1f64).exp());
        assert!((e16 / e32 - 4.0).abs() < 0.2, "ratio {}", e16 / e32);
    }

    #[test]
    fn projection_zeroes_discrete_divergence() {
        let g = Grid3::cube(8, 1.0).unwrap();
        let v1 = PhysicalField3D::from_fn(g, |x, y, _| {
            (2.0 * PI * x).sin() + (2.0 * PI * (x + y)).cos()
        });
        let v2 = PhysicalField3D::from_fn(g, |x, y, z| {
            (2.0 * PI * y).cos() * (1.0 + (PI * z).cos()) + x * 0.0
        });
        let z = PhysicalField3D::zeros(g);
        let s = FdState::new(v1, v2, z, params(), 0.0).unwrap();
        assert!(s.barotropic_divergence() < 1e-12);
        let w = s.w();
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                assert_eq!(w.get(i, j, 0), 0.0);
            }
        }
    }

    #[test]
    fn projection_handles_checkerboard_content() {
        for n in [4, 8, 16] {
            let g = Grid3::cube(n, 1.0).unwrap();
            let plane = Plane::of(&g);
            for seed in 0..20 {
                let mut a = random_field(g, 2 * seed);
                let mut b = random_field(g, 2 * seed + 1);
                project_barotropic(&mut a, &mut b);
                let div = plane.div(&column_mean(&a), &column_mean(&b));
                let worst = div.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                assert!(worst < 1e-12, "n = {n}, seed = {seed}: {worst:e}");
            }
        }
    }

    #[test]
    fn step_is_repeatable() {
        let g = Grid3::cube(8, 1.0).unwrap();
        let v1 = PhysicalField3D::from_fn(g, |_, y, z| (2.0 * PI * y).sin() * (PI * z).cos());
        let t = PhysicalField3D::from_fn(g, |x, _, z| (2.0 * PI * x).cos() * (PI * z).sin());
        let z = PhysicalField3D::zeros(g);
        let s = FdState::new(v1, z, t, params(), 0.0).unwrap();
        let a = fd_step(&s, 1e-3, None).unwrap();
        let b = fd_step(&s, 1e-3, None).unwrap();
        assert_eq!(a, b);
        assert!(fd_step(&s, 1.0, None).is_err());
    }
}
