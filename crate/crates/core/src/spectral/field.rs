use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::fft::fft3;
use super::grid::Grid3;
use crate::error::{Error, Result};

/// Symmetry of a field under the reflection `z -> -z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    /// Parity of the product of two fields with these parities.
    pub fn product(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::None, _) | (_, Parity::None) => Parity::None,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    /// Parity after an odd number of z-derivatives (or a vertical primitive).
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        }
    }

    fn combine(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::None
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
            Parity::None => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Parity> {
        match tag {
            0 => Some(Parity::Even),
            1 => Some(Parity::Odd),
            2 => Some(Parity::None),
            _ => None,
        }
    }
}

/// Real samples at the collocation points of a [`Grid3`].
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField3D {
    grid: Grid3,
    values: Vec<f64>,
}

impl PhysicalField3D {
    pub fn new(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} samples for grid {}x{}x{}, got {}",
                grid.len(),
                grid.nx(),
                grid.ny(),
                grid.nz(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x, y, z)` at every collocation point.
    pub fn from_fn(grid: Grid3, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.ny() {
                let y = grid.y(j);
                for k in 0..grid.nz() {
                    values.push(f(x, y, grid.z(k)));
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

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Quadrature L2 norm (rectangle rule, exact for band-limited periodic data).
    pub fn l2_norm(&self) -> f64 {
        let cell = self.grid.volume() / self.grid.len() as f64;
        (self.values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Forward transform to Fourier coefficients in the basis
    /// `exp(2 pi i (k_x x + k_y y)) exp(i m pi z / h)`.
    pub fn forward(&self) -> SpectralField3D {
        let grid = self.grid;
        let mut data: Vec<Complex64> = self
            .values
            .iter()
            .map(|v| Complex64::new(*v, 0.0))
            .collect();
        fft3(&grid, &mut data, FftDirection::Forward);
        let scale = 1.0 / grid.len() as f64;
        let nz = grid.nz();
        for (idx, c) in data.iter_mut().enumerate() {
            // The grid starts at z = -h, so the FFT phase carries exp(i m pi) = (-1)^m.
            let k = idx % nz;
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            *c *= scale * sign;
        }
        SpectralField3D {
            grid,
            coeffs: data,
            parity: Parity::None,
        }
    }
}

/// Fourier coefficients of a real field on the periodic box, with a z-parity tag.
///
/// Storage order matches [`Grid3::index`]; the entry at `(i, j, k)` is the
/// amplitude of wavenumbers [`Grid3::wavenumbers`]`(i, j, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField3D {
    grid: Grid3,
    coeffs: Vec<Complex64>,
    parity: Parity,
}

impl SpectralField3D {
    pub fn new(grid: Grid3, coeffs: Vec<Complex64>, parity: Parity) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            grid,
            coeffs,
            parity,
        })
    }

    pub fn zeros(grid: Grid3, parity: Parity) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
            parity,
        }
    }

    /// Samples `f` on the grid and transforms, tagging the result with `parity`.
    /// The tag is not enforced; see [`super::parity_project`].
    pub fn from_fn(grid: Grid3, parity: Parity, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        PhysicalField3D::from_fn(grid, f)
            .forward()
            .with_parity(parity)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn set_parity(&mut self, parity: Parity) {
        self.parity = parity;
    }

    /// Coefficient of the signed wavenumbers `(k_x, k_y, m)`.
    pub fn mode(&self, kx: i64, ky: i64, m: i64) -> Complex64 {
        self.coeffs[self.mode_index(kx, ky, m)]
    }

    pub fn set_mode(&mut self, kx: i64, ky: i64, m: i64, value: Complex64) {
        let idx = self.mode_index(kx, ky, m);
        self.coeffs[idx] = value;
    }

    fn mode_index(&self, kx: i64, ky: i64, m: i64) -> usize {
        let g = &self.grid;
        g.index(
            Grid3::storage_index(kx, g.nx()),
            Grid3::storage_index(ky, g.ny()),
            Grid3::storage_index(m, g.nz()),
        )
    }

    /// Inverse transform to collocation samples (real part; the imaginary part
    /// vanishes for conjugate-symmetric coefficients).
    pub fn inverse(&self) -> PhysicalField3D {
        let grid = self.grid;
        let nz = grid.nz();
        let mut data: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                if (idx % nz).is_multiple_of(2) {
                    *c
                } else {
                    -*c
                }
            })
            .collect();
        fft3(&grid, &mut data, FftDirection::Inverse);
        PhysicalField3D {
            grid,
            values: data.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Real L2 inner product over the box, `int f g dV`, via Parseval.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        s * self.grid.volume()
    }

    /// Squared L2 norm over the box.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `sum w(kappa) |c|^2 * volume`, with `kappa` the physical wavevector.
    pub fn weighted_norm_sq(&self, weight: impl Fn([f64; 3]) -> f64) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let (i, j, k) = g.unravel(idx);
            s += weight(g.wavevector(i, j, k)) * c.norm_sqr();
        }
        s * g.volume()
    }

    /// Squared Sobolev norm `sum (1 + |kappa|^2)^s |c|^2` times the box volume.
    pub fn hs_norm_sq(&self, s: u32) -> f64 {
        self.weighted_norm_sq(|kv| {
            let k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
            (1.0 + k2).powi(s as i32)
        })
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            parity: self.parity,
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.grid, other.grid);
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s += o * a;
        }
        self.parity = self.parity.combine(other.parity);
    }

    /// Applies `f(kappa, c)` to every coefficient in place.
    pub fn map_modes(&mut self, f: impl Fn([f64; 3], Complex64) -> Complex64) {
        let g = self.grid;
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            let (i, j, k) = g.unravel(idx);
            *c = f(g.wavevector(i, j, k), *c);
        }
    }

    /// Largest absolute difference between coefficients.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl Add for &SpectralField3D {
    type Output = SpectralField3D;

    fn add(self, rhs: Self) -> SpectralField3D {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField3D {
    type Output = SpectralField3D;

    fn sub(self, rhs: Self) -> SpectralField3D {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Neg for &SpectralField3D {
    type Output = SpectralField3D;

    fn neg(self) -> SpectralField3D {
        self.scaled(-1.0)
    }
}
