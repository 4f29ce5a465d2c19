use num_complex::Complex64;

use super::field::{Parity, SpectralField3D};
use super::grid::is_nyquist;
use crate::error::{Error, Result};

/// Tolerance on the vertical mean accepted by [`vertical_integral_from_bottom`],
/// relative to `max(1, max |coeff|)`.
pub const VERTICAL_MEAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Spectral derivative of order 1 or 2 along `axis`.
///
/// Odd-order derivatives drop the Nyquist mode of the differentiated axis so
/// the result stays real.
pub fn derivative(f: &SpectralField3D, axis: Axis, order: u32) -> SpectralField3D {
    let g = *f.grid();
    let mut out = f.clone();
    let coeffs = out.coeffs_mut();
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let (i, j, k) = g.unravel(idx);
        let kv = g.wavevector(i, j, k);
        let (kappa, nyq) = match axis {
            Axis::X => (kv[0], is_nyquist(i, g.nx())),
            Axis::Y => (kv[1], is_nyquist(j, g.ny())),
            Axis::Z => (kv[2], is_nyquist(k, g.nz())),
        };
        if order % 2 == 1 && nyq {
            *c = Complex64::default();
            continue;
        }
        *c *= Complex64::new(0.0, kappa).powu(order);
    }
    if axis == Axis::Z && order % 2 == 1 {
        out.set_parity(f.parity().flip());
    }
    out
}

/// `F(x, y, z) = int_{-h}^{z} g(x, y, xi) d xi`.
///
/// Requires zero vertical mean for every horizontal wavenumber so that the
/// primitive is 2h-periodic; violations are reported, not repaired. The vertical
/// Nyquist mode has no periodic primitive on the grid and is discarded.
pub fn vertical_integral_from_bottom(g: &SpectralField3D) -> Result<SpectralField3D> {
    let grid = *g.grid();
    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let tol = VERTICAL_MEAN_TOL * g.max_abs_coeff().max(1.0);
    let src = g.coeffs();
    let mut out = vec![Complex64::default(); grid.len()];
    for i in 0..nx {
        for j in 0..ny {
            let base = grid.index(i, j, 0);
            let mean = src[base];
            if mean.norm() > tol {
                return Err(Error::Precondition(format!(
                    "nonzero vertical mean {:.3e} at horizontal mode ({}, {})",
                    mean.norm(),
                    super::grid::signed_wavenumber(i, nx),
                    super::grid::signed_wavenumber(j, ny)
                )));
            }
            let mut boundary = Complex64::default();
            for k in 1..nz {
                if is_nyquist(k, nz) {
                    continue;
                }
                let kz = grid.wavevector(i, j, k)[2];
                let fm = src[base + k] / Complex64::new(0.0, kz);
                out[base + k] = fm;
                let m = super::grid::signed_wavenumber(k, nz);
                if m % 2 == 0 {
                    boundary += fm;
                } else {
                    boundary -= fm;
                }
            }
            out[base] = -boundary;
        }
    }
    SpectralField3D::new(grid, out, g.parity().flip())
}

/// Splits `f` into its vertical average (z-independent) and the fluctuation.
pub fn vertical_average_split(f: &SpectralField3D) -> (SpectralField3D, SpectralField3D) {
    let grid = *f.grid();
    let nz = grid.nz();
    let mut bar = SpectralField3D::zeros(grid, Parity::Even);
    let mut tilde = f.clone();
    for (idx, c) in tilde.coeffs_mut().iter_mut().enumerate() {
        if idx % nz == 0 {
            bar.coeffs_mut()[idx] = *c;
            *c = Complex64::default();
        }
    }
    (bar, tilde)
}

/// Vertical average only.
pub fn vertical_mean(f: &SpectralField3D) -> SpectralField3D {
    vertical_average_split(f).0
}

/// Projection onto the even or odd part in z: `(f(z) +- f(-z)) / 2`.
pub fn parity_project(f: &SpectralField3D, parity: Parity) -> SpectralField3D {
    let grid = *f.grid();
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
        Parity::None => return f.clone(),
    };
    let nz = grid.nz();
    let src = f.coeffs();
    let mut out = vec![Complex64::default(); grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let k = idx % nz;
        let mirror = idx - k + grid.mirror_k(k);
        *o = (src[idx] + src[mirror] * sign) * 0.5;
    }
    SpectralField3D::new(grid, out, parity).expect("same grid")
}

/// L2 norm of the part discarded by [`parity_project`].
pub fn parity_residual(f: &SpectralField3D, parity: Parity) -> f64 {
    let opposite = match parity {
        Parity::Even => Parity::Odd,
        Parity::Odd => Parity::Even,
        Parity::None => return 0.0,
    };
    parity_project(f, opposite).norm()
}

/// Horizontal divergence `d_x a + d_y b`.
pub fn horizontal_divergence(a: &SpectralField3D, b: &SpectralField3D) -> SpectralField3D {
    let mut d = derivative(a, Axis::X, 1);
    d.axpy(1.0, &derivative(b, Axis::Y, 1));
    d
}

/// Horizontal Laplacian.
pub fn laplacian_h(f: &SpectralField3D) -> SpectralField3D {
    let mut out = f.clone();
    out.map_modes(|kv, c| c * -(kv[0] * kv[0] + kv[1] * kv[1]));
    out
}
