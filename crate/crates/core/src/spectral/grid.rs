use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collocation grid on the triply periodic box `(0,1) x (0,1) x (-h,h)`.
///
/// Samples sit at `x_i = i/nx`, `y_j = j/ny`, `z_k = -h + 2hk/nz`, so the bottom
/// boundary `z = -h` and the mid-plane `z = 0` are both grid planes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    nx: usize,
    ny: usize,
    nz: usize,
    h: f64,
}

impl Grid3 {
    pub fn new(nx: usize, ny: usize, nz: usize, h: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny), ("nz", nz)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be even and at least 4"
                )));
            }
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half-height h = {h} must be positive"
            )));
        }
        Ok(Self { nx, ny, nz, h })
    }

    /// Cubic grid with `n` points per direction.
    pub fn cube(n: usize, h: f64) -> Result<Self> {
        Self::new(n, n, n, h)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn dz(&self) -> f64 {
        2.0 * self.h / self.nz as f64
    }

    /// Volume of the full periodic box, `|M| * 2h` with `|M| = 1`.
    pub fn volume(&self) -> f64 {
        2.0 * self.h
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 / self.ny as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        -self.h + 2.0 * self.h * k as f64 / self.nz as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz + k
    }

    /// Inverse of [`Grid3::index`].
    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let k = idx % self.nz;
        let ij = idx / self.nz;
        (ij / self.ny, ij % self.ny, k)
    }

    /// Index of the vertical mode `-m` given the storage index of `m`.
    #[inline]
    pub fn mirror_k(&self, k: usize) -> usize {
        (self.nz - k) % self.nz
    }

    /// Physical wavevector `(2 pi k_x, 2 pi k_y, m pi / h)` of a storage index.
    #[inline]
    pub fn wavevector(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            2.0 * PI * signed_wavenumber(i, self.nx) as f64,
            2.0 * PI * signed_wavenumber(j, self.ny) as f64,
            PI * signed_wavenumber(k, self.nz) as f64 / self.h,
        ]
    }

    /// Integer wavenumbers `(k_x, k_y, m)` of a storage index.
    #[inline]
    pub fn wavenumbers(&self, i: usize, j: usize, k: usize) -> [i64; 3] {
        [
            signed_wavenumber(i, self.nx),
            signed_wavenumber(j, self.ny),
            signed_wavenumber(k, self.nz),
        ]
    }

    /// Storage index for a signed wavenumber along an axis of length `n`.
    pub fn storage_index(wavenumber: i64, n: usize) -> usize {
        wavenumber.rem_euclid(n as i64) as usize
    }

    /// Same resolution pattern with a different vertical half-height.
    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.nx, self.ny, self.nz, h)
    }
}

/// Maps FFT storage index to the signed wavenumber; the Nyquist index maps to `+n/2`.
#[inline]
pub fn signed_wavenumber(idx: usize, n: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

#[inline]
pub(crate) fn is_nyquist(idx: usize, n: usize) -> bool {
    idx == n / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Grid3::new(3, 4, 4, 1.0).is_err());
        assert!(Grid3::new(4, 2, 4, 1.0).is_err());
        assert!(Grid3::new(4, 4, 4, 0.0).is_err());
        assert!(Grid3::new(4, 4, 4, f64::NAN).is_err());
        assert!(Grid3::new(4, 6, 8, 0.5).is_ok());
    }

    #[test]
    fn bottom_and_midplane_are_grid_planes() {
        let g = Grid3::new(4, 4, 8, 2.0).unwrap();
        assert_eq!(g.z(0), -2.0);
        assert_eq!(g.z(4), 0.0);
        assert_eq!(g.mirror_k(1), 7);
        assert_eq!(g.mirror_k(0), 0);
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid3::new(4, 6, 8, 1.0).unwrap();
        for idx in 0..g.len() {
            let (i, j, k) = g.unravel(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
    }

    #[test]
    fn wavenumbers_wrap() {
        assert_eq!(signed_wavenumber(0, 8), 0);
        assert_eq!(signed_wavenumber(4, 8), 4);
        assert_eq!(signed_wavenumber(5, 8), -3);
        assert_eq!(Grid3::storage_index(-3, 8), 5);
    }
}
