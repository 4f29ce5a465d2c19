//! Periodic collocation grid, transforms and spectral operators on
//! `(0,1) x (0,1) x (-h,h)`.
//!
//! The vertical basis is the full complex Fourier basis `exp(i m pi z / h)` on
//! period `2h`; parity in z is carried as a tag and enforced by projection.

mod fft;
mod field;
mod grid;
mod ops;

pub use field::{Parity, PhysicalField3D, SpectralField3D};
pub use grid::{signed_wavenumber, Grid3};
pub use ops::{
    derivative, horizontal_divergence, laplacian_h, parity_project, parity_residual,
    vertical_average_split, vertical_integral_from_bottom, vertical_mean, Axis, VERTICAL_MEAN_TOL,
};
