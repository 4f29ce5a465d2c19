//! Pseudo-spectral solver and diagnostics for hydrostatic flow with
//! vertical-only heat diffusion on a periodic, parity-extended box.
//!
//! Physical domain `M x (-h, 0)` with `M = (0, 1)^2` is reflected to
//! `M x (-h, h)`: horizontal velocity even in z, shifted temperature odd.
//! Stiff diffusion is integrated implicitly per Fourier mode, everything else
//! explicitly.

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod mms;
pub mod oracle_fd;
pub mod runner;
pub mod snapshot;
pub mod spectral;
pub mod state;
pub mod stepper;
pub mod trace;

pub use error::{Error, Result};
