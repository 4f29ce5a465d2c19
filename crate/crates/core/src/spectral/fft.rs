use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::grid::Grid3;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

/// Unnormalized in-place 3D FFT over the `(i, j, k)` row-major layout of `grid`.
pub(crate) fn fft3(grid: &Grid3, data: &mut [Complex64], direction: FftDirection) {
    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    debug_assert_eq!(data.len(), grid.len());

    // z lines are contiguous.
    let fz = plan(nz, direction);
    let mut scratch = vec![Complex64::default(); fz.get_inplace_scratch_len()];
    fz.process_with_scratch(data, &mut scratch);

    let fy = plan(ny, direction);
    let mut line = vec![Complex64::default(); ny];
    let mut scratch = vec![Complex64::default(); fy.get_inplace_scratch_len()];
    for i in 0..nx {
        for k in 0..nz {
            for (j, l) in line.iter_mut().enumerate() {
                *l = data[(i * ny + j) * nz + k];
            }
            fy.process_with_scratch(&mut line, &mut scratch);
            for (j, l) in line.iter().enumerate() {
                data[(i * ny + j) * nz + k] = *l;
            }
        }
    }

    let fx = plan(nx, direction);
    let mut line = vec![Complex64::default(); nx];
    let mut scratch = vec![Complex64::default(); fx.get_inplace_scratch_len()];
    let stride = ny * nz;
    for jk in 0..stride {
        for (i, l) in line.iter_mut().enumerate() {
            *l = data[i * stride + jk];
        }
        fx.process_with_scratch(&mut line, &mut scratch);
        for (i, l) in line.iter().enumerate() {
            data[i * stride + jk] = *l;
        }
    }
}
