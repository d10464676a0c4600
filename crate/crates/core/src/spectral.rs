//! Discrete Fourier transforms on periodic grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::SpaceGrid;

/// Forward/inverse FFT pair for a 1D or 2D grid.
///
/// `forward` is unnormalized, `inverse` divides by the number of points, so
/// `inverse(forward(f)) == f`.
#[derive(Clone)]
pub struct Spectral {
    grid: SpaceGrid,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Option<Arc<dyn Fft<f64>>>,
    inv_y: Option<Arc<dyn Fft<f64>>>,
    k2: Vec<f64>,
    column: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &SpaceGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(grid.n_x());
        let inv_x = planner.plan_fft_inverse(grid.n_x());
        let (fwd_y, inv_y) = match grid.y {
            Some(ay) => (
                Some(planner.plan_fft_forward(ay.n)),
                Some(planner.plan_fft_inverse(ay.n)),
            ),
            None => (None, None),
        };
        let scratch_len = [
            fwd_x.get_inplace_scratch_len(),
            inv_x.get_inplace_scratch_len(),
            fwd_y.as_ref().map_or(0, |f| f.get_inplace_scratch_len()),
            inv_y.as_ref().map_or(0, |f| f.get_inplace_scratch_len()),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        Self {
            grid: *grid,
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            k2: grid.k_squared(),
            column: vec![Complex64::new(0.0, 0.0); grid.n_x()],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    /// `|k|^2` per grid point in transform order.
    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.transform(data, false);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&mut self, data: &mut [Complex64], forward: bool) {
        debug_assert_eq!(data.len(), self.grid.len());
        let (fx, fy) = if forward {
            (&self.fwd_x, &self.fwd_y)
        } else {
            (&self.inv_x, &self.inv_y)
        };
        match fy {
            None => fx.process_with_scratch(data, &mut self.scratch),
            Some(fy) => {
                let (nx, ny) = (self.grid.n_x(), self.grid.n_y());
                // rows along y are contiguous
                for row in data.chunks_exact_mut(ny) {
                    fy.process_with_scratch(row, &mut self.scratch);
                }
                for iy in 0..ny {
                    for ix in 0..nx {
                        self.column[ix] = data[ix * ny + iy];
                    }
                    fx.process_with_scratch(&mut self.column, &mut self.scratch);
                    for ix in 0..nx {
                        data[ix * ny + iy] = self.column[ix];
                    }
                }
            }
        }
    }

    /// Multiply by `factor(|k|^2)` in spectral space.
    pub fn apply_diagonal<F>(&mut self, data: &mut [Complex64], factor: F)
    where
        F: Fn(f64) -> Complex64,
    {
        self.forward(data);
        for (v, &k2) in data.iter_mut().zip(&self.k2) {
            *v *= factor(k2);
        }
        self.inverse(data);
    }

    /// Free evolution `exp(-i dt |k|^2 / 2)` for a real step `dt`
    /// (negative `dt` runs backwards).
    pub fn kinetic_step(&mut self, data: &mut [Complex64], dt: f64) {
        self.apply_diagonal(data, |k2| Complex64::from_polar(1.0, -0.5 * dt * k2));
    }

    /// Imaginary-time kinetic factor `exp(-tau |k|^2 / 2)`.
    pub fn kinetic_decay(&mut self, data: &mut [Complex64], tau: f64) {
        self.apply_diagonal(data, |k2| Complex64::new((-0.5 * tau * k2).exp(), 0.0));
    }

    /// Returns `-1/2 Laplacian` applied spectrally.
    pub fn kinetic_apply(&mut self, data: &[Complex64]) -> Vec<Complex64> {
        let mut out = data.to_vec();
        self.apply_diagonal(&mut out, |k2| Complex64::new(0.5 * k2, 0.0));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn round_trip_2d() {
        let g = SpaceGrid::new_2d((0.0, 1.0, 16), (0.0, 2.0, 8)).unwrap();
        let mut s = Spectral::new(&g);
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        s.forward(&mut data);
        s.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn kinetic_of_plane_wave_2d() {
        let g = SpaceGrid::new_2d((0.0, 2.0 * PI, 16), (0.0, 2.0 * PI, 8)).unwrap();
        let mut s = Spectral::new(&g);
        let psi: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let (x, y) = g.point(i);
                Complex64::from_polar(1.0, 3.0 * x - 2.0 * y)
            })
            .collect();
        let t = s.kinetic_apply(&psi);
        for (a, b) in t.iter().zip(&psi) {
            assert!((a - b * 6.5).norm() < 1e-11);
        }
    }
}
