//! Complex wavefunctions sampled on a spatial grid.

use num_complex::Complex64;

use crate::error::{OctError, Result};
use crate::grid::SpaceGrid;
use crate::spectral::Spectral;

/// Normalization tolerance accepted by [`infidelity`].
pub const NORM_CONTRACT_TOL: f64 = 1e-6;

/// Edge density above which propagation warns about wrap-around.
pub const EDGE_WARN_DENSITY: f64 = 1e-6;

/// Complex field on a [`SpaceGrid`]. Adjoint fields use the same type but are
/// not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: SpaceGrid,
    values: Vec<Complex64>,
}

impl WaveField {
    pub fn new(grid: SpaceGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(OctError::Dimension(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpaceGrid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    /// Samples `f(x, y)` at every grid point (`y = 0` in 1D).
    pub fn from_fn<F>(grid: SpaceGrid, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let values = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.point(i);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    /// Harmonic-oscillator groundstate `pi^{-d/4} exp(-|r - r0|^2 / 2)`,
    /// normalized on the grid.
    pub fn gaussian(grid: SpaceGrid, x0: f64, y0: f64) -> Self {
        let mut f = Self::from_fn(grid, |x, y| {
            Complex64::new((-0.5 * ((x - x0).powi(2) + (y - y0).powi(2))).exp(), 0.0)
        });
        f.normalize();
        f
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm; returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let s = 1.0 / n;
            self.values.iter_mut().for_each(|v| *v *= s);
        }
        n
    }

    pub fn scale(&mut self, c: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Maximum `|a_i - b_i|` over grid points.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|psi|^2` over the boundary points.
    pub fn edge_density(&self) -> f64 {
        self.grid
            .edge_indices()
            .into_iter()
            .map(|i| self.values[i].norm_sqr())
            .fold(0.0, f64::max)
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Spectral amplitudes scaled so that `sum |c_k|^2 dk = ||psi||^2`
    /// (Parseval with weight `dk = 2 pi / L` per axis).
    pub fn to_spectral(&self, spectral: &mut Spectral) -> Vec<Complex64> {
        let mut data = self.values.clone();
        spectral.forward(&mut data);
        let dv = self.grid.cell_volume();
        let scale = dv / (2.0 * std::f64::consts::PI).powf(self.grid.dim() as f64 / 2.0);
        data.iter_mut().for_each(|v| *v *= scale);
        data
    }
}

fn check_same_grid(a: &WaveField, b: &WaveField) -> Result<()> {
    if a.grid != b.grid {
        return Err(OctError::Dimension(format!(
            "fields live on different grids: {:?} vs {:?}",
            a.grid, b.grid
        )));
    }
    Ok(())
}

/// `<a|b> = sum conj(a_i) b_i dV`.
pub fn inner_product(a: &WaveField, b: &WaveField) -> Result<Complex64> {
    check_same_grid(a, b)?;
    Ok(inner_product_raw(&a.values, &b.values) * a.grid.cell_volume())
}

/// Unweighted `sum conj(a_i) b_i`.
pub(crate) fn inner_product_raw(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `1/2 (1 - |<desired|final>|^2)`, insensitive to global phases.
pub fn infidelity(final_state: &WaveField, desired: &WaveField) -> Result<f64> {
    for (name, f) in [("final", final_state), ("desired", desired)] {
        let n = f.norm_sqr();
        if (n - 1.0).abs() > NORM_CONTRACT_TOL {
            return Err(OctError::ContractViolation(format!(
                "{name} state has norm^2 {n}, expected 1"
            )));
        }
    }
    let c = inner_product(desired, final_state)?;
    Ok((0.5 * (1.0 - c.norm_sqr())).clamp(0.0, 0.5))
}
