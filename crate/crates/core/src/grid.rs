//! Uniform periodic space grids and time grids.
//!
//! All quantities are dimensionless: hbar = 1, mass = 1, lengths in
//! micrometers. Two-dimensional fields are stored x-major, i.e. the flat
//! index of point `(ix, iy)` is `ix * n_y + iy`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{OctError, Result};

/// Minimum number of points along any spatial axis.
pub const MIN_AXIS_POINTS: usize = 8;

/// One periodic axis `[min, max)` sampled at `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(OctError::InvalidGrid(format!(
                "axis bounds must satisfy max > min, got [{min}, {max}]"
            )));
        }
        if n < MIN_AXIS_POINTS {
            return Err(OctError::InvalidGrid(format!(
                "axis needs at least {MIN_AXIS_POINTS} points, got {n}"
            )));
        }
        Ok(Self { min, max, n })
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length() / self.n as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Wavenumbers in discrete-transform order: `0, 1, .., n/2-1, -n/2, .., -1`
    /// times `2 pi / L`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / self.length();
        let n = self.n as isize;
        (0..n)
            .map(|i| {
                let j = if i < (n + 1) / 2 { i } else { i - n };
                j as f64 * dk
            })
            .collect()
    }

    /// True when `n` factors into 2, 3, 5 and 7 only.
    pub fn is_transform_friendly(&self) -> bool {
        let mut n = self.n;
        for p in [2, 3, 5, 7] {
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        n == 1
    }
}

/// Periodic spatial grid in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub x: Axis,
    pub y: Option<Axis>,
}

impl SpaceGrid {
    pub fn new_1d(x_min: f64, x_max: f64, n_x: usize) -> Result<Self> {
        Ok(Self {
            x: Axis::new(x_min, x_max, n_x)?,
            y: None,
        })
    }

    pub fn new_2d((x_min, x_max, n_x): (f64, f64, usize), (y_min, y_max, n_y): (f64, f64, usize)) -> Result<Self> {
        let grid = Self {
            x: Axis::new(x_min, x_max, n_x)?,
            y: Some(Axis::new(y_min, y_max, n_y)?),
        };
        if !grid.is_transform_friendly() {
            log::warn!("grid {n_x}x{n_y} has large prime factors; spectral steps will be slow");
        }
        Ok(grid)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        if self.y.is_some() {
            2
        } else {
            1
        }
    }

    #[inline]
    pub fn n_x(&self) -> usize {
        self.x.n
    }

    #[inline]
    pub fn n_y(&self) -> usize {
        self.y.map_or(1, |a| a.n)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_x() * self.n_y()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integration weight of a single grid cell (`dx` or `dx * dy`).
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.x.spacing() * self.y.map_or(1.0, |a| a.spacing())
    }

    /// Coordinates of flat index `i`; `y` is zero on 1D grids.
    #[inline]
    pub fn point(&self, i: usize) -> (f64, f64) {
        let ny = self.n_y();
        let (ix, iy) = (i / ny, i % ny);
        (self.x.coord(ix), self.y.map_or(0.0, |a| a.coord(iy)))
    }

    pub fn is_transform_friendly(&self) -> bool {
        self.x.is_transform_friendly() && self.y.is_none_or(|a| a.is_transform_friendly())
    }

    /// `|k|^2` per grid point in transform order, for the spectral kinetic factor.
    pub fn k_squared(&self) -> Vec<f64> {
        let kx = self.x.wavenumbers();
        match self.y {
            None => kx.iter().map(|k| k * k).collect(),
            Some(ay) => {
                let ky = ay.wavenumbers();
                let mut out = Vec::with_capacity(self.len());
                for a in &kx {
                    for b in &ky {
                        out.push(a * a + b * b);
                    }
                }
                out
            }
        }
    }

    /// Flat indices of the points on the outer boundary rows/columns.
    pub fn edge_indices(&self) -> Vec<usize> {
        let (nx, ny) = (self.n_x(), self.n_y());
        match self.y {
            None => vec![0, nx - 1],
            Some(_) => {
                let mut out = Vec::new();
                for ix in 0..nx {
                    for iy in 0..ny {
                        if ix == 0 || ix == nx - 1 || iy == 0 || iy == ny - 1 {
                            out.push(ix * ny + iy);
                        }
                    }
                }
                out
            }
        }
    }
}

/// Uniform time grid `t_m = m * dt`, `m = 0..=n_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_t: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_t: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(OctError::InvalidGrid(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if n_t < 2 {
            return Err(OctError::InvalidGrid(format!("need at least 2 time steps, got {n_t}")));
        }
        Ok(Self { t_final, n_t })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.t_final / self.n_t as f64
    }

    #[inline]
    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt()
    }

    /// Number of time nodes, `n_t + 1`.
    #[inline]
    pub fn nodes(&self) -> usize {
        self.n_t + 1
    }

    /// Trapezoid weight of node `m`.
    #[inline]
    pub fn trapezoid_weight(&self, m: usize) -> f64 {
        if m == 0 || m == self.n_t {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }
}

/// Space-time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub space: SpaceGrid,
    pub time: TimeGrid,
}

impl Grid {
    pub fn new_1d(x_min: f64, x_max: f64, n_x: usize, t_final: f64, n_t: usize) -> Result<Self> {
        Ok(Self {
            space: SpaceGrid::new_1d(x_min, x_max, n_x)?,
            time: TimeGrid::new(t_final, n_t)?,
        })
    }

    pub fn new_2d(x: (f64, f64, usize), y: (f64, f64, usize), t_final: f64, n_t: usize) -> Result<Self> {
        Ok(Self {
            space: SpaceGrid::new_2d(x, y)?,
            time: TimeGrid::new(t_final, n_t)?,
        })
    }

    pub fn with_t_final(&self, t_final: f64) -> Result<Self> {
        Ok(Self {
            space: self.space,
            time: TimeGrid::new(t_final, self.time.n_t)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_axes() {
        assert!(Axis::new(1.0, 1.0, 16).is_err());
        assert!(Axis::new(0.0, 1.0, 7).is_err());
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(-1.0, 10).is_err());
    }

    #[test]
    fn wavenumber_ordering_for_eight_points() {
        let a = Axis::new(0.0, 2.0 * PI, 8).unwrap();
        let k = a.wavenumbers();
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);

        let b = Axis::new(-3.0, 5.0, 8).unwrap();
        let scale = 2.0 * PI / 8.0;
        let expected: Vec<f64> = [0, 1, 2, 3, -4, -3, -2, -1].iter().map(|&j| j as f64 * scale).collect();
        for (a, b) in b.wavenumbers().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn spacings_and_weights() {
        let g = Grid::new_1d(-10.0, 20.0, 500, 9.0, 500).unwrap();
        assert!((g.space.x.spacing() - 0.06).abs() < 1e-15);
        assert!((g.time.dt() - 0.018).abs() < 1e-15);
        let total: f64 = (0..g.time.nodes()).map(|m| g.time.trapezoid_weight(m)).sum();
        assert!((total - 9.0).abs() < 1e-12);
    }

    #[test]
    fn transform_friendly_sizes() {
        assert!(Axis::new(0.0, 1.0, 500).unwrap().is_transform_friendly());
        assert!(Axis::new(0.0, 1.0, 512).unwrap().is_transform_friendly());
        assert!(!Axis::new(0.0, 1.0, 502).unwrap().is_transform_friendly());
    }

    #[test]
    fn two_dimensional_layout() {
        let g = SpaceGrid::new_2d((0.0, 8.0, 8), (0.0, 16.0, 16)).unwrap();
        assert_eq!(g.len(), 128);
        assert_eq!(g.point(16 * 3 + 5), (3.0, 5.0));
        assert_eq!(g.edge_indices().len(), 2 * 16 + 2 * 8 - 4);
    }
}
