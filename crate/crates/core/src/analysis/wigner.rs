//! Wigner functions `w(x, p) = int exp(-i p s) psi(x + s/2) conj(psi(x - s/2)) ds`.
//!
//! No `1/(2 pi)` prefactor: `int int w dx dp = 2 pi ||psi||^2` and
//! `int w dp = 2 pi |psi(x)|^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{OctError, Result};
use crate::field::WaveField;
use crate::grid::SpaceGrid;
use crate::solver::Trajectory;
use crate::spectral::Spectral;

/// Imaginary residue tolerated before a warning is logged.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerMap {
    pub x: Vec<f64>,
    /// Ascending momenta spanning `[-pi/dx, pi/dx)` with spacing `2 pi / L`.
    pub p: Vec<f64>,
    /// Row-major `[x][p]`.
    pub values: Vec<f64>,
    pub time_integrated: bool,
    /// Snapshot stride used for time integration.
    pub stride: Option<usize>,
}

impl WignerMap {
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.p.len() + ip]
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn dp(&self) -> f64 {
        self.p[1] - self.p[0]
    }

    /// `int w dp` per x.
    pub fn position_marginal(&self) -> Vec<f64> {
        let dp = self.dp();
        self.values
            .chunks_exact(self.p.len())
            .map(|row| row.iter().sum::<f64>() * dp)
            .collect()
    }

    /// `int w dx` per p.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let np = self.p.len();
        let dx = self.dx();
        (0..np)
            .map(|ip| (0..self.x.len()).map(|ix| self.values[ix * np + ip]).sum::<f64>() * dx)
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx() * self.dp()
    }

    /// `(<x>, <p>, dx_rms, dp_rms)` from the phase-space moments.
    pub fn moments(&self) -> (f64, f64, f64, f64) {
        let np = self.p.len();
        let (mut m0, mut mx, mut mp, mut mxx, mut mpp) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (ix, x) in self.x.iter().enumerate() {
            for (ip, p) in self.p.iter().enumerate() {
                let w = self.values[ix * np + ip];
                m0 += w;
                mx += w * x;
                mp += w * p;
                mxx += w * x * x;
                mpp += w * p * p;
            }
        }
        let (ex, ep) = (mx / m0, mp / m0);
        (
            ex,
            ep,
            (mxx / m0 - ex * ex).max(0.0).sqrt(),
            (mpp / m0 - ep * ep).max(0.0).sqrt(),
        )
    }

    /// Sign changes along p at the x node closest to `x`.
    pub fn sign_changes_along_p(&self, x: f64, rel_floor: f64) -> usize {
        let ix = nearest(&self.x, x);
        let np = self.p.len();
        let row = &self.values[ix * np..(ix + 1) * np];
        let floor = rel_floor * row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let signs: Vec<bool> = row.iter().filter(|v| v.abs() > floor).map(|v| *v > 0.0).collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

fn nearest(axis: &[f64], v: f64) -> usize {
    axis.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Ascending momentum grid for an axis of `n` points spaced `dx`.
pub fn momentum_axis(n: usize, dx: f64) -> Vec<f64> {
    let dp = 2.0 * PI / (n as f64 * dx);
    (0..n).map(|l| (l as f64 - (n / 2) as f64) * dp).collect()
}

/// Band-limited interpolation onto twice as many points.
fn refine(grid: &SpaceGrid, psi: &[Complex64]) -> Vec<Complex64> {
    let n = psi.len();
    let mut c = psi.to_vec();
    Spectral::new(grid).forward(&mut c);
    let mut wide = vec![Complex64::new(0.0, 0.0); 2 * n];
    let half = n / 2;
    for k in 0..n {
        if k < half {
            wide[k] = c[k];
        } else if k > half {
            wide[n + k] = c[k];
        } else {
            // split the Nyquist mode symmetrically
            wide[half] = 0.5 * c[k];
            wide[n + half] = 0.5 * c[k];
        }
    }
    let fft = FftPlanner::new().plan_fft_inverse(2 * n);
    fft.process(&mut wide);
    let scale = 1.0 / n as f64;
    wide.iter_mut().for_each(|z| *z *= scale);
    wide
}

fn wigner_values(grid: &SpaceGrid, psi: &[Complex64]) -> (Vec<f64>, f64) {
    let n = grid.n_x();
    let dx = grid.x.spacing();
    let fine = refine(grid, psi);
    let m = 2 * n;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    let mut values = vec![0.0; n * n];
    let mut residue = 0.0f64;
    let half = n as isize / 2;
    for i in 0..n {
        for j in -half..half {
            let a = fine[((2 * i as isize + j).rem_euclid(m as isize)) as usize];
            let b = fine[((2 * i as isize - j).rem_euclid(m as isize)) as usize];
            row[j.rem_euclid(n as isize) as usize] = a * b.conj() * dx;
        }
        fft.process(&mut row);
        for (l, z) in row.iter().enumerate() {
            // transform order -> ascending p
            let ip = (l + n / 2) % n;
            values[i * n + ip] = z.re;
            residue = residue.max(z.im.abs());
        }
    }
    (values, residue)
}

pub fn wigner(psi: &WaveField) -> Result<WignerMap> {
    let grid = psi.grid();
    if grid.dim() != 1 {
        return Err(OctError::Unsupported(
            "Wigner maps need a 1D field; take a 1D slice or marginal first".into(),
        ));
    }
    let (values, residue) = wigner_values(grid, psi.values());
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if residue > IMAG_TOL * peak.max(1.0) {
        log::warn!("Wigner map has imaginary residue {residue:e}; field may not vanish at the edges");
    }
    Ok(WignerMap {
        x: grid.x.coords(),
        p: momentum_axis(grid.n_x(), grid.x.spacing()),
        values,
        time_integrated: false,
        stride: None,
    })
}

/// Default number of time steps between integrated snapshots.
pub fn default_stride(n_t: usize) -> usize {
    (n_t / 100).max(1)
}

/// Trapezoid-rule `int_0^T w(x, p; t) dt` over every `stride`-th node (the
/// final node is always included).
pub fn wigner_time_integrated(traj: &Trajectory, stride: Option<usize>) -> Result<WignerMap> {
    let grid = *traj.space();
    if grid.dim() != 1 {
        return Err(OctError::Unsupported("Wigner maps need a 1D trajectory".into()));
    }
    let time = *traj.time();
    let stride = stride.unwrap_or_else(|| default_stride(time.n_t).max(traj.stride()));
    if stride == 0 || !stride.is_multiple_of(traj.stride()) {
        return Err(OctError::ContractViolation(format!(
            "stride {stride} is not a multiple of the stored stride {}",
            traj.stride()
        )));
    }
    let mut nodes: Vec<usize> = (0..=time.n_t).step_by(stride).collect();
    if *nodes.last().unwrap() != time.n_t {
        nodes.push(time.n_t);
    }
    let weights: Vec<f64> = (0..nodes.len())
        .map(|k| {
            let prev = if k == 0 { nodes[0] } else { nodes[k - 1] };
            let next = if k + 1 == nodes.len() { nodes[k] } else { nodes[k + 1] };
            0.5 * (next - prev) as f64 * time.dt()
        })
        .collect();
    let n = grid.n_x();
    let mut total = vec![0.0; n * n];
    let batch = rayon::current_num_threads().max(1) * 2;
    for chunk in nodes.chunks(batch).zip(weights.chunks(batch)) {
        let maps: Vec<Vec<f64>> = chunk
            .0
            .par_iter()
            .map(|&m| {
                let psi = traj.snapshot_values(m).expect("stored node");
                wigner_values(&grid, psi).0
            })
            .collect();
        for (map, w) in maps.iter().zip(chunk.1) {
            total.iter_mut().zip(map).for_each(|(t, v)| *t += w * v);
        }
    }
    Ok(WignerMap {
        x: grid.x.coords(),
        p: momentum_axis(n, grid.x.spacing()),
        values: total,
        time_integrated: true,
        stride: Some(stride),
    })
}
