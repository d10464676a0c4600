//! Moments and mean-field energy of a state.

use serde::{Deserialize, Serialize};

use crate::error::{OctError, Result};
use crate::field::WaveField;
use crate::potential::PotentialFamily;
use crate::solver::{energy_parts, KineticModel};
use crate::spectral::Spectral;

/// Moments along the x axis, plus the total energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub width_x: f64,
    pub width_p: f64,
    /// `<psi| -1/2 Laplacian + V + g/2 |psi|^2 |psi>`.
    pub energy: f64,
}

/// Observables with the potential sampled from `family` at `lambda`.
pub fn observables(psi: &WaveField, family: &PotentialFamily, lambda: f64, g: f64) -> Result<Observables> {
    let v = family.sample(psi.grid(), lambda)?;
    observables_with(psi, &v, g)
}

pub fn observables_with(psi: &WaveField, v: &[f64], g: f64) -> Result<Observables> {
    let grid = psi.grid();
    if v.len() != grid.len() {
        return Err(OctError::Dimension(format!(
            "potential has {} values, grid has {}",
            v.len(),
            grid.len()
        )));
    }
    let dv = grid.cell_volume();
    let ny = grid.n_y();
    let rho = psi.density();
    let norm = rho.iter().sum::<f64>() * dv;
    let (mut mx, mut mxx) = (0.0, 0.0);
    for (i, r) in rho.iter().enumerate() {
        let x = grid.x.coord(i / ny);
        mx += r * x;
        mxx += r * x * x;
    }
    let mean_x = mx * dv / norm;
    let width_x = (mxx * dv / norm - mean_x * mean_x).max(0.0).sqrt();

    let mut spectral = Spectral::new(grid);
    let mut c = psi.values().to_vec();
    spectral.forward(&mut c);
    let kx = grid.x.wavenumbers();
    let (mut s0, mut sp, mut spp) = (0.0, 0.0, 0.0);
    for (i, z) in c.iter().enumerate() {
        let (a, k) = (z.norm_sqr(), kx[i / ny]);
        s0 += a;
        sp += a * k;
        spp += a * k * k;
    }
    let mean_p = sp / s0;
    let width_p = (spp / s0 - mean_p * mean_p).max(0.0).sqrt();

    let (lin, quartic) = energy_parts(psi.values(), grid, v, KineticModel::Spectral, Some(&mut spectral))?;
    Ok(Observables {
        norm,
        mean_x,
        mean_p,
        width_x,
        width_p,
        energy: (lin + 0.5 * g * quartic) / norm,
    })
}
