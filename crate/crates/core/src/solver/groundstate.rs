//! Imaginary-time relaxation to the groundstate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::crank_nicolson::{fd_kinetic_sum, CnStepper};
use super::split::SplitStepper;
use crate::error::{OctError, Result};
use crate::field::WaveField;
use crate::grid::SpaceGrid;
use crate::potential::PotentialFamily;
use crate::spectral::Spectral;

/// Kinetic operator used for relaxation and energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticModel {
    #[default]
    Spectral,
    /// Periodic three-point Laplacian (1D only), matching Crank–Nicolson.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundstateOptions {
    /// Imaginary time step.
    pub tau: f64,
    pub tolerance: f64,
    pub max_steps: usize,
    pub kinetic: KineticModel,
}

impl Default for GroundstateOptions {
    fn default() -> Self {
        Self {
            tau: 0.018,
            tolerance: 1e-10,
            max_steps: 100_000,
            kinetic: KineticModel::Spectral,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Groundstate {
    pub state: WaveField,
    /// Mean-field energy `<T + V> + g/2 int |psi|^4`.
    pub energy: f64,
    /// Chemical potential `<T + V> + g int |psi|^4`.
    pub chemical_potential: f64,
    pub steps: usize,
}

/// Energy functional pieces `(kinetic + potential, interaction int |psi|^4)`.
pub(crate) fn energy_parts(
    psi: &[Complex64],
    grid: &SpaceGrid,
    v: &[f64],
    kinetic: KineticModel,
    spectral: Option<&mut Spectral>,
) -> Result<(f64, f64)> {
    let dv = grid.cell_volume();
    let kin = match kinetic {
        KineticModel::FiniteDifference => fd_kinetic_sum(psi, grid.x.spacing()) * dv,
        KineticModel::Spectral => {
            let mut owned;
            let sp = match spectral {
                Some(s) => s,
                None => {
                    owned = Spectral::new(grid);
                    &mut owned
                }
            };
            let t = sp.kinetic_apply(psi);
            psi.iter().zip(&t).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * dv
        }
    };
    let pot: f64 = psi.iter().zip(v).map(|(z, vi)| z.norm_sqr() * vi).sum::<f64>() * dv;
    let quartic: f64 = psi.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * dv;
    Ok((kin + pot, quartic))
}

fn normalize(psi: &mut [Complex64], dv: f64) -> Result<()> {
    let n = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dv).sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(OctError::Numerical("imaginary-time state collapsed".into()));
    }
    psi.iter_mut().for_each(|z| *z /= n);
    Ok(())
}

fn initial_guess(grid: &SpaceGrid, v: &[f64]) -> Vec<Complex64> {
    let v0 = v.iter().copied().fold(f64::INFINITY, f64::min);
    v.iter()
        .map(|vi| Complex64::new((-0.5 * (vi - v0)).max(-700.0).exp(), 0.0))
        .take(grid.len())
        .collect()
}

/// Relaxes to the lowest state of `-1/2 Laplacian + v + g |psi|^2` on `grid`.
///
/// For `g > 0` the linear groundstate is computed first and used as the
/// starting guess.
pub fn groundstate(grid: &SpaceGrid, v: &[f64], g: f64, opts: &GroundstateOptions) -> Result<Groundstate> {
    if v.len() != grid.len() {
        return Err(OctError::Dimension(format!(
            "potential has {} values, grid has {}",
            v.len(),
            grid.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(OctError::ContractViolation(
            "potential must be finite on the grid".into(),
        ));
    }
    if opts.kinetic == KineticModel::FiniteDifference && grid.dim() != 1 {
        return Err(OctError::Unsupported(
            "finite-difference kinetic needs a 1D grid".into(),
        ));
    }
    let mut psi = initial_guess(grid, v);
    let mut steps = relax(grid, v, 0.0, opts, &mut psi)?;
    if g != 0.0 {
        steps += relax(grid, v, g, opts, &mut psi)?;
    }
    let mut spectral = (opts.kinetic == KineticModel::Spectral).then(|| Spectral::new(grid));
    let (e_lin, quartic) = energy_parts(&psi, grid, v, opts.kinetic, spectral.as_mut())?;
    Ok(Groundstate {
        state: WaveField::new(*grid, psi)?,
        energy: e_lin + 0.5 * g * quartic,
        chemical_potential: e_lin + g * quartic,
        steps,
    })
}

fn relax(grid: &SpaceGrid, v: &[f64], g: f64, opts: &GroundstateOptions, psi: &mut [Complex64]) -> Result<usize> {
    let dv = grid.cell_volume();
    normalize(psi, dv)?;
    let mut prev = psi.to_vec();
    let mut residual = f64::INFINITY;
    let mut split = SplitStepper::new(grid, opts.tau, g);
    let mut cn = CnStepper::new(grid.n_x(), grid.x.spacing(), opts.tau);
    let mut v_eff = v.to_vec();
    for step in 1..=opts.max_steps {
        match opts.kinetic {
            KineticModel::Spectral => split.relax(opts.tau, v, psi),
            KineticModel::FiniteDifference => {
                for ((e, vi), z) in v_eff.iter_mut().zip(v).zip(psi.iter()) {
                    *e = vi + g * z.norm_sqr();
                }
                cn.relax(opts.tau, &v_eff, psi)?;
            }
        }
        normalize(psi, dv)?;
        residual = psi.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if residual < opts.tolerance {
            return Ok(step);
        }
        prev.copy_from_slice(psi);
    }
    Err(OctError::Convergence {
        steps: opts.max_steps,
        residual,
    })
}

/// Groundstate of `family` held at `lambda`.
pub fn groundstate_at(
    family: &PotentialFamily,
    grid: &SpaceGrid,
    lambda: f64,
    g: f64,
    opts: &GroundstateOptions,
) -> Result<Groundstate> {
    let v = family.sample(grid, lambda)?;
    groundstate(grid, &v, g, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_energy_and_shape() {
        let grid = SpaceGrid::new_1d(-10.0, 10.0, 256).unwrap();
        let fam = PotentialFamily::ShiftedHarmonic { x0: 5.0 };
        for kinetic in [KineticModel::Spectral, KineticModel::FiniteDifference] {
            let opts = GroundstateOptions {
                kinetic,
                ..Default::default()
            };
            let gs = groundstate_at(&fam, &grid, 0.0, 0.0, &opts).unwrap();
            assert!((gs.energy - 0.5).abs() < 1e-3, "{kinetic:?}: {}", gs.energy);
            if kinetic == KineticModel::Spectral {
                assert!((gs.energy - 0.5).abs() < 1e-4);
                for (i, z) in gs.state.values().iter().enumerate() {
                    let x = grid.x.coord(i);
                    let exact = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
                    assert!((z.norm() - exact).abs() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn unreachable_tolerance_reports_convergence_error() {
        let grid = SpaceGrid::new_1d(-10.0, 10.0, 64).unwrap();
        let v = PotentialFamily::ShiftedHarmonic { x0: 1.0 }.sample(&grid, 0.0).unwrap();
        let opts = GroundstateOptions {
            max_steps: 5,
            ..Default::default()
        };
        assert!(matches!(
            groundstate(&grid, &v, 0.0, &opts),
            Err(OctError::Convergence { steps: 5, .. })
        ));
    }
}
