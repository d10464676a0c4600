//! Control-parameterized trap potentials `V(r, lambda)` and their analytic
//! `dV/dlambda`.
//!
//! The public point evaluators ([`PotentialFamily::evaluate`],
//! [`PotentialFamily::derivative_wrt_lambda`]) enforce `lambda` in `[0, 1]`.
//! Grid sampling used by the propagators accepts any real `lambda`, because
//! optimized controls are not box constrained; every family extends smoothly
//! (tabulated potentials extrapolate linearly from their end segments).

mod tabulated;
mod three_wire;

use std::sync::Arc;

pub use tabulated::TabulatedPotential;
pub use three_wire::{BiasField, FieldVector, ThreeWireTrap, BOHR_MAGNETON_PER_GAUSS};

use crate::error::{OctError, Result};
use crate::grid::SpaceGrid;

/// Tolerance for `lambda` slightly outside `[0, 1]` before it is rejected.
pub const LAMBDA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum PotentialFamily {
    /// `1/2 (x - lambda x0)^2`
    ShiftedHarmonic {
        x0: f64,
    },
    /// `1/2 (x - lambda x0)^2 + eta (x - lambda x0)^4 / 4`
    ShiftedHarmonicQuartic {
        x0: f64,
        eta: f64,
    },
    /// Single well at `lambda = 0` opening into two wells a distance `d` apart.
    DoubleWell {
        d: f64,
    },
    ThreeWire(ThreeWireTrap),
    Tabulated(Arc<TabulatedPotential>),
    /// `base(x, lambda) + 1/2 omega_y^2 y^2`
    Separable {
        along_x: Box<PotentialFamily>,
        omega_y: f64,
    },
    /// Sideways-shifting waveguide `1/2 omega^2 (y - lambda y0)^2`.
    TransverseChannel {
        y0: f64,
        omega: f64,
    },
    /// `base + c0 + c1 lambda + c2 lambda^2`
    LambdaOffset {
        base: Box<PotentialFamily>,
        coeffs: [f64; 3],
    },
    /// `base` held at a fixed `lambda`; independent of the control.
    Frozen {
        base: Box<PotentialFamily>,
        lambda: f64,
    },
}

/// Potential split into its minimum over the grid and a non-negative remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSplit {
    pub v0: f64,
    /// Flat index of the minimum.
    pub argmin: usize,
    pub shifted: Vec<f64>,
}

pub fn check_lambda(lambda: f64) -> Result<f64> {
    if !(-LAMBDA_SLACK..=1.0 + LAMBDA_SLACK).contains(&lambda) {
        return Err(OctError::Domain { lambda });
    }
    Ok(lambda.clamp(0.0, 1.0))
}

fn double_well(x: f64, lambda: f64, d: f64) -> f64 {
    let ld = lambda * d;
    if x.abs() > ld / 4.0 {
        0.5 * (x.abs() - ld / 2.0).powi(2)
    } else {
        0.5 * (ld * ld / 8.0 - x * x)
    }
}

fn double_well_dlambda(x: f64, lambda: f64, d: f64) -> f64 {
    let ld = lambda * d;
    if x.abs() > ld / 4.0 {
        -(x.abs() - ld / 2.0) * d / 2.0
    } else {
        lambda * d * d / 8.0
    }
}

impl PotentialFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ShiftedHarmonic { .. } => "shifted_harmonic",
            Self::ShiftedHarmonicQuartic { .. } => "shifted_harmonic_quartic",
            Self::DoubleWell { .. } => "double_well",
            Self::ThreeWire(_) => "three_wire_trap",
            Self::Tabulated(_) => "tabulated",
            Self::Separable { .. } => "separable",
            Self::TransverseChannel { .. } => "transverse_channel",
            Self::LambdaOffset { .. } => "lambda_offset",
            Self::Frozen { .. } => "frozen",
        }
    }

    /// Closed-form value at `(x, y)`; tabulated potentials have no point form.
    fn analytic(&self, x: f64, y: f64, lambda: f64) -> Result<f64> {
        Ok(match self {
            Self::ShiftedHarmonic { x0 } => 0.5 * (x - lambda * x0).powi(2),
            Self::ShiftedHarmonicQuartic { x0, eta } => {
                let u = x - lambda * x0;
                0.5 * u * u + eta * u.powi(4) / 4.0
            }
            Self::DoubleWell { d } => double_well(x, lambda, *d),
            Self::ThreeWire(t) => t.potential(x, lambda)?,
            Self::Tabulated(_) => {
                return Err(OctError::Unsupported(
                    "tabulated potentials are only defined on their grid".into(),
                ))
            }
            Self::Separable { along_x, omega_y } => along_x.analytic(x, 0.0, lambda)? + 0.5 * (omega_y * y).powi(2),
            Self::TransverseChannel { y0, omega } => 0.5 * (omega * (y - lambda * y0)).powi(2),
            Self::LambdaOffset { base, coeffs } => {
                base.analytic(x, y, lambda)? + coeffs[0] + lambda * (coeffs[1] + lambda * coeffs[2])
            }
            Self::Frozen { base, lambda: fixed } => base.analytic(x, y, *fixed)?,
        })
    }

    fn analytic_dlambda(&self, x: f64, y: f64, lambda: f64) -> Result<f64> {
        Ok(match self {
            Self::ShiftedHarmonic { x0 } => -x0 * (x - lambda * x0),
            Self::ShiftedHarmonicQuartic { x0, eta } => {
                let u = x - lambda * x0;
                -x0 * (u + eta * u.powi(3))
            }
            Self::DoubleWell { d } => double_well_dlambda(x, lambda, *d),
            Self::ThreeWire(t) => t.potential_derivative(x, lambda)?,
            Self::Tabulated(_) => {
                return Err(OctError::Unsupported(
                    "tabulated potentials are only defined on their grid".into(),
                ))
            }
            Self::Separable { along_x, .. } => along_x.analytic_dlambda(x, 0.0, lambda)?,
            Self::TransverseChannel { y0, omega } => -omega * omega * y0 * (y - lambda * y0),
            Self::LambdaOffset { base, coeffs } => {
                base.analytic_dlambda(x, y, lambda)? + coeffs[1] + 2.0 * lambda * coeffs[2]
            }
            Self::Frozen { .. } => 0.0,
        })
    }

    /// `V(x, lambda)` on the x axis.
    pub fn evaluate(&self, x: f64, lambda: f64) -> Result<f64> {
        self.analytic(x, 0.0, check_lambda(lambda)?)
    }

    /// `dV/dlambda (x, lambda)` on the x axis.
    pub fn derivative_wrt_lambda(&self, x: f64, lambda: f64) -> Result<f64> {
        self.analytic_dlambda(x, 0.0, check_lambda(lambda)?)
    }

    pub fn evaluate_2d(&self, x: f64, y: f64, lambda: f64) -> Result<f64> {
        self.analytic(x, y, check_lambda(lambda)?)
    }

    /// Value at flat grid index `i`, without the `[0, 1]` check.
    pub fn value_at(&self, grid: &SpaceGrid, i: usize, lambda: f64) -> Result<f64> {
        match self {
            Self::Tabulated(t) => Ok(t.value_at(i, lambda)),
            Self::Separable { along_x, omega_y } if along_x.needs_grid() => {
                let (_, y) = grid.point(i);
                Ok(along_x.value_at(&x_only(grid), i / grid.n_y(), lambda)? + 0.5 * (omega_y * y).powi(2))
            }
            Self::LambdaOffset { base, coeffs } if base.needs_grid() => {
                Ok(base.value_at(grid, i, lambda)? + coeffs[0] + lambda * (coeffs[1] + lambda * coeffs[2]))
            }
            Self::Frozen { base, lambda: fixed } if base.needs_grid() => base.value_at(grid, i, *fixed),
            _ => {
                let (x, y) = grid.point(i);
                self.analytic(x, y, lambda)
            }
        }
    }

    pub fn derivative_at(&self, grid: &SpaceGrid, i: usize, lambda: f64) -> Result<f64> {
        match self {
            Self::Tabulated(t) => Ok(t.slope_at(i, lambda)),
            Self::Separable { along_x, .. } if along_x.needs_grid() => {
                along_x.derivative_at(&x_only(grid), i / grid.n_y(), lambda)
            }
            Self::LambdaOffset { base, coeffs } if base.needs_grid() => {
                Ok(base.derivative_at(grid, i, lambda)? + coeffs[1] + 2.0 * lambda * coeffs[2])
            }
            Self::Frozen { .. } => Ok(0.0),
            _ => {
                let (x, y) = grid.point(i);
                self.analytic_dlambda(x, y, lambda)
            }
        }
    }

    fn needs_grid(&self) -> bool {
        match self {
            Self::Tabulated(_) => true,
            Self::Separable { along_x: b, .. } | Self::LambdaOffset { base: b, .. } | Self::Frozen { base: b, .. } => {
                b.needs_grid()
            }
            _ => false,
        }
    }

    /// Verifies that grid-bound parts of the family match `grid`.
    pub fn check_grid(&self, grid: &SpaceGrid) -> Result<()> {
        match self {
            Self::Tabulated(t) => t.check_grid(grid),
            Self::Separable { along_x, .. } => along_x.check_grid(&x_only(grid)),
            Self::LambdaOffset { base, .. } | Self::Frozen { base, .. } => base.check_grid(grid),
            _ => Ok(()),
        }
    }

    /// Fills `out` with `V(r_i, lambda)`.
    pub fn sample_into(&self, grid: &SpaceGrid, lambda: f64, out: &mut [f64]) -> Result<()> {
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.value_at(grid, i, lambda)?;
        }
        Ok(())
    }

    /// Fills `out` with `dV/dlambda (r_i, lambda)`.
    pub fn sample_derivative_into(&self, grid: &SpaceGrid, lambda: f64, out: &mut [f64]) -> Result<()> {
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.derivative_at(grid, i, lambda)?;
        }
        Ok(())
    }

    /// `V` on the grid with `lambda` checked against `[0, 1]`.
    pub fn sample(&self, grid: &SpaceGrid, lambda: f64) -> Result<Vec<f64>> {
        let lambda = check_lambda(lambda)?;
        self.check_grid(grid)?;
        let mut out = vec![0.0; grid.len()];
        self.sample_into(grid, lambda, &mut out)?;
        Ok(out)
    }

    /// Grid samples with a separate control value per x column.
    pub fn sample_columns_into(&self, grid: &SpaceGrid, lambda_x: &[f64], out: &mut [f64]) -> Result<()> {
        let ny = grid.n_y();
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.value_at(grid, i, lambda_x[i / ny])?;
        }
        Ok(())
    }

    pub fn sample_columns_derivative_into(&self, grid: &SpaceGrid, lambda_x: &[f64], out: &mut [f64]) -> Result<()> {
        let ny = grid.n_y();
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.derivative_at(grid, i, lambda_x[i / ny])?;
        }
        Ok(())
    }

    /// `V = V0(lambda) + V~` with `V0` the minimum over the grid.
    pub fn split_offset(&self, grid: &SpaceGrid, lambda: f64) -> Result<OffsetSplit> {
        let v = self.sample(grid, lambda)?;
        Ok(split_samples(v))
    }

    /// Replaces a grid-expensive family (three-wire) by an interpolation table.
    pub fn tabulate(&self, grid: &SpaceGrid, n_lambda: usize) -> Result<Self> {
        self.check_grid(grid)?;
        let table = TabulatedPotential::from_fn(*grid, n_lambda, |i, l| self.value_at(grid, i, l))?;
        Ok(Self::Tabulated(Arc::new(table)))
    }
}

fn x_only(grid: &SpaceGrid) -> SpaceGrid {
    SpaceGrid { x: grid.x, y: None }
}

/// Splits sampled values into minimum and remainder.
pub fn split_samples(mut v: Vec<f64>) -> OffsetSplit {
    let (argmin, v0) = v
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, x)| if x < acc.1 { (i, x) } else { acc });
    v.iter_mut().for_each(|x| *x -= v0);
    OffsetSplit { v0, argmin, shifted: v }
}
