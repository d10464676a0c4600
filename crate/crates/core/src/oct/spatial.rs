//! Optimization of a time-independent control `lambda(x)` over a scattering
//! region `[x_start, x_start + L]`, for a condensate moving along `x` through
//! a potential `V(y, lambda(x))`.
//!
//! Left of the region `lambda = 0`, right of it `lambda = 1`.

use num_complex::Complex64;

use super::optimize::{minimize, Cost, Objective, OptimizerSettings};
use super::{check_states, terminal_costate, OctReport};
use crate::control::Control;
use crate::error::{OctError, Result};
use crate::field::{infidelity, WaveField};
use crate::grid::SpaceGrid;
use crate::solver::{propagate, propagate_adjoint, Drive, PropagationSpec, Trajectory};
use crate::spectral::Spectral;

#[derive(Debug, Clone)]
pub struct SpatialProblem {
    pub spec: PropagationSpec,
    pub initial: WaveField,
    pub desired: WaveField,
    pub gamma: f64,
    first_column: usize,
    intervals: usize,
}

impl SpatialProblem {
    /// The region starts at the first x column at or after `x_start` and spans
    /// `round(length / dx)` intervals.
    pub fn new(
        spec: PropagationSpec,
        initial: WaveField,
        desired: WaveField,
        x_start: f64,
        length: f64,
    ) -> Result<Self> {
        let space = spec.grid.space;
        if space.dim() != 2 {
            return Err(OctError::Unsupported("spatial control needs a 2D grid".into()));
        }
        let dx = space.x.spacing();
        let first = ((x_start - space.x.min) / dx - 1e-9).ceil();
        let intervals = (length / dx).round() as usize;
        if first < 0.0 || intervals < 2 || first as usize + intervals >= space.n_x() {
            return Err(OctError::ContractViolation(format!(
                "region [{x_start}, {}] does not fit inside the grid",
                x_start + length
            )));
        }
        check_states(&initial, &desired, super::DEFAULT_GAMMA)?;
        if *initial.grid() != space {
            return Err(OctError::Dimension("states and propagation grid differ".into()));
        }
        Ok(Self {
            spec,
            initial,
            desired,
            gamma: super::DEFAULT_GAMMA,
            first_column: first as usize,
            intervals,
        })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// x coordinates of the control nodes.
    pub fn node_positions(&self) -> Vec<f64> {
        (0..=self.intervals)
            .map(|j| self.spec.grid.space.x.coord(self.first_column + j))
            .collect()
    }

    pub fn region_length(&self) -> f64 {
        self.intervals as f64 * self.spec.grid.space.x.spacing()
    }

    /// `lambda` per x column of the grid.
    pub fn columns(&self, control: &Control) -> Result<Vec<f64>> {
        if control.intervals() != self.intervals {
            return Err(OctError::Dimension(format!(
                "spatial control has {} intervals, region has {}",
                control.intervals(),
                self.intervals
            )));
        }
        let c0 = self.first_column;
        Ok((0..self.spec.grid.space.n_x())
            .map(|ix| match ix {
                _ if ix < c0 => 0.0,
                _ if ix > c0 + self.intervals => 1.0,
                _ => control.values()[ix - c0],
            })
            .collect())
    }

    pub fn forward(&self, control: &Control) -> Result<Trajectory> {
        let cols = self.columns(control)?;
        propagate(&self.spec, Drive::Spatial(&cols), &self.initial)
    }

    fn cost_of(&self, control: &Control, traj: &Trajectory) -> Result<Cost> {
        let inf = infidelity(&traj.final_state(), &self.desired)?;
        let pen = control.penalty(self.gamma, self.spec.grid.space.x.spacing());
        Ok(Cost {
            total: inf + pen,
            infidelity: inf,
            penalty: pen,
        })
    }

    pub fn evaluate_cost(&self, control: &Control) -> Result<Cost> {
        let traj = self.forward(control)?;
        self.cost_of(control, &traj)
    }

    fn gradient_from(&self, control: &Control, traj: &Trajectory) -> Result<Vec<f64>> {
        let space = self.spec.grid.space;
        let (nx, ny) = (space.n_x(), space.n_y());
        let dx = space.x.spacing();
        let dv = space.cell_volume();
        let cols = self.columns(control)?;
        let drive = Drive::Spatial(&cols);
        let d = self.spec.schedule(drive)?.derivative(0)?;
        let p_t = terminal_costate(&traj.final_state(), &self.desired)?;
        let mut acc = vec![0.0; nx];
        propagate_adjoint(&self.spec, drive, traj, &p_t, |node| {
            for j in 1..self.intervals {
                let ix = self.first_column + j;
                let range = ix * ny..(ix + 1) * ny;
                let s: f64 = d[range.clone()]
                    .iter()
                    .zip(&node.density[range])
                    .map(|(a, b)| a * b)
                    .sum();
                acc[ix] += node.weight * s;
            }
            Ok(())
        })?;
        let l2 = control.second_difference(dx);
        Ok((1..self.intervals)
            .map(|j| -acc[self.first_column + j] * dv / dx - self.gamma * l2[j - 1])
            .collect())
    }

    /// Gradient density at interior nodes; `dJ/dlambda_j = dx * g_j`.
    pub fn compute_gradient(&self, control: &Control) -> Result<Vec<f64>> {
        let traj = self.forward(control)?;
        self.gradient_from(control, &traj)
    }

    pub fn optimize(&self, initial: &Control, settings: &OptimizerSettings) -> Result<OctReport> {
        check_states(&self.initial, &self.desired, self.gamma)?;
        self.columns(initial)?;
        let obj = SpatialObjective {
            problem: self,
            template: initial,
        };
        let m = minimize(&obj, initial.interior().to_vec(), settings)?;
        Ok(OctReport {
            control: initial.with_interior(&m.x)?,
            gradient_norm: m.gradient.iter().fold(0.0, |a, v| a.max(v.abs())),
            history: m.history,
            cost: m.cost.total,
            infidelity: m.cost.infidelity,
            penalty: m.cost.penalty,
            iterations: m.iterations,
            exit_reason: m.exit,
        })
    }
}

struct SpatialObjective<'a> {
    problem: &'a SpatialProblem,
    template: &'a Control,
}

impl Objective for SpatialObjective<'_> {
    type State = Trajectory;

    fn value(&self, x: &[f64]) -> Result<(Cost, Trajectory)> {
        let c = self.template.with_interior(x)?;
        let traj = self.problem.forward(&c)?;
        Ok((self.problem.cost_of(&c, &traj)?, traj))
    }

    fn gradient(&self, x: &[f64], traj: &Trajectory) -> Result<Vec<f64>> {
        let c = self.template.with_interior(x)?;
        self.problem.gradient_from(&c, traj)
    }

    fn node_spacing(&self) -> f64 {
        self.problem.spec.grid.space.x.spacing()
    }
}

/// Gaussian packet along x entering the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub x0: f64,
    pub k0: f64,
    pub sigma: f64,
}

/// Initial state `packet(x) * phi_0(y)` and target `free(packet, T)(x) *
/// phi_0(y - y0)`, with `phi_0` the groundstate of `1/2 omega^2 y^2`.
pub fn channel_states(
    space: &SpaceGrid,
    packet: Packet,
    omega: f64,
    y0: f64,
    t_final: f64,
) -> Result<(WaveField, WaveField)> {
    let ay = space
        .y
        .ok_or_else(|| OctError::Unsupported("channel states need a 2D grid".into()))?;
    let x_space = SpaceGrid::new_1d(space.x.min, space.x.max, space.x.n)?;
    let mut px = WaveField::from_fn(x_space, |x, _| {
        let u = (x - packet.x0) / packet.sigma;
        Complex64::from_polar((-0.5 * u * u).exp(), packet.k0 * x)
    });
    px.normalize();
    let mut moved = px.values().to_vec();
    Spectral::new(&x_space).kinetic_step(&mut moved, t_final);
    let transverse = |shift: f64| -> Vec<f64> {
        let v: Vec<f64> = (0..ay.n)
            .map(|i| (-0.5 * omega * (ay.coord(i) - shift).powi(2)).exp())
            .collect();
        let n = (v.iter().map(|a| a * a).sum::<f64>() * ay.spacing()).sqrt();
        v.into_iter().map(|a| a / n).collect()
    };
    let (t0, t1) = (transverse(0.0), transverse(y0));
    let product = |xs: &[Complex64], ys: &[f64]| -> Result<WaveField> {
        let vals = xs.iter().flat_map(|a| ys.iter().map(move |b| a * b)).collect();
        let mut f = WaveField::new(*space, vals)?;
        f.normalize();
        Ok(f)
    };
    Ok((product(px.values(), &t0)?, product(&moved, &t1)?))
}
