//! Forward, adjoint and imaginary-time propagation.

mod adjoint;
pub mod crank_nicolson;
mod groundstate;
pub mod split;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use adjoint::{propagate_adjoint, AdjointNode, AdjointSummary};
pub(crate) use groundstate::energy_parts;
pub use groundstate::{groundstate, groundstate_at, Groundstate, GroundstateOptions, KineticModel};

use crate::error::{OctError, Result};
use crate::field::{WaveField, EDGE_WARN_DENSITY, NORM_CONTRACT_TOL};
use crate::grid::{Grid, SpaceGrid, TimeGrid};
use crate::potential::{split_samples, PotentialFamily};
use crank_nicolson::CnStepper;
use split::SplitStepper;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[serde(rename = "crank_nicolson_1d")]
    CrankNicolson1d,
    SplitOperator,
    SplitOperatorNonlinear,
}

impl Scheme {
    /// Kinetic discretization whose eigenstates are stationary under the scheme.
    pub fn kinetic_model(self) -> KineticModel {
        match self {
            Scheme::CrankNicolson1d => KineticModel::FiniteDifference,
            _ => KineticModel::Spectral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoragePolicy {
    #[default]
    Full,
    /// Keep every `n`-th snapshot and recompute the rest on demand.
    Strided(usize),
}

/// How the control enters the potential.
#[derive(Debug, Clone, Copy)]
pub enum Drive<'a> {
    /// `lambda` at each of the `n_t + 1` time nodes.
    Temporal(&'a [f64]),
    /// Time-independent `lambda` per x column.
    Spatial(&'a [f64]),
}

#[derive(Debug, Clone)]
pub struct PropagationSpec {
    pub grid: Grid,
    pub potential: PotentialFamily,
    pub g: f64,
    pub scheme: Scheme,
    /// Propagate with `V - V0(lambda)` and track the removed phase.
    pub subtract_offset: bool,
    pub storage: StoragePolicy,
}

impl PropagationSpec {
    pub fn new(grid: Grid, potential: PotentialFamily, scheme: Scheme) -> Self {
        Self {
            grid,
            potential,
            g: 0.0,
            scheme,
            subtract_offset: false,
            storage: StoragePolicy::Full,
        }
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn validate(&self, drive: &Drive<'_>) -> Result<()> {
        let space = &self.grid.space;
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(OctError::ContractViolation(format!(
                "nonlinearity must be >= 0, got {}",
                self.g
            )));
        }
        match self.scheme {
            Scheme::CrankNicolson1d if space.dim() != 1 => {
                return Err(OctError::Unsupported("Crank-Nicolson needs a 1D grid".into()))
            }
            Scheme::CrankNicolson1d | Scheme::SplitOperator if self.g != 0.0 => {
                return Err(OctError::Unsupported(format!(
                    "{:?} is linear; use split_operator_nonlinear for g != 0",
                    self.scheme
                )))
            }
            _ => {}
        }
        if let StoragePolicy::Strided(0) = self.storage {
            return Err(OctError::ContractViolation("storage stride must be positive".into()));
        }
        match drive {
            Drive::Temporal(l) if l.len() != self.grid.time.nodes() => {
                return Err(OctError::Dimension(format!(
                    "control has {} values, time grid has {} nodes",
                    l.len(),
                    self.grid.time.nodes()
                )))
            }
            Drive::Spatial(l) if l.len() != space.n_x() => {
                return Err(OctError::Dimension(format!(
                    "spatial control has {} values, grid has {} columns",
                    l.len(),
                    space.n_x()
                )))
            }
            _ => {}
        }
        self.potential.check_grid(space)
    }

    pub fn schedule<'a>(&'a self, drive: Drive<'a>) -> Result<Schedule<'a>> {
        self.validate(&drive)?;
        Schedule::new(self, drive)
    }
}

/// Potential samples along the time grid.
#[derive(Debug, Clone)]
pub struct Schedule<'a> {
    spec: &'a PropagationSpec,
    drive: Drive<'a>,
    fixed: Option<(Vec<f64>, f64, usize)>,
}

impl<'a> Schedule<'a> {
    fn new(spec: &'a PropagationSpec, drive: Drive<'a>) -> Result<Self> {
        let mut s = Self {
            spec,
            drive,
            fixed: None,
        };
        if let Drive::Spatial(_) = drive {
            s.fixed = Some(s.compute(0)?);
        }
        Ok(s)
    }

    fn compute(&self, m: usize) -> Result<(Vec<f64>, f64, usize)> {
        let space = &self.spec.grid.space;
        let mut v = vec![0.0; space.len()];
        match self.drive {
            Drive::Temporal(l) => self.spec.potential.sample_into(space, l[m], &mut v)?,
            Drive::Spatial(l) => self.spec.potential.sample_columns_into(space, l, &mut v)?,
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(OctError::Numerical(format!("non-finite potential at node {m}")));
        }
        if self.spec.subtract_offset {
            let s = split_samples(v);
            Ok((s.shifted, s.v0, s.argmin))
        } else {
            Ok((v, 0.0, 0))
        }
    }

    /// Potential used at node `m` and the offset removed from it.
    pub fn potential(&self, m: usize) -> Result<(Vec<f64>, f64)> {
        match &self.fixed {
            Some((v, v0, _)) => Ok((v.clone(), *v0)),
            None => self.compute(m).map(|(v, v0, _)| (v, v0)),
        }
    }

    /// `dV/dlambda` at node `m`, with the offset derivative removed when the
    /// offset is subtracted.
    pub fn derivative(&self, m: usize) -> Result<Vec<f64>> {
        let space = &self.spec.grid.space;
        let mut d = vec![0.0; space.len()];
        match self.drive {
            Drive::Temporal(l) => self.spec.potential.sample_derivative_into(space, l[m], &mut d)?,
            Drive::Spatial(l) => self.spec.potential.sample_columns_derivative_into(space, l, &mut d)?,
        }
        if self.spec.subtract_offset {
            let argmin = match &self.fixed {
                Some((_, _, a)) => *a,
                None => self.compute(m)?.2,
            };
            let d0 = d[argmin];
            d.iter_mut().for_each(|x| *x -= d0);
        }
        Ok(d)
    }
}

/// Per-step propagator for one scheme.
#[derive(Debug, Clone)]
pub(crate) enum Stepper {
    Cn { st: CnStepper, v_bar: Vec<f64> },
    Split(SplitStepper),
}

impl Stepper {
    pub(crate) fn new(spec: &PropagationSpec) -> Self {
        let space = &spec.grid.space;
        let dt = spec.grid.time.dt();
        match spec.scheme {
            Scheme::CrankNicolson1d => Stepper::Cn {
                st: CnStepper::new(space.n_x(), space.x.spacing(), dt),
                v_bar: vec![0.0; space.len()],
            },
            _ => Stepper::Split(SplitStepper::new(space, dt, spec.g)),
        }
    }

    pub(crate) fn forward(&mut self, v_m: &[f64], v_next: &[f64], psi: &mut [Complex64]) -> Result<()> {
        match self {
            Stepper::Cn { st, v_bar } => {
                average(v_m, v_next, v_bar);
                st.forward(v_bar, psi)
            }
            Stepper::Split(s) => {
                s.forward(v_m, v_next, psi);
                Ok(())
            }
        }
    }
}

fn average(a: &[f64], b: &[f64], out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = 0.5 * (x + y);
    }
}

/// Stored forward solution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    space: SpaceGrid,
    time: TimeGrid,
    stride: usize,
    /// Snapshots at nodes `0, stride, 2 stride, ..`, plus the final node.
    snapshots: Vec<Vec<Complex64>>,
    final_state: Vec<Complex64>,
    phase: f64,
}

impl Trajectory {
    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn is_full(&self) -> bool {
        self.stride == 1
    }

    /// Node indices that have a stored snapshot.
    pub fn stored_nodes(&self) -> Vec<usize> {
        let n = self.time.n_t;
        let mut nodes: Vec<usize> = (0..=n).step_by(self.stride).collect();
        if *nodes.last().unwrap() != n {
            nodes.push(n);
        }
        nodes
    }

    pub fn snapshot(&self, m: usize) -> Option<WaveField> {
        self.snapshot_values(m)
            .map(|v| WaveField::new(self.space, v.to_vec()).expect("snapshot matches grid"))
    }

    pub(crate) fn snapshot_values(&self, m: usize) -> Option<&[Complex64]> {
        if m == self.time.n_t {
            Some(&self.final_state)
        } else if m.is_multiple_of(self.stride) {
            self.snapshots.get(m / self.stride).map(|v| v.as_slice())
        } else {
            None
        }
    }

    pub fn final_state(&self) -> WaveField {
        WaveField::new(self.space, self.final_state.clone()).expect("final state matches grid")
    }

    /// Accumulated `int V0(lambda) dt` removed by offset subtraction (zero
    /// otherwise); the unshifted solution is `exp(-i phase)` times this one.
    pub fn removed_phase(&self) -> f64 {
        self.phase
    }
}

fn check_initial(spec: &PropagationSpec, psi0: &WaveField) -> Result<()> {
    if *psi0.grid() != spec.grid.space {
        return Err(OctError::Dimension("initial state lives on a different grid".into()));
    }
    let n = psi0.norm_sqr();
    if (n - 1.0).abs() > NORM_CONTRACT_TOL {
        return Err(OctError::ContractViolation(format!(
            "initial state has norm^2 {n}, expected 1"
        )));
    }
    Ok(())
}

/// Forward solve of the state equation from `psi0` at `t = 0`.
pub fn propagate(spec: &PropagationSpec, drive: Drive<'_>, psi0: &WaveField) -> Result<Trajectory> {
    let schedule = spec.schedule(drive)?;
    check_initial(spec, psi0)?;
    let time = spec.grid.time;
    let stride = match spec.storage {
        StoragePolicy::Full => 1,
        StoragePolicy::Strided(s) => s,
    };
    let mut stepper = Stepper::new(spec);
    let mut psi = psi0.values().to_vec();
    let mut snapshots = Vec::with_capacity(time.n_t / stride + 1);
    snapshots.push(psi.clone());
    let (mut v_m, mut v0_m) = schedule.potential(0)?;
    let mut phase = 0.0;
    for m in 0..time.n_t {
        let (v_next, v0_next) = schedule.potential(m + 1)?;
        stepper.forward(&v_m, &v_next, &mut psi)?;
        phase += 0.5 * time.dt() * (v0_m + v0_next);
        if (m + 1) % stride == 0 && m + 1 < time.n_t {
            snapshots.push(psi.clone());
        }
        v_m = v_next;
        v0_m = v0_next;
    }
    if psi.iter().any(|z| !z.is_finite()) {
        return Err(OctError::Numerical("propagation produced non-finite values".into()));
    }
    let out = Trajectory {
        space: spec.grid.space,
        time,
        stride,
        snapshots,
        final_state: psi,
        phase,
    };
    let edge = out.final_state().edge_density();
    if edge > EDGE_WARN_DENSITY {
        log::warn!("edge density {edge:e} at t = T; periodic wrap-around may distort results");
    }
    Ok(out)
}

/// Recomputes snapshots between checkpoints for strided trajectories.
pub(crate) struct StateSource<'a> {
    traj: &'a Trajectory,
    schedule: &'a Schedule<'a>,
    stepper: Stepper,
    start: usize,
    segment: Vec<Vec<Complex64>>,
}

impl<'a> StateSource<'a> {
    pub(crate) fn new(spec: &PropagationSpec, traj: &'a Trajectory, schedule: &'a Schedule<'a>) -> Self {
        Self {
            traj,
            schedule,
            stepper: Stepper::new(spec),
            start: usize::MAX,
            segment: Vec::new(),
        }
    }

    pub(crate) fn state(&mut self, m: usize) -> Result<&[Complex64]> {
        if self.traj.stride == 1 || m == self.traj.time.n_t {
            return Ok(self.traj.snapshot_values(m).expect("full storage"));
        }
        let start = m - m % self.traj.stride;
        if start != self.start {
            let end = (start + self.traj.stride).min(self.traj.time.n_t);
            let mut psi = self.traj.snapshot_values(start).expect("checkpoint").to_vec();
            self.segment.clear();
            self.segment.push(psi.clone());
            let (mut v_m, _) = self.schedule.potential(start)?;
            for k in start..end - 1 {
                let (v_next, _) = self.schedule.potential(k + 1)?;
                self.stepper.forward(&v_m, &v_next, &mut psi)?;
                self.segment.push(psi.clone());
                v_m = v_next;
            }
            self.start = start;
        }
        Ok(&self.segment[m - start])
    }
}
