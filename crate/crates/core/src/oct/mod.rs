//! Cost, adjoint gradient and the optimization loop for time-dependent controls.

mod optimize;
pub mod spatial;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use optimize::{Cost, ExitReason, IterationRecord, Method, OptimizerSettings};

use crate::control::Control;
use crate::error::{OctError, Result};
use crate::field::{infidelity, inner_product, WaveField, NORM_CONTRACT_TOL};
use crate::solver::{
    groundstate_at, propagate, propagate_adjoint, Drive, GroundstateOptions, PropagationSpec, Trajectory,
};
use optimize::{minimize, Objective};

/// Control-penalty weight used throughout unless configured otherwise.
pub const DEFAULT_GAMMA: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct OctProblem {
    pub spec: PropagationSpec,
    pub initial: WaveField,
    pub desired: WaveField,
    pub gamma: f64,
}

/// Result of an optimization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OctReport {
    pub control: Control,
    pub history: Vec<IterationRecord>,
    pub cost: f64,
    pub infidelity: f64,
    pub penalty: f64,
    /// Max-norm of the gradient density at exit.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub exit_reason: ExitReason,
}

impl OctReport {
    pub fn leaves_unit_interval(&self) -> bool {
        !self.control.is_within_unit_interval()
    }
}

pub(crate) fn check_states(initial: &WaveField, desired: &WaveField, gamma: f64) -> Result<()> {
    for (name, f) in [("initial", initial), ("desired", desired)] {
        let n = f.norm_sqr();
        if (n - 1.0).abs() > NORM_CONTRACT_TOL {
            return Err(OctError::ContractViolation(format!("{name} state has norm^2 {n}")));
        }
    }
    if initial.grid() != desired.grid() {
        return Err(OctError::Dimension(
            "initial and desired states live on different grids".into(),
        ));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(OctError::ContractViolation(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

/// Costate at `T` for the infidelity term: `i <desired|final> desired`.
pub(crate) fn terminal_costate(final_state: &WaveField, desired: &WaveField) -> Result<WaveField> {
    let c = inner_product(desired, final_state)?;
    Ok(desired.scaled(Complex64::new(0.0, 1.0) * c))
}

impl OctProblem {
    pub fn new(spec: PropagationSpec, initial: WaveField, desired: WaveField) -> Result<Self> {
        let p = Self {
            spec,
            initial,
            desired,
            gamma: DEFAULT_GAMMA,
        };
        p.validate()?;
        Ok(p)
    }

    /// Transfer between the groundstates at `lambda = 0` and `lambda = 1`,
    /// relaxed with the kinetic operator of the propagation scheme.
    pub fn transfer(spec: PropagationSpec) -> Result<Self> {
        let opts = GroundstateOptions {
            tau: spec.grid.time.dt(),
            kinetic: spec.scheme.kinetic_model(),
            ..Default::default()
        };
        let space = spec.grid.space;
        let initial = groundstate_at(&spec.potential, &space, 0.0, spec.g, &opts)?.state;
        let desired = groundstate_at(&spec.potential, &space, 1.0, spec.g, &opts)?.state;
        Self::new(spec, initial, desired)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_states(&self.initial, &self.desired, self.gamma)?;
        if *self.initial.grid() != self.spec.grid.space {
            return Err(OctError::Dimension("states and propagation grid differ".into()));
        }
        Ok(())
    }

    fn check_control(&self, control: &Control) -> Result<()> {
        if control.values().len() != self.spec.grid.time.nodes() {
            return Err(OctError::Dimension(format!(
                "control has {} nodes, time grid has {}",
                control.values().len(),
                self.spec.grid.time.nodes()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, control: &Control) -> Result<Trajectory> {
        self.check_control(control)?;
        propagate(&self.spec, Drive::Temporal(control.values()), &self.initial)
    }

    /// Further cost terms join here, with their terminal source added in
    /// `terminal_costate` and any running source in `gradient_from`.
    fn cost_of(&self, control: &Control, traj: &Trajectory) -> Result<Cost> {
        let inf = infidelity(&traj.final_state(), &self.desired)?;
        let pen = control.penalty(self.gamma, self.spec.grid.time.dt());
        Ok(Cost {
            total: inf + pen,
            infidelity: inf,
            penalty: pen,
        })
    }

    /// `J = 1/2 (1 - |<psi_d|psi(T)>|^2) + gamma/2 int lambda_dot^2 dt`.
    pub fn evaluate_cost(&self, control: &Control) -> Result<Cost> {
        let traj = self.forward(control)?;
        self.cost_of(control, &traj)
    }

    fn gradient_from(&self, control: &Control, traj: &Trajectory) -> Result<Vec<f64>> {
        let time = self.spec.grid.time;
        let (dt, n_t) = (time.dt(), time.n_t);
        let dv = self.spec.grid.space.cell_volume();
        let drive = Drive::Temporal(control.values());
        let schedule = self.spec.schedule(drive)?;
        let p_t = terminal_costate(&traj.final_state(), &self.desired)?;
        let mut grad = vec![0.0; n_t.saturating_sub(1)];
        propagate_adjoint(&self.spec, drive, traj, &p_t, |node| {
            if node.m == 0 || node.m == n_t {
                return Ok(());
            }
            let d = schedule.derivative(node.m)?;
            let s: f64 = d.iter().zip(node.density).map(|(a, b)| a * b).sum();
            grad[node.m - 1] = -node.weight / dt * s * dv;
            Ok(())
        })?;
        for (g, l2) in grad.iter_mut().zip(control.second_difference(dt)) {
            *g -= self.gamma * l2;
        }
        Ok(grad)
    }

    /// Gradient density at the interior nodes; `dJ/dlambda_m = dt * g_m`.
    pub fn compute_gradient(&self, control: &Control) -> Result<Vec<f64>> {
        let traj = self.forward(control)?;
        self.gradient_from(control, &traj)
    }

    pub fn optimize(&self, initial: &Control, settings: &OptimizerSettings) -> Result<OctReport> {
        self.validate()?;
        self.check_control(initial)?;
        let obj = TemporalObjective {
            problem: self,
            template: initial,
        };
        let m = minimize(&obj, initial.interior().to_vec(), settings)?;
        let control = initial.with_interior(&m.x)?;
        if !control.is_within_unit_interval() {
            let (lo, hi) = control.range();
            log::info!("optimized control leaves [0, 1]: range [{lo}, {hi}]");
        }
        Ok(OctReport {
            gradient_norm: m.gradient.iter().fold(0.0, |a, v| a.max(v.abs())),
            control,
            history: m.history,
            cost: m.cost.total,
            infidelity: m.cost.infidelity,
            penalty: m.cost.penalty,
            iterations: m.iterations,
            exit_reason: m.exit,
        })
    }
}

struct TemporalObjective<'a> {
    problem: &'a OctProblem,
    template: &'a Control,
}

impl Objective for TemporalObjective<'_> {
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
        self.problem.spec.grid.time.dt()
    }
}
