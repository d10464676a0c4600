//! Gradient descent and limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{OctError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GradientDescent,
    #[default]
    Bfgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub method: Method,
    pub max_iterations: usize,
    /// Stop when the max-norm of the gradient density drops below this.
    pub gradient_tolerance: f64,
    /// Stop when the cost drops below this.
    pub cost_target: f64,
    pub memory: usize,
    pub armijo_c1: f64,
    pub initial_step: f64,
    pub step_shrink: f64,
    pub max_backtracks: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            method: Method::Bfgs,
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            cost_target: 1e-4,
            memory: 20,
            armijo_c1: 1e-4,
            initial_step: 1.0,
            step_shrink: 0.5,
            max_backtracks: 40,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gradient_tolerance >= 0.0
            && self.armijo_c1 > 0.0
            && self.armijo_c1 < 1.0
            && self.initial_step > 0.0
            && self.step_shrink > 0.0
            && self.step_shrink < 1.0
            && (self.method == Method::GradientDescent || self.memory > 0);
        if !ok {
            return Err(OctError::ContractViolation(format!(
                "invalid optimizer settings {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    GradientTolerance,
    CostTarget,
    MaxIterations,
    /// The line search found no acceptable step.
    Stagnation,
}

/// Cost split into its terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cost {
    pub total: f64,
    pub infidelity: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: f64,
    pub infidelity: f64,
    pub penalty: f64,
    pub gradient_norm: f64,
}

/// A cost over the free control nodes.
pub(crate) trait Objective {
    type State;

    fn value(&self, x: &[f64]) -> Result<(Cost, Self::State)>;

    /// Gradient density `g`, with `dJ/dx_i = node_spacing * g_i`.
    fn gradient(&self, x: &[f64], state: &Self::State) -> Result<Vec<f64>>;

    fn node_spacing(&self) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub cost: Cost,
    pub gradient: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub exit: ExitReason,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// L-BFGS two-loop recursion applied to `grad`; returns `-H grad`.
fn lbfgs_direction(grad: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>)>, h0: f64) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push((a, rho));
    }
    let scale = match pairs.back() {
        Some((s, y)) => dot(s, y) / dot(y, y),
        None => h0,
    };
    q.iter_mut().for_each(|v| *v *= scale);
    for ((s, y), (a, rho)) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

pub(crate) fn minimize<O: Objective>(obj: &O, x0: Vec<f64>, settings: &OptimizerSettings) -> Result<Minimum> {
    settings.validate()?;
    let h = obj.node_spacing();
    let mut x = x0;
    let (mut cost, state) = obj.value(&x)?;
    let mut g = obj.gradient(&x, &state)?;
    drop(state);
    let record = |iteration, cost: &Cost, g: &[f64]| IterationRecord {
        iteration,
        cost: cost.total,
        infidelity: cost.infidelity,
        penalty: cost.penalty,
        gradient_norm: max_norm(g),
    };
    let mut history = vec![record(0, &cost, &g)];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut iterations = 0;
    let exit = loop {
        if max_norm(&g) < settings.gradient_tolerance {
            break ExitReason::GradientTolerance;
        }
        if cost.total < settings.cost_target {
            break ExitReason::CostTarget;
        }
        if iterations >= settings.max_iterations {
            break ExitReason::MaxIterations;
        }
        let grad: Vec<f64> = g.iter().map(|v| h * v).collect();
        let mut d = match settings.method {
            Method::GradientDescent => g.iter().map(|v| -v).collect(),
            Method::Bfgs => lbfgs_direction(&grad, &pairs, 1.0 / h),
        };
        let mut slope = dot(&grad, &d);
        if slope.is_nan() || slope >= 0.0 {
            log::debug!("non-descent direction, restarting quasi-Newton memory");
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&grad, &d);
        }
        let mut step = settings.initial_step;
        let mut accepted = None;
        for _ in 0..settings.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            match obj.value(&trial) {
                Ok((c, st)) if c.total.is_finite() && c.total <= cost.total + settings.armijo_c1 * step * slope => {
                    accepted = Some((trial, c, st));
                    break;
                }
                Ok(_) | Err(OctError::Numerical(_)) => step *= settings.step_shrink,
                Err(e) => return Err(e),
            }
        }
        let Some((x_new, c_new, st)) = accepted else {
            break ExitReason::Stagnation;
        };
        let g_new = obj.gradient(&x_new, &st)?;
        if settings.method == Method::Bfgs {
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| h * (a - b)).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                pairs.push_back((s, y));
                if pairs.len() > settings.memory {
                    pairs.pop_front();
                }
            } else {
                pairs.clear();
            }
        }
        x = x_new;
        cost = c_new;
        g = g_new;
        iterations += 1;
        history.push(record(iterations, &cost, &g));
        log::debug!("iteration {iterations}: J = {:e}, |g| = {:e}", cost.total, max_norm(&g));
    };
    Ok(Minimum {
        x,
        cost,
        gradient: g,
        history,
        exit,
        iterations,
    })
}
