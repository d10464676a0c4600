//! Backward propagation of the costate.
//!
//! The backward steps are the exact transposes of the forward steps, so the
//! sensitivity densities handed to the sink give the derivative of the
//! discrete cost: for a functional `F` of the final state whose costate at
//! `T` is `p_T` (`dF = Im <p_T | d psi(T)>`),
//!
//! ```text
//! dF/dV_m(x) = -weight_m * density_m(x) * dV
//! ```

use num_complex::Complex64;

use super::crank_nicolson::CnStepper;
use super::split::SplitStepper;
use super::{Drive, PropagationSpec, Scheme, StateSource, Trajectory};
use crate::error::{OctError, Result};
use crate::field::WaveField;

/// Data for one time node of the backward sweep.
#[derive(Debug)]
pub struct AdjointNode<'a> {
    pub m: usize,
    /// Quadrature weight of the node (`dt`, or `dt/2` at the ends).
    pub weight: f64,
    pub psi: &'a [Complex64],
    pub p: &'a [Complex64],
    /// Real sensitivity density per grid point.
    pub density: &'a [f64],
}

#[derive(Debug, Clone)]
pub struct AdjointSummary {
    pub p_initial: WaveField,
}

fn overlap_density(p: &[Complex64], psi: &[Complex64], out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(p).zip(psi) {
        *o = (a.conj() * b).re;
    }
}

/// Runs the costate from `p_terminal` at `T` back to `t = 0`, calling `sink`
/// for nodes `n_t, n_t - 1, .., 0`.
pub fn propagate_adjoint<F>(
    spec: &PropagationSpec,
    drive: Drive<'_>,
    traj: &Trajectory,
    p_terminal: &WaveField,
    mut sink: F,
) -> Result<AdjointSummary>
where
    F: FnMut(AdjointNode<'_>) -> Result<()>,
{
    let schedule = spec.schedule(drive)?;
    if *traj.time() != spec.grid.time || *traj.space() != spec.grid.space {
        return Err(OctError::Dimension(format!(
            "trajectory has {} steps on {:?}, problem has {} steps",
            traj.time().n_t,
            traj.space(),
            spec.grid.time.n_t
        )));
    }
    if *p_terminal.grid() != spec.grid.space {
        return Err(OctError::Dimension("terminal costate lives on a different grid".into()));
    }
    let time = spec.grid.time;
    let n_t = time.n_t;
    let len = spec.grid.space.len();
    let mut src = StateSource::new(spec, traj, &schedule);
    let mut p = p_terminal.values().to_vec();
    let mut psi_next = traj.final_state().into_values();
    let (mut v_next, _) = schedule.potential(n_t)?;
    let mut density = vec![0.0; len];

    match spec.scheme {
        Scheme::SplitOperator | Scheme::SplitOperatorNonlinear => {
            let mut st = SplitStepper::new(&spec.grid.space, time.dt(), spec.g);
            overlap_density(&p, &psi_next, &mut density);
            sink(AdjointNode {
                m: n_t,
                weight: time.trapezoid_weight(n_t),
                psi: &psi_next,
                p: &p,
                density: &density,
            })?;
            for m in (0..n_t).rev() {
                let psi_m = src.state(m)?.to_vec();
                let (v_m, _) = schedule.potential(m)?;
                st.backward(&v_m, &v_next, &psi_m, &psi_next, &mut p);
                overlap_density(&p, &psi_m, &mut density);
                sink(AdjointNode {
                    m,
                    weight: time.trapezoid_weight(m),
                    psi: &psi_m,
                    p: &p,
                    density: &density,
                })?;
                psi_next = psi_m;
                v_next = v_m;
            }
        }
        Scheme::CrankNicolson1d => {
            let mut st = CnStepper::new(len, spec.grid.space.x.spacing(), time.dt());
            let mut s = vec![Complex64::new(0.0, 0.0); len];
            let mut v_bar = vec![0.0; len];
            let mut part_next = vec![0.0; len];
            let mut part = vec![0.0; len];
            let mut p_next = p.clone();
            for m in (0..n_t).rev() {
                let psi_m = src.state(m)?.to_vec();
                let (v_m, _) = schedule.potential(m)?;
                for (o, (a, b)) in v_bar.iter_mut().zip(v_m.iter().zip(&v_next)) {
                    *o = 0.5 * (a + b);
                }
                p_next.copy_from_slice(&p);
                st.backward(&v_bar, &mut p, &mut s)?;
                for i in 0..len {
                    part[i] = (s[i].conj() * (psi_m[i] + psi_next[i])).re;
                }
                let node = m + 1;
                if node == n_t {
                    density.iter_mut().zip(&part).for_each(|(d, a)| *d = 0.5 * a);
                } else {
                    for i in 0..len {
                        density[i] = 0.25 * (part[i] + part_next[i]);
                    }
                }
                sink(AdjointNode {
                    m: node,
                    weight: time.trapezoid_weight(node),
                    psi: &psi_next,
                    p: &p_next,
                    density: &density,
                })?;
                std::mem::swap(&mut part, &mut part_next);
                psi_next = psi_m;
                v_next = v_m;
            }
            density.iter_mut().zip(&part_next).for_each(|(d, a)| *d = 0.5 * a);
            sink(AdjointNode {
                m: 0,
                weight: time.trapezoid_weight(0),
                psi: &psi_next,
                p: &p,
                density: &density,
            })?;
        }
    }
    if p.iter().any(|z| !z.is_finite()) {
        return Err(OctError::Numerical("adjoint produced non-finite values".into()));
    }
    Ok(AdjointSummary {
        p_initial: WaveField::new(spec.grid.space, p)?,
    })
}
