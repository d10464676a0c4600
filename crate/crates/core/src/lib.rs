//! Optimal control of condensate transport in parameterized trap potentials.
//!
//! The state obeys `i psi_t = (-1/2 Laplacian + V(r, lambda(t)) + g |psi|^2) psi`
//! on a periodic grid (hbar = m = 1, lengths in micrometers). A scalar control
//! `lambda(t)`, pinned to 0 and 1 at the ends, is optimized to minimize
//!
//! ```text
//! J = 1/2 (1 - |<psi_d|psi(T)>|^2) + gamma/2 int lambda_dot^2 dt
//! ```
//!
//! using gradients from a backward costate solve.

pub mod analysis;
pub mod control;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod oct;
pub mod potential;
pub mod solver;
pub mod spectral;

pub use num_complex::Complex64;

pub use control::{Control, InitialGuess};
pub use error::{OctError, Result};
pub use field::{infidelity, inner_product, WaveField};
pub use grid::{Axis, Grid, SpaceGrid, TimeGrid};
pub use oct::spatial::SpatialProblem;
pub use oct::{Cost, ExitReason, Method, OctProblem, OctReport, OptimizerSettings};
pub use potential::{PotentialFamily, TabulatedPotential, ThreeWireTrap};
pub use solver::{propagate, propagate_adjoint, Drive, PropagationSpec, Scheme, StoragePolicy, Trajectory};
