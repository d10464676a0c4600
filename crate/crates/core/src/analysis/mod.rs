//! Phase-space and moment diagnostics.

mod observables;
mod wigner;

pub use observables::{observables, observables_with, Observables};
pub use wigner::{default_stride, momentum_axis, wigner, wigner_time_integrated, WignerMap};
