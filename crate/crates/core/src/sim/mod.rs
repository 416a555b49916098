//! Saturated closed-loop simulation, ellipsoid geometry and empirical
//! checks of the certified properties.

mod disturbance;
mod ellipsoid;
mod simulate;
mod system;
mod verify;

pub use disturbance::{
    impulse_suite, random_energy_suite, sinusoid_disturbance, standard_suite, truncate_to_energy,
};
pub use ellipsoid::{condition_number, Ellipsoid};
pub use simulate::{simulate, Trajectory};
pub use system::LinearSaturatedSystem;
pub use verify::{
    verify_convergence_bound, verify_l2_gain, verify_reachable, ConvergenceReport, GainReport,
    GainRun, ReachableReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("state diverged at step {step} (|x| = {norm:e})")]
    Diverged { step: usize, norm: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("disturbance {index} has energy {energy} above the bound {bound}")]
    EnergyBound {
        index: usize,
        energy: f64,
        bound: f64,
    },
    #[error("simulation horizon must be positive")]
    EmptyHorizon,
    #[error("system has no performance channel")]
    MissingChannel,
}
