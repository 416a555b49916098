//! Signal primitives, experiment datasets and their on-disk format.

mod dataset;
mod generate;
mod hankel;
mod io;
mod signal;

pub use dataset::{Dataset, DatasetDiagnostics};
pub use generate::{
    generate_dataset, generate_dataset_with_policy, uniform_setpoint_reference, InputPolicy,
    OpenLoop, SetPointTracking,
};
pub use hankel::{hankel, is_persistently_exciting, HankelMatrix};
pub use io::{read_dataset, write_dataset, DatasetFile};
pub(crate) use signal::saturate_unchecked;
pub use signal::{deadzone, saturate, SaturationBounds, SignalRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("saturation bound {index} is not strictly positive ({value})")]
    NonPositiveBound { index: usize, value: f64 },
    #[error("saturation bounds must have at least one channel")]
    EmptyBounds,
    #[error("signal record needs at least two samples (horizon >= 1), got {0}")]
    HorizonTooShort(usize),
    #[error("records disagree on horizon: {0}")]
    HorizonMismatch(String),
    #[error("invalid Hankel range k0={k0}, L={block_rows}, k1={k1} for horizon {horizon}")]
    InvalidHankelRange {
        k0: usize,
        block_rows: usize,
        k1: usize,
        horizon: usize,
    },
    #[error("dataset horizon T={horizon} is below the minimum {required} = (nu+1)*nx + nu")]
    LengthBound { horizon: usize, required: usize },
    #[error("excitation loop diverged at step {step} (|x| = {norm:e})")]
    Diverged { step: usize, norm: f64 },
    #[error("saturated input at sample {sample} exceeds the bound on channel {channel}")]
    OutOfBounds { sample: usize, channel: usize },
    #[error("malformed dataset file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
