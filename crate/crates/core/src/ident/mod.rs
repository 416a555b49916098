//! Instrumental-variable data products, the open-loop estimate and the
//! data-based closed-loop representation.

mod products;

pub use products::{
    build_instrument, closed_loop_matrices, compute_products, consistency_residual,
    estimate_open_loop, DataProducts, EstimatedModel, Instrument, ProductDiagnostics,
    CONDITION_LIMIT,
};

use thiserror::Error;

use crate::data::DataError;

#[derive(Debug, Error)]
pub enum IdentError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("rank condition violated: rank([v; {record}]) = {rank}, need nu + nx = {required}")]
    RankDeficient {
        record: &'static str,
        rank: usize,
        required: usize,
    },
    #[error("[V; Y] Z' is numerically singular (condition number {condition:e} > {limit:e})")]
    IllConditioned { condition: f64, limit: f64 },
    #[error("dimension mismatch for {what}: expected {expected:?}, got {got:?}")]
    Dimension {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
}
