//! Affine matrix-inequality programs, a backend contract for solving them,
//! and the bundled dense interior-point backend.
//!
//! ```
//! use ddsat::sdp::{solve, AffineExpr, SdpProblem, SolveOptions};
//! use nalgebra::DMatrix;
//!
//! // maximize t subject to t <= 1
//! let mut p = SdpProblem::new();
//! let t = p.scalar("t");
//! p.add_psd("t <= 1", AffineExpr::identity(1) - AffineExpr::var(t), 0.0).unwrap();
//! p.minimize(vec![(t, DMatrix::from_element(1, 1, -1.0))], 0.0).unwrap();
//! let sol = solve(&p, &SolveOptions::default()).unwrap();
//! assert!(sol.status.is_optimal());
//! assert!((sol.assignment.scalar(t) - 1.0).abs() < 1e-6);
//! ```

mod compile;
mod cone;
mod dump;
mod expr;
mod ipm;
mod problem;
mod solve;

pub use dump::write_sdpa;
pub use expr::{AffineExpr, BlockGrid, Term, VarId, VarKind, VarRef};
pub use problem::{
    Assignment, Constraint, ConstraintId, ConstraintKind, ConstraintResidual, Objective,
    ResidualReport, SdpProblem,
};
pub use solve::{
    backend, solve, DenseIpm, SdpBackend, SdpSolution, SolveOptions, SolveStatus, DENSE_IPM,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("nonconformable expression: {0}")]
    Nonconformable(String),
    #[error("matrix inequality '{0}' is not symmetric")]
    NotSymmetric(String),
    #[error("variable {0} is not declared in this problem")]
    UndeclaredVariable(usize),
    #[error("assignment has no value for variable {0}")]
    MissingVariable(usize),
    #[error("strictness margin must be finite and nonnegative, got {0}")]
    NegativeMargin(f64),
    #[error("SDP backend '{0}' is not available")]
    BackendUnavailable(String),
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
