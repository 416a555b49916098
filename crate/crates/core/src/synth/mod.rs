//! State-feedback synthesis for input-saturated systems: basin of
//! attraction, reachable-set and `l2`-gain programs, posed either on data
//! products (direct) or on a model (indirect, oracle).

mod channel;
mod design;
mod lmi;
mod options;

pub use channel::PerformanceChannel;
pub use design::{
    check_certificate, performance_index, synth_boa, synth_indirect, synth_l2gain, synth_oracle,
    synth_reachable, synthesize, Certificate, ObjectiveKind, SynthesisProgram, SynthesisResult,
};
pub use lmi::{
    build_boa_lmi, build_consistency_equalities, build_l2_lmi, build_reachable_lmi,
    build_saturation_lmis, DesignBasis, LmiVariables,
};
pub use options::{DesignMode, SynthesisOptions};

use thiserror::Error;

use crate::ident::IdentError;
use crate::sdp::{SdpError, SolveStatus};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid synthesis options: {0}")]
    InvalidOptions(String),
    #[error("the synthesis program is infeasible")]
    Infeasible,
    #[error("solver returned no usable point (status {0})")]
    Solver(SolveStatus),
    #[error("Q is singular; the gain cannot be extracted")]
    SingularQ,
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Ident(#[from] IdentError),
}
