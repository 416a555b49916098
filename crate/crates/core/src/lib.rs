//! Direct data-driven state-feedback synthesis for input-saturated
//! discrete-time linear systems.
//!
//! Data collected from one experiment are compressed through an
//! instrumental variable into a handful of small matrices
//! ([`ident::DataProducts`]). Those matrices parametrize the closed loop
//! directly, so stabilizing gains with basin-of-attraction, reachable-set
//! or l2-gain certificates come out of a single semidefinite program
//! ([`synth`]) solved by the bundled interior-point method ([`sdp`]).
//! Every certificate can be checked by saturated simulation ([`sim`]).

pub mod cli;
pub mod data;
pub mod ident;
pub mod linalg;
pub mod sdp;
pub mod sim;
pub mod synth;
