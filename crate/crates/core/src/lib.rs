//! Feedback-capacity bounds for finite-state channels whose state is known
//! causally at the encoder.
//!
//! The crate is organised by task:
//!
//! * [`channel`]: kernels `P(y, s⁺ | x, s)`, Shannon strategies, look-ahead reduction.
//! * [`info`]: entropy, conditional and directed information on finite tables.
//! * [`dp`]: the belief-state dynamic program and relative value iteration.
//! * [`qgraph`]: single-letter lower bounds from Q-graphs and BCJR-invariant policies.
//! * [`horizon`]: finite-horizon sandwich bounds and the memoryless-state baseline.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below name the double-precision instantiations used by the CLI.

pub mod channel;
pub mod dp;
pub mod error;
pub mod horizon;
pub mod info;
mod linalg;
pub mod qgraph;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{h2, Real};

pub type Fsc64 = channel::Fsc<f64>;
pub type InducedChannel64 = channel::InducedChannel<f64>;
pub type StateDmc64 = channel::StateDmc<f64>;
pub type Belief64 = dp::Belief<f64>;
pub type ActionMatrix64 = dp::ActionMatrix<f64>;
pub type DpSolution64 = dp::DpSolution<f64>;
pub type Policy64 = qgraph::Policy<f64>;
