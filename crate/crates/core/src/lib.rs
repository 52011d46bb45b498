//! Feedback-capacity bounds for the binary erasure channel with a
//! (d,inf)-runlength-limited input constraint.
//!
//! The crate builds the two Q-graph families used for the bounds, the
//! (S,Q)-product Markov chain induced by an input policy, the closed-form
//! BCJR-invariant policy on the de Bruijn family, and evaluates the lower
//! bound, the analytic upper bound, the non-causal capacity and a numerical
//! single-letter upper bound. A Monte Carlo simulator cross-checks the
//! stationary quantities.

pub mod bcjr;
pub mod bounds;
pub mod channel;
pub mod cli;
pub mod constraint;
pub mod error;
pub mod format;
mod graph;
pub mod info;
pub mod numeric;
pub mod qgraph;
pub mod sim;
pub mod sq_chain;
pub mod verify;

pub use channel::Output;
pub use error::{Error, Result};
