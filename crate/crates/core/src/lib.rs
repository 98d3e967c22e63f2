//! Memory requirements of binary outcome sequences.
//!
//! The crate computes the deterministic complexity of a sequence (the fewest
//! internal states any automaton needs to emit it with certainty), closed-form
//! probabilities for the one-tick sequence under multicyclic model families,
//! and numerically optimized classical and quantum automata below that
//! complexity.

pub mod classical;
pub mod combinatorics;
pub mod error;
pub mod optimizer;
pub mod patterns;
pub mod quantum;
pub mod sequence;
pub mod survey;

pub use error::{Error, Result};
pub use patterns::{dc_and_patterns, deterministic_complexity, expand_pattern, DcResult, Pattern};
pub use sequence::{enumerate_sequences, BinarySequence};

/// `1/e`, the conjectured universal classical bound below the deterministic
/// complexity.
pub const ONE_OVER_E: f64 = 1.0 / std::f64::consts::E;
