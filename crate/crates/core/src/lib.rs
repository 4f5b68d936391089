//! Approximate extensive-form perfect equilibria for two-player zero-sum games.
//!
//! Strategy spaces are sequence-form treeplexes, optionally restricted so every
//! action keeps at least probability `xi`. The Excessive Gap Technique solves
//! the resulting bilinear saddle-point problem using a dilated entropy
//! distance-generating function composed with the affine map onto each
//! perturbed simplex. CFR+ is included as a baseline, along with the Nash gap
//! and per-infoset regret metrics used to compare them.

pub mod bench;
pub mod cfr;
pub mod egt;
pub mod error;
pub mod game;
pub mod metrics;
pub mod smoothing;
pub mod trace;
pub mod treeplex;

pub use error::{Error, Result};
