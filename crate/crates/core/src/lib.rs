//! Exact and search-based inference for multi-level noisy-OR belief
//! networks.
//!
//! The search ([`engine::top_epsilon`]) enumerates every complete
//! instantiation consistent with the evidence whose joint probability is at
//! least a threshold `epsilon`, building each one level by level with the
//! branching operator in [`eml`]. Posterior estimates follow from the
//! accumulated mass. [`exact`] is the brute-force reference and [`topdown`]
//! a pruned enumerator used for deep reference runs.

pub mod bench;
pub mod eml;
pub mod engine;
pub mod error;
pub mod exact;
pub mod model;
pub mod netgen;
mod sum;
pub mod topdown;

pub use error::{Error, Result};
pub use sum::CompensatedSum;
