//! Simulator and security analysis for classical noise-based key
//! distribution.
//!
//! Alice sends antipodal pulses weak enough that every receiver works at
//! low signal-to-noise ratio. Bob keeps only the slots where his detector
//! output clears a threshold; an eavesdropper with independent detector
//! noise cannot tell which slots those are. The crate covers the whole
//! chain: Gaussian channel and threshold decisions, translucent and
//! opaque attacks, Cascade reconciliation, Toeplitz privacy amplification,
//! and the closed-form rate and boundary calculations.

pub mod adversary;
pub mod bits;
pub mod error;
pub mod exec;
pub mod mathkit;
pub mod pipeline;
pub mod protocol;
pub mod public_channel;
pub mod reconciliation;
pub mod rng;
pub mod security;
pub mod signal;
pub mod sweep;

pub use error::{Error, Result};
pub use exec::Execution;
