//! Device-independent randomness generation on the instrumental causal
//! structure.
//!
//! The crate is organised along the pipeline:
//!
//! - [`qsim`]: Born-rule statistics of the instrumental scenario and a
//!   sampler for raw runs.
//! - [`tradeoff`]: fitted min-entropy bounds and the min-tradeoff function.
//! - [`eatbound`]: entropy-accumulation bound, its optimisation over the cut
//!   point, soundness, completeness and randomness-gain bookkeeping.
//! - [`trevisan`]: weak designs and the RS∘Hadamard Trevisan extractor.
//! - [`seedsource`]: public input randomness (beacon or files) and its
//!   conversion to trits and Bernoulli samples.
//! - [`protocol`]: session orchestration, record files and configuration.

pub mod bits;
pub mod eatbound;
pub mod error;
pub mod protocol;
pub mod qsim;
pub mod seedsource;
pub mod tradeoff;
pub mod trevisan;

pub use error::{Error, Result};

/// Maximal quantum value of the instrumental functional, `1 + 2√2`.
pub const QUANTUM_MAX: f64 = 1.0 + 2.0 * std::f64::consts::SQRT_2;

/// Classical (causal-model) bound of the instrumental functional.
pub const CLASSICAL_BOUND: f64 = 3.0;
