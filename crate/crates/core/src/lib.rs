//! The independent random-sieve model of integers.
//!
//! Each prime `p ≤ x` divides the random integer `N_x` independently with
//! probability `1/p`. The crate computes the exact law and moments of the
//! factor count `Ω_x`, samples it reproducibly, measures its distance from the
//! Gaussian, and compares it with a census of the true `ω(n)` for `n ≤ x`.

pub mod classical;
pub mod cli;
pub mod error;
pub mod exact;
pub mod model;
pub mod normal;
pub mod primes;
pub mod report;
pub mod stats;

pub use classical::OmegaCensus;
pub use error::{Error, Result};
pub use exact::{MomentReport, Pmf};
pub use model::{ModelParams, RandomInteger, SampleBatch};
pub use primes::{PrimeTable, TailDivergenceReport};
pub use stats::EmpiricalSummary;
