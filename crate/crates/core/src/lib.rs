//! Fine-scale local statistics of slowly growing sequences mod 1.
//!
//! The library computes gap distributions and m-point correlations of
//! sequences α(log n)^A mod 1 and provides the analytic machinery behind
//! them: smooth test functions and their moments, the moment/completion
//! identity, dyadic smoothed exponential sums with both van der Corput
//! B-process transforms, stationary-phase approximations, and generalized
//! Vandermonde determinant bounds.

pub mod dd;
pub mod error;
pub mod expsum;
pub mod moments;
pub mod quad;
pub mod sequences;
pub mod testfn;
pub mod teststat;
pub mod vandermonde;

pub use error::{Error, Result};
