//! Exact combinatorics of local-unitary-invariant random tensors.
//!
//! Trace-invariants are indexed by tuples of permutations. The crate
//! computes their orbit classes, melonic structure, exact finite-`N`
//! Gaussian and Wishart moments, Weingarten-based finite free cumulants,
//! their large-`N` limits, paired-tensor cumulants and freeness checks, and
//! a Monte Carlo oracle that cross-checks the exact values numerically.

pub mod caps;
pub mod ensembles;
pub mod error;
pub mod invariants;
pub mod mc;
pub mod melonic;
pub mod paired;
pub mod par;
pub mod partition;
pub mod perm;
pub mod poly;
pub mod transforms;
pub mod weingarten;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
