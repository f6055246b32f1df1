//! Heterogeneous random key predistribution and the inhomogeneous random key
//! graph it induces.
//!
//! Every sensor is assigned one of `r` classes according to a distribution
//! `mu`, and a class-`j` sensor receives `K[j]` keys drawn uniformly without
//! replacement from a pool of `P` keys. Two sensors can talk securely (share
//! an edge) when their key rings intersect.
//!
//! The crate is split into:
//!
//! - [`model`]: validated parameter types.
//! - [`exactprob`]: closed-form edge probabilities, moments and bounds.
//! - [`scaling`]: scaling families `n -> θ_n` and ring-size dimensioning.
//! - [`sampler`]: deterministic graph sampling.
//! - [`analysis`]: isolation, connectivity and key-coverage observables.
//! - [`montecarlo`]: reproducible parallel trial harness.
//!
//! Class indices are 0-based throughout the API (class `0` is the class with
//! the smallest key ring). Key identifiers live in `[0, P)`.

pub mod analysis;
mod error;
pub mod exactprob;
pub mod model;
pub mod montecarlo;
pub mod sampler;
pub mod scaling;

pub use error::{Error, Result};
pub use model::{validate_scheme, ClassMix, RingSizeRv, SchemeParams};
