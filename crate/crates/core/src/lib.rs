//! Causal Walk: front-door-adjusted graph classification for multi-hop
//! fact verification.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is pure
//! computation: a small reverse-mode autodiff engine, a hashed n-gram
//! featurizer, the claim-evidence graph encoder, the walk/deconfounding
//! model with its trainer, an exact discrete SCM engine used as an oracle
//! for the front-door identities, and a template-based generator of
//! biased multi-hop datasets. File formats and the command line live in
//! the `causalwalk` crate.

#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autodiff;
pub mod error;
pub mod featurizer;
pub mod gradcheck;
pub mod graph;
pub mod kmeans;
pub mod scm;
pub mod synth;
pub mod tensor;
pub mod walk;

pub use autodiff::{Tape, Var};
pub use error::{Error, Result};
pub use featurizer::FeaturizerConfig;
pub use graph::{ClaimEvidenceGraph, GconvConfig, Normalization};
pub use tensor::Tensor;
