//! Conditional classification under Gaussian marginals.
//!
//! Given a base classifier c and labeled examples (x, y) with x ~ N(0, I_d),
//! a selector is a region H in which c is trusted. This crate trains
//! homogeneous-halfspace selectors by projected SGD on a ReLU surrogate of
//! the joint error P[c(x) != y and x in H], learns lists of sparse linear
//! classifiers from mostly-corrupted samples, converts classification
//! learners into conditional ones (and back), and ships brute-force oracles
//! plus Monte-Carlo checks for the quantitative facts the training loop
//! relies on.
//!
//! The crate is no_std-compatible (alloc required); disable the default
//! `std` feature for embedded use. File formats and the command-line front
//! end live in the companion crate `selector-lab`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
mod fmath;
pub mod geom;
pub mod listlearn;
pub mod oracle;
pub mod planted;
pub mod psgd;
pub mod reduction;
pub mod rng;
pub mod selector;
pub mod verify;

pub use error::{Error, Result};

/// Crate version, embedded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 1/sqrt(2*pi): the mean of max(0, Z) for a standard normal Z, and the
/// scale constant in the surrogate-loss and gradient bounds.
pub const INV_SQRT_2PI: f64 = 0.39894228040143267794;

