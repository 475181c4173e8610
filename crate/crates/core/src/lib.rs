//! Numerical laboratory for averaging operators on SU(2) and SL2(R).
//!
//! Everything here is `no_std` with `alloc`: matrix groups and free-group
//! words, exact convolution of atomic measures, ping-pong certificates on the
//! projective line, discretised L2 operators on Haar nets, irreducible
//! representations of SU(2) and the spectral-gap estimators built on top.
//! File formats, configuration and the command line live in the `gaplab`
//! crate.
#![no_std]
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod discrete_l2;
pub mod error;
pub mod escape;
pub mod gap_lab;
pub mod group_core;
pub mod linalg;
pub mod measures;
pub mod projective;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use group_core::{
    Freeness, GeneratorSet, GroupElement, GroupKind, Letter, Mat2, Mat3, Metric, Word,
};
