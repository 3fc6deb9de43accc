//! Differential operators with Sobolev-regular coefficients on flat tori.
//!
//! The crate tracks the Sobolev grade of every coefficient exactly, checks
//! when an operator is `k`-safe (bounded `H^l -> H^{l-s}` for `s <= l <= k`),
//! and verifies the calculus with Fourier-spectral numerics.

pub mod catalog;
pub mod cli;
pub mod coefficient;
pub mod error;
pub mod fourier;
pub mod operator;
pub mod parametrix;
pub mod sobolev;
pub mod spectral;
pub mod specfile;

pub use error::{Error, Result};
