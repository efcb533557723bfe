//! Sandpile height fields, uniform spanning trees and the fermionic Gaussian
//! free field on finite lattices.
//!
//! The crate evaluates joint cumulants of local field observables (height-one
//! indicators, UST vertex degrees, fermionic `X` fields) through exact
//! Grassmann integration, transfer-current determinants and closed-form
//! cumulant expansions, and compares them with Monte Carlo samplers and
//! continuum limits.

pub mod combinatorics;
pub mod constants;
pub mod cumulants;
pub mod error;
pub mod grassmann;
pub mod greenfn;
pub mod lattice;
pub mod linalg;
pub mod moments;
pub mod samplers;
pub mod scalar;
pub mod scaling;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
