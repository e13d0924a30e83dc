//! Derivation and analysis of hyperbolic moment systems for kinetic equations.
//!
//! A distribution function is expanded in a weighted Hermite basis, the
//! kinetic equation is projected onto a finite subspace, and the result is a
//! quasi-linear system B(w)∂ₜw + Σ_d F_d(w)∂ₓ_d w = S(w). The crate builds
//! those matrices for a family of classical and regularized closures, checks
//! their hyperbolicity and invariance numerically, and runs a small 1D
//! finite-volume solver.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cli;
pub mod error;
pub mod export;
pub mod projection;
pub mod solver;
pub mod state;

pub use assembly::{assemble_system, preset, MomentSystem, ModelSpec};
pub use error::{Error, Result};
pub use state::StateVector;
