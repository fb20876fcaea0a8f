//! Stochastic linear bandit simulation.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: the regularised Gram matrix `V_t = λI + Σ x xᵀ` and its
//!   inverse under rank-one updates.
//! - [`env`]: finite-arm linear environments with sub-Gaussian noise and
//!   regret accounting.
//! - [`perturb`]: confidence radii, ensemble sizing, perturbation families
//!   and the counter-based keyed random stream every draw goes through.
//! - [`policies`]: linear ensemble sampling, LinPHE, LinUCB, a Gaussian
//!   LinTS variant and greedy ridge.
//! - [`diagnostics`]: per-step monitors for ridge concentration,
//!   perturbation concentration, anti-concentration and optimism, plus the
//!   reference regret bound.
//! - [`harness`]: config files, seeded Monte-Carlo replication, the
//!   ensemble/LinPHE equivalence suite and CSV/JSON output.

pub mod diagnostics;
pub mod env;
mod error;
pub mod harness;
pub mod linalg;
pub mod perturb;
pub mod policies;

pub use error::{Error, Result};

/// Arm and parameter vectors.
pub type Vector = nalgebra::DVector<f64>;
/// Dense square matrices (Gram matrix and friends).
pub type Matrix = nalgebra::DMatrix<f64>;
