//! Perturbation calibration and generation.
//!
//! [`ConfidenceParams`] evaluates the ridge radius `β_t(δ)`, the
//! perturbation radius `γ̃_T` and the ensemble size rule. [`PerturbationSpec`]
//! describes a perturbation family and its anti-concentration constants, and
//! [`PerturbationStream`] hands out keyed draws from it.

mod calibration;
mod family;
pub mod stream;

pub use calibration::{p_n, ConfidenceParams, P_N};
pub use family::{PerturbFamily, PerturbationSpec};
pub use stream::{KeyedRng, Keying, PerturbationStream, RewardKey};
