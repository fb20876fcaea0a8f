use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::Result;

/// Inputs of the confidence radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceParams {
    /// Sub-Gaussian proxy of the reward noise.
    pub sigma: f64,
    pub lambda: f64,
    /// Bound `S` on `‖θ*‖₂`.
    pub s_bound: f64,
    pub dim: usize,
    pub horizon: u64,
    pub delta: f64,
}

impl ConfidenceParams {
    pub fn new(
        sigma: f64,
        lambda: f64,
        s_bound: f64,
        dim: usize,
        horizon: u64,
        delta: f64,
    ) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(invalid(format!(
                "sigma must be finite and ≥ 0, got {sigma}"
            )));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if !s_bound.is_finite() || s_bound <= 0.0 {
            return Err(invalid(format!(
                "parameter bound must be positive, got {s_bound}"
            )));
        }
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
        }
        Ok(Self {
            sigma,
            lambda,
            s_bound,
            dim,
            horizon,
            delta,
        })
    }

    fn log_det_term(&self, t: f64) -> f64 {
        let d = self.dim as f64;
        d * (1.0 + t / (d * self.lambda)).ln()
    }

    /// Ridge confidence radius
    /// `β_t(δ) = σ·sqrt(d log(1 + t/(dλ)) + 2 log(1/δ)) + √λ·S`.
    pub fn beta(&self, t: u64) -> f64 {
        let inner = self.log_det_term(t as f64) + 2.0 * (1.0 / self.delta).ln();
        self.sigma * inner.sqrt() + self.lambda.sqrt() * self.s_bound
    }

    /// `β_T` at the horizon.
    pub fn beta_horizon(&self) -> f64 {
        self.beta(self.horizon)
    }

    /// Confidence radius of the perturbation part of an estimator under
    /// Gaussian perturbations of scale `β_T`:
    /// `β_T·(sqrt(d log(1 + T/(dλ)) + 2 log(2T/δ)) + √d + sqrt(2 log(2T/δ)))`.
    pub fn gamma_tilde(&self) -> f64 {
        let t = self.horizon as f64;
        let log2t = (2.0 * t / self.delta).ln();
        let first = (self.log_det_term(t) + 2.0 * log2t).sqrt();
        let middle = (self.dim as f64).sqrt();
        let last = (2.0 * log2t).sqrt();
        self.beta_horizon() * (first + middle + last)
    }

    /// `γ_T = γ̃_T + β_T`.
    pub fn gamma(&self) -> f64 {
        self.gamma_tilde() + self.beta_horizon()
    }

    /// Norm level `√λ·β_T·(√d + sqrt(2 log(2T/δ)))` that a Gaussian initial
    /// perturbation exceeds with probability at most `δ/(2T)`.
    pub fn initial_norm_bound(&self) -> f64 {
        let t = self.horizon as f64;
        self.lambda.sqrt()
            * self.beta_horizon()
            * ((self.dim as f64).sqrt() + (2.0 * (2.0 * t / self.delta).ln()).sqrt())
    }

    /// Ensemble size `⌈(8/p_N²)(K log T + log(1/δ))⌉`, at least one.
    pub fn ensemble_size(&self, arm_count: usize) -> Result<usize> {
        if arm_count == 0 {
            return Err(invalid("arm count must be at least 1"));
        }
        let pn = p_n();
        let raw = 8.0 / (pn * pn)
            * (arm_count as f64 * (self.horizon as f64).ln() + (1.0 / self.delta).ln());
        Ok((raw.ceil() as usize).max(1))
    }
}

/// `P(z ≥ 1)` for a standard normal `z`, correctly rounded.
pub const P_N: f64 = 0.158_655_253_931_457_05;

pub fn p_n() -> f64 {
    P_N
}
