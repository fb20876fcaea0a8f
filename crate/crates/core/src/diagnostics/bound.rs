use crate::error::invalid;
use crate::perturb::ConfidenceParams;
use crate::Result;

/// High-probability regret bound for a policy that is `γ`-concentrated and
/// optimistic with probability at least `p`:
///
/// `γ(1 + 2/p)·√(2dT log(1 + T/(dλ))) + (γ/p)·√((2T/λ) log(1/δ))`.
pub fn theoretical_regret_bound(gamma: f64, p: f64, params: &ConfidenceParams) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!(
            "optimism probability must lie in (0, 1], got {p}"
        )));
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(invalid(format!("γ must be positive, got {gamma}")));
    }
    let d = params.dim as f64;
    let t = params.horizon as f64;
    let lambda = params.lambda;
    let first = gamma * (1.0 + 2.0 / p) * (2.0 * d * t * (t / (d * lambda)).ln_1p()).sqrt();
    let second = gamma / p * (2.0 * t / lambda * (1.0 / params.delta).ln()).sqrt();
    Ok(first + second)
}
