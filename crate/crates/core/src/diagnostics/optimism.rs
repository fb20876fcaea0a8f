use crate::error::invalid;
use crate::linalg::GramState;
use crate::{Result, Vector};

/// Optimism direction `U = (√λ·V⁻¹x*, X_1ᵀV⁻¹x*, …, X_nᵀV⁻¹x*)` for the
/// `n` arms played so far, so that `Uᵀ𝐙 = x*ᵀθ̃` for any perturbation
/// vector `𝐙 = (W/√λ, Z_1, …, Z_n)` and `‖U‖₂ = ‖x*‖_{V⁻¹}`.
pub fn optimism_direction(
    gram: &GramState,
    arms_history: &[Vector],
    x_star: &Vector,
) -> Result<Vector> {
    let d = gram.dim();
    if x_star.len() != d {
        return Err(invalid(format!(
            "x* has dimension {}, expected {d}",
            x_star.len()
        )));
    }
    if gram.step_count() != arms_history.len() as u64 {
        return Err(invalid(format!(
            "Gram matrix has {} updates but the history has {} arms",
            gram.step_count(),
            arms_history.len()
        )));
    }
    let w = gram.gram_inv() * x_star;
    let mut u = Vector::zeros(d + arms_history.len());
    u.rows_mut(0, d).copy_from(&(&w * gram.lambda().sqrt()));
    for (i, x) in arms_history.iter().enumerate() {
        if x.len() != d {
            return Err(invalid(format!("history arm {i} has the wrong dimension")));
        }
        u[d + i] = x.dot(&w);
    }
    Ok(u)
}

/// `Uᵀ𝐙 ≥ c‖U‖₂` and `ridge_dev ≤ c`: together these force the perturbed
/// estimate to be optimistic.
pub fn check_optimism_sufficiency(u: &Vector, z: &Vector, c: f64, ridge_dev: f64) -> bool {
    u.len() == z.len() && u.dot(z) >= c * u.norm() && ridge_dev <= c
}
