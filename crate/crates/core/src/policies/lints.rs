use nalgebra::SymmetricEigen;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{Choice, Decision, Policy, RidgeState};
use crate::env::argmax;
use crate::error::invalid;
use crate::{Matrix, Result, Vector};

/// Gaussian linear Thompson sampling: `θ_t = θ̂ + V^{-1/2} ξ` with
/// `ξ ~ N(0, scale²·I)`.
#[derive(Debug, Clone)]
pub struct LinTs {
    ridge: RidgeState,
    scale: f64,
}

impl LinTs {
    pub fn new(dim: usize, lambda: f64, scale: f64) -> Result<Self> {
        if !scale.is_finite() || scale < 0.0 {
            return Err(invalid(format!(
                "sampling scale must be finite and ≥ 0, got {scale}"
            )));
        }
        Ok(Self {
            ridge: RidgeState::new(dim, lambda)?,
            scale,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Symmetric square root of `V⁻¹`.
    pub fn inverse_sqrt(&self) -> Matrix {
        let eig = SymmetricEigen::new(self.ridge.gram().gram_inv().clone());
        let roots = eig.eigenvalues.map(|e| e.max(0.0).sqrt());
        &eig.eigenvectors * Matrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
    }

    /// `θ̂ + V^{-1/2} ξ` for a given `ξ`.
    pub fn theta_for(&self, xi: &Vector) -> Vector {
        self.ridge.estimate() + self.inverse_sqrt() * xi
    }
}

impl Policy for LinTs {
    fn select(&mut self, _t: u64, arms: &[Vector], rng: &mut dyn RngCore) -> Result<Decision> {
        if arms.is_empty() {
            return Err(invalid("arm set is empty"));
        }
        let d = self.ridge.gram().dim();
        let scale = self.scale;
        let xi = Vector::from_fn(d, |_, _| {
            let g: f64 = StandardNormal.sample(rng);
            scale * g
        });
        let theta = self.theta_for(&xi);
        Ok(Decision {
            arm: argmax(arms, &theta).0,
            model: None,
            choice: Choice::Estimate(theta),
        })
    }

    fn update(&mut self, _t: u64, _arm: usize, x: &Vector, y: f64) -> Result<()> {
        self.ridge.update(x, y)
    }

    fn ridge(&self) -> &RidgeState {
        &self.ridge
    }
}
