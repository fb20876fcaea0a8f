//! Regularised least-squares state.
//!
//! [`GramState`] keeps `V_t = λI + Σ x_i x_iᵀ` and `V_t⁻¹` side by side. The
//! inverse is maintained with Sherman–Morrison rank-one updates and rebuilt
//! from a Cholesky factorisation of `V_t` every [`REINVERT_EVERY`] updates so
//! the drift stays bounded over long horizons.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::{Error, Matrix, Result, Vector};

/// Tolerance for quantities that should agree up to rounding.
pub const EQUALITY_TOL: f64 = 1e-10;
/// Per-entry tolerance of `V · V⁻¹ − I`.
pub const INVERSE_TOL: f64 = 1e-8;
/// Slack allowed on `‖x‖₂ ≤ 1`.
pub const PRECONDITION_SLACK: f64 = 1e-9;
/// Rank-one updates between full re-inversions.
pub const REINVERT_EVERY: u64 = 1024;

/// Which matrix a weighted norm is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// `‖v‖_V = sqrt(vᵀ V v)`
    Gram,
    /// `‖v‖_{V⁻¹} = sqrt(vᵀ V⁻¹ v)`
    GramInv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramState {
    dim: usize,
    lambda: f64,
    gram: Matrix,
    gram_inv: Matrix,
    step_count: u64,
}

impl GramState {
    /// `V_0 = λ I_d`.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(invalid(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self {
            dim,
            lambda,
            gram: Matrix::identity(dim, dim) * lambda,
            gram_inv: Matrix::identity(dim, dim) / lambda,
            step_count: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn gram_inv(&self) -> &Matrix {
        &self.gram_inv
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    fn check_dim(&self, v: &Vector, what: &str) -> Result<()> {
        if v.len() != self.dim {
            return Err(invalid(format!(
                "{what} has dimension {}, expected {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `V ← V + x xᵀ`, with the inverse updated in O(d²).
    ///
    /// The zero vector is accepted and still counts as a step.
    pub fn update(&mut self, x: &Vector) -> Result<()> {
        self.check_dim(x, "update vector")?;
        let norm = x.norm();
        if norm > 1.0 + PRECONDITION_SLACK {
            return Err(Error::DomainViolation(format!("arm norm {norm} exceeds 1")));
        }

        self.gram.ger(1.0, x, x, 1.0);

        // V⁻¹ ← V⁻¹ − (V⁻¹x)(V⁻¹x)ᵀ / (1 + xᵀV⁻¹x)
        let u = &self.gram_inv * x;
        let denom = 1.0 + x.dot(&u);
        self.gram_inv.ger(-1.0 / denom, &u, &u, 1.0);

        self.step_count += 1;
        if self.step_count.is_multiple_of(REINVERT_EVERY) {
            self.reinvert()?;
        }
        Ok(())
    }

    /// Rebuilds `V⁻¹` from `V` through a Cholesky factorisation.
    pub fn reinvert(&mut self) -> Result<()> {
        let chol = Cholesky::new(self.gram.clone()).ok_or_else(|| {
            Error::InvariantViolation("Gram matrix lost positive definiteness".into())
        })?;
        let inv = chol.inverse();
        self.gram_inv = (&inv + inv.transpose()) * 0.5;
        Ok(())
    }

    /// `sqrt(vᵀ M v)` for `M = V` or `M = V⁻¹`.
    pub fn weighted_norm(&self, v: &Vector, metric: Metric) -> Result<f64> {
        self.check_dim(v, "vector")?;
        Ok(self.weighted_norm_unchecked(v, metric))
    }

    pub(crate) fn weighted_norm_unchecked(&self, v: &Vector, metric: Metric) -> f64 {
        let m = match metric {
            Metric::Gram => &self.gram,
            Metric::GramInv => &self.gram_inv,
        };
        // Clamp tiny negative rounding on near-null directions.
        v.dot(&(m * v)).max(0.0).sqrt()
    }

    /// `V⁻¹ b`.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        self.check_dim(b, "right-hand side")?;
        Ok(&self.gram_inv * b)
    }

    /// Largest absolute entry of `V · V⁻¹ − I`.
    pub fn inverse_residual(&self) -> f64 {
        let prod = &self.gram * &self.gram_inv - Matrix::identity(self.dim, self.dim);
        prod.amax()
    }

    /// Re-checks the structural invariants: symmetry, inverse consistency
    /// and `V ⪰ λI`.
    pub fn check_invariants(&self) -> Result<()> {
        let asym = (&self.gram - self.gram.transpose()).amax();
        if asym > EQUALITY_TOL {
            return Err(Error::InvariantViolation(format!(
                "Gram matrix asymmetric by {asym:e}"
            )));
        }
        let resid = self.inverse_residual();
        if resid > INVERSE_TOL {
            return Err(Error::InvariantViolation(format!(
                "V·V⁻¹ deviates from identity by {resid:e}"
            )));
        }
        let shifted = &self.gram - Matrix::identity(self.dim, self.dim) * self.lambda;
        let min_eig = shifted.symmetric_eigenvalues().min();
        if min_eig < -EQUALITY_TOL * (1.0 + self.step_count as f64) {
            return Err(Error::InvariantViolation(format!(
                "V − λI has eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }
}

/// The elliptical-potential bound `2 d log(1 + T/(dλ))`.
pub fn elliptical_potential_bound(dim: usize, lambda: f64, horizon: u64) -> f64 {
    let d = dim as f64;
    2.0 * d * (1.0 + horizon as f64 / (d * lambda)).ln()
}
