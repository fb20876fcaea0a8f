use rand::RngCore;

use super::{Choice, Decision, Policy, RidgeState};
use crate::env::argmax_by;
use crate::error::invalid;
use crate::linalg::Metric;
use crate::perturb::ConfidenceParams;
use crate::{Result, Vector};

/// Confidence width used by [`LinUcb`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UcbRadius {
    /// `β_{t−1}(δ)` at step `t`.
    Confidence(ConfidenceParams),
    Fixed(f64),
}

impl UcbRadius {
    pub fn at_step(&self, t: u64) -> f64 {
        match self {
            UcbRadius::Confidence(p) => p.beta(t.saturating_sub(1)),
            UcbRadius::Fixed(r) => *r,
        }
    }
}

/// `argmax_x xᵀθ̂ + β·‖x‖_{V⁻¹}`, smallest index on ties. Returns the arm
/// and its index value.
pub fn linucb_select(ridge: &RidgeState, arms: &[Vector], beta: f64) -> Result<(usize, f64)> {
    if arms.is_empty() {
        return Err(invalid("arm set is empty"));
    }
    let theta = ridge.estimate();
    let gram = ridge.gram();
    for x in arms {
        if x.len() != gram.dim() {
            return Err(invalid("arm dimension mismatch"));
        }
    }
    Ok(argmax_by(arms.len(), |k| {
        arms[k].dot(&theta) + beta * gram.weighted_norm_unchecked(&arms[k], Metric::GramInv)
    }))
}

#[derive(Debug, Clone)]
pub struct LinUcb {
    ridge: RidgeState,
    radius: UcbRadius,
}

impl LinUcb {
    pub fn new(dim: usize, lambda: f64, radius: UcbRadius) -> Result<Self> {
        Ok(Self {
            ridge: RidgeState::new(dim, lambda)?,
            radius,
        })
    }
}

impl Policy for LinUcb {
    fn select(&mut self, t: u64, arms: &[Vector], _rng: &mut dyn RngCore) -> Result<Decision> {
        let radius = self.radius.at_step(t);
        let (arm, index) = linucb_select(&self.ridge, arms, radius)?;
        Ok(Decision {
            arm,
            model: None,
            choice: Choice::Optimistic { radius, index },
        })
    }

    fn update(&mut self, _t: u64, _arm: usize, x: &Vector, y: f64) -> Result<()> {
        self.ridge.update(x, y)
    }

    fn ridge(&self) -> &RidgeState {
        &self.ridge
    }
}
