//! Arm-selection policies.
//!
//! All policies share the same shape: [`Policy::select`] picks an arm from
//! the state after `t − 1` observations, [`Policy::update`] folds in the
//! observation of step `t`. Every policy carries a [`RidgeState`], the
//! unperturbed ridge fit on the observed history, so diagnostics can split a
//! played estimate into `θ̂_{t−1} + θ̃_{t−1}`.

mod ensemble;
mod lints;
mod linucb;
mod phe;

pub use ensemble::{EnsembleSampling, Sampler, ThetaRefresh};
pub use lints::LinTs;
pub use linucb::{linucb_select, LinUcb, UcbRadius};
pub use phe::LinPhe;

use rand::RngCore;

use crate::env::argmax;
use crate::linalg::GramState;
use crate::{Result, Vector};

/// `V_t` together with `Σ X_i Y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState {
    gram: GramState,
    xy: Vector,
}

impl RidgeState {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        Ok(Self {
            gram: GramState::new(dim, lambda)?,
            xy: Vector::zeros(dim),
        })
    }

    pub fn update(&mut self, x: &Vector, y: f64) -> Result<()> {
        self.gram.update(x)?;
        self.xy.axpy(y, x, 1.0);
        Ok(())
    }

    pub fn gram(&self) -> &GramState {
        &self.gram
    }

    /// `Σ X_i Y_i`.
    pub fn response(&self) -> &Vector {
        &self.xy
    }

    /// Ridge estimate `θ̂ = V⁻¹ Σ X_i Y_i`.
    pub fn estimate(&self) -> Vector {
        self.gram.gram_inv() * &self.xy
    }
}

/// What a policy based its choice on.
#[derive(Debug, Clone, PartialEq)]
pub enum Choice {
    /// The arm is greedy for this estimate `θ_t`.
    Estimate(Vector),
    /// Upper-confidence index: `radius` is the confidence width used and
    /// `index` the winning arm's optimistic value.
    Optimistic { radius: f64, index: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub arm: usize,
    /// Ensemble member used, when the policy has one.
    pub model: Option<usize>,
    pub choice: Choice,
}

pub trait Policy {
    fn select(&mut self, t: u64, arms: &[Vector], rng: &mut dyn RngCore) -> Result<Decision>;

    fn update(&mut self, t: u64, arm: usize, x: &Vector, y: f64) -> Result<()>;

    fn ridge(&self) -> &RidgeState;

    /// The perturbation vector `(W/√λ, Z_1, …, Z_{t−1})` behind `decision`,
    /// for policies whose estimate is a linear image of one.
    fn perturbation_vector(&self, _decision: &Decision, _t: u64) -> Option<Result<Vector>> {
        None
    }
}

/// Greedy ridge: always plays `argmax xᵀθ̂`.
#[derive(Debug, Clone)]
pub struct Greedy {
    ridge: RidgeState,
}

impl Greedy {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        Ok(Self {
            ridge: RidgeState::new(dim, lambda)?,
        })
    }
}

impl Policy for Greedy {
    fn select(&mut self, _t: u64, arms: &[Vector], _rng: &mut dyn RngCore) -> Result<Decision> {
        let theta = self.ridge.estimate();
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

/// Closed enum over the concrete policies, so simulation code can reach
/// policy-specific state without downcasting.
#[derive(Debug, Clone)]
pub enum AnyPolicy {
    Ensemble(EnsembleSampling),
    Phe(LinPhe),
    LinUcb(LinUcb),
    LinTs(LinTs),
    Greedy(Greedy),
}

impl AnyPolicy {
    fn inner(&self) -> &dyn Policy {
        match self {
            AnyPolicy::Ensemble(p) => p,
            AnyPolicy::Phe(p) => p,
            AnyPolicy::LinUcb(p) => p,
            AnyPolicy::LinTs(p) => p,
            AnyPolicy::Greedy(p) => p,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Policy {
        match self {
            AnyPolicy::Ensemble(p) => p,
            AnyPolicy::Phe(p) => p,
            AnyPolicy::LinUcb(p) => p,
            AnyPolicy::LinTs(p) => p,
            AnyPolicy::Greedy(p) => p,
        }
    }
}

impl Policy for AnyPolicy {
    fn select(&mut self, t: u64, arms: &[Vector], rng: &mut dyn RngCore) -> Result<Decision> {
        self.inner_mut().select(t, arms, rng)
    }

    fn update(&mut self, t: u64, arm: usize, x: &Vector, y: f64) -> Result<()> {
        self.inner_mut().update(t, arm, x, y)
    }

    fn ridge(&self) -> &RidgeState {
        self.inner().ridge()
    }

    fn perturbation_vector(&self, decision: &Decision, t: u64) -> Option<Result<Vector>> {
        self.inner().perturbation_vector(decision, t)
    }
}
