//! Finite-arm stochastic linear bandit environments.
//!
//! An [`EnvironmentSpec`] owns the arm set, the hidden parameter `θ*` and the
//! noise model. Policies never see it; only the simulation loop and the
//! diagnostics read `θ*`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::linalg::PRECONDITION_SLACK;
use crate::perturb::KeyedRng;
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    /// `N(0, σ²)`.
    Gaussian,
    /// `Unif[−σ, σ]`, variance `σ²/3`.
    Uniform,
    /// `±σ` with probability one half each.
    Rademacher,
}

/// σ-sub-Gaussian reward noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub family: NoiseFamily,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(family: NoiseFamily, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(invalid(format!(
                "noise sigma must be finite and ≥ 0, got {sigma}"
            )));
        }
        Ok(Self { family, sigma })
    }

    /// Exactly one draw from `rng`'s perspective per call (Uniform and
    /// Rademacher consume one word, Gaussian whatever the sampler needs).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let unit = match self.family {
            NoiseFamily::Gaussian => StandardNormal.sample(rng),
            NoiseFamily::Uniform => rng.random_range(-1.0..=1.0),
            NoiseFamily::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        self.sigma * unit
    }
}

/// How random arm sets are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmGenerator {
    /// Uniform on the unit sphere.
    Sphere,
    /// Uniform in the unit ball.
    Ball,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    arms: Vec<Vector>,
    theta_star: Vector,
    noise: NoiseModel,
    param_bound: f64,
}

impl EnvironmentSpec {
    pub fn new(
        arms: Vec<Vector>,
        theta_star: Vector,
        noise: NoiseModel,
        param_bound: f64,
    ) -> Result<Self> {
        if arms.is_empty() {
            return Err(invalid("arm set must be non-empty"));
        }
        let dim = theta_star.len();
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !param_bound.is_finite() || param_bound <= 0.0 {
            return Err(invalid(format!(
                "parameter bound must be positive, got {param_bound}"
            )));
        }
        for (k, x) in arms.iter().enumerate() {
            if x.len() != dim {
                return Err(invalid(format!(
                    "arm {k} has dimension {}, expected {dim}",
                    x.len()
                )));
            }
            if x.norm() > 1.0 + PRECONDITION_SLACK {
                return Err(Error::DomainViolation(format!(
                    "arm {k} has norm {} > 1",
                    x.norm()
                )));
            }
        }
        if theta_star.norm() > param_bound * (1.0 + PRECONDITION_SLACK) {
            return Err(Error::DomainViolation(format!(
                "‖θ*‖ = {} exceeds bound {param_bound}",
                theta_star.norm()
            )));
        }
        Ok(Self {
            arms,
            theta_star,
            noise,
            param_bound,
        })
    }

    /// Random arms and a random `θ*` with `‖θ*‖₂ = S·u`, `u ~ Unif[0.5, 1]`,
    /// all drawn from `seed`.
    pub fn generate(
        dim: usize,
        arm_count: usize,
        generator: ArmGenerator,
        noise: NoiseModel,
        param_bound: f64,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 || arm_count == 0 {
            return Err(invalid("dimension and arm count must be at least 1"));
        }
        let mut rng = KeyedRng::new(seed, &[crate::perturb::stream::tag::ENVIRONMENT]);
        let arms = (0..arm_count)
            .map(|_| {
                let dir = random_direction(&mut rng, dim);
                match generator {
                    ArmGenerator::Sphere => dir,
                    ArmGenerator::Ball => {
                        let r: f64 = rng.random_range(0.0..1.0);
                        dir * r.powf(1.0 / dim as f64)
                    }
                }
            })
            .collect();
        let u: f64 = rng.random_range(0.5..=1.0);
        let theta_star = random_direction(&mut rng, dim) * (param_bound * u);
        Self::new(arms, theta_star, noise, param_bound)
    }

    pub fn arms(&self) -> &[Vector] {
        &self.arms
    }

    pub fn arm(&self, index: usize) -> Result<&Vector> {
        self.arms.get(index).ok_or_else(|| {
            invalid(format!(
                "arm index {index} out of range for {} arms",
                self.arms.len()
            ))
        })
    }

    pub fn theta_star(&self) -> &Vector {
        &self.theta_star
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn param_bound(&self) -> f64 {
        self.param_bound
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    pub fn mean_reward(&self, index: usize) -> Result<f64> {
        Ok(self.arm(index)?.dot(&self.theta_star))
    }

    /// `(argmax_k x_kᵀθ*, max value)`, smallest index on ties.
    pub fn best_arm(&self) -> (usize, f64) {
        argmax(&self.arms, &self.theta_star)
    }

    /// `x_kᵀθ* + η` with one noise draw from `rng`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> Result<f64> {
        let mean = self.mean_reward(index)?;
        Ok(mean + self.noise.sample(rng))
    }
}

/// Greedy arm choice for `theta`: the first index attaining the maximum.
pub fn argmax(arms: &[Vector], theta: &Vector) -> (usize, f64) {
    argmax_by(arms.len(), |k| arms[k].dot(theta))
}

pub(crate) fn argmax_by(n: usize, mut score: impl FnMut(usize) -> f64) -> (usize, f64) {
    let mut best = (0, score(0));
    for k in 1..n {
        let v = score(k);
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    loop {
        let g = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = g.norm();
        if n > 1e-12 {
            return g / n;
        }
    }
}

/// Per-step and cumulative regret against the true optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    per_step: Vec<f64>,
    cumulative: f64,
    optimal_value: f64,
    optimal_arm: usize,
}

impl RegretLedger {
    pub fn new(env: &EnvironmentSpec) -> Self {
        let (optimal_arm, optimal_value) = env.best_arm();
        Self {
            per_step: Vec::new(),
            cumulative: 0.0,
            optimal_value,
            optimal_arm,
        }
    }

    /// Records playing `index` and returns its instantaneous regret.
    pub fn record(&mut self, env: &EnvironmentSpec, index: usize) -> Result<f64> {
        let r = self.optimal_value - env.mean_reward(index)?;
        self.per_step.push(r);
        self.cumulative += r;
        Ok(r)
    }

    pub fn per_step(&self) -> &[f64] {
        &self.per_step
    }

    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    pub fn optimal_value(&self) -> f64 {
        self.optimal_value
    }

    pub fn optimal_arm(&self) -> usize {
        self.optimal_arm
    }
}
