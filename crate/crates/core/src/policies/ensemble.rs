use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Choice, Decision, Policy, RidgeState};
use crate::env::argmax;
use crate::error::invalid;
use crate::perturb::{PerturbationSpec, PerturbationStream, RewardKey};
use crate::{Error, Result, Vector};

/// Distribution of the model index `j_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Uniform over the `m` models.
    Uniform,
    /// Model `t − 1` (zero-based) at step `t`; requires `t ≤ m`.
    RoundRobin,
}

/// When cached per-model estimates are recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaRefresh {
    /// Only the sampled model, at selection time.
    Lazy,
    /// Every model after every update.
    Eager,
}

/// Linear ensemble sampling.
///
/// Each of the `m` models keeps `S^j = W^j + Σ X_i (Y_i + Z_i^j)` over the
/// shared Gram matrix, so `θ^j = V⁻¹ S^j` minimises
/// `λ‖θ − W^j/λ‖² + Σ (X_iᵀθ − (Y_i + Z_i^j))²`.
#[derive(Debug, Clone)]
pub struct EnsembleSampling {
    ridge: RidgeState,
    s_vectors: Vec<Vector>,
    thetas: Vec<Vector>,
    sampler: Sampler,
    refresh: ThetaRefresh,
    spec: PerturbationSpec,
    stream: PerturbationStream,
    arm_counts: Vec<u64>,
    /// Reward key used at each past step, for rebuilding perturbation vectors.
    keys: Vec<RewardKey>,
    last_model: Option<usize>,
}

impl EnsembleSampling {
    pub fn new(
        dim: usize,
        lambda: f64,
        ensemble_size: usize,
        spec: PerturbationSpec,
        stream: PerturbationStream,
        sampler: Sampler,
    ) -> Result<Self> {
        if ensemble_size == 0 {
            return Err(invalid("ensemble size must be at least 1"));
        }
        let ridge = RidgeState::new(dim, lambda)?;
        let s_vectors: Vec<Vector> = (0..ensemble_size)
            .map(|j| stream.initial(&spec, j, dim, lambda))
            .collect();
        let thetas = s_vectors
            .iter()
            .map(|s| ridge.gram().gram_inv() * s)
            .collect();
        Ok(Self {
            ridge,
            s_vectors,
            thetas,
            sampler,
            refresh: ThetaRefresh::Lazy,
            spec,
            stream,
            arm_counts: Vec::new(),
            keys: Vec::new(),
            last_model: None,
        })
    }

    pub fn with_refresh(mut self, refresh: ThetaRefresh) -> Self {
        self.refresh = refresh;
        self
    }

    pub fn ensemble_size(&self) -> usize {
        self.s_vectors.len()
    }

    pub fn sampler(&self) -> Sampler {
        self.sampler
    }

    pub fn spec(&self) -> &PerturbationSpec {
        &self.spec
    }

    pub fn stream(&self) -> &PerturbationStream {
        &self.stream
    }

    pub fn last_model(&self) -> Option<usize> {
        self.last_model
    }

    pub fn s_vector(&self, model: usize) -> &Vector {
        &self.s_vectors[model]
    }

    /// Cached estimate of `model`. Current for every model under
    /// [`ThetaRefresh::Eager`]; under lazy refresh only for models sampled
    /// since their last update.
    pub fn cached_theta(&self, model: usize) -> &Vector {
        &self.thetas[model]
    }

    /// `θ^j = V⁻¹ S^j`, freshly solved.
    pub fn model_theta(&self, model: usize) -> Vector {
        self.ridge.gram().gram_inv() * &self.s_vectors[model]
    }

    /// Perturbation part `θ̃^j = V⁻¹ (S^j − Σ X_i Y_i)`.
    pub fn model_perturbation(&self, model: usize) -> Vector {
        self.ridge.gram().gram_inv() * (&self.s_vectors[model] - self.ridge.response())
    }

    /// `(W^j/√λ, Z_1^j, …, Z_n^j)` over the `n` observations so far,
    /// rebuilt from the keyed stream.
    pub fn model_perturbation_vector(&self, model: usize) -> Result<Vector> {
        let gram = self.ridge.gram();
        let d = gram.dim();
        let w = self.stream.initial(&self.spec, model, d, gram.lambda()) / gram.lambda().sqrt();
        let mut z = Vector::zeros(d + self.keys.len());
        z.rows_mut(0, d).copy_from(&w);
        for (i, key) in self.keys.iter().enumerate() {
            z[d + i] = self.stream.reward(&self.spec, model, *key)?;
        }
        Ok(z)
    }

    fn pick_model(&self, t: u64, rng: &mut dyn RngCore) -> Result<usize> {
        let m = self.ensemble_size();
        match self.sampler {
            Sampler::Uniform => Ok(rng.random_range(0..m)),
            Sampler::RoundRobin => {
                if t == 0 || t > m as u64 {
                    Err(Error::InvalidState(format!(
                        "round-robin sampling at step {t} needs at least {t} models, have {m}"
                    )))
                } else {
                    Ok((t - 1) as usize)
                }
            }
        }
    }
}

impl Policy for EnsembleSampling {
    fn select(&mut self, t: u64, arms: &[Vector], rng: &mut dyn RngCore) -> Result<Decision> {
        if arms.is_empty() {
            return Err(invalid("arm set is empty"));
        }
        let model = self.pick_model(t, rng)?;
        let theta = match self.refresh {
            ThetaRefresh::Eager => self.thetas[model].clone(),
            ThetaRefresh::Lazy => {
                let theta = self.model_theta(model);
                self.thetas[model] = theta.clone();
                theta
            }
        };
        self.last_model = Some(model);
        Ok(Decision {
            arm: argmax(arms, &theta).0,
            model: Some(model),
            choice: Choice::Estimate(theta),
        })
    }

    fn update(&mut self, t: u64, arm: usize, x: &Vector, y: f64) -> Result<()> {
        self.ridge.update(x, y)?;
        if arm >= self.arm_counts.len() {
            self.arm_counts.resize(arm + 1, 0);
        }
        self.arm_counts[arm] += 1;
        let key = self.stream.reward_key(t, arm, self.arm_counts[arm]);
        for (j, s) in self.s_vectors.iter_mut().enumerate() {
            let z = self.stream.reward(&self.spec, j, key)?;
            s.axpy(y + z, x, 1.0);
        }
        self.keys.push(key);
        if self.refresh == ThetaRefresh::Eager {
            let inv = self.ridge.gram().gram_inv();
            for (theta, s) in self.thetas.iter_mut().zip(&self.s_vectors) {
                *theta = inv * s;
            }
        }
        Ok(())
    }

    fn ridge(&self) -> &RidgeState {
        &self.ridge
    }

    fn perturbation_vector(&self, decision: &Decision, _t: u64) -> Option<Result<Vector>> {
        decision.model.map(|j| self.model_perturbation_vector(j))
    }
}
