use rand::RngCore;

use super::{Choice, Decision, Policy, RidgeState};
use crate::env::argmax;
use crate::error::invalid;
use crate::perturb::{PerturbationSpec, PerturbationStream, RewardKey};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone)]
struct Observation {
    x: Vector,
    y: f64,
    arm: usize,
    /// Pulls of `arm` up to and including this one.
    count: u64,
}

/// Linear perturbed-history exploration.
///
/// At step `t` the whole history is re-perturbed with fresh draws:
/// `θ_t = V_{t−1}⁻¹ (W_t + Σ_{i<t} X_i (Y_i + Z_{t,i}))`. The draws for step
/// `t` come from model index `t − 1` of the keyed stream, so with the same
/// stream an ensemble of `T` models visited round-robin reproduces it
/// exactly.
#[derive(Debug, Clone)]
pub struct LinPhe {
    ridge: RidgeState,
    history: Vec<Observation>,
    arm_counts: Vec<u64>,
    spec: PerturbationSpec,
    stream: PerturbationStream,
}

impl LinPhe {
    pub fn new(
        dim: usize,
        lambda: f64,
        spec: PerturbationSpec,
        stream: PerturbationStream,
    ) -> Result<Self> {
        Ok(Self {
            ridge: RidgeState::new(dim, lambda)?,
            history: Vec::new(),
            arm_counts: Vec::new(),
            spec,
            stream,
        })
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    fn check_step(&self, t: u64) -> Result<()> {
        if t != self.history.len() as u64 + 1 {
            return Err(Error::InvalidState(format!(
                "step {t} does not follow a history of length {}",
                self.history.len()
            )));
        }
        Ok(())
    }

    fn key(&self, i: usize) -> RewardKey {
        let obs = &self.history[i];
        self.stream.reward_key(i as u64 + 1, obs.arm, obs.count)
    }

    /// `W_t + Σ X_i (Y_i + Z_{t,i})` for step `t`.
    fn perturbed_response(&self, t: u64) -> Result<Vector> {
        let gram = self.ridge.gram();
        let model = (t - 1) as usize;
        let mut acc = self
            .stream
            .initial(&self.spec, model, gram.dim(), gram.lambda());
        for (i, obs) in self.history.iter().enumerate() {
            let z = self.stream.reward(&self.spec, model, self.key(i))?;
            acc.axpy(obs.y + z, &obs.x, 1.0);
        }
        Ok(acc)
    }

    /// Perturbed estimate `θ_t` for the next step `t`.
    pub fn theta(&self, t: u64) -> Result<Vector> {
        self.check_step(t)?;
        Ok(self.ridge.gram().gram_inv() * self.perturbed_response(t)?)
    }

    /// `(W_t/√λ, Z_{t,1}, …, Z_{t,t−1})`.
    pub fn step_perturbation_vector(&self, t: u64) -> Result<Vector> {
        self.check_step(t)?;
        let gram = self.ridge.gram();
        let d = gram.dim();
        let model = (t - 1) as usize;
        let w = self.stream.initial(&self.spec, model, d, gram.lambda()) / gram.lambda().sqrt();
        let mut z = Vector::zeros(d + self.history.len());
        z.rows_mut(0, d).copy_from(&w);
        for i in 0..self.history.len() {
            z[d + i] = self.stream.reward(&self.spec, model, self.key(i))?;
        }
        Ok(z)
    }
}

impl Policy for LinPhe {
    fn select(&mut self, t: u64, arms: &[Vector], _rng: &mut dyn RngCore) -> Result<Decision> {
        if arms.is_empty() {
            return Err(invalid("arm set is empty"));
        }
        let theta = self.theta(t)?;
        Ok(Decision {
            arm: argmax(arms, &theta).0,
            model: None,
            choice: Choice::Estimate(theta),
        })
    }

    fn update(&mut self, t: u64, arm: usize, x: &Vector, y: f64) -> Result<()> {
        self.check_step(t)?;
        self.ridge.update(x, y)?;
        if arm >= self.arm_counts.len() {
            self.arm_counts.resize(arm + 1, 0);
        }
        self.arm_counts[arm] += 1;
        self.history.push(Observation {
            x: x.clone(),
            y,
            arm,
            count: self.arm_counts[arm],
        });
        Ok(())
    }

    fn ridge(&self) -> &RidgeState {
        &self.ridge
    }

    fn perturbation_vector(&self, _decision: &Decision, t: u64) -> Option<Result<Vector>> {
        Some(self.step_perturbation_vector(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::{KeyedRng, Keying, PerturbFamily};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn first_step_is_w_over_lambda() {
        let spec = PerturbationSpec::new(PerturbFamily::Gaussian, 1.0).unwrap();
        let stream = PerturbationStream::new(6, Keying::ByStep);
        let phe = LinPhe::new(3, 2.0, spec, stream).unwrap();
        let want = stream.initial(&spec, 0, 3, 2.0) / 2.0;
        assert!((phe.theta(1).unwrap() - want).amax() < 1e-15);
    }

    #[test]
    fn zero_scale_is_ridge() {
        let spec = PerturbationSpec::new(PerturbFamily::Gaussian, 0.0).unwrap();
        let mut phe =
            LinPhe::new(2, 1.0, spec, PerturbationStream::new(1, Keying::ByStep)).unwrap();
        let arms = vec![v(&[1.0, 0.0]), v(&[0.6, 0.8])];
        let mut rng = KeyedRng::new(0, &[]);
        for t in 1..=10 {
            let d = phe.select(t, &arms, &mut rng).unwrap();
            phe.update(t, d.arm, &arms[d.arm], 0.2 * t as f64).unwrap();
        }
        let theta = phe.theta(11).unwrap();
        assert_eq!(theta, phe.ridge().estimate());
    }

    #[test]
    fn step_must_follow_history() {
        let spec = PerturbationSpec::new(PerturbFamily::Gaussian, 1.0).unwrap();
        let mut phe =
            LinPhe::new(2, 1.0, spec, PerturbationStream::new(1, Keying::ByStep)).unwrap();
        let arms = vec![v(&[1.0, 0.0])];
        let mut rng = KeyedRng::new(0, &[]);
        assert!(matches!(
            phe.select(2, &arms, &mut rng),
            Err(Error::InvalidState(_))
        ));
        assert!(phe.update(3, 0, &arms[0], 1.0).is_err());
    }
}
