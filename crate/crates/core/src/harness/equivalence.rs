use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::perturb::{stream::derive_seed, stream::tag, KeyedRng, Keying, PerturbationStream};
use crate::policies::{Choice, Decision, EnsembleSampling, LinPhe, Policy, Sampler};
use crate::Result;

/// Draw sharing between the two policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawSharing {
    /// Both read the same keyed stream.
    Shared,
    /// LinPHE gets an unrelated stream. Used to check that the suite can fail.
    Desynchronized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub seed: u64,
    pub t: u64,
    pub ensemble_arm: usize,
    pub phe_arm: usize,
    pub ensemble_theta: Vec<f64>,
    pub phe_theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub seeds: usize,
    pub matched: usize,
    pub horizon: u64,
    pub first_divergence: Option<Divergence>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.matched == self.seeds
    }
}

fn theta_of(d: &Decision) -> Vec<f64> {
    match &d.choice {
        Choice::Estimate(theta) => theta.iter().copied().collect(),
        Choice::Optimistic { .. } => Vec::new(),
    }
}

/// Runs an ensemble of `T` models visited round-robin next to LinPHE, one
/// seed per replication of `config`, and compares arm sequences exactly.
/// Each seed also draws its own environment unless the arms are explicit.
pub fn run_equivalence_suite(
    config: &ExperimentConfig,
    sharing: DrawSharing,
) -> Result<EquivalenceReport> {
    config.validate()?;
    let horizon = config.run.horizon;
    let dim = config.env.dim;
    let lambda = config.policy.lambda;
    let spec = config.perturbation_spec()?;
    let mut matched = 0;
    let mut first_divergence = None;

    for s in 0..config.run.replications {
        let seed = derive_seed(config.run.base_seed, &[s as u64]);
        let mut seeded = config.clone();
        seeded.run.base_seed = seed;
        seeded.env.seed = None;
        let env = seeded.build_env()?;
        let stream =
            PerturbationStream::new(derive_seed(seed, &[tag::PERTURBATION]), Keying::ByStep);
        let phe_stream = match sharing {
            DrawSharing::Shared => stream,
            DrawSharing::Desynchronized => {
                PerturbationStream::new(stream.base_seed() ^ 0x9e37_79b9_7f4a_7c15, Keying::ByStep)
            }
        };
        let mut es = EnsembleSampling::new(
            dim,
            lambda,
            horizon as usize,
            spec,
            stream,
            Sampler::RoundRobin,
        )?;
        let mut phe = LinPhe::new(dim, lambda, spec, phe_stream)?;

        let mut diverged = None;
        for t in 1..=horizon {
            // Neither policy consumes this generator under round-robin.
            let mut rng = KeyedRng::new(seed, &[tag::SAMPLER, t]);
            let a = es.select(t, env.arms(), &mut rng as &mut dyn RngCore)?;
            let b = phe.select(t, env.arms(), &mut rng)?;
            if a.arm != b.arm {
                diverged = Some(Divergence {
                    seed,
                    t,
                    ensemble_arm: a.arm,
                    phe_arm: b.arm,
                    ensemble_theta: theta_of(&a),
                    phe_theta: theta_of(&b),
                });
                break;
            }
            let mut noise = KeyedRng::new(seed, &[tag::NOISE, t]);
            let y = env.sample_reward(a.arm, &mut noise)?;
            let x = &env.arms()[a.arm];
            es.update(t, a.arm, x, y)?;
            phe.update(t, b.arm, x, y)?;
        }
        match diverged {
            None => matched += 1,
            Some(d) => {
                log::warn!(
                    "seed {seed:#x}: arms diverge at step {} (ensemble {} vs PHE {}), \
                     θ_es = {:?}, θ_phe = {:?}",
                    d.t,
                    d.ensemble_arm,
                    d.phe_arm,
                    d.ensemble_theta,
                    d.phe_theta
                );
                first_divergence.get_or_insert(d);
            }
        }
    }
    Ok(EquivalenceReport {
        seeds: config.run.replications,
        matched,
        horizon,
        first_divergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dim: usize, arms: usize, horizon: u64, seeds: usize, family: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            r#"
[env]
dim = {dim}
arm_count = {arms}
sigma = 1.0

[policy]
kind = "phe"
perturbation = "{family}"

[run]
horizon = {horizon}
replications = {seeds}
base_seed = 2024
"#
        ))
        .unwrap()
    }

    #[test]
    fn shared_draws_match() {
        for family in ["gaussian", "rademacher", "spherical_componentwise"] {
            let r = run_equivalence_suite(&cfg(2, 4, 20, 10, family), DrawSharing::Shared).unwrap();
            assert!(r.passed(), "{family}: {r:?}");
        }
    }

    #[test]
    fn single_step() {
        let r = run_equivalence_suite(&cfg(3, 5, 1, 20, "gaussian"), DrawSharing::Shared).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn desynchronized_draws_fail_early() {
        let r = run_equivalence_suite(&cfg(2, 4, 20, 10, "gaussian"), DrawSharing::Desynchronized)
            .unwrap();
        assert!(!r.passed());
        let d = r.first_divergence.unwrap();
        assert!(d.t <= 5, "first divergence at {}", d.t);
        assert_eq!(d.ensemble_theta.len(), 2);
    }
}
