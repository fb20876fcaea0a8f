use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsLevel;
use crate::env::{ArmGenerator, EnvironmentSpec, NoiseFamily, NoiseModel};
use crate::perturb::{
    stream::{derive_seed, tag},
    ConfidenceParams, Keying, PerturbFamily, PerturbationSpec, PerturbationStream,
};
use crate::policies::{
    AnyPolicy, EnsembleSampling, Greedy, LinPhe, LinTs, LinUcb, Sampler, ThetaRefresh, UcbRadius,
};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AutoKeyword {
    Auto,
}

/// A field that is either the literal string `"auto"` or a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    #[serde(with = "auto_keyword")]
    Auto,
    Value(T),
}

mod auto_keyword {
    use super::AutoKeyword;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        AutoKeyword::Auto.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        AutoKeyword::deserialize(d).map(|_| ())
    }
}

impl<T> Default for AutoOr<T> {
    fn default() -> Self {
        AutoOr::Auto
    }
}

impl<T: Copy> AutoOr<T> {
    pub fn resolve(&self, auto: impl FnOnce() -> T) -> T {
        match self {
            AutoOr::Auto => auto(),
            AutoOr::Value(v) => *v,
        }
    }

    pub fn is_auto(&self) -> bool {
        matches!(self, AutoOr::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmMode {
    #[default]
    Ball,
    Sphere,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Ensemble,
    Phe,
    Linucb,
    Lints,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub dim: usize,
    /// Number of arms `K`; must match `arm_list` in explicit mode.
    pub arm_count: usize,
    #[serde(default)]
    pub arm_mode: ArmMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_list: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    pub sigma: f64,
    #[serde(default = "one")]
    pub s_bound: f64,
    #[serde(default = "default_noise")]
    pub noise: NoiseFamily,
    /// Seed for random arms and `θ*`; defaults to the run's base seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub ensemble_size: AutoOr<usize>,
    #[serde(default = "default_sampler")]
    pub sampler: Sampler,
    #[serde(default = "default_family")]
    pub perturbation: PerturbFamily,
    /// Perturbation scale (ensemble, PHE), confidence width (LinUCB) or
    /// sampling scale (LinTS). `auto` is `β_T`, or `β_{t−1}` for LinUCB.
    #[serde(default)]
    pub scale: AutoOr<f64>,
    #[serde(default = "default_keying")]
    pub keying: Keying,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_refresh")]
    pub refresh: ThetaRefresh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: u64,
    #[serde(default = "one_usize")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub diagnostics: DiagnosticsLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub policy: PolicyConfig,
    pub run: RunConfig,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_noise() -> NoiseFamily {
    NoiseFamily::Gaussian
}
fn default_sampler() -> Sampler {
    Sampler::Uniform
}
fn default_family() -> PerturbFamily {
    PerturbFamily::Gaussian
}
fn default_keying() -> Keying {
    Keying::ByStep
}
fn default_delta() -> f64 {
    0.05
}
fn default_refresh() -> ThetaRefresh {
    ThetaRefresh::Lazy
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => config_err(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let (env, pol, run) = (&self.env, &self.policy, &self.run);
        if env.dim == 0 {
            return Err(config_err("env.dim must be at least 1"));
        }
        if env.arm_count == 0 {
            return Err(config_err("env.arm_count must be at least 1"));
        }
        if !env.sigma.is_finite() || env.sigma < 0.0 {
            return Err(config_err("env.sigma must be finite and ≥ 0"));
        }
        if !env.s_bound.is_finite() || env.s_bound <= 0.0 {
            return Err(config_err("env.s_bound must be positive"));
        }
        match env.arm_mode {
            ArmMode::Explicit => {
                let arms = env
                    .arm_list
                    .as_ref()
                    .ok_or_else(|| config_err("explicit arm mode needs env.arm_list"))?;
                let theta = env
                    .theta_star
                    .as_ref()
                    .ok_or_else(|| config_err("explicit arm mode needs env.theta_star"))?;
                if arms.len() != env.arm_count {
                    return Err(config_err(format!(
                        "env.arm_count = {} but env.arm_list has {} arms",
                        env.arm_count,
                        arms.len()
                    )));
                }
                if theta.len() != env.dim || arms.iter().any(|a| a.len() != env.dim) {
                    return Err(config_err(format!(
                        "arm and parameter vectors must have dimension env.dim = {}",
                        env.dim
                    )));
                }
            }
            ArmMode::Ball | ArmMode::Sphere => {
                if env.arm_list.is_some() || env.theta_star.is_some() {
                    return Err(config_err(
                        "env.arm_list and env.theta_star need arm_mode = \"explicit\"",
                    ));
                }
            }
        }
        if !pol.lambda.is_finite() || pol.lambda <= 0.0 {
            return Err(config_err("policy.lambda must be positive"));
        }
        if pol.lambda < 1.0 {
            log::warn!(
                "policy.lambda = {} < 1: the elliptical potential bound is not guaranteed",
                pol.lambda
            );
        }
        if !(pol.delta > 0.0 && pol.delta <= 1.0) {
            return Err(config_err(format!(
                "policy.delta must lie in (0, 1], got {}",
                pol.delta
            )));
        }
        if let AutoOr::Value(m) = pol.ensemble_size {
            if m == 0 {
                return Err(config_err("policy.ensemble_size must be at least 1"));
            }
        }
        if let AutoOr::Value(s) = pol.scale {
            if !s.is_finite() || s < 0.0 {
                return Err(config_err("policy.scale must be finite and ≥ 0"));
            }
        }
        if run.horizon == 0 {
            return Err(config_err("run.horizon must be at least 1"));
        }
        if run.replications == 0 {
            return Err(config_err("run.replications must be at least 1"));
        }
        if pol.kind == PolicyKind::Ensemble && pol.sampler == Sampler::RoundRobin {
            let m = self.resolved_ensemble_size()?;
            if (m as u64) < run.horizon {
                return Err(config_err(format!(
                    "round-robin sampling needs ensemble_size ≥ horizon ({m} < {})",
                    run.horizon
                )));
            }
        }
        Ok(())
    }

    pub fn confidence_params(&self) -> Result<ConfidenceParams> {
        ConfidenceParams::new(
            self.env.sigma,
            self.policy.lambda,
            self.env.s_bound,
            self.env.dim,
            self.run.horizon,
            self.policy.delta,
        )
    }

    /// Ensemble size, with `auto` resolved through the sizing rule.
    pub fn resolved_ensemble_size(&self) -> Result<usize> {
        match self.policy.ensemble_size {
            AutoOr::Value(m) => Ok(m),
            AutoOr::Auto => self.confidence_params()?.ensemble_size(self.env.arm_count),
        }
    }

    /// Scale with `auto` resolved to `β_T`.
    pub fn resolved_scale(&self) -> Result<f64> {
        let params = self.confidence_params()?;
        Ok(self.policy.scale.resolve(|| params.beta_horizon()))
    }

    pub fn perturbation_spec(&self) -> Result<PerturbationSpec> {
        PerturbationSpec::new(self.policy.perturbation, self.resolved_scale()?)
    }

    pub fn build_env(&self) -> Result<EnvironmentSpec> {
        let env = &self.env;
        let noise = NoiseModel::new(env.noise, env.sigma)?;
        let seed = env.seed.unwrap_or(self.run.base_seed);
        let built = match env.arm_mode {
            ArmMode::Explicit => {
                let arms = env.arm_list.as_ref().expect("validated");
                let theta = env.theta_star.as_ref().expect("validated");
                EnvironmentSpec::new(
                    arms.iter().map(|a| Vector::from_column_slice(a)).collect(),
                    Vector::from_column_slice(theta),
                    noise,
                    env.s_bound,
                )
            }
            ArmMode::Ball => EnvironmentSpec::generate(
                env.dim,
                env.arm_count,
                ArmGenerator::Ball,
                noise,
                env.s_bound,
                seed,
            ),
            ArmMode::Sphere => EnvironmentSpec::generate(
                env.dim,
                env.arm_count,
                ArmGenerator::Sphere,
                noise,
                env.s_bound,
                seed,
            ),
        };
        built.map_err(|e| config_err(format!("environment: {e}")))
    }

    /// Seed of replication `rep`, from which all its streams derive.
    pub fn replication_seed(&self, rep: usize) -> u64 {
        derive_seed(self.run.base_seed, &[tag::REPLICATION, rep as u64])
    }

    /// Fresh policy for a replication seeded with `rep_seed`.
    pub fn build_policy(&self, rep_seed: u64) -> Result<AnyPolicy> {
        let pol = &self.policy;
        let d = self.env.dim;
        let stream =
            PerturbationStream::new(derive_seed(rep_seed, &[tag::PERTURBATION]), pol.keying);
        Ok(match pol.kind {
            PolicyKind::Ensemble => AnyPolicy::Ensemble(
                EnsembleSampling::new(
                    d,
                    pol.lambda,
                    self.resolved_ensemble_size()?,
                    self.perturbation_spec()?,
                    stream,
                    pol.sampler,
                )?
                .with_refresh(pol.refresh),
            ),
            PolicyKind::Phe => AnyPolicy::Phe(LinPhe::new(
                d,
                pol.lambda,
                self.perturbation_spec()?,
                stream,
            )?),
            PolicyKind::Linucb => {
                let radius = match pol.scale {
                    AutoOr::Auto => UcbRadius::Confidence(self.confidence_params()?),
                    AutoOr::Value(r) => UcbRadius::Fixed(r),
                };
                AnyPolicy::LinUcb(LinUcb::new(d, pol.lambda, radius)?)
            }
            PolicyKind::Lints => {
                AnyPolicy::LinTs(LinTs::new(d, pol.lambda, self.resolved_scale()?)?)
            }
            PolicyKind::Greedy => AnyPolicy::Greedy(Greedy::new(d, pol.lambda)?),
        })
    }
}
