use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Monitor;
use crate::env::EnvironmentSpec;
use crate::harness::{Execution, ExperimentConfig, PolicyKind};
use crate::linalg::Metric;
use crate::perturb::{p_n, stream::tag, KeyedRng};
use crate::policies::{AnyPolicy, Choice, Policy};
use crate::{Error, Result, Vector};

/// Empirical frequencies of the events the regret analysis relies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub policy: PolicyKind,
    pub replications: usize,
    pub horizon: u64,
    pub delta: f64,
    pub ensemble_size: Option<usize>,

    /// Runs in which ridge concentration held at every `t ∈ [0, T]`.
    pub ridge_all_t_rate: f64,
    /// `1 − δ`.
    pub ridge_target: f64,
    /// `3·√(δ(1 − δ)/reps)`.
    pub ridge_tolerance: f64,

    /// Number of `(t, j)` pairs checked for perturbation concentration.
    pub perturb_samples: u64,
    pub perturb_concentration_rate: Option<f64>,
    /// `1 − δ/T`.
    pub perturb_target: f64,
    pub perturb_tolerance: f64,

    /// Mean over `(run, t)` of the share of models that are both
    /// anti-concentrated and perturbation-concentrated.
    pub optimistic_share_mean: Option<f64>,
    /// Share of `(run, t)` whose optimistic share reaches `p_N/4`.
    pub optimistic_step_rate: Option<f64>,
    /// Share of runs whose optimistic share reaches `p_N/4` at every `t`.
    pub optimistic_run_rate: Option<f64>,
    /// `p_N/4`.
    pub optimistic_floor: f64,
}

impl RateReport {
    pub fn ridge_ok(&self) -> bool {
        self.ridge_all_t_rate >= self.ridge_target - self.ridge_tolerance
    }

    pub fn perturb_ok(&self) -> Option<bool> {
        self.perturb_concentration_rate
            .map(|r| r >= self.perturb_target - self.perturb_tolerance)
    }

    /// Optimistic share reaches the floor on at least `1 − δ` of the runs.
    pub fn optimistic_ok(&self) -> Option<bool> {
        self.optimistic_run_rate.map(|r| r >= 1.0 - self.delta)
    }
}

#[derive(Debug, Default)]
struct RunRates {
    ridge_all_t: bool,
    perturb_samples: u64,
    perturb_ok: u64,
    share_sum: f64,
    steps_at_floor: u64,
    all_steps_at_floor: bool,
}

/// Per-model `(perturbation-concentrated, anti-concentrated)` at the
/// current state.
fn model_events(
    policy: &AnyPolicy,
    chosen_theta: Option<&Vector>,
    x_star: &Vector,
    threshold: f64,
    gamma_tilde: f64,
) -> Vec<(bool, bool)> {
    let ridge = policy.ridge();
    let gram = ridge.gram();
    let event = |theta_tilde: Vector| {
        (
            gram.weighted_norm_unchecked(&theta_tilde, Metric::Gram) <= gamma_tilde,
            x_star.dot(&theta_tilde) >= threshold,
        )
    };
    match policy {
        AnyPolicy::Ensemble(es) => (0..es.ensemble_size())
            .map(|j| event(es.model_perturbation(j)))
            .collect(),
        _ => chosen_theta
            .map(|theta| vec![event(theta - ridge.estimate())])
            .unwrap_or_default(),
    }
}

fn one_run(
    config: &ExperimentConfig,
    env: &EnvironmentSpec,
    rep: usize,
    floor: f64,
) -> Result<RunRates> {
    let params = config.confidence_params()?;
    let gamma_tilde = params.gamma_tilde();
    let rep_seed = config.replication_seed(rep);
    let mut policy = config.build_policy(rep_seed)?;
    let monitor = Monitor::new(params, crate::diagnostics::DiagnosticsLevel::Monitors);
    let select_tag = match policy {
        AnyPolicy::LinTs(_) => tag::THOMPSON,
        _ => tag::SAMPLER,
    };
    let (best, _) = env.best_arm();
    let x_star = env.arms()[best].clone();
    let mut out = RunRates {
        ridge_all_t: true,
        all_steps_at_floor: true,
        ..Default::default()
    };
    let perturbed = matches!(policy, AnyPolicy::Ensemble(_) | AnyPolicy::Phe(_));

    for t in 1..=config.run.horizon {
        out.ridge_all_t &= monitor.ridge_concentrated(env, policy.ridge());
        let mut rng = KeyedRng::new(rep_seed, &[select_tag, t]);
        let decision = policy.select(t, env.arms(), &mut rng)?;
        if perturbed {
            let threshold = params.beta(t - 1)
                * policy
                    .ridge()
                    .gram()
                    .weighted_norm_unchecked(&x_star, Metric::GramInv);
            let theta = match &decision.choice {
                Choice::Estimate(theta) => Some(theta),
                Choice::Optimistic { .. } => None,
            };
            let events = model_events(&policy, theta, &x_star, threshold, gamma_tilde);
            let good = events.iter().filter(|(pc, ac)| *pc && *ac).count();
            out.perturb_samples += events.len() as u64;
            out.perturb_ok += events.iter().filter(|(pc, _)| *pc).count() as u64;
            let share = good as f64 / events.len() as f64;
            out.share_sum += share;
            if share >= floor {
                out.steps_at_floor += 1;
            } else {
                out.all_steps_at_floor = false;
            }
        }
        let mut noise = KeyedRng::new(rep_seed, &[tag::NOISE, t]);
        let y = env.sample_reward(decision.arm, &mut noise)?;
        policy.update(t, decision.arm, &env.arms()[decision.arm], y)?;
    }
    out.ridge_all_t &= monitor.ridge_concentrated(env, policy.ridge());
    Ok(out)
}

/// Event-rate study over `reps ≥ 100` replications of `config`.
pub fn estimate_event_rates(
    config: &ExperimentConfig,
    reps: usize,
    execution: Execution,
) -> Result<RateReport> {
    if reps < 100 {
        return Err(Error::InvalidArgument(format!(
            "event-rate estimation needs at least 100 replications, got {reps}"
        )));
    }
    config.validate()?;
    let env = config.build_env()?;
    let floor = p_n() / 4.0;
    let runs: Vec<RunRates> = match execution {
        Execution::Serial => (0..reps)
            .map(|r| one_run(config, &env, r, floor))
            .collect::<Result<_>>(),
        Execution::Parallel => (0..reps)
            .into_par_iter()
            .map(|r| one_run(config, &env, r, floor))
            .collect::<Result<_>>(),
    }?;

    let n = reps as f64;
    let horizon = config.run.horizon;
    let delta = config.policy.delta;
    let perturbed = matches!(config.policy.kind, PolicyKind::Ensemble | PolicyKind::Phe);
    let samples: u64 = runs.iter().map(|r| r.perturb_samples).sum();
    let steps = n * horizon as f64;
    Ok(RateReport {
        policy: config.policy.kind,
        replications: reps,
        horizon,
        delta,
        ensemble_size: (config.policy.kind == PolicyKind::Ensemble)
            .then(|| config.resolved_ensemble_size())
            .transpose()?,
        ridge_all_t_rate: runs.iter().filter(|r| r.ridge_all_t).count() as f64 / n,
        ridge_target: 1.0 - delta,
        ridge_tolerance: 3.0 * (delta * (1.0 - delta) / n).sqrt(),
        perturb_samples: samples,
        perturb_concentration_rate: perturbed
            .then(|| runs.iter().map(|r| r.perturb_ok).sum::<u64>() as f64 / samples as f64),
        perturb_target: 1.0 - delta / horizon as f64,
        perturb_tolerance: 0.01,
        optimistic_share_mean: perturbed
            .then(|| runs.iter().map(|r| r.share_sum).sum::<f64>() / steps),
        optimistic_step_rate: perturbed
            .then(|| runs.iter().map(|r| r.steps_at_floor).sum::<u64>() as f64 / steps),
        optimistic_run_rate: perturbed
            .then(|| runs.iter().filter(|r| r.all_steps_at_floor).count() as f64 / n),
        optimistic_floor: floor,
    })
}
