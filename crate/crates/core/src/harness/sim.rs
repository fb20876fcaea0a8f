use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PolicyKind};
use crate::diagnostics::Monitor;
use crate::env::{EnvironmentSpec, RegretLedger};
use crate::linalg::{elliptical_potential_bound, Metric};
use crate::perturb::{stream::tag, KeyedRng};
use crate::policies::{AnyPolicy, Policy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFlags {
    pub concentration_ok: bool,
    pub perturb_concentration_ok: bool,
    pub anti_conc_ok: bool,
    pub optimism_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub arm: usize,
    pub model: Option<usize>,
    pub reward: f64,
    pub instant_regret: f64,
    pub cum_regret: f64,
    pub flags: Option<StepFlags>,
}

/// Event counts over one replication.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorCounts {
    pub steps: u64,
    pub concentration: u64,
    pub perturb_concentration: u64,
    pub anti_concentration: u64,
    pub optimism: u64,
    /// Ridge concentration held at every `t ∈ [0, T]`.
    pub all_t_concentration: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_regret: f64,
    pub elliptical_sum: f64,
    pub elliptical_bound: f64,
    pub monitors: Option<MonitorCounts>,
}

impl RunSummary {
    pub fn elliptical_ok(&self) -> bool {
        self.elliptical_sum <= self.elliptical_bound
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub replication: usize,
    pub steps: Vec<StepRecord>,
    pub summary: RunSummary,
    /// Kept out of every persisted output so those stay reproducible.
    pub wall_time: Duration,
}

impl RunRecord {
    /// Equality of everything except wall time.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        self.replication == other.replication
            && self.steps == other.steps
            && self.summary == other.summary
    }
}

/// Interacts `policy` with `env` for `horizon` steps.
///
/// Reward noise at step `t` comes from `[NOISE, t]` under `rep_seed`, the
/// policy's own randomness from `[SAMPLER, t]` (`[THOMPSON, t]` for LinTS).
pub fn simulate(
    env: &EnvironmentSpec,
    policy: &mut AnyPolicy,
    horizon: u64,
    rep_seed: u64,
    mut monitor: Option<&mut Monitor>,
) -> Result<(Vec<StepRecord>, RunSummary)> {
    let dim = policy.ridge().gram().dim();
    if dim != env.dim() {
        return Err(Error::Config(format!(
            "policy dimension {dim} does not match environment dimension {}",
            env.dim()
        )));
    }
    let lambda = policy.ridge().gram().lambda();
    let select_tag = match policy {
        AnyPolicy::LinTs(_) => tag::THOMPSON,
        _ => tag::SAMPLER,
    };
    let mut ledger = RegretLedger::new(env);
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut elliptical = 0.0;
    let mut counts = monitor.as_ref().map(|_| MonitorCounts {
        all_t_concentration: true,
        ..Default::default()
    });

    for t in 1..=horizon {
        let mut rng = KeyedRng::new(rep_seed, &[select_tag, t]);
        let decision = policy.select(t, env.arms(), &mut rng)?;
        let x = env.arm(decision.arm)?;
        let w = policy
            .ridge()
            .gram()
            .weighted_norm_unchecked(x, Metric::GramInv);
        elliptical += w * w;

        let flags = match monitor.as_deref_mut() {
            Some(mon) => {
                let s = mon.observe(env, &*policy, &decision, t)?;
                let c = counts.as_mut().expect("counts exist with a monitor");
                c.steps += 1;
                c.concentration += s.concentration_ok as u64;
                c.perturb_concentration += s.perturb_concentration_ok as u64;
                c.anti_concentration += s.anti_conc_ok as u64;
                c.optimism += s.optimism_ok as u64;
                c.all_t_concentration &= s.concentration_ok;
                Some(StepFlags {
                    concentration_ok: s.concentration_ok,
                    perturb_concentration_ok: s.perturb_concentration_ok,
                    anti_conc_ok: s.anti_conc_ok,
                    optimism_ok: s.optimism_ok,
                })
            }
            None => None,
        };

        let mut noise = KeyedRng::new(rep_seed, &[tag::NOISE, t]);
        let reward = env.sample_reward(decision.arm, &mut noise)?;
        let instant_regret = ledger.record(env, decision.arm)?;
        policy.update(t, decision.arm, x, reward)?;
        steps.push(StepRecord {
            t,
            arm: decision.arm,
            model: decision.model,
            reward,
            instant_regret,
            cum_regret: ledger.cumulative(),
            flags,
        });
    }

    if let (Some(mon), Some(c)) = (monitor, counts.as_mut()) {
        c.all_t_concentration &= mon.ridge_concentrated(env, policy.ridge());
    }
    Ok((
        steps,
        RunSummary {
            final_regret: ledger.cumulative(),
            elliptical_sum: elliptical,
            elliptical_bound: elliptical_potential_bound(dim, lambda, horizon),
            monitors: counts,
        },
    ))
}

/// Returns a closure reporting the time since the call. There is no clock on
/// `wasm32-unknown-unknown`, where it always reports zero.
#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl Fn() -> Duration {
    let start = std::time::Instant::now();
    move || start.elapsed()
}

#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl Fn() -> Duration {
    || Duration::ZERO
}

/// One full replication of `config` against a prebuilt environment.
pub fn run_replication_in(
    config: &ExperimentConfig,
    env: &EnvironmentSpec,
    replication: usize,
) -> Result<RunRecord> {
    let start = stopwatch();
    let rep_seed = config.replication_seed(replication);
    let mut policy = config.build_policy(rep_seed)?;
    let mut monitor = if config.run.diagnostics.enabled() {
        Some(Monitor::new(
            config.confidence_params()?,
            config.run.diagnostics,
        ))
    } else {
        None
    };
    let (steps, summary) = simulate(
        env,
        &mut policy,
        config.run.horizon,
        rep_seed,
        monitor.as_mut(),
    )?;
    let wall_time = start();
    log::debug!(
        "replication {replication}: regret {:.4} in {:.3}s",
        summary.final_regret,
        wall_time.as_secs_f64()
    );
    Ok(RunRecord {
        replication,
        steps,
        summary,
        wall_time,
    })
}

/// One full replication of `config`.
pub fn run_replication(config: &ExperimentConfig, replication: usize) -> Result<RunRecord> {
    config.validate()?;
    let env = config.build_env()?;
    run_replication_in(config, &env, replication)
}

/// Whether the policy is one of the perturbation-based ones.
pub fn is_perturbed(kind: PolicyKind) -> bool {
    matches!(kind, PolicyKind::Ensemble | PolicyKind::Phe)
}
