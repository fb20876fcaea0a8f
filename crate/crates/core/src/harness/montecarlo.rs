use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PolicyKind};
use super::sim::{run_replication_in, RunRecord, RunSummary};
use crate::diagnostics::theoretical_regret_bound;
use crate::env::EnvironmentSpec;
use crate::perturb::p_n;
use crate::Result;

/// How replications are scheduled. Both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Geometric grid `1, 2, 4, …` capped by and always including `horizon`.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut t = 1u64;
    while t < horizon {
        out.push(t);
        t *= 2;
    }
    out.push(horizon);
    out
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Pass rates over all monitored steps, and over replications for the
/// per-run properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRates {
    pub steps: u64,
    pub concentration: f64,
    pub perturb_concentration: f64,
    pub anti_concentration: f64,
    pub optimism: f64,
    pub all_t_concentration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    /// Ensemble size actually used, for ensemble policies.
    pub ensemble_size: Option<usize>,
    /// `"auto"` when sized by the theory rule, `"explicit"` otherwise.
    pub ensemble_size_mode: Option<String>,
    pub scale: f64,
    pub replications: usize,
    pub horizon: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub final_regret_std_error: f64,
    pub elliptical_bound_rate: f64,
    pub monitors: Option<MonitorRates>,
    pub gamma: f64,
    pub optimism_probability: f64,
    pub theoretical_regret_bound: f64,
}

/// What aggregation needs from one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Digest {
    pub checkpoint_regret: Vec<f64>,
    pub summary: RunSummary,
}

impl Digest {
    pub fn of(record: &RunRecord, grid: &[u64]) -> Self {
        Self {
            checkpoint_regret: grid
                .iter()
                .map(|&t| record.steps[(t - 1) as usize].cum_regret)
                .collect(),
            summary: record.summary.clone(),
        }
    }
}

/// Aggregates digests listed in replication order.
pub fn summarize(config: &ExperimentConfig, digests: &[Digest]) -> Result<Summary> {
    let grid = checkpoints(config.run.horizon);
    let n = digests.len();
    let mut cps = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let mut vals: Vec<f64> = digests.iter().map(|d| d.checkpoint_regret[i]).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        vals.sort_by(f64::total_cmp);
        cps.push(Checkpoint {
            t,
            mean,
            median: quantile(&vals, 0.5),
            q10: quantile(&vals, 0.1),
            q90: quantile(&vals, 0.9),
        });
    }
    let finals: Vec<f64> = digests.iter().map(|d| d.summary.final_regret).collect();
    let mean = finals.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        (finals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };

    let monitors = if digests.iter().all(|d| d.summary.monitors.is_some()) && n > 0 {
        let mut steps = 0u64;
        let (mut c, mut pc, mut ac, mut op, mut all) = (0u64, 0u64, 0u64, 0u64, 0usize);
        for d in digests {
            let m = d.summary.monitors.expect("checked");
            steps += m.steps;
            c += m.concentration;
            pc += m.perturb_concentration;
            ac += m.anti_concentration;
            op += m.optimism;
            all += m.all_t_concentration as usize;
        }
        let rate = |k: u64| k as f64 / steps.max(1) as f64;
        Some(MonitorRates {
            steps,
            concentration: rate(c),
            perturb_concentration: rate(pc),
            anti_concentration: rate(ac),
            optimism: rate(op),
            all_t_concentration: all as f64 / n as f64,
        })
    } else {
        None
    };

    let params = config.confidence_params()?;
    let gamma = params.gamma();
    let p = p_n() / 4.0;
    let is_ensemble = config.policy.kind == PolicyKind::Ensemble;
    Ok(Summary {
        config: config.clone(),
        ensemble_size: if is_ensemble {
            Some(config.resolved_ensemble_size()?)
        } else {
            None
        },
        ensemble_size_mode: is_ensemble.then(|| {
            if config.policy.ensemble_size.is_auto() {
                "auto"
            } else {
                "explicit"
            }
            .to_string()
        }),
        scale: config.resolved_scale()?,
        replications: n,
        horizon: config.run.horizon,
        checkpoints: cps,
        final_regret_std_error: std_error,
        elliptical_bound_rate: digests.iter().filter(|d| d.summary.elliptical_ok()).count() as f64
            / n.max(1) as f64,
        monitors,
        gamma,
        optimism_probability: p,
        theoretical_regret_bound: theoretical_regret_bound(gamma, p, &params)?,
    })
}

/// All replications of a config, ordered by replication index.
pub fn run_replications(
    config: &ExperimentConfig,
    env: &EnvironmentSpec,
    execution: Execution,
) -> Result<Vec<RunRecord>> {
    let reps = config.run.replications;
    match execution {
        Execution::Serial => (0..reps)
            .map(|r| run_replication_in(config, env, r))
            .collect(),
        Execution::Parallel => (0..reps)
            .into_par_iter()
            .map(|r| run_replication_in(config, env, r))
            .collect(),
    }
}

pub struct MonteCarlo {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

pub fn run_monte_carlo(config: &ExperimentConfig, execution: Execution) -> Result<MonteCarlo> {
    config.validate()?;
    let env = config.build_env()?;
    let records = run_replications(config, &env, execution)?;
    let grid = checkpoints(config.run.horizon);
    let digests: Vec<Digest> = records.iter().map(|r| Digest::of(r, &grid)).collect();
    let summary = summarize(config, &digests)?;
    Ok(MonteCarlo { records, summary })
}
