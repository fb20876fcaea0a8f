//! Browser bindings. Every export takes plain numbers and returns a JSON
//! string; the page in `www/` draws the results on a canvas.

use linbandit::diagnostics::theoretical_regret_bound;
use linbandit::harness::{quantile, run_monte_carlo, Execution, ExperimentConfig};
use linbandit::perturb::{p_n, ConfidenceParams, KeyedRng, PerturbFamily, PerturbationSpec};
use linbandit::Vector;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 200;
pub const POLICIES: [&str; 4] = ["ensemble", "phe", "linucb", "lints"];

#[derive(Debug, Serialize)]
pub struct Curve {
    pub policy: String,
    pub t: Vec<u64>,
    pub mean: Vec<f64>,
    pub q10: Vec<f64>,
    pub q90: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct RegretCurves {
    pub ensemble_size: usize,
    pub curves: Vec<Curve>,
}

/// Evenly spaced step indices, at most `MAX_POINTS` of them, ending at `horizon`.
fn grid(horizon: u64) -> Vec<u64> {
    let n = (horizon as usize).min(MAX_POINTS) as u64;
    (1..=n).map(|i| (i * horizon).div_ceil(n)).collect()
}

fn config(
    kind: &str,
    dim: usize,
    arms: usize,
    horizon: u64,
    reps: usize,
    seed: u64,
    m: usize,
) -> linbandit::Result<ExperimentConfig> {
    ExperimentConfig::from_toml_str(&format!(
        "[env]\ndim = {dim}\narm_count = {arms}\nsigma = 1.0\nseed = {seed}\n\
         [policy]\nkind = \"{kind}\"\nensemble_size = {m}\n\
         [run]\nhorizon = {horizon}\nreplications = {reps}\nbase_seed = {seed}\n"
    ))
}

pub fn compute_regret_curves(
    dim: usize,
    arms: usize,
    horizon: u64,
    reps: usize,
    seed: u64,
    ensemble_size: usize,
) -> linbandit::Result<RegretCurves> {
    let points = grid(horizon);
    let mut curves = Vec::new();
    for kind in POLICIES {
        let cfg = config(kind, dim, arms, horizon, reps, seed, ensemble_size)?;
        let mc = run_monte_carlo(&cfg, Execution::Serial)?;
        let mut curve = Curve {
            policy: kind.to_string(),
            t: points.clone(),
            mean: Vec::with_capacity(points.len()),
            q10: Vec::with_capacity(points.len()),
            q90: Vec::with_capacity(points.len()),
        };
        for &t in &points {
            let mut at: Vec<f64> = mc
                .records
                .iter()
                .map(|r| r.steps[(t - 1) as usize].cum_regret)
                .collect();
            at.sort_by(f64::total_cmp);
            curve.mean.push(at.iter().sum::<f64>() / at.len() as f64);
            curve.q10.push(quantile(&at, 0.1));
            curve.q90.push(quantile(&at, 0.9));
        }
        curves.push(curve);
    }
    Ok(RegretCurves {
        ensemble_size,
        curves,
    })
}

#[derive(Debug, Serialize)]
pub struct Histogram {
    pub family: PerturbFamily,
    pub dim: usize,
    pub draws: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub threshold: f64,
    pub hit_rate: f64,
    pub floor: f64,
}

pub fn compute_anti_concentration(
    family: &str,
    dim: usize,
    draws: usize,
    seed: u64,
) -> linbandit::Result<Histogram> {
    let family: PerturbFamily = serde_json::from_value(serde_json::Value::String(family.into()))
        .map_err(|e| linbandit::Error::InvalidArgument(e.to_string()))?;
    if dim == 0 || draws == 0 {
        return Err(linbandit::Error::InvalidArgument(
            "dimension and draw count must be positive".into(),
        ));
    }
    let spec = PerturbationSpec::new(family, 1.0)?;
    let mut rng = KeyedRng::new(seed, &[dim as u64]);
    let u = Vector::from_fn(dim, |_, _| {
        Distribution::<f64>::sample(&StandardNormal, &mut rng)
    })
    .normalize();

    let (lo, hi, bins) = (-4.0, 4.0, 80);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    let threshold = spec.anti_conc_threshold();
    let mut hits = 0usize;
    for _ in 0..draws {
        let s: f64 = u.iter().map(|ui| ui * spec.sample(&mut rng)).sum();
        hits += (s >= threshold) as usize;
        let b = ((s - lo) / width).floor();
        if (0.0..bins as f64).contains(&b) {
            counts[b as usize] += 1;
        }
    }
    Ok(Histogram {
        family,
        dim,
        draws,
        edges: (0..=bins).map(|i| lo + i as f64 * width).collect(),
        counts,
        threshold,
        hit_rate: hits as f64 / draws as f64,
        floor: spec.anti_conc_floor(),
    })
}

#[derive(Debug, Serialize)]
pub struct Radii {
    pub t: Vec<u64>,
    pub beta: Vec<f64>,
    pub beta_horizon: f64,
    pub gamma_tilde: f64,
    pub gamma: f64,
    pub ensemble_size: usize,
    pub regret_bound: f64,
}

pub fn compute_confidence(
    sigma: f64,
    lambda: f64,
    s_bound: f64,
    dim: usize,
    horizon: u64,
    delta: f64,
    arms: usize,
) -> linbandit::Result<Radii> {
    let params = ConfidenceParams::new(sigma, lambda, s_bound, dim, horizon, delta)?;
    let t: Vec<u64> = std::iter::once(0).chain(grid(horizon)).collect();
    Ok(Radii {
        beta: t.iter().map(|&s| params.beta(s)).collect(),
        t,
        beta_horizon: params.beta_horizon(),
        gamma_tilde: params.gamma_tilde(),
        gamma: params.gamma(),
        ensemble_size: params.ensemble_size(arms)?,
        regret_bound: theoretical_regret_bound(params.gamma(), p_n() / 4.0, &params)?,
    })
}

fn to_js<T: Serialize>(r: linbandit::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Mean and 10/90% regret bands for each policy on one shared environment.
#[wasm_bindgen]
pub fn regret_curves(
    dim: usize,
    arms: usize,
    horizon: u32,
    reps: usize,
    seed: u32,
    ensemble_size: usize,
) -> Result<String, JsError> {
    to_js(compute_regret_curves(
        dim,
        arms,
        horizon as u64,
        reps,
        seed as u64,
        ensemble_size,
    ))
}

/// Histogram of `uᵀZ` for a random unit `u` and unit-scale perturbations.
#[wasm_bindgen]
pub fn anti_concentration(
    family: &str,
    dim: usize,
    draws: usize,
    seed: u32,
) -> Result<String, JsError> {
    to_js(compute_anti_concentration(family, dim, draws, seed as u64))
}

/// Confidence radius over time plus the derived sizes for the horizon.
#[wasm_bindgen]
pub fn confidence(
    sigma: f64,
    lambda: f64,
    s_bound: f64,
    dim: usize,
    horizon: u32,
    delta: f64,
    arms: usize,
) -> Result<String, JsError> {
    to_js(compute_confidence(
        sigma,
        lambda,
        s_bound,
        dim,
        horizon as u64,
        delta,
        arms,
    ))
}
