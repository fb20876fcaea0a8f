//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use linbandit::diagnostics::{estimate_event_rates, theoretical_regret_bound};
use linbandit::env::{ArmGenerator, EnvironmentSpec, NoiseFamily, NoiseModel};
use linbandit::harness::{
    log_log_slope, run_equivalence_suite, run_monte_carlo, run_replication, run_to_dir, sweep,
    DrawSharing, Execution, ExperimentConfig, PolicyKind, SweepParam, SUMMARY_FILE, TRACE_FILE,
};
use linbandit::perturb::{
    ConfidenceParams, KeyedRng, Keying, PerturbFamily, PerturbationSpec, PerturbationStream,
    RewardKey,
};
use linbandit::policies::{EnsembleSampling, Policy, Sampler};
use linbandit::{Error, Matrix, Vector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

/// Monitored steps completed without an invariant violation.
static MONITORED_STEPS: AtomicU64 = AtomicU64::new(0);
static VIOLATION: AtomicBool = AtomicBool::new(false);

/// Records invariant violations raised by monitored runs.
fn watch<T>(r: linbandit::Result<T>) -> Result<T> {
    if let Err(Error::InvariantViolation(msg)) = &r {
        eprintln!("invariant violation: {msg}");
        VIOLATION.store(true, Ordering::Relaxed);
    }
    Ok(r?)
}

type Criterion = (&'static str, fn() -> Result<Outcome>, Duration);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).expect("acceptance config parses")
}

fn count_monitored(summary: &linbandit::harness::Summary) {
    if let Some(m) = &summary.monitors {
        MONITORED_STEPS.fetch_add(m.steps, Ordering::Relaxed);
    }
}

fn equivalence() -> Result<Outcome> {
    let mut details = Vec::new();
    let mut pass = true;
    for (d, k, t) in [(2, 4, 20), (4, 8, 50)] {
        let cfg = config(&format!(
            "[env]\ndim = {d}\narm_count = {k}\nsigma = 1.0\n\
             [policy]\nkind = \"ensemble\"\nensemble_size = {t}\nsampler = \"round_robin\"\n\
             [run]\nhorizon = {t}\nreplications = 50\nbase_seed = 2024\n"
        ));
        let report = run_equivalence_suite(&cfg, DrawSharing::Shared)?;
        pass &= report.passed();
        details.push(format!(
            "d={d},K={k},T={t}: {}/{}",
            report.matched, report.seeds
        ));
    }
    outcome(pass, details.join("; "))
}

fn batch_minimiser(lambda: f64, w: &Vector, hist: &[(Vector, f64)]) -> Vector {
    let d = w.len();
    let mut a = Matrix::identity(d, d) * lambda;
    let mut b = w.clone();
    for (x, target) in hist {
        a += x * x.transpose();
        b += x * *target;
    }
    a.full_piv_lu()
        .solve(&b)
        .expect("regularised system is invertible")
}

fn batch_oracle() -> Result<Outcome> {
    let (d, m, lambda) = (4, 8, 1.0);
    let env = EnvironmentSpec::generate(
        d,
        12,
        ArmGenerator::Ball,
        NoiseModel::new(NoiseFamily::Gaussian, 1.0)?,
        1.0,
        17,
    )?;
    let spec = PerturbationSpec::new(PerturbFamily::Gaussian, 1.5)?;
    let stream = PerturbationStream::new(31, Keying::ByStep);
    let mut es = EnsembleSampling::new(d, lambda, m, spec, stream, Sampler::Uniform)?;
    let mut hist = Vec::new();
    for t in 1..=200u64 {
        let mut rng = KeyedRng::new(5, &[t]);
        let dec = es.select(t, env.arms(), &mut rng)?;
        let y = env.sample_reward(dec.arm, &mut rng)?;
        es.update(t, dec.arm, env.arm(dec.arm)?, y)?;
        hist.push((env.arm(dec.arm)?.clone(), y, t));
    }
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let w = stream.initial(&spec, j, d, lambda);
        let targets: Vec<(Vector, f64)> = hist
            .iter()
            .map(|(x, y, t)| Ok((x.clone(), y + stream.reward(&spec, j, RewardKey::Step(*t))?)))
            .collect::<Result<_>>()?;
        let want = batch_minimiser(lambda, &w, &targets);
        worst = worst.max((es.model_theta(j) - want).norm());
    }
    outcome(worst <= 1e-8, format!("max l2 error {worst:.3e}"))
}

fn elliptical_potential() -> Result<Outcome> {
    let kinds = ["ensemble", "lints", "linucb", "greedy"];
    let failures: Vec<usize> = (0..1000usize)
        .into_par_iter()
        .map(|i| {
            let mut rng = KeyedRng::new(77, &[i as u64]);
            let d = rng.random_range(1..=8usize);
            let horizon = rng.random_range(1..=2000u64);
            let arms = rng.random_range(2..=20usize);
            let kind = kinds[i % kinds.len()];
            let cfg = config(&format!(
                "[env]\ndim = {d}\narm_count = {arms}\nsigma = 1.0\n\
                 [policy]\nkind = \"{kind}\"\nlambda = 1.0\nensemble_size = 8\n\
                 [run]\nhorizon = {horizon}\nbase_seed = {i}\n"
            ));
            let rec = run_replication(&cfg, 0)?;
            Ok((!rec.summary.elliptical_ok()).then_some(i))
        })
        .collect::<linbandit::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    outcome(
        failures.is_empty(),
        format!("{} of 1000 runs over the bound", failures.len()),
    )
}

fn ridge_concentration() -> Result<Outcome> {
    let cfg = config(
        "[env]\ndim = 3\narm_count = 10\nsigma = 1.0\nseed = 4\n\
         [policy]\nkind = \"ensemble\"\nensemble_size = 16\ndelta = 0.2\n\
         [run]\nhorizon = 200\nreplications = 5000\nbase_seed = 11\ndiagnostics = \"monitors\"\n",
    );
    let mc = watch(run_monte_carlo(&cfg, Execution::Parallel))?;
    count_monitored(&mc.summary);
    let rate = mc
        .summary
        .monitors
        .as_ref()
        .map_or(0.0, |m| m.all_t_concentration);
    outcome(
        rate >= 0.8 - 0.02,
        format!("all-t rate {rate:.4} (need >= 0.78)"),
    )
}

fn random_direction(rng: &mut KeyedRng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| Distribution::<f64>::sample(&StandardNormal, rng)).normalize()
}

fn anti_concentration() -> Result<Outcome> {
    const DRAWS: usize = 1_000_000;
    const DIMS: [usize; 10] = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32];
    let jobs: Vec<(PerturbFamily, usize)> = PerturbFamily::ALL
        .into_iter()
        .flat_map(|f| (0..DIMS.len()).map(move |i| (f, i)))
        .collect();
    let results: Vec<(PerturbFamily, f64, f64)> = jobs
        .into_par_iter()
        .map(|(family, i)| {
            let spec = PerturbationSpec::new(family, 1.0).expect("unit scale is valid");
            let mut rng = KeyedRng::new(family as u64 + 100, &[i as u64]);
            let u = random_direction(&mut rng, DIMS[i]);
            let c = spec.anti_conc_threshold();
            let hits = (0..DRAWS)
                .filter(|_| u.iter().map(|ui| ui * spec.sample(&mut rng)).sum::<f64>() >= c)
                .count();
            let floor = if family.is_gaussian() { 0.15 } else { 0.01 };
            (family, hits as f64 / DRAWS as f64, floor)
        })
        .collect();
    let mut pass = true;
    let mut lows = Vec::new();
    for family in PerturbFamily::ALL {
        let rows: Vec<_> = results.iter().filter(|r| r.0 == family).collect();
        let low = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        pass &= low >= rows[0].2 - 0.005;
        lows.push(format!("{family:?} min {low:.4}"));
    }
    outcome(pass, lows.join(", "))
}

fn invariant_assertion() -> Result<Outcome> {
    let steps = MONITORED_STEPS.load(Ordering::Relaxed);
    let violated = VIOLATION.load(Ordering::Relaxed);
    outcome(
        steps >= 1_000_000 && !violated,
        format!("{steps} monitored steps, violation raised: {violated}"),
    )
}

fn regret_scaling() -> Result<Outcome> {
    let horizons = [250u64, 1000, 4000];
    let mut pass = true;
    let mut details = Vec::new();
    for kind in ["ensemble", "phe"] {
        let cfg = config(&format!(
            "[env]\ndim = 3\narm_count = 10\nsigma = 1.0\n\
             [policy]\nkind = \"{kind}\"\nensemble_size = 32\ndelta = 0.05\n\
             [run]\nhorizon = 250\nreplications = 100\nbase_seed = 1\ndiagnostics = \"monitors\"\n"
        ));
        let points = watch(sweep(&cfg, SweepParam::T, &horizons, Execution::Parallel))?;
        let mut means = Vec::new();
        let mut bounded = true;
        for p in &points {
            count_monitored(&p.summary);
            let c = &p.summary.config;
            for cp in &p.summary.checkpoints {
                let params = ConfidenceParams::new(
                    c.env.sigma,
                    c.policy.lambda,
                    c.env.s_bound,
                    c.env.dim,
                    cp.t,
                    c.policy.delta,
                )?;
                let bound = theoretical_regret_bound(
                    params.gamma(),
                    p.summary.optimism_probability,
                    &params,
                )?;
                bounded &= cp.mean <= bound;
            }
            means.push((
                p.value as f64,
                p.summary.checkpoints.last().map_or(0.0, |c| c.mean),
            ));
        }
        let slope = log_log_slope(&means[1..]);
        pass &= bounded && slope <= 0.65;
        details.push(format!(
            "{kind}: R = {:.1}/{:.1}/{:.1}, upper slope {slope:.3}, under bound {bounded}",
            means[0].1, means[1].1, means[2].1
        ));
    }
    outcome(pass, details.join("; "))
}

fn perturbation_concentration() -> Result<Outcome> {
    let cfg = config(
        "[env]\ndim = 3\narm_count = 10\nsigma = 1.0\n\
         [policy]\nkind = \"ensemble\"\nensemble_size = 16\ndelta = 0.5\n\
         [run]\nhorizon = 100\nreplications = 100\nbase_seed = 5\n",
    );
    let report = estimate_event_rates(&cfg, 100, Execution::Parallel)?;
    let rate = report.perturb_concentration_rate.unwrap_or(0.0);
    let need = report.perturb_target - report.perturb_tolerance;
    outcome(
        report.perturb_samples >= 5000 && rate >= need,
        format!(
            "{} samples, rate {rate:.5} (need >= {need:.4})",
            report.perturb_samples
        ),
    )
}

fn scale_zero_collapse() -> Result<Outcome> {
    let mut mismatches = Vec::new();
    for seed in 0..20u64 {
        let base = |kind: &str, extra: &str| {
            config(&format!(
                "[env]\ndim = 3\narm_count = 8\nsigma = 0.0\n\
                 [policy]\nkind = \"{kind}\"\nensemble_size = 8\n{extra}\n\
                 [run]\nhorizon = 200\nbase_seed = {seed}\n"
            ))
        };
        let greedy: Vec<usize> = run_replication(&base("greedy", ""), 0)?
            .steps
            .iter()
            .map(|s| s.arm)
            .collect();
        for kind in ["ensemble", "phe", "lints", "linucb"] {
            let arms: Vec<usize> = run_replication(&base(kind, "scale = 0.0"), 0)?
                .steps
                .iter()
                .map(|s| s.arm)
                .collect();
            if arms != greedy {
                mismatches.push(format!("{kind}@{seed}"));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "80 sequences, {} mismatches {mismatches:?}",
            mismatches.len()
        ),
    )
}

fn determinism() -> Result<Outcome> {
    let mut identical = true;
    for kind in [PolicyKind::Ensemble, PolicyKind::Phe, PolicyKind::Lints] {
        let mut cfg = config(
            "[env]\ndim = 3\narm_count = 6\nsigma = 1.0\n\
             [policy]\nkind = \"ensemble\"\nensemble_size = 8\n\
             [run]\nhorizon = 300\nreplications = 8\nbase_seed = 12\ndiagnostics = \"monitors\"\n",
        );
        cfg.policy.kind = kind;
        let dirs: Vec<_> = (0..3)
            .map(|_| tempfile::tempdir())
            .collect::<std::io::Result<_>>()?;
        run_to_dir(&cfg, dirs[0].path(), Execution::Serial)?;
        run_to_dir(&cfg, dirs[1].path(), Execution::Parallel)?;
        run_to_dir(&cfg, dirs[2].path(), Execution::Parallel)?;
        for f in [TRACE_FILE, SUMMARY_FILE] {
            let a = std::fs::read(dirs[0].path().join(f))?;
            for d in &dirs[1..] {
                identical &= a == std::fs::read(d.path().join(f))?;
            }
        }
    }
    outcome(
        identical,
        "trace.csv and summary.json compared byte for byte",
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 equivalence", equivalence, Duration::from_secs(10)),
        ("2 batch-oracle", batch_oracle, Duration::from_secs(5)),
        (
            "3 elliptical-potential",
            elliptical_potential,
            Duration::from_secs(60),
        ),
        (
            "4 ridge-concentration",
            ridge_concentration,
            Duration::from_secs(300),
        ),
        (
            "5 anti-concentration",
            anti_concentration,
            Duration::from_secs(60),
        ),
        ("7 regret-scaling", regret_scaling, Duration::from_secs(900)),
        (
            "8 perturbation-concentration",
            perturbation_concentration,
            Duration::MAX,
        ),
        ("9 scale-zero-collapse", scale_zero_collapse, Duration::MAX),
        ("10 determinism", determinism, Duration::MAX),
        ("6 invariant-assertion", invariant_assertion, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let elapsed = start.elapsed();
        let in_budget = elapsed <= budget;
        let ok = pass && in_budget;
        failed += !ok as usize;
        let budget_note = if budget == Duration::MAX {
            String::new()
        } else {
            format!(", budget {}s", budget.as_secs())
        };
        println!(
            "{} criterion {name}: {detail} [{:.1}s{budget_note}]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
