use linbandit::env::{argmax, ArmGenerator, EnvironmentSpec, NoiseFamily, NoiseModel};
use linbandit::perturb::{KeyedRng, Keying, PerturbFamily, PerturbationSpec, PerturbationStream};
use linbandit::policies::{Choice, EnsembleSampling, LinPhe, Policy, Sampler, ThetaRefresh};
use linbandit::{Matrix, Vector};
use proptest::prelude::*;

struct Step {
    x: Vector,
    y: f64,
    key: linbandit::perturb::RewardKey,
}

fn env(dim: usize, arms: usize, seed: u64) -> EnvironmentSpec {
    EnvironmentSpec::generate(
        dim,
        arms,
        ArmGenerator::Ball,
        NoiseModel::new(NoiseFamily::Gaussian, 1.0).unwrap(),
        1.0,
        seed,
    )
    .unwrap()
}

/// Minimiser of `λ‖θ − W/λ‖² + Σ (X_iᵀθ − (Y_i + Z_i))²` from the normal
/// equations, solved from scratch with a full-pivot LU.
fn batch_minimiser(lambda: f64, w: &Vector, hist: &[(Vector, f64)]) -> Vector {
    let d = w.len();
    let mut a = Matrix::identity(d, d) * lambda;
    let mut b = w.clone();
    for (x, target) in hist {
        a += x * x.transpose();
        b += x * *target;
    }
    a.full_piv_lu().solve(&b).unwrap()
}

#[test]
fn ensemble_members_solve_their_regularised_problems() {
    let (d, m, lambda) = (4, 8, 1.5);
    let env = env(d, 10, 3);
    let spec = PerturbationSpec::new(PerturbFamily::Gaussian, 2.0).unwrap();
    for keying in [Keying::ByStep, Keying::ByArmCount] {
        let stream = PerturbationStream::new(44, keying);
        let mut es = EnsembleSampling::new(d, lambda, m, spec, stream, Sampler::Uniform)
            .unwrap()
            .with_refresh(ThetaRefresh::Eager);
        let mut counts = vec![0u64; env.arm_count()];
        let mut steps: Vec<Step> = Vec::new();
        for t in 1..=300u64 {
            let mut rng = KeyedRng::new(7, &[t]);
            let dec = es.select(t, env.arms(), &mut rng).unwrap();
            let y = env.sample_reward(dec.arm, &mut rng).unwrap();
            es.update(t, dec.arm, &env.arms()[dec.arm], y).unwrap();
            counts[dec.arm] += 1;
            steps.push(Step {
                x: env.arms()[dec.arm].clone(),
                y,
                key: stream.reward_key(t, dec.arm, counts[dec.arm]),
            });
            if t % 100 == 0 {
                for j in 0..m {
                    let w = stream.initial(&spec, j, d, lambda);
                    let hist: Vec<(Vector, f64)> = steps
                        .iter()
                        .map(|s| (s.x.clone(), s.y + stream.reward(&spec, j, s.key).unwrap()))
                        .collect();
                    let want = batch_minimiser(lambda, &w, &hist);
                    assert!(
                        (es.cached_theta(j) - &want).norm() < 1e-8,
                        "t = {t}, model {j}"
                    );
                }
            }
        }
    }
}

#[test]
fn ensemble_decomposes_into_ridge_plus_perturbation() {
    let (d, m, lambda) = (3, 5, 1.0);
    let env = env(d, 6, 8);
    let spec = PerturbationSpec::new(PerturbFamily::Rademacher, 1.3).unwrap();
    let stream = PerturbationStream::new(10, Keying::ByStep);
    let mut es = EnsembleSampling::new(d, lambda, m, spec, stream, Sampler::Uniform).unwrap();
    let mut xs = Vec::new();
    for t in 1..=150u64 {
        let mut rng = KeyedRng::new(1, &[t]);
        let dec = es.select(t, env.arms(), &mut rng).unwrap();
        let y = env.sample_reward(dec.arm, &mut rng).unwrap();
        es.update(t, dec.arm, &env.arms()[dec.arm], y).unwrap();
        xs.push(env.arms()[dec.arm].clone());
        let theta_hat = es.ridge().estimate();
        for j in 0..m {
            let mut acc = stream.initial(&spec, j, d, lambda);
            for (i, x) in xs.iter().enumerate() {
                let z = stream
                    .reward(&spec, j, linbandit::perturb::RewardKey::Step(i as u64 + 1))
                    .unwrap();
                acc += x * z;
            }
            let want = es.ridge().gram().solve(&acc).unwrap();
            let got = es.model_theta(j) - &theta_hat;
            assert!((got - want).amax() < 1e-9);
        }
    }
}

#[test]
fn phe_matches_direct_formula() {
    let (d, lambda) = (3, 2.0);
    let env = env(d, 7, 11);
    let spec = PerturbationSpec::new(PerturbFamily::Uniform, 1.1).unwrap();
    let stream = PerturbationStream::new(12, Keying::ByArmCount);
    let mut phe = LinPhe::new(d, lambda, spec, stream).unwrap();
    let mut hist: Vec<(Vector, f64, usize, u64)> = Vec::new();
    let mut counts = [0u64; 7];
    for t in 1..=80u64 {
        let mut rng = KeyedRng::new(2, &[t]);
        let dec = phe.select(t, env.arms(), &mut rng).unwrap();
        let Choice::Estimate(theta) = &dec.choice else {
            panic!()
        };
        let model = (t - 1) as usize;
        let w = stream.initial(&spec, model, d, lambda);
        let targets: Vec<(Vector, f64)> = hist
            .iter()
            .enumerate()
            .map(|(i, (x, y, arm, count))| {
                let key = stream.reward_key(i as u64 + 1, *arm, *count);
                (x.clone(), y + stream.reward(&spec, model, key).unwrap())
            })
            .collect();
        let want = batch_minimiser(lambda, &w, &targets);
        assert!((theta - &want).norm() < 1e-9);
        assert_eq!(dec.arm, argmax(env.arms(), &want).0);

        let y = env.sample_reward(dec.arm, &mut rng).unwrap();
        phe.update(t, dec.arm, &env.arms()[dec.arm], y).unwrap();
        counts[dec.arm] += 1;
        hist.push((env.arms()[dec.arm].clone(), y, dec.arm, counts[dec.arm]));
    }
}

#[test]
fn exact_parameter_picks_best_arm() {
    let env = env(3, 9, 5);
    let spec = PerturbationSpec::new(PerturbFamily::Gaussian, 0.0).unwrap();
    let mut es = EnsembleSampling::new(
        3,
        1.0,
        1,
        spec,
        PerturbationStream::new(0, Keying::ByStep),
        Sampler::Uniform,
    )
    .unwrap();
    // Feed noiseless observations on a basis until θ̂ is close to θ*.
    let basis = [
        Vector::from_vec(vec![1.0, 0.0, 0.0]),
        Vector::from_vec(vec![0.0, 1.0, 0.0]),
        Vector::from_vec(vec![0.0, 0.0, 1.0]),
    ];
    for t in 0..3000u64 {
        let x = &basis[(t % 3) as usize];
        es.update(t + 1, 0, x, x.dot(env.theta_star())).unwrap();
    }
    let mut rng = KeyedRng::new(0, &[]);
    let dec = es.select(3001, env.arms(), &mut rng).unwrap();
    assert_eq!(dec.arm, env.best_arm().0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_robin_ensemble_replays_phe(seed in any::<u64>(), d in 1usize..5, k in 1usize..8, horizon in 1u64..30) {
        let env = env(d, k, seed);
        let spec = PerturbationSpec::new(PerturbFamily::Gaussian, 1.7).unwrap();
        let stream = PerturbationStream::new(seed ^ 1, Keying::ByStep);
        let mut es = EnsembleSampling::new(d, 1.0, horizon as usize, spec, stream, Sampler::RoundRobin).unwrap();
        let mut phe = LinPhe::new(d, 1.0, spec, stream).unwrap();
        for t in 1..=horizon {
            let mut rng = KeyedRng::new(seed, &[t]);
            let a = es.select(t, env.arms(), &mut rng).unwrap();
            let b = phe.select(t, env.arms(), &mut rng).unwrap();
            prop_assert_eq!(a.arm, b.arm);
            prop_assert_eq!(&a.choice, &b.choice);
            let y = env.sample_reward(a.arm, &mut rng).unwrap();
            es.update(t, a.arm, &env.arms()[a.arm], y).unwrap();
            phe.update(t, b.arm, &env.arms()[b.arm], y).unwrap();
        }
    }

    #[test]
    fn cached_thetas_track_solves(seed in any::<u64>(), m in 1usize..6) {
        let env = env(2, 4, seed);
        let spec = PerturbationSpec::new(PerturbFamily::SphericalComponentwise, 1.0).unwrap();
        let stream = PerturbationStream::new(seed, Keying::ByArmCount);
        let mut es = EnsembleSampling::new(2, 1.0, m, spec, stream, Sampler::Uniform)
            .unwrap()
            .with_refresh(ThetaRefresh::Eager);
        for t in 1..=40u64 {
            let mut rng = KeyedRng::new(seed, &[t]);
            let dec = es.select(t, env.arms(), &mut rng).unwrap();
            let y = env.sample_reward(dec.arm, &mut rng).unwrap();
            es.update(t, dec.arm, &env.arms()[dec.arm], y).unwrap();
            for j in 0..m {
                let solved = es.ridge().gram().solve(es.s_vector(j)).unwrap();
                prop_assert!((es.cached_theta(j) - solved).amax() < 1e-9);
            }
        }
    }
}
