//! Monte Carlo checks of samplers, contamination engines and algorithms.
//! Tolerances are binomial or DKW bands at small failure probabilities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robandit_core::bandit::{run_succ_elim_cbai, run_succ_elim_pibai, AlgoConfig, ArmMedianOracle, BanditInstance};
use robandit_core::contamination::{ks_distance, verify_marginals, ContaminatedArm, ContaminationStrategy};
use robandit_core::distributions::{Distribution, FamilyParams};
use robandit_core::estimators::{estimate_median_ci, sample_size_median, EstimationParams};
use robandit_core::lower_bounds::{build_lifting_malicious, build_lifting_oblivious};
use robandit_core::replication::run_replications;
use robandit_core::AdversaryModel;

fn dkw_band(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut worst) = (0, 0, 0.0_f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    worst
}

fn family() -> FamilyParams {
    FamilyParams {
        t_bar: 0.4,
        b: 4.0,
        m2_bar: 0.25,
        kappa: 2.0,
    }
}

#[test]
fn samplers_match_their_cdfs() {
    let n = 20_000;
    let band = 2.0 * dkw_band(n, 1e-3);
    let laws = [
        Distribution::uniform(-1.0, 3.0),
        Distribution::gaussian(2.0, 0.5),
        Distribution::cauchy(0.0, 2.0),
        Distribution::bernoulli(0.3),
        Distribution::smoothed_bernoulli(0.6),
        Distribution::mixture(
            vec![0.3, 0.7],
            vec![Distribution::dirac(-2.0), Distribution::gaussian(1.0, 1.0)],
        ),
        Distribution::affine(Distribution::cauchy(1.0, 1.0), -2.0, 0.5),
    ];
    for (i, law) in laws.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        let ks = ks_distance(&xs, law);
        assert!(ks <= band, "{law:?}: {ks} > {band}");
    }
}

#[test]
fn lifted_pulls_look_like_smoothed_bernoulli() {
    let n = 20_000;
    // critical value of the two-sample test at level 1e-3
    let crit = ((2.0_f64 / 1e-3).ln() / 2.0).sqrt() * (2.0 / n as f64).sqrt();
    for (l, lifted) in [
        build_lifting_oblivious(&[0.6, 0.45, 0.4], 0.05).unwrap(),
        build_lifting_malicious(&[0.6, 0.45, 0.4], 0.05).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        for (i, (arm, law)) in lifted.lifted_arms.iter().zip(&lifted.observable_law).enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(7 + 10 * l as u64 + i as u64);
            let pulled = arm.draw_batch(n, &mut rng);
            let direct: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            let ks = two_sample_ks(&pulled, &direct);
            assert!(ks <= crit, "lifting {l} arm {i}: {ks} > {crit}");
        }
    }
}

#[test]
fn malicious_lifting_marginal() {
    let lifted = build_lifting_malicious(&[0.6, 0.4], 0.05).unwrap();
    for (i, arm) in lifted.lifted_arms.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(40 + i as u64);
        let report = verify_marginals(arm, 100_000, &mut rng, 1e-3).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!((report.d_frequency - 0.05).abs() <= 0.004, "{report:?}");
    }
}

#[test]
fn prescient_order_aware_coverage() {
    let eps = 0.1;
    let delta = 0.1;
    let params = EstimationParams {
        eps0: eps,
        family: family(),
        model: AdversaryModel::Prescient,
    };
    let n = sample_size_median(0.05, delta, &params).unwrap() as usize;
    let reps = 400;
    for q in [0.0, 1.0] {
        let arm = ContaminatedArm::new(
            Distribution::uniform(0.0, 1.0),
            ContaminationStrategy::OrderAware { target_quantile: q },
            eps,
            AdversaryModel::Prescient,
        )
        .unwrap();
        let misses = run_replications(reps, 77, 4, |_, rng| {
            let xs = arm.draw_batch(n, rng);
            let report = estimate_median_ci(&xs, delta, &params, 0.25).unwrap();
            !report.covers(0.5)
        })
        .unwrap()
        .into_iter()
        .filter(|m| *m)
        .count();
        let limit = delta + 3.0 * (delta * (1.0 - delta) / reps as f64).sqrt();
        assert!((misses as f64 / reps as f64) <= limit, "q = {q}: {misses} misses");
    }
}

fn sber_arms(p: &[f64]) -> Vec<ContaminatedArm> {
    p.iter()
        .map(|&v| ContaminatedArm::clean(Distribution::smoothed_bernoulli(v), AdversaryModel::Oblivious).unwrap())
        .collect()
}

#[test]
fn generic_elimination_scales_with_the_gap() {
    let delta = 0.1;
    let reps = 200;
    let mut mean_rounds = Vec::new();
    for gap in [0.3, 0.15] {
        let arms = sber_arms(&[0.5 + gap / 2.0, 0.5 - gap / 2.0]);
        let runs = run_replications(reps, 5, 4, |_, rng| {
            let mut oracle = ArmMedianOracle::new(&arms);
            run_succ_elim_pibai(&mut oracle, delta, 2.0, 1_000_000, rng).unwrap()
        })
        .unwrap();
        let wins = runs.iter().filter(|r| r.chosen_arm == 0).count();
        assert!(wins as f64 / reps as f64 >= 1.0 - delta, "gap {gap}: {wins} wins");
        assert!(runs.iter().all(|r| !r.hit_round_cap()));
        mean_rounds.push(runs.iter().map(|r| r.rounds as f64).sum::<f64>() / reps as f64);
    }
    let ratio = mean_rounds[1] / mean_rounds[0];
    assert!((3.0..=6.0).contains(&ratio), "round ratio {ratio}");
}

#[test]
fn clean_separated_arms_are_always_found() {
    let arms: Vec<ContaminatedArm> = [0.0, 5.0, 10.0]
        .iter()
        .map(|&c| {
            ContaminatedArm::clean(Distribution::uniform(c - 0.01, c + 0.01), AdversaryModel::Oblivious).unwrap()
        })
        .collect();
    let instance = BanditInstance::new(arms).unwrap();
    let family = FamilyParams {
        t_bar: 0.4,
        b: 4.0,
        m2_bar: 0.005,
        kappa: 2.0,
    };
    let config = AlgoConfig::new(0.1, 0.1, family, 0.0);
    let runs = run_replications(100, 11, 4, |_, rng| run_succ_elim_cbai(&instance, &config, rng).unwrap()).unwrap();
    assert!(runs.iter().all(|r| r.chosen_arm == 2));
    for run in &runs {
        // surviving sets only shrink and the winner is never eliminated
        let mut seen = std::collections::HashSet::new();
        for (_, gone) in &run.elimination_trace {
            for arm in gone {
                assert!(seen.insert(*arm));
                assert_ne!(*arm, run.chosen_arm);
            }
        }
        assert_eq!(run.total_pulls, run.pulls_per_arm.iter().sum::<u64>());
    }
}

#[test]
fn eliminated_arms_stop_being_pulled() {
    let arms = sber_arms(&[0.65, 0.5, 0.35]);
    let mut oracle = ArmMedianOracle::new(&arms);
    let result = run_succ_elim_pibai(&mut oracle, 0.1, 2.0, 1_000_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let mut out_at = vec![result.rounds; 3];
    for (round, gone) in &result.elimination_trace {
        for arm in gone {
            out_at[*arm] = *round;
        }
    }
    assert_eq!(result.pulls_per_arm, out_at);
}
