//! Invariant and property suites run by `robandit verify`.
//!
//! Exact suites check identities on fixed grids or randomized inputs and
//! tolerate no violations. Monte Carlo suites compare a frequency against its
//! target with a three-standard-deviation binomial allowance.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robandit_core::bandit::{
    delta_r, effective_gaps, run_simple, run_succ_elim_cbai, AlgoConfig, BanditInstance,
};
use robandit_core::contamination::{median_coupling_arm, verify_marginals, DEFAULT_SHIFT_MAGNITUDE};
use robandit_core::distributions::check_family_fmad;
use robandit_core::estimators::{
    empirical_mad, empirical_median, estimate_mad_ci, estimate_median_ci, sample_size_mad, sample_size_median,
    EstimationParams,
};
use robandit_core::lower_bounds::{build_lifting_malicious, build_lifting_oblivious, kl_sber, lifted_effective_gaps};
use robandit_core::quality::{quantile_guarantee, u_bar, BiasSource, GuaranteeInputs};
use robandit_core::replication::{replication_seed, run_replications};
use robandit_core::{
    distributions::check_family_ftb, AdversaryModel, ContaminatedArm, ContaminationStrategy, Distribution,
    FamilyParams, Result,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    QuantileGalois,
    MomentOracle,
    Sandwich,
    Lipschitz,
    M4Bound,
    FamilyClosure,
    LiftingIdentity,
    Kl,
    CoverageMedian,
    CoverageMad,
    MaliciousTightness,
    PacSimple,
    PacSuccelim,
    Quality,
    DeltaBudget,
}

impl Suite {
    pub const ALL: [Suite; 15] = [
        Suite::QuantileGalois,
        Suite::MomentOracle,
        Suite::Sandwich,
        Suite::Lipschitz,
        Suite::M4Bound,
        Suite::FamilyClosure,
        Suite::LiftingIdentity,
        Suite::Kl,
        Suite::CoverageMedian,
        Suite::CoverageMad,
        Suite::MaliciousTightness,
        Suite::PacSimple,
        Suite::PacSuccelim,
        Suite::Quality,
        Suite::DeltaBudget,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::QuantileGalois => "quantile-galois",
            Suite::MomentOracle => "moment-oracle",
            Suite::Sandwich => "sandwich",
            Suite::Lipschitz => "lipschitz",
            Suite::M4Bound => "m4-bound",
            Suite::FamilyClosure => "family-closure",
            Suite::LiftingIdentity => "lifting-identity",
            Suite::Kl => "kl",
            Suite::CoverageMedian => "coverage-median",
            Suite::CoverageMad => "coverage-mad",
            Suite::MaliciousTightness => "malicious-tightness",
            Suite::PacSimple => "pac-simple",
            Suite::PacSuccelim => "pac-succelim",
            Suite::Quality => "quality",
            Suite::DeltaBudget => "delta-budget",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Replications used by Monte Carlo suites; `None` for exact suites.
    pub fn default_replications(&self) -> Option<usize> {
        match self {
            Suite::CoverageMedian | Suite::MaliciousTightness => Some(1000),
            Suite::CoverageMad | Suite::Quality => Some(500),
            Suite::PacSimple | Suite::PacSuccelim => Some(200),
            _ => None,
        }
    }

    fn index(&self) -> usize {
        Suite::ALL.iter().position(|s| s == self).expect("listed")
    }
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    /// Measured quantity compared against `threshold`.
    pub statistic: f64,
    /// `"<="` or `">="`: how `statistic` must relate to `threshold`.
    pub comparison: &'static str,
    pub threshold: f64,
    /// Cases, batches or replications examined.
    pub trials: usize,
    pub detail: String,
}

impl SuiteReport {
    fn at_most(suite: Suite, statistic: f64, threshold: f64, trials: usize, detail: String) -> Self {
        Self {
            suite,
            passed: statistic <= threshold,
            statistic,
            comparison: "<=",
            threshold,
            trials,
            detail,
        }
    }

    fn at_least(suite: Suite, statistic: f64, threshold: f64, trials: usize, detail: String) -> Self {
        Self {
            suite,
            passed: statistic >= threshold,
            statistic,
            comparison: ">=",
            threshold,
            trials,
            detail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub parallelism: usize,
    /// Overrides the replication count of every Monte Carlo suite.
    pub replications: Option<usize>,
}

/// Three binomial standard deviations at success probability `p`.
pub fn binomial_allowance(p: f64, trials: usize) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

pub fn run_suite(suite: Suite, options: &VerifyOptions) -> Result<SuiteReport> {
    let seed = replication_seed(options.seed, suite.index());
    let reps = options
        .replications
        .or(suite.default_replications())
        .unwrap_or(1);
    let par = options.parallelism;
    match suite {
        Suite::QuantileGalois => quantile_galois(),
        Suite::MomentOracle => moment_oracle(seed),
        Suite::Sandwich => sandwich(seed),
        Suite::Lipschitz => lipschitz(seed),
        Suite::M4Bound => m4_bound(),
        Suite::FamilyClosure => family_closure(seed),
        Suite::LiftingIdentity => lifting_identity(seed),
        Suite::Kl => kl(),
        Suite::CoverageMedian => coverage(Suite::CoverageMedian, reps, seed, par),
        Suite::CoverageMad => coverage(Suite::CoverageMad, reps, seed, par),
        Suite::MaliciousTightness => malicious_tightness(reps, seed, par),
        Suite::PacSimple => pac_simple(reps, seed, par),
        Suite::PacSuccelim => pac_succelim(reps, seed, par),
        Suite::Quality => quality(reps, seed, par),
        Suite::DeltaBudget => delta_budget(),
    }
}

/// Built-in distributions exercised by the exact suites.
pub fn catalog() -> Vec<Distribution> {
    vec![
        Distribution::uniform(0.0, 1.0),
        Distribution::uniform(-2.0, 5.0),
        Distribution::gaussian(0.0, 1.0),
        Distribution::gaussian(3.0, 0.5),
        Distribution::cauchy(0.0, 1.0),
        Distribution::cauchy(-1.0, 3.0),
        Distribution::bernoulli(0.3),
        Distribution::bernoulli(0.5),
        Distribution::smoothed_bernoulli(0.4),
        Distribution::smoothed_bernoulli(0.6),
        Distribution::dirac(1.5),
        Distribution::mixture(
            vec![0.3, 0.7],
            vec![Distribution::dirac(-2.0), Distribution::gaussian(1.0, 1.0)],
        ),
        Distribution::mixture(
            vec![0.5, 0.5],
            vec![Distribution::uniform(0.0, 1.0), Distribution::uniform(2.0, 3.0)],
        ),
        Distribution::affine(Distribution::cauchy(1.0, 1.0), -2.0, 0.5),
    ]
}

fn quantile_galois() -> Result<SuiteReport> {
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for dist in catalog() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let ql = dist.quantile_left(p)?;
            let qr = dist.quantile_right(p)?;
            cases += 1;
            if ql > qr {
                worst = f64::INFINITY;
            }
            // F(Q(p)) >= p and P(X < Q(p)) <= p at both quantiles
            worst = worst
                .max(p - dist.cdf(ql))
                .max(dist.cdf_left(ql) - p)
                .max(p - dist.cdf(qr))
                .max(dist.cdf_left(qr) - p);
        }
    }
    Ok(SuiteReport::at_most(
        Suite::QuantileGalois,
        worst,
        1e-12,
        cases,
        "largest violation of F(Q(p)) >= p >= P(X < Q(p))".into(),
    ))
}

fn sorted_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn random_array(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(1..=50);
    if rng.random_bool(0.5) {
        (0..len).map(|_| rng.random_range(0..5) as f64).collect()
    } else {
        (0..len).map(|_| rng.random_range(-10.0..10.0)).collect()
    }
}

fn moment_oracle(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = 10_000;
    let mut mismatches = 0;
    for _ in 0..trials {
        let xs = random_array(&mut rng);
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let med = sorted_median(&sorted);
        let mut dev: Vec<f64> = xs.iter().map(|x| (x - med).abs()).collect();
        dev.sort_by(f64::total_cmp);
        if empirical_median(&xs)? != med || empirical_mad(&xs)? != sorted_median(&dev) {
            mismatches += 1;
        }
    }
    Ok(SuiteReport::at_most(
        Suite::MomentOracle,
        mismatches as f64,
        0.0,
        trials,
        "arrays where median or MAD differ from the sort oracle".into(),
    ))
}

/// Contaminated arms covering every strategy and the models that allow it.
fn strategy_zoo(eps: f64) -> Result<Vec<ContaminatedArm>> {
    use AdversaryModel::*;
    let base = Distribution::uniform(0.0, 1.0);
    let entries = [
        (ContaminationStrategy::Fixed { dist: Distribution::gaussian(5.0, 1.0) }, Oblivious),
        (ContaminationStrategy::ShiftMedianUp { magnitude: DEFAULT_SHIFT_MAGNITUDE }, Oblivious),
        (ContaminationStrategy::ShiftMedianDown { magnitude: DEFAULT_SHIFT_MAGNITUDE }, Oblivious),
        (ContaminationStrategy::UniformTailShift { direction: 1 }, Oblivious),
        (ContaminationStrategy::UniformTailShift { direction: -1 }, Oblivious),
        (ContaminationStrategy::OrderAware { target_quantile: 0.0 }, Prescient),
        (ContaminationStrategy::OrderAware { target_quantile: 1.0 }, Prescient),
        (ContaminationStrategy::MedianCoupling, Malicious),
    ];
    entries
        .into_iter()
        .map(|(strategy, model)| ContaminatedArm::new(base.clone(), strategy, eps, model))
        .collect()
}

fn sandwich(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut violations) = (0, 0);
    for arm in strategy_zoo(0.2)? {
        for n in [1, 2, 3, 10, 101, 1000] {
            for _ in 0..50 {
                let batch = arm.draw_batch_traced(n, &mut rng);
                if let Some((lo, hi)) = batch.sandwich() {
                    checked += 1;
                    let m = empirical_median(&batch.x)?;
                    if !(lo <= m && m <= hi) {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok(SuiteReport::at_most(
        Suite::Sandwich,
        violations as f64,
        0.0,
        checked,
        "batches whose median escapes the clean order-statistic bracket".into(),
    ))
}

fn lipschitz(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = 10_000;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let xs = random_array(&mut rng);
        let h = rng.random_range(0.0..2.0);
        let ys: Vec<f64> = xs.iter().map(|x| x + rng.random_range(-h..=h)).collect();
        let sup = xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let dm = (empirical_median(&xs)? - empirical_median(&ys)?).abs();
        let dmad = (empirical_mad(&xs)? - empirical_mad(&ys)?).abs();
        worst = worst.max(dm - sup).max(dmad - 2.0 * sup);
    }
    Ok(SuiteReport::at_most(
        Suite::Lipschitz,
        worst,
        1e-12,
        trials,
        "largest excess of |med(x) - med(y)| over sup|x - y| (and of the MAD change over twice that)".into(),
    ))
}

fn m4_bound() -> Result<SuiteReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for dist in catalog() {
        let m = dist.robust_moments();
        if m.all_unique() {
            checked += 1;
            worst = worst.max(m.m4 - 2.0 * m.m2);
        }
    }
    Ok(SuiteReport::at_most(
        Suite::M4Bound,
        worst,
        1e-12,
        checked,
        "largest m4 - 2 m2 over built-in distributions with unique moments".into(),
    ))
}

fn family_closure(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_bar = 0.4;
    // (base, a slope constant inside the family, one outside)
    let bases = [
        (Distribution::uniform(0.0, 1.0), 4.5, 3.5),
        (Distribution::gaussian(0.0, 1.0), 9.5, 7.5),
        (Distribution::cauchy(0.0, 1.0), 36.0, 30.0),
    ];
    let (mut cases, mut failures) = (0, Vec::new());
    for (base, b_in, b_out) in bases {
        let m = base.robust_moments();
        let mad_family = |b: f64, scale: f64| FamilyParams {
            t_bar,
            b,
            m2_bar: 1.5 * m.m2 * scale,
            kappa: 2.5,
        };
        let expected = [
            check_family_ftb(&base, t_bar, b_in)?,
            check_family_ftb(&base, t_bar, b_out)?,
            check_family_fmad(&base, &mad_family(b_in, 1.0))?,
        ];
        if expected != [true, false, true] {
            failures.push(format!("{} base membership {expected:?}", base.kind()));
        }
        for _ in 0..30 {
            cases += 1;
            let a = rng.random_range(0.1..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let shift = rng.random_range(-10.0..10.0);
            let mapped = Distribution::affine(base.clone(), a, shift);
            let got = [
                check_family_ftb(&mapped, t_bar, b_in)?,
                check_family_ftb(&mapped, t_bar, b_out)?,
                check_family_fmad(&mapped, &mad_family(b_in, a.abs()))?,
            ];
            if got != expected {
                failures.push(format!("{} under ({a}, {shift}): {got:?}", base.kind()));
            }
            let mm = mapped.robust_moments();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + y.abs());
            if !(close(mm.m1, a * m.m1 + shift) && close(mm.m2, a.abs() * m.m2) && close(mm.m4, a.abs() * m.m4)) {
                failures.push(format!("{} moments under ({a}, {shift})", base.kind()));
            }
        }
    }
    Ok(SuiteReport::at_most(
        Suite::FamilyClosure,
        failures.len() as f64,
        0.0,
        cases,
        if failures.is_empty() {
            "family membership and robust moments follow affine maps".into()
        } else {
            failures.join("; ")
        },
    ))
}

fn lifting_identity(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instances: [&[f64]; 3] = [&[0.6, 0.4], &[0.6, 0.45, 0.4], &[0.55, 0.5, 0.45, 0.4]];
    let mut worst = 0.0_f64;
    let mut cases = 0;
    let mut marginal_failures = 0;
    for p in instances {
        for eps in [0.02, 0.05] {
            for lifted in [build_lifting_oblivious(p, eps)?, build_lifting_malicious(p, eps)?] {
                cases += 1;
                worst = worst.max(lifted.max_mixture_error());
                let best = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let classical = p.iter().filter(|&&q| q != best).map(|q| best - q);
                for (got, want) in lifted_effective_gaps(&lifted)?.into_iter().zip(classical) {
                    worst = worst.max((got - want).abs());
                }
            }
        }
    }
    let lifted = build_lifting_malicious(&[0.6, 0.4], 0.05)?;
    for arm in &lifted.lifted_arms {
        if !verify_marginals(arm, 100_000, &mut rng, 1e-3)?.passed() {
            marginal_failures += 1;
        }
    }
    let mut report = SuiteReport::at_most(
        Suite::LiftingIdentity,
        worst,
        1e-12,
        cases,
        format!("largest cdf or gap error; {marginal_failures} malicious D-marginal checks outside the band"),
    );
    report.passed &= marginal_failures == 0;
    Ok(report)
}

fn kl() -> Result<SuiteReport> {
    let mut worst = (kl_sber(0.5, 0.25)? - 0.071_920_5).abs();
    let mut cases = 1;
    for i in 0..100 {
        for j in 0..100 {
            let p = (i as f64 + 0.5) / 100.0;
            let q = (j as f64 + 0.5) / 100.0;
            let v = kl_sber(p, q)?;
            cases += 1;
            if i == j {
                worst = worst.max(v.abs());
            } else if v < 0.0 {
                worst = worst.max(-v);
            }
        }
    }
    Ok(SuiteReport::at_most(
        Suite::Kl,
        worst,
        1e-6,
        cases,
        "error at (0.5, 0.25), self-divergence and negativity on a 100x100 grid".into(),
    ))
}

fn unit_family() -> FamilyParams {
    FamilyParams {
        t_bar: 0.4,
        b: 4.0,
        m2_bar: 0.25,
        kappa: 2.0,
    }
}

fn oblivious_strategies() -> Vec<ContaminationStrategy> {
    vec![
        ContaminationStrategy::Fixed { dist: Distribution::gaussian(3.0, 0.1) },
        ContaminationStrategy::ShiftMedianUp { magnitude: DEFAULT_SHIFT_MAGNITUDE },
        ContaminationStrategy::ShiftMedianDown { magnitude: DEFAULT_SHIFT_MAGNITUDE },
        ContaminationStrategy::UniformTailShift { direction: 1 },
        ContaminationStrategy::UniformTailShift { direction: -1 },
    ]
}

fn coverage(suite: Suite, reps: usize, seed: u64, par: usize) -> Result<SuiteReport> {
    let (eps, delta, e) = (0.1, 0.1, 0.05);
    let params = EstimationParams {
        eps0: eps,
        family: unit_family(),
        model: AdversaryModel::Oblivious,
    };
    let mad = suite == Suite::CoverageMad;
    let n = if mad {
        sample_size_mad(e, delta, &params)?
    } else {
        sample_size_median(e, delta, &params)?
    } as usize;
    let truth = if mad { 0.25 } else { 0.5 };
    let mut worst = 0.0_f64;
    let mut rates = Vec::new();
    for (s, strategy) in oblivious_strategies().into_iter().enumerate() {
        let name = match &strategy {
            ContaminationStrategy::UniformTailShift { direction } => format!("uniform_tail_shift({direction:+})"),
            other => other.name().to_string(),
        };
        let arm = ContaminatedArm::new(Distribution::uniform(0.0, 1.0), strategy, eps, AdversaryModel::Oblivious)?;
        let misses = run_replications(reps, replication_seed(seed, s), par, |_, rng| {
            let xs = arm.draw_batch(n, rng);
            let report = if mad {
                estimate_mad_ci(&xs, delta, &params, params.family.m2_bar)?
            } else {
                estimate_median_ci(&xs, delta, &params, params.family.m2_bar)?
            };
            Ok(!report.covers(truth))
        })?
        .into_iter()
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|m| *m)
        .count();
        let rate = misses as f64 / reps as f64;
        worst = worst.max(rate);
        rates.push(format!("{name}={rate}"));
    }
    Ok(SuiteReport::at_most(
        suite,
        worst,
        delta + binomial_allowance(delta, reps),
        reps,
        format!("n = {n}; failure rates {}", rates.join(" ")),
    ))
}

fn malicious_tightness(reps: usize, seed: u64, par: usize) -> Result<SuiteReport> {
    let (eps, delta) = (0.1_f64, 0.1_f64);
    let dist = Distribution::uniform(-1.0, 1.0);
    let arm = median_coupling_arm(dist.clone(), eps)?;
    let n = (0.5 * (1.0 / delta).ln() / (eps * eps)).ceil() as usize;
    let a = ((1.0 / delta).ln() / (2.0 * n as f64)).sqrt();
    let radius = dist.quantile_right(0.5 + eps - a)? - dist.quantile_right(0.5)?;
    let hits = run_replications(reps, seed, par, |_, rng| {
        empirical_median(&arm.draw_batch(n, rng)).map(|m| m.abs() >= radius)
    })?
    .into_iter()
    .collect::<Result<Vec<bool>>>()?
    .into_iter()
    .filter(|h| *h)
    .count();
    let target = 1.0 - delta;
    Ok(SuiteReport::at_least(
        Suite::MaliciousTightness,
        hits as f64 / reps as f64,
        target - binomial_allowance(target, reps),
        reps,
        format!("n = {n}; frequency of |median| >= {radius}"),
    ))
}

/// Three unit-width uniform arms, the best pushed down and the rest up.
fn three_arm_instance(eps: f64) -> Result<BanditInstance> {
    let arms = [(0.0, 1), (0.3, 1), (0.6, -1)]
        .into_iter()
        .map(|(lo, direction)| {
            ContaminatedArm::new(
                Distribution::uniform(lo, lo + 1.0),
                ContaminationStrategy::UniformTailShift { direction },
                eps,
                AdversaryModel::Oblivious,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    BanditInstance::new(arms)
}

fn pac_simple(reps: usize, seed: u64, par: usize) -> Result<SuiteReport> {
    let eps = 0.05;
    let instance = three_arm_instance(eps)?;
    let config = AlgoConfig::new(0.1, 0.1, unit_family(), eps);
    let gaps = effective_gaps(&instance, &config.family)?;
    let k = instance.k();
    let expected_pulls = k as u64
        * sample_size_median(config.alpha / 2.0, config.delta / k as f64, &config.estimation_params(instance.model()))?;
    let runs = run_replications(reps, seed, par, |_, rng| run_simple(&instance, &config, rng))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let wins = runs
        .iter()
        .filter(|r| gaps.gaps[r.chosen_arm].unwrap_or(0.0) <= config.alpha)
        .count();
    let off_budget = runs.iter().filter(|r| r.total_pulls != expected_pulls).count();
    let target = 1.0 - config.delta;
    let mut report = SuiteReport::at_least(
        Suite::PacSimple,
        wins as f64 / reps as f64,
        target - binomial_allowance(target, reps),
        reps,
        format!("alpha-suboptimal frequency; {off_budget} runs off the budget of {expected_pulls} pulls"),
    );
    report.passed &= off_budget == 0;
    Ok(report)
}

/// Two uniform arms whose contaminated medians differ by `gap`.
fn two_arm_instance(gap: f64, eps: f64) -> Result<BanditInstance> {
    let u = eps / (2.0 * (1.0 - eps));
    let s = gap + 2.0 * u;
    BanditInstance::new(vec![
        ContaminatedArm::new(
            Distribution::uniform(s, 1.0 + s),
            ContaminationStrategy::UniformTailShift { direction: -1 },
            eps,
            AdversaryModel::Oblivious,
        )?,
        ContaminatedArm::new(
            Distribution::uniform(0.0, 1.0),
            ContaminationStrategy::UniformTailShift { direction: 1 },
            eps,
            AdversaryModel::Oblivious,
        )?,
    ])
}

fn pac_succelim(reps: usize, seed: u64, par: usize) -> Result<SuiteReport> {
    let eps = 0.05;
    let config = AlgoConfig::new(0.0, 0.1, unit_family(), eps);
    let target = 1.0 - config.delta;
    let mut worst_rate = 1.0_f64;
    let mut mean_pulls = Vec::new();
    let mut capped = 0;
    for (i, gap) in [0.4, 0.2].into_iter().enumerate() {
        let instance = two_arm_instance(gap, eps)?;
        let runs = run_replications(reps, replication_seed(seed, i), par, |_, rng| {
            run_succ_elim_cbai(&instance, &config, rng)
        })?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        capped += runs.iter().filter(|r| r.hit_round_cap()).count();
        let wins = runs.iter().filter(|r| r.chosen_arm == 0).count();
        worst_rate = worst_rate.min(wins as f64 / reps as f64);
        mean_pulls.push(runs.iter().map(|r| r.total_pulls as f64).sum::<f64>() / reps as f64);
    }
    let ratio = mean_pulls[1] / mean_pulls[0];
    let mut report = SuiteReport::at_least(
        Suite::PacSuccelim,
        worst_rate,
        target - binomial_allowance(target, reps),
        reps,
        format!(
            "lower success rate of the two gaps; mean pulls {} and {}, ratio {ratio}; {capped} round-cap hits",
            mean_pulls[0], mean_pulls[1]
        ),
    );
    report.passed &= (3.0..=6.0).contains(&ratio) && capped == 0;
    Ok(report)
}

fn quality(reps: usize, seed: u64, par: usize) -> Result<SuiteReport> {
    let eps = 0.05;
    let t_values = [0.0, 0.05, 0.1];
    let instance = three_arm_instance(eps)?;
    let config = AlgoConfig::new(0.1, 0.1, unit_family(), eps);
    let params = config.estimation_params(instance.model());
    let k = instance.k();
    let outcomes = run_replications(reps, seed, par, |_, rng| {
        let run = run_simple(&instance, &config, rng)?;
        let arm = &instance.arms()[run.chosen_arm];
        let m2 = arm.dist().robust_moments().m2;
        t_values
            .iter()
            .map(|&t| {
                let g = quantile_guarantee(&GuaranteeInputs {
                    m1_hat: run.chosen_median.expect("uniform exploration reports the median"),
                    m2_hat: run.chosen_mad.expect("uniform exploration reports the MAD"),
                    t,
                    t_bar: config.family.t_bar,
                    alpha: config.alpha,
                    u_bar: u_bar(&params, BiasSource::FamilyBound, m2),
                    b: config.family.b,
                    kappa: config.family.kappa,
                    delta: config.delta,
                    k,
                })?;
                Ok((arm.dist().sample(rng) >= g.threshold, g.probability_floor))
            })
            .collect::<Result<Vec<(bool, f64)>>>()
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut worst_margin = f64::INFINITY;
    let mut parts = Vec::new();
    for (j, t) in t_values.iter().enumerate() {
        let rate = outcomes.iter().filter(|o| o[j].0).count() as f64 / reps as f64;
        let floor = outcomes[0][j].1;
        let margin = rate - (floor - binomial_allowance(floor, reps));
        worst_margin = worst_margin.min(margin);
        parts.push(format!("t={t}: rate {rate} floor {floor}"));
    }
    Ok(SuiteReport::at_least(
        Suite::Quality,
        worst_margin,
        0.0,
        reps,
        format!("smallest excess of the exceedance rate over floor - 3 sigma; {}", parts.join(", ")),
    ))
}

fn delta_budget() -> Result<SuiteReport> {
    let (delta, k, rounds) = (0.1, 3usize, 1_000_000u64);
    let total: f64 = (1..=rounds).rev().map(|r| k as f64 * delta_r(delta, k, r)).sum();
    // sum over r > R of 1/r^2 is below 1/R
    let tail = 6.0 * delta / (PI * PI * rounds as f64);
    Ok(SuiteReport::at_most(
        Suite::DeltaBudget,
        (total - delta).abs(),
        1e-6 * delta + tail,
        rounds as usize,
        format!("|sum k delta_r - delta| over {rounds} rounds"),
    ))
}
