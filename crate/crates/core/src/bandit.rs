//! Best-arm identification under contamination.
//!
//! Three algorithms share one environment ([`BanditInstance`]):
//!
//! * [`run_simple`]: uniform exploration, one fixed batch per arm, then the
//!   arm with the largest empirical median.
//! * [`run_succ_elim_pibai`]: successive elimination over any estimator with
//!   a `sqrt(c log(1/delta) / r)` confidence radius.
//! * [`run_succ_elim_cbai`]: successive elimination on empirical medians,
//!   with a warm-up phase and growing per-round batches.
//!
//! Ties are broken towards the lowest arm index everywhere.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contamination::{AdversaryModel, ContaminatedArm};
use crate::distributions::{bias_u, FamilyParams};
use crate::error::{check_probability, Error, Result};
use crate::estimators::{empirical_mad, empirical_median, sample_size_median, EstimationParams, RunningMedian};

/// Default safety cap on the number of elimination rounds.
pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;

/// A set of contaminated arms sharing one contamination level and model.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    arms: Vec<ContaminatedArm>,
    eps: f64,
    model: AdversaryModel,
}

impl BanditInstance {
    pub fn new(arms: Vec<ContaminatedArm>) -> Result<Self> {
        let first = arms
            .first()
            .ok_or_else(|| Error::InvalidParameter("a bandit instance needs at least one arm".into()))?;
        let (eps, model) = (first.eps(), first.model());
        for (i, arm) in arms.iter().enumerate() {
            if arm.eps() != eps || arm.model() != model {
                return Err(Error::InvalidParameter(format!(
                    "arm {i} has (eps, model) = ({}, {}), expected ({eps}, {model})",
                    arm.eps(),
                    arm.model()
                )));
            }
        }
        Ok(Self { arms, eps, model })
    }

    pub fn arms(&self) -> &[ContaminatedArm] {
        &self.arms
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn model(&self) -> AdversaryModel {
        self.model
    }
}

/// Constant in front of the CBAI confidence radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaConstant {
    /// `alpha_r = sqrt(2 B^2 m2_bar^2 log(3/delta_r) / r)`, matching the
    /// median deviation bound.
    #[default]
    BSquared,
    /// `alpha_r = sqrt(2 B m2_bar^2 log(3/delta_r) / r)`.
    BLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub alpha: f64,
    pub delta: f64,
    pub family: FamilyParams,
    pub eps0: f64,
    pub max_rounds: u64,
    pub early_stop: bool,
    pub alpha_constant: AlphaConstant,
}

impl AlgoConfig {
    pub fn new(alpha: f64, delta: f64, family: FamilyParams, eps0: f64) -> Self {
        Self {
            alpha,
            delta,
            family,
            eps0,
            max_rounds: DEFAULT_MAX_ROUNDS,
            early_stop: false,
            alpha_constant: AlphaConstant::default(),
        }
    }

    pub fn estimation_params(&self, model: AdversaryModel) -> EstimationParams {
        EstimationParams {
            eps0: self.eps0,
            family: self.family,
            model,
        }
    }

    pub fn validate(&self, model: AdversaryModel) -> Result<()> {
        check_probability(self.delta)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must be nonnegative",
                self.alpha
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidParameter("max_rounds must be at least 1".into()));
        }
        self.estimation_params(model).validate_median()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    SingleSurvivor,
    EarlyStop,
    RoundCap,
    /// Fixed-budget runs that finish after their only round.
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditRunResult {
    pub chosen_arm: usize,
    pub pulls_per_arm: Vec<u64>,
    pub total_pulls: u64,
    pub rounds: u64,
    /// Rounds in which at least one arm was eliminated, with those arms.
    pub elimination_trace: Vec<(u64, Vec<usize>)>,
    pub terminated_by: Termination,
    /// Final estimate of the chosen arm's median, when it was pulled.
    pub chosen_median: Option<f64>,
    /// Empirical MAD of the chosen arm's samples, when retained.
    pub chosen_mad: Option<f64>,
}

impl BanditRunResult {
    pub fn hit_round_cap(&self) -> bool {
        self.terminated_by == Termination::RoundCap
    }
}

/// Effective gaps `(m1* - U*) - (m1_i + U_i)` of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveGapReport {
    pub best_arm: usize,
    pub medians: Vec<f64>,
    pub biases: Vec<f64>,
    /// `None` for the best arm.
    pub gaps: Vec<Option<f64>>,
    /// Suboptimal arms whose effective gap is not positive.
    pub infeasible: Vec<usize>,
}

impl EffectiveGapReport {
    pub fn min_gap(&self) -> Option<f64> {
        self.gaps.iter().flatten().copied().reduce(f64::min)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax_lowest(values: impl IntoIterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    values.into_iter().fold(None, |best, (i, v)| match best {
        Some((_, bv)) if v <= bv => best,
        _ => Some((i, v)),
    })
}

/// Effective gaps using the true contamination level of the instance and the
/// family's `B` for every arm.
pub fn effective_gaps(instance: &BanditInstance, family: &FamilyParams) -> Result<EffectiveGapReport> {
    let scales = vec![family.b; instance.k()];
    effective_gaps_with_scales(instance, &scales)
}

/// Effective gaps with a separate slope constant `B_i` per arm.
pub fn effective_gaps_with_scales(instance: &BanditInstance, b_per_arm: &[f64]) -> Result<EffectiveGapReport> {
    if b_per_arm.len() != instance.k() {
        return Err(Error::InvalidParameter(format!(
            "expected {} slope constants, got {}",
            instance.k(),
            b_per_arm.len()
        )));
    }
    let mut medians = Vec::with_capacity(instance.k());
    let mut biases = Vec::with_capacity(instance.k());
    for (arm, b) in instance.arms().iter().zip(b_per_arm) {
        let dist = arm.dist();
        let moments = dist.robust_moments();
        if !moments.m1_unique {
            return Err(Error::NonUniqueMedian {
                left: dist.quantile_left(0.5)?,
                right: dist.quantile_right(0.5)?,
            });
        }
        medians.push(moments.m1);
        biases.push(bias_u(instance.eps(), *b, moments.m2, instance.model()));
    }
    let (best, best_median) =
        argmax_lowest(medians.iter().copied().enumerate()).expect("instance has arms");
    let best_lower = best_median - biases[best];
    let gaps: Vec<Option<f64>> = (0..instance.k())
        .map(|i| (i != best).then(|| best_lower - (medians[i] + biases[i])))
        .collect();
    let infeasible = gaps
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.filter(|g| *g <= 0.0).map(|_| i))
        .collect();
    Ok(EffectiveGapReport {
        best_arm: best,
        medians,
        biases,
        gaps,
        infeasible,
    })
}

/// Uniform exploration: pulls every arm `n(alpha/2, delta/k)` times and
/// returns the arm with the largest empirical median.
pub fn run_simple<R: Rng + ?Sized>(
    instance: &BanditInstance,
    config: &AlgoConfig,
    rng: &mut R,
) -> Result<BanditRunResult> {
    config.validate(instance.model())?;
    if config.alpha <= 0.0 {
        return Err(Error::InvalidParameter("uniform exploration needs alpha > 0".into()));
    }
    let k = instance.k();
    let params = config.estimation_params(instance.model());
    let n = sample_size_median(config.alpha / 2.0, config.delta / k as f64, &params)?;
    let batches: Vec<Vec<f64>> = instance
        .arms()
        .iter()
        .map(|arm| arm.draw_batch(n as usize, rng))
        .collect();
    let medians = batches
        .iter()
        .map(|b| empirical_median(b))
        .collect::<Result<Vec<f64>>>()?;
    let (chosen, chosen_median) =
        argmax_lowest(medians.iter().copied().enumerate()).expect("instance has arms");
    let others: Vec<usize> = (0..k).filter(|&i| i != chosen).collect();
    Ok(BanditRunResult {
        chosen_arm: chosen,
        pulls_per_arm: vec![n; k],
        total_pulls: n * k as u64,
        rounds: 1,
        elimination_trace: if others.is_empty() { vec![] } else { vec![(1, others)] },
        terminated_by: Termination::Budget,
        chosen_median: Some(chosen_median),
        chosen_mad: Some(empirical_mad(&batches[chosen])?),
    })
}

/// Source of per-arm estimates for successive elimination.
pub trait EstimatorOracle {
    fn arms(&self) -> usize;

    /// Feeds `count` fresh observations of `arm` into its estimator.
    fn pull<R: Rng + ?Sized>(&mut self, arm: usize, count: usize, rng: &mut R);

    /// Current estimate of `arm`; only called after at least one pull.
    fn estimate(&self, arm: usize) -> f64;
}

/// Running empirical median of each contaminated arm.
#[derive(Debug, Clone)]
pub struct ArmMedianOracle<'a> {
    arms: &'a [ContaminatedArm],
    medians: Vec<RunningMedian>,
}

impl<'a> ArmMedianOracle<'a> {
    pub fn new(arms: &'a [ContaminatedArm]) -> Self {
        Self {
            arms,
            medians: vec![RunningMedian::new(); arms.len()],
        }
    }
}

impl EstimatorOracle for ArmMedianOracle<'_> {
    fn arms(&self) -> usize {
        self.arms.len()
    }

    fn pull<R: Rng + ?Sized>(&mut self, arm: usize, count: usize, rng: &mut R) {
        let batch = self.arms[arm].draw_batch(count, rng);
        self.medians[arm].extend(batch);
    }

    fn estimate(&self, arm: usize) -> f64 {
        self.medians[arm].median().unwrap_or(f64::NAN)
    }
}

/// Per-round confidence `delta_r = 6 delta / (pi^2 k r^2)`; summing
/// `k delta_r` over all rounds gives exactly `delta`.
pub fn delta_r(delta: f64, k: usize, r: u64) -> f64 {
    6.0 * delta / (PI * PI * k as f64 * (r as f64) * (r as f64))
}

/// Confidence radius of the generic elimination scheme.
pub fn pibai_alpha(c: f64, delta: f64, k: usize, r: u64) -> f64 {
    (c * (1.0 / delta_r(delta, k, r)).ln() / r as f64).sqrt()
}

/// `N = 2 (t_bar - shift)^-2`, the per-log-unit sample floor of the median.
pub fn cbai_unit(params: &EstimationParams) -> Result<f64> {
    params.validate_median()?;
    let gap = params.family.t_bar - params.quantile_shift();
    Ok(2.0 / (gap * gap))
}

/// Warm-up pulls per arm: `ceil(N log(pi^2 k / (2 delta)))`.
pub fn cbai_warmup_pulls(params: &EstimationParams, k: usize, delta: f64) -> Result<u64> {
    check_probability(delta)?;
    let unit = cbai_unit(params)?;
    Ok((unit * (PI * PI * k as f64 / (2.0 * delta)).ln()).ceil() as u64)
}

/// Pulls per surviving arm in round `r`: `1 + ceil(2 N log((r + 1) / r))`.
pub fn cbai_round_pulls(params: &EstimationParams, r: u64) -> Result<u64> {
    let unit = cbai_unit(params)?;
    let r = r as f64;
    Ok(1 + (2.0 * unit * ((r + 1.0) / r).ln()).ceil() as u64)
}

/// Confidence radius `alpha_r` of the median-based elimination.
pub fn cbai_alpha(config: &AlgoConfig, k: usize, r: u64) -> f64 {
    let fam = &config.family;
    let scale = match config.alpha_constant {
        AlphaConstant::BSquared => fam.b * fam.b,
        AlphaConstant::BLinear => fam.b,
    };
    let log_term = (3.0 / delta_r(config.delta, k, r)).ln();
    (2.0 * scale * fam.m2_bar * fam.m2_bar * log_term / r as f64).sqrt()
}

/// Elimination threshold `2 alpha_r` of the median-based elimination.
pub fn cbai_threshold(config: &AlgoConfig, k: usize, r: u64) -> f64 {
    2.0 * cbai_alpha(config, k, r)
}

struct Schedule<A, P> {
    warmup: u64,
    per_round: P,
    radius: A,
    max_rounds: u64,
    /// Stop once `2 alpha_r` drops to this level.
    early_stop_at: Option<f64>,
}

fn successive_elimination<O, R, A, P>(
    oracle: &mut O,
    schedule: Schedule<A, P>,
    rng: &mut R,
) -> BanditRunResult
where
    O: EstimatorOracle,
    R: Rng + ?Sized,
    A: Fn(u64) -> f64,
    P: Fn(u64) -> u64,
{
    let k = oracle.arms();
    let mut pulls = vec![0_u64; k];
    if schedule.warmup > 0 {
        for (arm, count) in pulls.iter_mut().enumerate() {
            oracle.pull(arm, schedule.warmup as usize, rng);
            *count += schedule.warmup;
        }
    }

    let finish = |chosen: usize,
                  pulls: Vec<u64>,
                  rounds: u64,
                  trace: Vec<(u64, Vec<usize>)>,
                  how: Termination,
                  oracle: &O| {
        let chosen_median = (pulls[chosen] > 0).then(|| oracle.estimate(chosen));
        BanditRunResult {
            chosen_arm: chosen,
            total_pulls: pulls.iter().sum(),
            pulls_per_arm: pulls,
            rounds,
            elimination_trace: trace,
            terminated_by: how,
            chosen_median,
            chosen_mad: None,
        }
    };

    if k == 1 {
        return finish(0, pulls, 0, Vec::new(), Termination::SingleSurvivor, oracle);
    }

    let mut survivors: Vec<usize> = (0..k).collect();
    let mut trace = Vec::new();
    let mut leader = 0;
    for r in 1..=schedule.max_rounds {
        let count = (schedule.per_round)(r);
        for &arm in &survivors {
            oracle.pull(arm, count as usize, rng);
            pulls[arm] += count;
        }
        let estimates: Vec<(usize, f64)> = survivors.iter().map(|&i| (i, oracle.estimate(i))).collect();
        let (best, best_est) = argmax_lowest(estimates.iter().copied()).expect("survivors nonempty");
        leader = best;
        let threshold = 2.0 * (schedule.radius)(r);
        let cut = best_est - threshold;
        let eliminated: Vec<usize> = estimates.iter().filter(|(_, e)| *e < cut).map(|(i, _)| *i).collect();
        if !eliminated.is_empty() {
            survivors.retain(|i| !eliminated.contains(i));
            trace.push((r, eliminated));
        }
        if survivors.len() == 1 {
            return finish(survivors[0], pulls, r, trace, Termination::SingleSurvivor, oracle);
        }
        if let Some(level) = schedule.early_stop_at {
            if threshold <= level {
                return finish(best, pulls, r, trace, Termination::EarlyStop, oracle);
            }
        }
    }
    finish(leader, pulls, schedule.max_rounds, trace, Termination::RoundCap, oracle)
}

/// Generic successive elimination: one sample per surviving arm per round,
/// radius `sqrt(c log(1/delta_r) / r)`.
pub fn run_succ_elim_pibai<O: EstimatorOracle, R: Rng + ?Sized>(
    oracle: &mut O,
    delta: f64,
    c: f64,
    max_rounds: u64,
    rng: &mut R,
) -> Result<BanditRunResult> {
    check_probability(delta)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c = {c} must be positive")));
    }
    if max_rounds == 0 {
        return Err(Error::InvalidParameter("max_rounds must be at least 1".into()));
    }
    let k = oracle.arms();
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one arm".into()));
    }
    let schedule = Schedule {
        warmup: 0,
        per_round: |_| 1,
        radius: |r| pibai_alpha(c, delta, k, r),
        max_rounds,
        early_stop_at: None,
    };
    Ok(successive_elimination(oracle, schedule, rng))
}

/// Median-based successive elimination with warm-up.
pub fn run_succ_elim_cbai<R: Rng + ?Sized>(
    instance: &BanditInstance,
    config: &AlgoConfig,
    rng: &mut R,
) -> Result<BanditRunResult> {
    config.validate(instance.model())?;
    let k = instance.k();
    let params = config.estimation_params(instance.model());
    let warmup = cbai_warmup_pulls(&params, k, config.delta)?;
    let unit = cbai_unit(&params)?;
    let schedule = Schedule {
        warmup,
        per_round: |r: u64| {
            let r = r as f64;
            1 + (2.0 * unit * ((r + 1.0) / r).ln()).ceil() as u64
        },
        radius: |r| cbai_alpha(config, k, r),
        max_rounds: config.max_rounds,
        early_stop_at: config.early_stop.then_some(config.alpha / 2.0),
    };
    let mut oracle = ArmMedianOracle::new(instance.arms());
    Ok(successive_elimination(&mut oracle, schedule, rng))
}
