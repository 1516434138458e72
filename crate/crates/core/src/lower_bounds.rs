//! Hard instances built from smoothed Bernoulli arms.
//!
//! An instance of `SmoothedBernoulli(p_i)` arms is "lifted" to a contaminated
//! instance whose observations have exactly the same law, while the clean
//! distributions `F_i` have medians pushed apart by the largest amount the
//! adversary could hide. Any algorithm for the contaminated problem therefore
//! solves the smoothed Bernoulli problem, whose sample complexity is bounded
//! below through the KL divergence [`kl_sber`].

use serde::{Deserialize, Serialize};

use crate::bandit::{effective_gaps_with_scales, run_succ_elim_cbai, AlgoConfig, BanditInstance};
use crate::contamination::{AdversaryModel, ContaminatedArm, ContaminationStrategy};
use crate::distributions::Distribution;
use crate::error::{check_probability, Error, Result};
use crate::replication::run_replications;

/// Largest admissible confidence parameter of the lower bound.
pub const MAX_LOWER_BOUND_DELTA: f64 = 0.15;

/// Admissible range of the Bernoulli parameters of a lifted instance.
pub const P_RANGE: (f64, f64) = (1.0 / 3.0, 2.0 / 3.0);

/// Admissible contamination levels of a lifted instance are `[0, MAX_LIFT_EPS)`.
pub const MAX_LIFT_EPS: f64 = 1.0 / 15.0;

/// Default Taylor constant bounding `kl_sber(p, q) <= C (p - q)^2`.
pub const DEFAULT_C_ETA: f64 = 1.0;

const LIFT_TOL: f64 = 1e-12;
const MEDIAN_TOL: f64 = 1e-10;
const GRID_POINTS: usize = 1001;

/// KL divergence between `SmoothedBernoulli(p)` and `SmoothedBernoulli(q)`.
pub fn kl_sber(p: f64, q: f64) -> Result<f64> {
    check_probability(p)?;
    check_probability(q)?;
    let kl = 0.5 * (p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln());
    Ok(kl.max(0.0))
}

/// `(C / 4) sum_i max(gap_i, alpha)^-2 log(1 / (2.4 delta))`.
pub fn lower_bound_samples(gaps: &[f64], alpha: f64, delta: f64, c_eta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < MAX_LOWER_BOUND_DELTA) {
        return Err(Error::ParameterOutOfRange(format!(
            "delta = {delta} must lie in (0, {MAX_LOWER_BOUND_DELTA}) for the lower bound to hold"
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be nonnegative")));
    }
    if !(c_eta > 0.0 && c_eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("c_eta = {c_eta} must be positive")));
    }
    if let Some(g) = gaps.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter(format!("gaps must be positive, got {g}")));
    }
    let inverse_squares: f64 = gaps.iter().map(|g| g.max(alpha).powi(-2)).sum();
    Ok(c_eta / 4.0 * inverse_squares * (1.0 / (2.4 * delta)).ln())
}

/// A contaminated instance observationally identical to a smoothed
/// Bernoulli instance. Arms are reordered so that the best one comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedInstance {
    pub k: usize,
    /// Bernoulli parameters, best arm first.
    pub p: Vec<f64>,
    /// Position of each lifted arm in the caller's input.
    pub order: Vec<usize>,
    pub eps: f64,
    pub model: AdversaryModel,
    pub lifted_arms: Vec<ContaminatedArm>,
    pub observable_law: Vec<Distribution>,
    /// Slope constant of each clean law for which the bias equals the
    /// median displacement.
    pub b_per_arm: Vec<f64>,
}

impl LiftedInstance {
    pub fn bandit(&self) -> Result<BanditInstance> {
        BanditInstance::new(self.lifted_arms.clone())
    }

    /// Classical gaps `p_best - p_i` of the smoothed Bernoulli instance.
    pub fn gaps(&self) -> Vec<f64> {
        self.p[1..].iter().map(|pi| self.p[0] - pi).collect()
    }

    /// Largest cdf discrepancy between each lifted arm and its observable law
    /// on a grid over `[-0.25, 1.25]` that includes both atoms.
    pub fn max_mixture_error(&self) -> f64 {
        let mut grid: Vec<f64> = (0..GRID_POINTS)
            .map(|i| -0.25 + 1.5 * i as f64 / (GRID_POINTS - 1) as f64)
            .collect();
        grid.extend([0.0, 1.0]);
        self.lifted_arms
            .iter()
            .zip(&self.observable_law)
            .flat_map(|(arm, law)| {
                grid.iter().map(move |&x| {
                    let lifted = arm.contaminated_cdf(x).unwrap_or(f64::INFINITY);
                    (lifted - law.cdf(x)).abs()
                })
            })
            .fold(0.0, f64::max)
    }
}

fn check_lifting_inputs(p: &[f64], eps: f64) -> Result<Vec<usize>> {
    if p.is_empty() {
        return Err(Error::ParameterOutOfRange("need at least one arm".into()));
    }
    if let Some(bad) = p.iter().find(|v| !(P_RANGE.0..=P_RANGE.1).contains(*v)) {
        return Err(Error::ParameterOutOfRange(format!(
            "p = {bad} must lie in [1/3, 2/3]"
        )));
    }
    if !(0.0..MAX_LIFT_EPS).contains(&eps) {
        return Err(Error::ParameterOutOfRange(format!(
            "eps = {eps} must lie in [0, 1/15)"
        )));
    }
    let best = p
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > p[b] { i } else { b });
    let mut order = vec![best];
    order.extend((0..p.len()).filter(|&i| i != best));
    Ok(order)
}

fn smoothed(bern: f64, eps: f64) -> Distribution {
    let w = (1.0 - 2.0 * eps) / (2.0 * (1.0 - eps));
    Distribution::mixture(
        vec![w, 1.0 - w],
        vec![Distribution::bernoulli(bern), Distribution::uniform(0.0, 1.0)],
    )
}

fn half_smoothed(bern: f64) -> Distribution {
    Distribution::mixture(
        vec![0.5, 0.5],
        vec![Distribution::bernoulli(bern), Distribution::uniform(0.0, 1.0)],
    )
}

fn finish(
    order: Vec<usize>,
    p: &[f64],
    eps: f64,
    model: AdversaryModel,
    lifted_arms: Vec<ContaminatedArm>,
    expected_medians: Vec<f64>,
    scale_numerator: f64,
) -> Result<LiftedInstance> {
    let p_sorted: Vec<f64> = order.iter().map(|&i| p[i]).collect();
    let mut b_per_arm = Vec::with_capacity(order.len());
    for (i, (arm, expected)) in lifted_arms.iter().zip(&expected_medians).enumerate() {
        let moments = arm.dist().robust_moments();
        if !moments.m1_unique || (moments.m1 - expected).abs() > MEDIAN_TOL {
            return Err(Error::ConstructionCheck(format!(
                "arm {i}: median {} differs from {expected}",
                moments.m1
            )));
        }
        b_per_arm.push(scale_numerator / moments.m2);
    }
    let lifted = LiftedInstance {
        k: order.len(),
        observable_law: p_sorted.iter().map(|&v| Distribution::smoothed_bernoulli(v)).collect(),
        p: p_sorted,
        order,
        eps,
        model,
        lifted_arms,
        b_per_arm,
    };
    let err = lifted.max_mixture_error();
    if err > LIFT_TOL {
        return Err(Error::ConstructionCheck(format!(
            "observed law deviates from the smoothed Bernoulli by {err}"
        )));
    }
    for arm in &lifted.lifted_arms {
        if (arm.d_marginal() - eps).abs() > LIFT_TOL {
            return Err(Error::ConstructionCheck(format!(
                "contamination frequency {} differs from {eps}",
                arm.d_marginal()
            )));
        }
    }
    Ok(lifted)
}

/// Oblivious lifting: the best arm's clean law has median `p + eps` and is
/// contaminated by a Dirac at 0; every other arm has median `p_i - eps` and
/// is contaminated by a Dirac at 1.
pub fn build_lifting_oblivious(p: &[f64], eps: f64) -> Result<LiftedInstance> {
    let order = check_lifting_inputs(p, eps)?;
    let model = AdversaryModel::Oblivious;
    let mut arms = Vec::with_capacity(p.len());
    let mut medians = Vec::with_capacity(p.len());
    for (rank, &i) in order.iter().enumerate() {
        let (bern, atom, median) = if rank == 0 {
            (p[i] / (1.0 - 2.0 * eps), 0.0, p[i] + eps)
        } else {
            ((p[i] - 2.0 * eps) / (1.0 - 2.0 * eps), 1.0, p[i] - eps)
        };
        arms.push(ContaminatedArm::new(
            smoothed(bern, eps),
            ContaminationStrategy::Fixed {
                dist: Distribution::dirac(atom),
            },
            eps,
            model,
        )?);
        medians.push(median);
    }
    finish(order, p, eps, model, arms, medians, 2.0 * (1.0 - eps))
}

/// Malicious lifting: the adversary moves `eps` of mass from the atom at 1
/// to 0 on the best arm, and from 0 to 1 on every other arm, shifting each
/// clean median by `2 eps`.
pub fn build_lifting_malicious(p: &[f64], eps: f64) -> Result<LiftedInstance> {
    let order = check_lifting_inputs(p, eps)?;
    let model = AdversaryModel::Malicious;
    let mut arms = Vec::with_capacity(p.len());
    let mut medians = Vec::with_capacity(p.len());
    for (rank, &i) in order.iter().enumerate() {
        let pi = p[i];
        let (bern, strategy, median) = if rank == 0 {
            (
                pi + 2.0 * eps,
                ContaminationStrategy::AtomCoupling {
                    atom: 1.0,
                    flip_prob: eps / (pi / 2.0 + eps),
                    target: 0.0,
                },
                pi + 2.0 * eps,
            )
        } else {
            (
                pi - 2.0 * eps,
                ContaminationStrategy::AtomCoupling {
                    atom: 0.0,
                    flip_prob: eps / ((1.0 - pi) / 2.0 + eps),
                    target: 1.0,
                },
                pi - 2.0 * eps,
            )
        };
        arms.push(ContaminatedArm::new(half_smoothed(bern), strategy, eps, model)?);
        medians.push(median);
    }
    finish(order, p, eps, model, arms, medians, 2.0)
}

/// Effective gaps of a lifted instance, which equal its classical gaps.
pub fn lifted_effective_gaps(lifted: &LiftedInstance) -> Result<Vec<f64>> {
    let report = effective_gaps_with_scales(&lifted.bandit()?, &lifted.b_per_arm)?;
    Ok(report.gaps.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub k: usize,
    /// Smallest classical gap.
    pub gap: f64,
    pub delta: f64,
    pub lb_value: f64,
    pub mean_pulls: f64,
    /// `mean_pulls / lb_value`; absent when the bound is zero.
    pub ratio: Option<f64>,
    pub success_rate: f64,
    pub round_cap_hits: usize,
    pub replications: usize,
}

/// Runs median-based successive elimination on a lifted instance and
/// compares its average sample count with the lower bound.
pub fn hardness_probe(
    lifted: &LiftedInstance,
    config: &AlgoConfig,
    replications: usize,
    seed: u64,
    parallelism: usize,
    c_eta: f64,
) -> Result<HardnessReport> {
    if replications < 100 {
        return Err(Error::InvalidParameter(format!(
            "the probe needs at least 100 replications, got {replications}"
        )));
    }
    let gaps = lifted.gaps();
    let lb_value = lower_bound_samples(&gaps, config.alpha, config.delta, c_eta)?;
    let instance = lifted.bandit()?;
    let runs = run_replications(replications, seed, parallelism, |_, rng| {
        run_succ_elim_cbai(&instance, config, rng)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mean_pulls = runs.iter().map(|r| r.total_pulls as f64).sum::<f64>() / replications as f64;
    let successes = runs.iter().filter(|r| r.chosen_arm == 0).count();
    Ok(HardnessReport {
        k: lifted.k,
        gap: gaps.iter().copied().fold(f64::INFINITY, f64::min),
        delta: config.delta,
        lb_value,
        mean_pulls,
        ratio: (lb_value > 0.0).then(|| mean_pulls / lb_value),
        success_rate: successes as f64 / replications as f64,
        round_cap_hits: runs.iter().filter(|r| r.hit_round_cap()).count(),
        replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_sber(0.3, 0.3).unwrap(), 0.0);
        let direct = 0.5 * (0.5 * (2.0_f64).ln() + 0.5 * (0.5_f64 / 0.75).ln());
        assert!((kl_sber(0.5, 0.25).unwrap() - direct).abs() < 1e-15);
        assert!((kl_sber(0.5, 0.25).unwrap() - 0.071_920_5).abs() < 1e-7);
        assert!((kl_sber(0.2, 0.7).unwrap() - kl_sber(0.8, 0.3).unwrap()).abs() < 1e-15);
        assert!(kl_sber(0.0, 0.5).is_err());
        assert!(kl_sber(0.5, 1.0).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let v = lower_bound_samples(&[0.1, 0.1, 0.1], 0.05, 0.1, 1.0).unwrap();
        assert!((v - 75.0 * (1.0_f64 / 0.24).ln()).abs() < 1e-9);
        assert!((v - 107.03).abs() < 0.01);
        let clipped = lower_bound_samples(&[0.01, 0.02], 0.5, 0.1, 1.0).unwrap();
        assert!((clipped - 0.25 * 8.0 * (1.0_f64 / 0.24).ln()).abs() < 1e-12);
        let one = lower_bound_samples(&[0.2], 0.0, 0.1, 1.0).unwrap();
        let half = lower_bound_samples(&[0.1], 0.0, 0.1, 1.0).unwrap();
        assert!((half / one - 4.0).abs() < 1e-12);
        assert!(matches!(
            lower_bound_samples(&[0.1], 0.0, 0.15, 1.0),
            Err(Error::ParameterOutOfRange(_))
        ));
    }

    #[test]
    fn oblivious_lifting_example() {
        let lifted = build_lifting_oblivious(&[0.6, 0.4], 0.05).unwrap();
        let at_half = lifted.lifted_arms[0].contaminated_cdf(0.5).unwrap();
        assert!((at_half - 0.45).abs() < 1e-12);
        let m = lifted.lifted_arms[0].dist().robust_moments().m1;
        assert!((m - 0.65).abs() < 1e-12);
        let gaps = lifted_effective_gaps(&lifted).unwrap();
        assert!((gaps[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn liftings_reorder_arms() {
        let lifted = build_lifting_malicious(&[0.4, 0.5, 0.6], 0.05).unwrap();
        assert_eq!(lifted.order, vec![2, 0, 1]);
        assert_eq!(lifted.p, vec![0.6, 0.4, 0.5]);
        let gaps = lifted_effective_gaps(&lifted).unwrap();
        assert!((gaps[0] - 0.2).abs() < 1e-12 && (gaps[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn lifting_preconditions() {
        assert!(matches!(
            build_lifting_oblivious(&[0.7, 0.4], 0.05),
            Err(Error::ParameterOutOfRange(_))
        ));
        assert!(matches!(
            build_lifting_malicious(&[0.6, 0.4], 0.07),
            Err(Error::ParameterOutOfRange(_))
        ));
    }

    #[test]
    fn zero_contamination_lifting_is_the_smoothed_instance() {
        for lifted in [
            build_lifting_oblivious(&[0.6, 0.4], 0.0).unwrap(),
            build_lifting_malicious(&[0.6, 0.4], 0.0).unwrap(),
        ] {
            for (arm, law) in lifted.lifted_arms.iter().zip(&lifted.observable_law) {
                for i in 0..=40 {
                    let x = -0.5 + i as f64 / 20.0;
                    assert!((arm.dist().cdf(x) - law.cdf(x)).abs() < 1e-12);
                }
            }
        }
    }
}
