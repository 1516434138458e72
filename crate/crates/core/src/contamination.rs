//! Contaminated arms.
//!
//! A pull returns `X = (1 - D) Y + D Z` with `Y ~ F`, `D ~ Ber(eps)` and `Z`
//! chosen by a [`ContaminationStrategy`]. The adversary model controls what
//! the strategy may look at: an oblivious adversary draws `Z` independently,
//! a prescient one sees the whole batch of `(Y, D)` before choosing `Z`, and a
//! malicious one may also couple `D` with `Y` as long as both marginals are
//! preserved.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::estimators::empirical_median;

/// Default location of the far-away Dirac used by the median-shift strategies.
pub const DEFAULT_SHIFT_MAGNITUDE: f64 = 1e6;

/// Tolerance on the marginal identities checked by the coupling strategies.
const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryModel {
    Oblivious,
    Prescient,
    Malicious,
}

impl fmt::Display for AdversaryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryModel::Oblivious => "oblivious",
            AdversaryModel::Prescient => "prescient",
            AdversaryModel::Malicious => "malicious",
        })
    }
}

fn default_magnitude() -> f64 {
    DEFAULT_SHIFT_MAGNITUDE
}

/// How contaminated samples are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContaminationStrategy {
    /// `Z ~ dist`, independent of everything else.
    Fixed { dist: Distribution },
    /// `Z = +magnitude`, dragging the median up.
    ShiftMedianUp {
        #[serde(default = "default_magnitude")]
        magnitude: f64,
    },
    /// `Z = -magnitude`, dragging the median down.
    ShiftMedianDown {
        #[serde(default = "default_magnitude")]
        magnitude: f64,
    },
    /// For a uniform arm on `[lo, hi]`, a uniform `Z` placed next to the
    /// support so that the contaminated law is again uniform and its median
    /// moves by the largest amount possible in the given direction (`+1` or
    /// `-1`).
    UniformTailShift { direction: i8 },
    /// Malicious coupling `D | Y ~ Ber(2 eps 1{Y <= m})` with
    /// `Z = Q_R(1/2 + eps)`, which moves the median from `m` to
    /// `Q_R(1/2 + eps)`.
    MedianCoupling,
    /// Every contaminated sample is set to the empirical `target_quantile`
    /// of the clean values of the batch.
    OrderAware { target_quantile: f64 },
    /// Malicious coupling `D | Y ~ Ber(flip_prob 1{Y = atom})` with
    /// `Z = target`. Requires `flip_prob P(Y = atom) = eps`.
    AtomCoupling {
        atom: f64,
        flip_prob: f64,
        target: f64,
    },
}

impl ContaminationStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            ContaminationStrategy::Fixed { .. } => "fixed",
            ContaminationStrategy::ShiftMedianUp { .. } => "shift_median_up",
            ContaminationStrategy::ShiftMedianDown { .. } => "shift_median_down",
            ContaminationStrategy::UniformTailShift { .. } => "uniform_tail_shift",
            ContaminationStrategy::MedianCoupling => "median_coupling",
            ContaminationStrategy::OrderAware { .. } => "order_aware",
            ContaminationStrategy::AtomCoupling { .. } => "atom_coupling",
        }
    }

    fn allowed_under(&self, model: AdversaryModel) -> bool {
        match self {
            ContaminationStrategy::MedianCoupling | ContaminationStrategy::AtomCoupling { .. } => {
                model == AdversaryModel::Malicious
            }
            ContaminationStrategy::OrderAware { .. } => model != AdversaryModel::Oblivious,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pivot {
    AtOrBelow(f64),
    Equal(f64),
}

impl Pivot {
    fn matches(&self, y: f64) -> bool {
        match *self {
            Pivot::AtOrBelow(m) => y <= m,
            Pivot::Equal(a) => y == a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Plan {
    Clean,
    Independent(Distribution),
    OrderAware(f64),
    Coupled { flip: f64, pivot: Pivot, target: f64 },
}

/// An arm whose samples pass through a contamination strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminatedArm {
    dist: Distribution,
    strategy: ContaminationStrategy,
    eps: f64,
    model: AdversaryModel,
    plan: Plan,
}

/// A batch together with the hidden variables that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub y: Vec<f64>,
    pub d: Vec<bool>,
    pub z: Vec<Option<f64>>,
    pub x: Vec<f64>,
}

impl Batch {
    pub fn contaminated_count(&self) -> usize {
        self.d.iter().filter(|&&d| d).count()
    }

    /// Order statistics `(Y_(max(floor(n/2) - s, 1)), Y_(floor(n/2) + 1 + s))`
    /// of the clean values, which bracket the empirical median of `x` whenever
    /// the number `s` of contaminated samples is below `n / 2`. The upper
    /// index is `ceil(n/2) + s` for odd `n`; for even `n` it covers the upper
    /// of the two averaged middle values.
    pub fn sandwich(&self) -> Option<(f64, f64)> {
        let n = self.y.len();
        let s = self.contaminated_count();
        if n == 0 || 2 * s >= n {
            return None;
        }
        let mut sorted = self.y.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let lo = (n / 2).saturating_sub(s).max(1);
        let hi = n / 2 + 1 + s;
        Some((sorted[lo - 1], sorted[hi - 1]))
    }
}

impl ContaminatedArm {
    pub fn new(
        dist: Distribution,
        strategy: ContaminationStrategy,
        eps: f64,
        model: AdversaryModel,
    ) -> Result<Self> {
        dist.validate()?;
        if !(0.0..0.5).contains(&eps) {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} must lie in [0, 1/2)"
            )));
        }
        if !strategy.allowed_under(model) {
            return Err(Error::IncompatibleStrategy {
                strategy: strategy.name(),
                model,
            });
        }
        let plan = Self::plan(&dist, &strategy, eps)?;
        Ok(Self {
            dist,
            strategy,
            eps,
            model,
            plan,
        })
    }

    /// An arm without contamination.
    pub fn clean(dist: Distribution, model: AdversaryModel) -> Result<Self> {
        Self::new(
            dist,
            ContaminationStrategy::ShiftMedianUp {
                magnitude: DEFAULT_SHIFT_MAGNITUDE,
            },
            0.0,
            model,
        )
    }

    fn plan(dist: &Distribution, strategy: &ContaminationStrategy, eps: f64) -> Result<Plan> {
        let plan = match strategy {
            ContaminationStrategy::Fixed { dist: g } => {
                g.validate()?;
                Plan::Independent(g.clone())
            }
            ContaminationStrategy::ShiftMedianUp { magnitude }
            | ContaminationStrategy::ShiftMedianDown { magnitude } => {
                if !magnitude.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "shift magnitude must be finite, got {magnitude}"
                    )));
                }
                let at = if matches!(strategy, ContaminationStrategy::ShiftMedianUp { .. }) {
                    *magnitude
                } else {
                    -*magnitude
                };
                Plan::Independent(Distribution::dirac(at))
            }
            ContaminationStrategy::UniformTailShift { direction } => {
                let Distribution::Uniform { lo, hi } = *dist else {
                    return Err(Error::InvalidParameter(format!(
                        "uniform_tail_shift needs a uniform arm, got {}",
                        dist.kind()
                    )));
                };
                let width = hi - lo;
                let extra = width * eps / (1.0 - eps);
                match direction {
                    1 => Plan::Independent(Distribution::uniform(hi, hi + extra)),
                    -1 => Plan::Independent(Distribution::uniform(lo - extra, lo)),
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "uniform_tail_shift direction must be +1 or -1, got {direction}"
                        )))
                    }
                }
            }
            ContaminationStrategy::MedianCoupling => {
                let moments = dist.robust_moments();
                let m = moments.require_unique_median()?;
                let at_median = dist.cdf(m);
                if (at_median - 0.5).abs() > MARGINAL_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "median coupling needs F(m) = 1/2, got {at_median}"
                    )));
                }
                let target = if eps > 0.0 {
                    dist.quantile_right(0.5 + eps)?
                } else {
                    m
                };
                Plan::Coupled {
                    flip: 2.0 * eps,
                    pivot: Pivot::AtOrBelow(m),
                    target,
                }
            }
            ContaminationStrategy::OrderAware { target_quantile } => {
                if !(0.0..=1.0).contains(target_quantile) {
                    return Err(Error::InvalidParameter(format!(
                        "target_quantile = {target_quantile} must lie in [0, 1]"
                    )));
                }
                Plan::OrderAware(*target_quantile)
            }
            ContaminationStrategy::AtomCoupling {
                atom,
                flip_prob,
                target,
            } => {
                if !(0.0..=1.0).contains(flip_prob) || !atom.is_finite() || !target.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "atom coupling needs finite atom and target and flip_prob in [0, 1], got ({atom}, {flip_prob}, {target})"
                    )));
                }
                let mass = dist.cdf(*atom) - dist.cdf_left(*atom);
                let marginal = flip_prob * mass;
                if (marginal - eps).abs() > MARGINAL_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "atom coupling gives P(D = 1) = {marginal}, expected {eps}"
                    )));
                }
                Plan::Coupled {
                    flip: *flip_prob,
                    pivot: Pivot::Equal(*atom),
                    target: *target,
                }
            }
        };
        Ok(if eps == 0.0 { Plan::Clean } else { plan })
    }

    pub fn dist(&self) -> &Distribution {
        &self.dist
    }

    pub fn strategy(&self) -> &ContaminationStrategy {
        &self.strategy
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn model(&self) -> AdversaryModel {
        self.model
    }

    /// Exact `P(D = 1)`.
    pub fn d_marginal(&self) -> f64 {
        match &self.plan {
            Plan::Clean => 0.0,
            Plan::Independent(_) | Plan::OrderAware(_) => self.eps,
            Plan::Coupled { flip, pivot, .. } => match *pivot {
                Pivot::AtOrBelow(m) => flip * self.dist.cdf(m),
                Pivot::Equal(a) => flip * (self.dist.cdf(a) - self.dist.cdf_left(a)),
            },
        }
    }

    /// Cdf of a single contaminated sample, when it does not depend on the
    /// batch.
    pub fn contaminated_cdf(&self, x: f64) -> Option<f64> {
        let f = &self.dist;
        match &self.plan {
            Plan::Clean => Some(f.cdf(x)),
            Plan::Independent(g) => Some((1.0 - self.eps) * f.cdf(x) + self.eps * g.cdf(x)),
            Plan::OrderAware(_) => None,
            Plan::Coupled {
                flip,
                pivot,
                target,
            } => {
                let moved = match *pivot {
                    Pivot::AtOrBelow(m) => flip * f.cdf(x.min(m)),
                    Pivot::Equal(a) => {
                        if x >= a {
                            flip * (f.cdf(a) - f.cdf_left(a))
                        } else {
                            0.0
                        }
                    }
                };
                let landed = if x >= *target { self.d_marginal() } else { 0.0 };
                Some((f.cdf(x) - moved + landed).clamp(0.0, 1.0))
            }
        }
    }

    fn draw_one<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool, Option<f64>) {
        let y = self.dist.sample(rng);
        match &self.plan {
            Plan::Clean => (y, false, None),
            Plan::Independent(g) => {
                if rng.random::<f64>() < self.eps {
                    (y, true, Some(g.sample(rng)))
                } else {
                    (y, false, None)
                }
            }
            Plan::Coupled {
                flip,
                pivot,
                target,
            } => {
                if pivot.matches(y) && rng.random::<f64>() < *flip {
                    (y, true, Some(*target))
                } else {
                    (y, false, None)
                }
            }
            Plan::OrderAware(_) => unreachable!("order-aware batches are drawn jointly"),
        }
    }

    /// Draws `n` observed rewards.
    pub fn draw_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self.plan {
            Plan::OrderAware(_) => self.draw_batch_traced(n, rng).x,
            _ => (0..n)
                .map(|_| match self.draw_one(rng) {
                    (_, true, Some(z)) => z,
                    (y, _, _) => y,
                })
                .collect(),
        }
    }

    /// Draws `n` rewards and keeps the hidden `(Y, D, Z)` values. Consumes
    /// the random stream exactly like [`ContaminatedArm::draw_batch`].
    pub fn draw_batch_traced<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Batch {
        let mut batch = Batch {
            y: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
        };
        match self.plan {
            Plan::OrderAware(q) => {
                for _ in 0..n {
                    batch.y.push(self.dist.sample(rng));
                    batch.d.push(rng.random::<f64>() < self.eps);
                }
                let z = if n > 0 {
                    let mut sorted = batch.y.clone();
                    sorted.sort_unstable_by(f64::total_cmp);
                    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
                    sorted[rank - 1]
                } else {
                    0.0
                };
                for i in 0..n {
                    let zi = batch.d[i].then_some(z);
                    batch.z.push(zi);
                    batch.x.push(zi.unwrap_or(batch.y[i]));
                }
            }
            _ => {
                for _ in 0..n {
                    let (y, d, z) = self.draw_one(rng);
                    batch.y.push(y);
                    batch.d.push(d);
                    batch.z.push(z);
                    batch.x.push(z.unwrap_or(y));
                }
            }
        }
        if cfg!(debug_assertions) {
            if let (Some((lo, hi)), Ok(med)) = (batch.sandwich(), empirical_median(&batch.x)) {
                debug_assert!(
                    lo <= med && med <= hi,
                    "median {med} escaped the clean order statistics [{lo}, {hi}]"
                );
            }
        }
        batch
    }
}

/// Builds the malicious median-moving coupling for `dist` at level `eps`.
pub fn median_coupling_arm(dist: Distribution, eps: f64) -> Result<ContaminatedArm> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    ContaminatedArm::new(
        dist,
        ContaminationStrategy::MedianCoupling,
        eps,
        AdversaryModel::Malicious,
    )
}

/// Outcome of [`verify_marginals`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalReport {
    pub n: usize,
    pub d_frequency: f64,
    pub d_expected: f64,
    pub d_band: f64,
    pub d_ok: bool,
    pub ks_distance: f64,
    pub ks_band: f64,
    pub ks_ok: bool,
}

impl MarginalReport {
    pub fn passed(&self) -> bool {
        self.d_ok && self.ks_ok
    }
}

/// Exact Kolmogorov-Smirnov distance between the empirical law of `ys` and
/// the law of `dist`.
pub fn ks_distance(ys: &[f64], dist: &Distribution) -> f64 {
    let mut sorted = ys.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst = 0.0_f64;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let at_or_below = j as f64 / n;
        worst = worst
            .max((at_or_below - dist.cdf(v)).abs())
            .max((below - dist.cdf_left(v)).abs());
        i = j;
    }
    worst
}

/// Draws `n` samples and checks that `D` has frequency `eps` and that the
/// clean values follow `F`, both at confidence `1 - delta`.
pub fn verify_marginals<R: Rng + ?Sized>(
    arm: &ContaminatedArm,
    n: usize,
    rng: &mut R,
    delta: f64,
) -> Result<MarginalReport> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    crate::error::check_probability(delta)?;
    let batch = arm.draw_batch_traced(n, rng);
    let band = ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt();
    let d_frequency = batch.contaminated_count() as f64 / n as f64;
    let ks = ks_distance(&batch.y, arm.dist());
    Ok(MarginalReport {
        n,
        d_frequency,
        d_expected: arm.eps(),
        d_band: band,
        d_ok: (d_frequency - arm.eps()).abs() <= band,
        ks_distance: ks,
        ks_band: band,
        ks_ok: ks <= band,
    })
}
