//! Closed-form reward distributions.
//!
//! Every [`Distribution`] exposes its cdf (`P(X <= x)`) and left-limit cdf
//! (`P(X < x)`), left and right quantiles, a sampler, and the robust moments
//! `m1` (median), `m2` (median absolute deviation) and `m4` (median of
//! `||X - m1| - m2|`). Quantiles and moments use closed forms where the variant
//! admits one and fall back to bracketed bisection otherwise. The bisection
//! runs until the bracket cannot shrink in `f64`, which is well below the
//! `1e-12` absolute tolerance the rest of the crate relies on.
//!
//! The family checks ([`check_family_ftb`], [`check_family_fmad`]) verify the
//! linear-growth condition `|F(x1) - F(x2)| >= |x1 - x2| / (B m2)` on a finite
//! grid. They are necessary-condition checks, useful for validating
//! experiment inputs; no algorithm depends on them.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::contamination::AdversaryModel;
use crate::error::{check_probability, Error, Result};

/// Default number of grid cells used by the family-membership checks.
pub const DEFAULT_GRID_RESOLUTION: usize = 10_000;

/// Relative slack allowed on each grid cell of the slope check, absorbing
/// floating point error when the slope condition holds with equality.
const SLOPE_SLACK: f64 = 1e-7;

/// Tolerance used to decide whether left and right quantiles coincide.
const UNIQUENESS_TOL: f64 = 1e-9;

/// Tolerance on the total weight of a mixture.
const WEIGHT_SUM_TOL: f64 = 1e-12;

const MAX_BRACKET_DOUBLINGS: usize = 1100;
const MAX_BISECTIONS: usize = 2200;

/// A reward distribution with exact cdf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    Cauchy {
        x0: f64,
        scale: f64,
    },
    Bernoulli {
        p: f64,
    },
    /// Equal-weight mixture of `Bernoulli(p)` and `Uniform(0, 1)`.
    SmoothedBernoulli {
        p: f64,
    },
    Dirac {
        x: f64,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<Distribution>,
    },
    /// Law of `scale * X + shift` with `X ~ base`.
    Affine {
        base: Box<Distribution>,
        scale: f64,
        shift: f64,
    },
}

type Step = fn(f64) -> f64;

/// Extreme base point whose image under `y -> scale * y + shift`, evaluated in
/// floating point, is `<= x` (or `< x` when `strict`). Returns the largest such
/// point for positive scale and the smallest for negative scale, so atoms of
/// the base law map onto the same floats that sampling and quantiles produce.
fn affine_preimage(scale: f64, shift: f64, x: f64, strict: bool) -> f64 {
    let image = |y: f64| scale * y + shift;
    let inside = |y: f64| if strict { image(y) < x } else { image(y) <= x };
    let mut y = (x - shift) / scale;
    if !y.is_finite() {
        return y;
    }
    let (outward, inward): (Step, Step) = if scale > 0.0 {
        (f64::next_up, f64::next_down)
    } else {
        (f64::next_down, f64::next_up)
    };
    for _ in 0..64 {
        if inside(y) {
            break;
        }
        y = inward(y);
    }
    for _ in 0..64 {
        let next = outward(y);
        if !inside(next) {
            break;
        }
        y = next;
    }
    y
}

/// Median, median absolute deviation and second-order MAD of a distribution.
///
/// When a moment is not unique the reported value is the left endpoint of
/// the set of medians and the matching flag is `false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustMoments {
    pub m1: f64,
    pub m2: f64,
    pub m4: f64,
    pub m1_unique: bool,
    pub m2_unique: bool,
    pub m4_unique: bool,
}

impl RobustMoments {
    pub fn require_unique_median(&self) -> Result<f64> {
        if self.m1_unique {
            Ok(self.m1)
        } else {
            Err(Error::NonUniqueMedian {
                left: self.m1,
                right: f64::NAN,
            })
        }
    }

    pub fn all_unique(&self) -> bool {
        self.m1_unique && self.m2_unique && self.m4_unique
    }
}

/// Parameters of the distribution families: quantile half-width `t_bar`,
/// inverse-slope bound `b`, MAD bound `m2_bar` and MAD-to-`m4` ratio bound
/// `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub t_bar: f64,
    pub b: f64,
    pub m2_bar: f64,
    pub kappa: f64,
}

impl FamilyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_bar > 0.0 && self.t_bar < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "t_bar = {} must lie in (0, 1/2)",
                self.t_bar
            )));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParameter(format!("b = {} must be positive", self.b)));
        }
        if !(self.m2_bar > 0.0 && self.m2_bar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "m2_bar = {} must be positive",
                self.m2_bar
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa = {} must be nonnegative",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Anything with a cdf. Quantiles and robust moments default to bisection.
pub trait CumulativeLaw {
    /// `P(X <= x)`.
    fn cdf(&self, x: f64) -> f64;

    /// `P(X < x)`.
    fn cdf_left(&self, x: f64) -> f64;

    /// `inf {x : F(x) >= p}` when `strict` is false, `inf {x : F(x) > p}`
    /// when it is true. `p` must lie in `(0, 1)`.
    fn quantile_at(&self, p: f64, strict: bool) -> f64 {
        generalized_inverse(|x| self.cdf(x), p, strict)
    }

    fn moments(&self) -> RobustMoments {
        numeric_robust_moments(self)
    }
}

/// Generalized inverse of a nondecreasing function with limits 0 and 1.
pub fn generalized_inverse(f: impl Fn(f64) -> f64, p: f64, strict: bool) -> f64 {
    let hit = |x: f64| {
        let v = f(x);
        if strict {
            v > p
        } else {
            v >= p
        }
    };

    let mut lo = -1.0_f64;
    let mut doublings = 0;
    while hit(lo) {
        lo *= 2.0;
        doublings += 1;
        if !lo.is_finite() || doublings > MAX_BRACKET_DOUBLINGS {
            return lo;
        }
    }
    let mut hi = 1.0_f64;
    doublings = 0;
    while !hit(hi) {
        hi *= 2.0;
        doublings += 1;
        if !hi.is_finite() || doublings > MAX_BRACKET_DOUBLINGS {
            return hi;
        }
    }

    // invariant: hit(hi) && !hit(lo)
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * lo + 0.5 * hi;
        if mid <= lo || mid >= hi {
            break;
        }
        if hit(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn coincide(a: f64, b: f64) -> bool {
    (a - b).abs() <= UNIQUENESS_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Robust moments computed purely by bisection on the cdf.
pub fn numeric_robust_moments<C: CumulativeLaw + ?Sized>(law: &C) -> RobustMoments {
    let m1_left = law.quantile_at(0.5, false);
    let m1_right = law.quantile_at(0.5, true);
    let m1 = m1_left;

    let deviation = AbsDeviationLaw::new(law, m1);
    let m2_left = deviation.quantile_at(0.5, false);
    let m2_right = deviation.quantile_at(0.5, true);
    let m2 = m2_left.max(0.0);

    let second = AbsDeviationLaw::new(&deviation, m2);
    let m4_left = second.quantile_at(0.5, false);
    let m4_right = second.quantile_at(0.5, true);

    RobustMoments {
        m1,
        m2,
        m4: m4_left.max(0.0),
        m1_unique: coincide(m1_left, m1_right),
        m2_unique: coincide(m2_left, m2_right),
        m4_unique: coincide(m4_left, m4_right),
    }
}

/// Law of `|X - center|` for `X` distributed according to `base`.
#[derive(Debug, Clone, Copy)]
pub struct AbsDeviationLaw<'a, C: ?Sized> {
    base: &'a C,
    center: f64,
}

impl<'a, C: CumulativeLaw + ?Sized> AbsDeviationLaw<'a, C> {
    pub fn new(base: &'a C, center: f64) -> Self {
        Self { base, center }
    }
}

impl<C: CumulativeLaw + ?Sized> CumulativeLaw for AbsDeviationLaw<'_, C> {
    fn cdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        let v = self.base.cdf(self.center + r) - self.base.cdf_left(self.center - r);
        v.clamp(0.0, 1.0)
    }

    fn cdf_left(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let v = self.base.cdf_left(self.center + r) - self.base.cdf(self.center - r);
        v.clamp(0.0, 1.0)
    }
}

fn std_normal_quantile(p: f64) -> f64 {
    let z = -SQRT_2 * erfc_inv(2.0 * p);
    if !z.is_finite() {
        return z;
    }
    // erfc_inv is good to about 1e-10; two Newton steps against the cdf bring
    // F(Q(p)) to within a few ulps of p
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut z = z;
    for _ in 0..2 {
        let d = density(z);
        if d <= 0.0 {
            break;
        }
        z -= (std_normal_cdf(z) - p) / d;
    }
    z
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

impl Distribution {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Distribution::Uniform { lo, hi }
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Self {
        Distribution::Gaussian { mu, sigma }
    }

    pub fn cauchy(x0: f64, scale: f64) -> Self {
        Distribution::Cauchy { x0, scale }
    }

    pub fn bernoulli(p: f64) -> Self {
        Distribution::Bernoulli { p }
    }

    pub fn smoothed_bernoulli(p: f64) -> Self {
        Distribution::SmoothedBernoulli { p }
    }

    pub fn dirac(x: f64) -> Self {
        Distribution::Dirac { x }
    }

    pub fn mixture(weights: Vec<f64>, components: Vec<Distribution>) -> Self {
        Distribution::Mixture {
            weights,
            components,
        }
    }

    pub fn affine(base: Distribution, scale: f64, shift: f64) -> Self {
        Distribution::Affine {
            base: Box::new(base),
            scale,
            shift,
        }
    }

    /// Short variant name, used in error messages and CSV output.
    pub fn kind(&self) -> &'static str {
        match self {
            Distribution::Uniform { .. } => "uniform",
            Distribution::Gaussian { .. } => "gaussian",
            Distribution::Cauchy { .. } => "cauchy",
            Distribution::Bernoulli { .. } => "bernoulli",
            Distribution::SmoothedBernoulli { .. } => "smoothed_bernoulli",
            Distribution::Dirac { .. } => "dirac",
            Distribution::Mixture { .. } => "mixture",
            Distribution::Affine { .. } => "affine",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Distribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("uniform requires finite lo < hi, got [{lo}, {hi}]"));
                }
            }
            Distribution::Gaussian { mu, sigma } => {
                if !(mu.is_finite() && sigma.is_finite() && *sigma > 0.0) {
                    return bad(format!("gaussian requires finite mu and sigma > 0, got ({mu}, {sigma})"));
                }
            }
            Distribution::Cauchy { x0, scale } => {
                if !(x0.is_finite() && scale.is_finite() && *scale > 0.0) {
                    return bad(format!("cauchy requires finite x0 and scale > 0, got ({x0}, {scale})"));
                }
            }
            Distribution::Bernoulli { p } | Distribution::SmoothedBernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("{} requires p in [0, 1], got {p}", self.kind()));
                }
            }
            Distribution::Dirac { x } => {
                if !x.is_finite() {
                    return bad(format!("dirac location must be finite, got {x}"));
                }
            }
            Distribution::Mixture {
                weights,
                components,
            } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return bad(format!(
                        "mixture needs as many weights as components ({} vs {})",
                        weights.len(),
                        components.len()
                    ));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return bad("mixture weights must be nonnegative".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return bad(format!("mixture weights sum to {total}, not 1"));
                }
                for c in components {
                    c.validate()?;
                }
            }
            Distribution::Affine { base, scale, shift } => {
                if !(scale.is_finite() && *scale != 0.0 && shift.is_finite()) {
                    return bad(format!("affine map needs finite nonzero scale, got ({scale}, {shift})"));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform { lo, hi } => {
                if x < *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    (x - lo) / (hi - lo)
                }
            }
            Distribution::Gaussian { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            Distribution::Cauchy { x0, scale } => 0.5 + ((x - x0) / scale).atan() / PI,
            Distribution::Bernoulli { p } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Distribution::SmoothedBernoulli { p } => {
                let bern = Distribution::Bernoulli { p: *p }.cdf(x);
                let unif = Distribution::Uniform { lo: 0.0, hi: 1.0 }.cdf(x);
                0.5 * bern + 0.5 * unif
            }
            Distribution::Dirac { x: at } => {
                if x >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Mixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(x))
                .sum::<f64>()
                .clamp(0.0, 1.0),
            Distribution::Affine { base, scale, shift } => {
                let y = affine_preimage(*scale, *shift, x, false);
                if *scale > 0.0 {
                    base.cdf(y)
                } else {
                    1.0 - base.cdf_left(y)
                }
            }
        }
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform { .. }
            | Distribution::Gaussian { .. }
            | Distribution::Cauchy { .. } => self.cdf(x),
            Distribution::Bernoulli { p } => {
                if x <= 0.0 {
                    0.0
                } else if x <= 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Distribution::SmoothedBernoulli { p } => {
                let bern = Distribution::Bernoulli { p: *p }.cdf_left(x);
                let unif = Distribution::Uniform { lo: 0.0, hi: 1.0 }.cdf(x);
                0.5 * bern + 0.5 * unif
            }
            Distribution::Dirac { x: at } => {
                if x > *at {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Mixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf_left(x))
                .sum::<f64>()
                .clamp(0.0, 1.0),
            Distribution::Affine { base, scale, shift } => {
                let y = affine_preimage(*scale, *shift, x, true);
                if *scale > 0.0 {
                    base.cdf(y)
                } else {
                    1.0 - base.cdf_left(y)
                }
            }
        }
    }

    /// Left quantile `inf {x : F(x) >= p}`.
    pub fn quantile_left(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(self.quantile_unchecked(p, false))
    }

    /// Right quantile `inf {x : F(x) > p}`.
    pub fn quantile_right(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(self.quantile_unchecked(p, true))
    }

    fn quantile_unchecked(&self, p: f64, strict: bool) -> f64 {
        match self {
            Distribution::Uniform { lo, hi } => lo + p * (hi - lo),
            Distribution::Gaussian { mu, sigma } => mu + sigma * std_normal_quantile(p),
            Distribution::Cauchy { x0, scale } => x0 + scale * (PI * (p - 0.5)).tan(),
            Distribution::Bernoulli { p: success } => {
                let mass_at_zero = 1.0 - success;
                let at_zero = if strict {
                    p < mass_at_zero
                } else {
                    p <= mass_at_zero
                };
                if at_zero {
                    0.0
                } else {
                    1.0
                }
            }
            Distribution::Dirac { x } => *x,
            Distribution::Affine { base, scale, shift } => {
                if *scale > 0.0 {
                    scale * base.quantile_unchecked(p, strict) + shift
                } else {
                    scale * base.quantile_unchecked(1.0 - p, !strict) + shift
                }
            }
            Distribution::SmoothedBernoulli { .. } | Distribution::Mixture { .. } => {
                generalized_inverse(|x| self.cdf(x), p, strict)
            }
        }
    }

    /// Draws one variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Distribution::Gaussian { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            Distribution::Cauchy { x0, scale } => {
                let u: f64 = rng.random();
                x0 + scale * (PI * (u - 0.5)).tan()
            }
            Distribution::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::SmoothedBernoulli { p } => {
                if rng.random::<f64>() < 0.5 {
                    Distribution::Bernoulli { p: *p }.sample(rng)
                } else {
                    rng.random::<f64>()
                }
            }
            Distribution::Dirac { x } => *x,
            Distribution::Mixture {
                weights,
                components,
            } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = components.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                components[chosen].sample(rng)
            }
            Distribution::Affine { base, scale, shift } => scale * base.sample(rng) + shift,
        }
    }

    /// Robust moments, closed form where available.
    pub fn robust_moments(&self) -> RobustMoments {
        match self {
            Distribution::Uniform { lo, hi } => {
                let width = hi - lo;
                RobustMoments {
                    m1: 0.5 * (lo + hi),
                    m2: width / 4.0,
                    m4: width / 8.0,
                    m1_unique: true,
                    m2_unique: true,
                    m4_unique: true,
                }
            }
            Distribution::Gaussian { mu, sigma } => {
                let numeric = numeric_robust_moments(self);
                RobustMoments {
                    m1: *mu,
                    m2: sigma * std_normal_quantile(0.75),
                    ..numeric
                }
            }
            Distribution::Cauchy { x0, scale } => RobustMoments {
                m1: *x0,
                m2: *scale,
                m4: scale * (3.0_f64.sqrt() - 1.0),
                m1_unique: true,
                m2_unique: true,
                m4_unique: true,
            },
            Distribution::Dirac { x } => RobustMoments {
                m1: *x,
                m2: 0.0,
                m4: 0.0,
                m1_unique: true,
                m2_unique: true,
                m4_unique: true,
            },
            Distribution::Affine { base, scale, shift } => {
                let inner = base.robust_moments();
                if !inner.m1_unique {
                    return numeric_robust_moments(self);
                }
                RobustMoments {
                    m1: scale * inner.m1 + shift,
                    m2: scale.abs() * inner.m2,
                    m4: scale.abs() * inner.m4,
                    ..inner
                }
            }
            Distribution::Bernoulli { .. }
            | Distribution::SmoothedBernoulli { .. }
            | Distribution::Mixture { .. } => numeric_robust_moments(self),
        }
    }
}

impl CumulativeLaw for Distribution {
    fn cdf(&self, x: f64) -> f64 {
        Distribution::cdf(self, x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        Distribution::cdf_left(self, x)
    }

    fn quantile_at(&self, p: f64, strict: bool) -> f64 {
        self.quantile_unchecked(p, strict)
    }

    fn moments(&self) -> RobustMoments {
        self.robust_moments()
    }
}

/// Grid check of `|F(x1) - F(x2)| >= |x1 - x2| / scale` on adjacent points of
/// an evenly spaced grid over `[lo, hi]`.
fn slope_grid_check<C: CumulativeLaw + ?Sized>(
    law: &C,
    lo: f64,
    hi: f64,
    scale: f64,
    resolution: usize,
) -> bool {
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return true;
    }
    let resolution = resolution.max(1);
    let min_slope = 1.0 / scale;
    let step = (hi - lo) / resolution as f64;
    let mut prev_x = lo;
    let mut prev_f = law.cdf(lo);
    for j in 1..=resolution {
        let x = if j == resolution {
            hi
        } else {
            lo + step * j as f64
        };
        let f = law.cdf(x);
        if f - prev_f < (x - prev_x) * min_slope * (1.0 - SLOPE_SLACK) {
            return false;
        }
        prev_x = x;
        prev_f = f;
    }
    true
}

fn check_t_bar_and_b(t_bar: f64, b: f64) -> Result<()> {
    if !(t_bar > 0.0 && t_bar < 0.5) {
        return Err(Error::InvalidParameter(format!("t_bar = {t_bar} must lie in (0, 1/2)")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("b = {b} must be positive")));
    }
    Ok(())
}

/// The interval `[Q_L(1/2 - t_bar), Q_R(1/2 + t_bar)]` on which the slope
/// condition is imposed.
pub fn quantile_neighbourhood<C: CumulativeLaw + ?Sized>(law: &C, t_bar: f64) -> (f64, f64) {
    (law.quantile_at(0.5 - t_bar, false), law.quantile_at(0.5 + t_bar, true))
}

/// Grid check of membership in the linear-growth family with parameters
/// `(t_bar, b)`, at [`DEFAULT_GRID_RESOLUTION`].
pub fn check_family_ftb(dist: &Distribution, t_bar: f64, b: f64) -> Result<bool> {
    check_family_ftb_with(dist, t_bar, b, DEFAULT_GRID_RESOLUTION)
}

pub fn check_family_ftb_with<C: CumulativeLaw + ?Sized>(
    law: &C,
    t_bar: f64,
    b: f64,
    resolution: usize,
) -> Result<bool> {
    check_t_bar_and_b(t_bar, b)?;
    let moments = law.moments();
    if !moments.m1_unique {
        return Err(Error::NonUniqueMedian {
            left: law.quantile_at(0.5, false),
            right: law.quantile_at(0.5, true),
        });
    }
    if moments.m2 <= 0.0 {
        return Err(Error::ZeroMad);
    }
    let (lo, hi) = quantile_neighbourhood(law, t_bar);
    Ok(slope_grid_check(law, lo, hi, b * moments.m2, resolution))
}

/// Grid check of membership in the MAD-estimable family: the slope
/// condition on the quantile neighbourhood joined with `[m1 - 2 m2, m1 + 2 m2]`,
/// `m2 <= m2_bar`, and `m2 <= kappa * m4`.
pub fn check_family_fmad(dist: &Distribution, params: &FamilyParams) -> Result<bool> {
    check_family_fmad_with(dist, params, DEFAULT_GRID_RESOLUTION)
}

pub fn check_family_fmad_with<C: CumulativeLaw + ?Sized>(
    law: &C,
    params: &FamilyParams,
    resolution: usize,
) -> Result<bool> {
    params.validate()?;
    let moments = law.moments();
    if !moments.m1_unique {
        return Err(Error::NonUniqueMedian {
            left: law.quantile_at(0.5, false),
            right: law.quantile_at(0.5, true),
        });
    }
    if !(moments.m2_unique && moments.m4_unique) {
        return Err(Error::NonUniqueMad);
    }
    if moments.m2 <= 0.0 {
        return Err(Error::ZeroMad);
    }
    let (q_lo, q_hi) = quantile_neighbourhood(law, params.t_bar);
    let lo = q_lo.min(moments.m1 - 2.0 * moments.m2);
    let hi = q_hi.max(moments.m1 + 2.0 * moments.m2);
    let slope_ok = slope_grid_check(law, lo, hi, params.b * moments.m2, resolution);
    let bounded = moments.m2 <= params.m2_bar;
    let kurtosis_ok = moments.m2 <= params.kappa * moments.m4;
    Ok(slope_ok && bounded && kurtosis_ok)
}

/// Largest distance by which `eps`-contamination can move a median of `dist`.
///
/// Evaluates `max{Q_R(1/(2(1-eps))) - m, m - Q_L((1-2eps)/(2(1-eps)))}`
/// maximised over the median set `m`.
pub fn median_shift_bound(dist: &Distribution, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    let upper_level = 1.0 / (2.0 * (1.0 - eps));
    let lower_level = (1.0 - 2.0 * eps) / (2.0 * (1.0 - eps));
    let median_left = dist.quantile_left(0.5)?;
    let median_right = dist.quantile_right(0.5)?;
    let up = dist.quantile_right(upper_level)? - median_left;
    let down = median_right - dist.quantile_left(lower_level)?;
    Ok(up.max(down).max(0.0))
}

/// Unavoidable bias of the median under `eps`-contamination:
/// `B m2 eps / (2 (1 - eps))` for oblivious and prescient adversaries,
/// `B m2 eps` for malicious ones.
pub fn bias_u(eps: f64, b: f64, m2: f64, model: AdversaryModel) -> f64 {
    debug_assert!((0.0..0.5).contains(&eps));
    match model {
        AdversaryModel::Oblivious | AdversaryModel::Prescient => b * m2 * eps / (2.0 * (1.0 - eps)),
        AdversaryModel::Malicious => b * m2 * eps,
    }
}

/// The contamination level above which the median cannot be controlled for
/// a given `t_bar`: `2 t_bar / (1 + 2 t_bar)`.
pub fn max_contamination(t_bar: f64) -> f64 {
    2.0 * t_bar / (1.0 + 2.0 * t_bar)
}
