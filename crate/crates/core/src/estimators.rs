//! Empirical median and MAD, sample-size formulas and confidence intervals
//! under contamination.
//!
//! Everything is stated in terms of the known contamination bound `eps0`
//! rather than the true level. Half-widths use a caller-supplied `m2_used`:
//! simulations pass the true MAD, algorithms pass the bound `m2_bar`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::contamination::AdversaryModel;
use crate::distributions::{bias_u, max_contamination, FamilyParams};
use crate::error::{check_probability, Error, Result};

/// Median of a non-empty slice; even lengths average the two middle values.
pub fn empirical_median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut buf = xs.to_vec();
    Ok(median_in_place(&mut buf))
}

/// Median absolute deviation from the empirical median.
pub fn empirical_mad(xs: &[f64]) -> Result<f64> {
    let m = empirical_median(xs)?;
    let mut dev: Vec<f64> = xs.iter().map(|x| (x - m).abs()).collect();
    Ok(median_in_place(&mut dev))
}

fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (left, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left
            .iter()
            .copied()
            .max_by(f64::total_cmp)
            .expect("even length implies a left half");
        (lower + upper) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Median,
    Mad,
}

/// Known contamination bound, family parameters and adversary model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationParams {
    pub eps0: f64,
    pub family: FamilyParams,
    pub model: AdversaryModel,
}

impl EstimationParams {
    /// Effective quantile perturbation: `eps0 / (2 (1 - eps0))` for oblivious
    /// and prescient adversaries, `eps0` for malicious ones.
    pub fn quantile_shift(&self) -> f64 {
        match self.model {
            AdversaryModel::Oblivious | AdversaryModel::Prescient => {
                self.eps0 / (2.0 * (1.0 - self.eps0))
            }
            AdversaryModel::Malicious => self.eps0,
        }
    }

    /// Bias `U` at level `eps0` for a MAD of `m2`.
    pub fn bias(&self, m2: f64) -> f64 {
        bias_u(self.eps0, self.family.b, m2, self.model)
    }

    fn check_common(&self) -> Result<()> {
        self.family.validate()?;
        if !(self.eps0 >= 0.0 && self.eps0 < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "eps0 = {} must lie in [0, 1/2)",
                self.eps0
            )));
        }
        Ok(())
    }

    /// Checks that the median can be estimated: `eps0 < 2 t_bar / (1 + 2 t_bar)`
    /// (oblivious, prescient) or `eps0 < t_bar` (malicious).
    pub fn validate_median(&self) -> Result<()> {
        self.check_common()?;
        let t_bar = self.family.t_bar;
        if self.quantile_shift() >= t_bar {
            let limit = match self.model {
                AdversaryModel::Malicious => t_bar,
                _ => max_contamination(t_bar),
            };
            return Err(Error::InfeasibleRegime(format!(
                "eps0 = {} must be below {limit} for a {} adversary with t_bar = {t_bar}",
                self.eps0, self.model
            )));
        }
        Ok(())
    }

    /// Checks that the MAD can be estimated: the median condition, plus
    /// `eps0 < 1/B` and a positive `min(t_bar, 1/B) - shift`.
    pub fn validate_mad(&self) -> Result<()> {
        self.validate_median()?;
        let inv_b = 1.0 / self.family.b;
        if self.eps0 >= inv_b || self.quantile_shift() >= self.mad_level() {
            return Err(Error::InfeasibleRegime(format!(
                "eps0 = {} must be below 1/B = {inv_b} and leave min(t_bar, 1/B) above the quantile shift",
                self.eps0
            )));
        }
        Ok(())
    }

    fn mad_level(&self) -> f64 {
        self.family.t_bar.min(1.0 / self.family.b)
    }

    fn median_log(&self, delta: f64) -> f64 {
        match self.model {
            AdversaryModel::Malicious => (3.0 / delta).ln(),
            _ => (2.0 / delta).ln(),
        }
    }

    fn mad_log(&self, delta: f64) -> f64 {
        match self.model {
            AdversaryModel::Malicious => (6.0 / delta).ln(),
            _ => (4.0 / delta).ln(),
        }
    }

    /// Smallest sample size for which the median interval is valid.
    pub fn median_floor(&self, delta: f64) -> Result<f64> {
        self.validate_median()?;
        check_probability(delta)?;
        let gap = self.family.t_bar - self.quantile_shift();
        Ok(2.0 * self.median_log(delta) / (gap * gap))
    }

    /// Smallest sample size for which the MAD interval is valid.
    pub fn mad_floor(&self, delta: f64) -> Result<f64> {
        self.validate_mad()?;
        check_probability(delta)?;
        let gap = self.mad_level() - self.quantile_shift();
        Ok(2.0 * self.mad_log(delta) / (gap * gap))
    }
}

fn check_error_level(e: f64) -> Result<()> {
    if e > 0.0 && e.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("error level E = {e} must be positive")))
    }
}

/// Samples needed for the median to land within `U + E` of the true median
/// with probability `1 - delta`.
pub fn sample_size_median(e: f64, delta: f64, params: &EstimationParams) -> Result<u64> {
    check_error_level(e)?;
    let floor = params.median_floor(delta)?;
    let fam = &params.family;
    let accuracy = 2.0 * (fam.b * fam.m2_bar / e).powi(2) * params.median_log(delta);
    Ok(accuracy.max(floor).ceil() as u64)
}

/// Samples needed for the MAD to land within `(1 + 2 kappa) U + E` of the
/// true MAD with probability `1 - delta`.
pub fn sample_size_mad(e: f64, delta: f64, params: &EstimationParams) -> Result<u64> {
    check_error_level(e)?;
    let floor = params.mad_floor(delta)?;
    let fam = &params.family;
    let accuracy =
        2.0 * 16.0 * (fam.kappa * fam.b * fam.m2_bar / e).powi(2) * params.mad_log(delta);
    Ok(accuracy.max(floor).ceil() as u64)
}

/// A point estimate with its bias and stochastic half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustEstimateReport {
    pub statistic: Statistic,
    pub estimate: f64,
    pub bias_u: f64,
    pub half_width_e: f64,
    pub n: usize,
    pub model: AdversaryModel,
}

impl RobustEstimateReport {
    pub fn interval(&self) -> (f64, f64) {
        let r = self.bias_u + self.half_width_e;
        (self.estimate - r, self.estimate + r)
    }

    pub fn covers(&self, value: f64) -> bool {
        let (lo, hi) = self.interval();
        lo <= value && value <= hi
    }
}

fn check_floor(n: usize, floor: f64) -> Result<()> {
    if (n as f64) < floor {
        Err(Error::TooFewSamples {
            got: n,
            required: floor.ceil() as usize,
        })
    } else {
        Ok(())
    }
}

fn check_m2_used(m2: f64) -> Result<()> {
    if m2 >= 0.0 && m2.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("m2_used = {m2} must be nonnegative")))
    }
}

/// Median confidence interval from contaminated samples.
pub fn estimate_median_ci(
    xs: &[f64],
    delta: f64,
    params: &EstimationParams,
    m2_used: f64,
) -> Result<RobustEstimateReport> {
    check_m2_used(m2_used)?;
    let floor = params.median_floor(delta)?;
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_floor(xs.len(), floor)?;
    let n = xs.len();
    let half_width =
        params.family.b * m2_used * (2.0 * params.median_log(delta) / n as f64).sqrt();
    Ok(RobustEstimateReport {
        statistic: Statistic::Median,
        estimate: empirical_median(xs)?,
        bias_u: params.bias(m2_used),
        half_width_e: half_width,
        n,
        model: params.model,
    })
}

/// MAD confidence interval from contaminated samples.
pub fn estimate_mad_ci(
    xs: &[f64],
    delta: f64,
    params: &EstimationParams,
    m2_used: f64,
) -> Result<RobustEstimateReport> {
    check_m2_used(m2_used)?;
    let floor = params.mad_floor(delta)?;
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_floor(xs.len(), floor)?;
    let n = xs.len();
    let fam = &params.family;
    let half_width =
        4.0 * fam.kappa * fam.b * m2_used * (2.0 * params.mad_log(delta) / n as f64).sqrt();
    Ok(RobustEstimateReport {
        statistic: Statistic::Mad,
        estimate: empirical_mad(xs)?,
        bias_u: (1.0 + 2.0 * fam.kappa) * params.bias(m2_used),
        half_width_e: half_width,
        n,
        model: params.model,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Streaming median over a growing sample, matching [`empirical_median`].
#[derive(Debug, Clone, Default)]
pub struct RunningMedian {
    lower: BinaryHeap<Key>,
    upper: BinaryHeap<Reverse<Key>>,
}

impl RunningMedian {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.lower.len() + self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, x: f64) {
        match self.lower.peek() {
            Some(top) if x > top.0 => self.upper.push(Reverse(Key(x))),
            _ => self.lower.push(Key(x)),
        }
        if self.lower.len() > self.upper.len() + 1 {
            let moved = self.lower.pop().expect("nonempty");
            self.upper.push(Reverse(moved));
        } else if self.upper.len() > self.lower.len() {
            let Reverse(moved) = self.upper.pop().expect("nonempty");
            self.lower.push(moved);
        }
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, xs: I) {
        for x in xs {
            self.push(x);
        }
    }

    pub fn median(&self) -> Option<f64> {
        let lo = self.lower.peek()?.0;
        if self.lower.len() > self.upper.len() {
            Some(lo)
        } else {
            let hi = self.upper.peek().expect("balanced heaps").0 .0;
            Some((lo + hi) / 2.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps0: f64, model: AdversaryModel) -> EstimationParams {
        EstimationParams {
            eps0,
            family: FamilyParams {
                t_bar: 0.4,
                b: 4.0,
                m2_bar: 0.25,
                kappa: 2.0,
            },
            model,
        }
    }

    #[test]
    fn median_examples() {
        assert_eq!(empirical_median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(empirical_median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(empirical_median(&[5.0]).unwrap(), 5.0);
        assert_eq!(empirical_median(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn mad_examples() {
        assert_eq!(empirical_mad(&[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(empirical_mad(&[4.0; 7]).unwrap(), 0.0);
        assert_eq!(empirical_mad(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap(), 1.0);
        assert_eq!(empirical_mad(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn median_sample_sizes() {
        let p = params(0.1, AdversaryModel::Oblivious);
        assert_eq!(sample_size_median(0.1, 0.05, &p).unwrap(), 738);
        let p = params(0.1, AdversaryModel::Malicious);
        assert_eq!(sample_size_median(0.1, 0.05, &p).unwrap(), 819);
        let p = params(0.4, AdversaryModel::Malicious);
        assert!(matches!(
            sample_size_median(0.1, 0.05, &p),
            Err(Error::InfeasibleRegime(_))
        ));
    }

    #[test]
    fn mad_sample_sizes() {
        let p = params(0.05, AdversaryModel::Oblivious);
        // 2 * 16 * (kappa B m2_bar / E)^2 * ln(80) = 3200 * 4.38203 = 14022.49
        assert_eq!(sample_size_mad(0.2, 0.05, &p).unwrap(), 14023);
        let p = params(0.25, AdversaryModel::Oblivious);
        assert!(matches!(
            sample_size_mad(0.2, 0.05, &p),
            Err(Error::InfeasibleRegime(_))
        ));
        let mut p = params(0.05, AdversaryModel::Oblivious);
        p.family.kappa = 0.0;
        let floor = p.mad_floor(0.05).unwrap();
        assert_eq!(sample_size_mad(0.2, 0.05, &p).unwrap(), floor.ceil() as u64);
    }

    #[test]
    fn zero_contamination_interval() {
        let p = params(0.0, AdversaryModel::Oblivious);
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let r = estimate_median_ci(&xs, 0.1, &p, 0.25).unwrap();
        assert_eq!(r.bias_u, 0.0);
        let expected = 4.0 * 0.25 * (2.0 * (2.0_f64 / 0.1).ln() / 1000.0).sqrt();
        assert!((r.half_width_e - expected).abs() < 1e-15);
        assert_eq!(r.estimate, 0.5);

        let m = estimate_mad_ci(&xs, 0.1, &p, 0.25).unwrap();
        assert_eq!(m.bias_u, 0.0);
        let expected = 8.0 * 4.0 * 0.25 * (2.0 * (4.0_f64 / 0.1).ln() / 1000.0).sqrt();
        assert!((m.half_width_e - expected).abs() < 1e-15);
    }

    #[test]
    fn floors_are_enforced() {
        let p = params(0.1, AdversaryModel::Oblivious);
        let xs = vec![0.5; 5];
        assert!(matches!(
            estimate_median_ci(&xs, 0.05, &p, 0.25),
            Err(Error::TooFewSamples { got: 5, .. })
        ));
        assert!(matches!(
            estimate_mad_ci(&xs, 0.05, &p, 0.25),
            Err(Error::TooFewSamples { got: 5, .. })
        ));
    }

    #[test]
    fn running_median_tracks_batch_median() {
        let xs = [5.0, -1.0, 3.0, 3.0, 10.0, 0.5, 7.0, -4.0, 2.0];
        let mut rm = RunningMedian::new();
        assert!(rm.median().is_none());
        for (i, x) in xs.iter().enumerate() {
            rm.push(*x);
            assert_eq!(rm.median().unwrap(), empirical_median(&xs[..=i]).unwrap());
        }
    }
}
