//! Lower-tail guarantees for the arm returned by uniform exploration.
//!
//! For a distribution in the linear-growth family, `P(Y >= m1 - t B m2) >=
//! 1/2 + t` for every `t` in `[0, t_bar]`. Plugging in the median and MAD
//! estimates of the selected arm, corrected for estimation error and bias,
//! gives a threshold the selected arm exceeds with probability at least
//! `1/2 + t - 3 delta / k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimationParams;

fn check_t(t: f64, t_bar: f64) -> Result<()> {
    if (0.0..=t_bar).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("t = {t} must lie in [0, {t_bar}]")))
    }
}

/// `m1 - t B m2`, exceeded with probability at least `1/2 + t`.
pub fn lower_tail_bound(m1: f64, m2: f64, b: f64, t: f64, t_bar: f64) -> Result<f64> {
    check_t(t, t_bar)?;
    Ok(m1 - t * b * m2)
}

/// Which MAD enters the bias term `U_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasSource {
    /// The family bound `m2_bar`.
    #[default]
    FamilyBound,
    /// The true MAD of the selected arm.
    SelectedArm,
}

/// `U_bar` at level `eps0` for the chosen MAD source.
pub fn u_bar(params: &EstimationParams, source: BiasSource, selected_m2: f64) -> f64 {
    match source {
        BiasSource::FamilyBound => params.bias(params.family.m2_bar),
        BiasSource::SelectedArm => params.bias(selected_m2),
    }
}

/// Inputs of [`quantile_guarantee`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeInputs {
    pub m1_hat: f64,
    pub m2_hat: f64,
    pub t: f64,
    pub t_bar: f64,
    pub alpha: f64,
    pub u_bar: f64,
    pub b: f64,
    pub kappa: f64,
    pub delta: f64,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityGuarantee {
    pub t: f64,
    pub threshold: f64,
    /// `1/2 + t - 3 delta / k`, clamped to `[0, 1]`.
    pub probability_floor: f64,
    /// Set when the unclamped floor fell outside `[0, 1]`.
    pub vacuous: bool,
}

/// Threshold `(m1_hat - t B m2_hat) - ((1/2 + 2 kappa t B) alpha +
/// (1 + (1 + 2 kappa) B t) U_bar)` and its probability floor.
pub fn quantile_guarantee(inputs: &GuaranteeInputs) -> Result<QualityGuarantee> {
    let GuaranteeInputs {
        m1_hat,
        m2_hat,
        t,
        t_bar,
        alpha,
        u_bar,
        b,
        kappa,
        delta,
        k,
    } = *inputs;
    check_t(t, t_bar)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    for (name, v) in [("alpha", alpha), ("u_bar", u_bar), ("b", b), ("kappa", kappa)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be nonnegative")));
        }
    }
    if !(m1_hat.is_finite() && m2_hat.is_finite()) {
        return Err(Error::InvalidParameter("estimates must be finite".into()));
    }
    let slack = (0.5 + 2.0 * kappa * t * b) * alpha + (1.0 + (1.0 + 2.0 * kappa) * b * t) * u_bar;
    let threshold = (m1_hat - t * b * m2_hat) - slack;
    let raw_floor = 0.5 + t - 3.0 * delta / k as f64;
    Ok(QualityGuarantee {
        t,
        threshold,
        probability_floor: raw_floor.clamp(0.0, 1.0),
        vacuous: !(0.0..=1.0).contains(&raw_floor),
    })
}
