//! Experiment configuration: TOML parsing and parse-time validation.
//!
//! A config has four flat sections. `[experiment]` picks the experiment kind,
//! replication count and seed. `[instance]` describes the arms (or the
//! smoothed Bernoulli parameters of a lifted instance). `[algorithm]` holds
//! the accuracy, confidence and family parameters. `[output]` names the
//! output directory. Every parameter the chosen kind needs is checked here,
//! so a config that parses can be run.

use std::path::PathBuf;

use robandit_core::bandit::AlgoConfig;
use robandit_core::estimators::EstimationParams;
use robandit_core::lower_bounds::{
    build_lifting_malicious, build_lifting_oblivious, LiftedInstance, MAX_LOWER_BOUND_DELTA,
};
use robandit_core::quality::BiasSource;
use robandit_core::{
    AdversaryModel, AlphaConstant, BanditInstance, ContaminatedArm, ContaminationStrategy, Distribution,
    FamilyParams,
};
use serde::Deserialize;
use thiserror::Error;

use crate::verify::Suite;

/// Replications the hardness probe of a lower-bound experiment needs.
pub const MIN_PROBE_REPLICATIONS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{}unknown key `{key}`: {detail}", at(*line))]
    UnknownKey { key: String, line: Option<usize>, detail: String },
    #[error("{}missing key `{key}`{}", at(*line), suffix(detail))]
    MissingKey { key: String, line: Option<usize>, detail: String },
    #[error("{}`{key}` has the wrong type or value: {detail}", at(*line))]
    TypeMismatch { key: String, line: Option<usize>, detail: String },
    #[error("{}`{key}` is infeasible: {detail}", at(*line))]
    FeasibilityViolation { key: String, line: Option<usize>, detail: String },
    #[error("{}syntax error: {detail}", at(*line))]
    Syntax { line: Option<usize>, detail: String },
    #[error("cannot read config {path}: {detail}")]
    Io { path: String, detail: String },
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

fn suffix(detail: &str) -> String {
    if detail.is_empty() {
        String::new()
    } else {
        format!(": {detail}")
    }
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::MissingKey { key, .. }
            | ConfigError::TypeMismatch { key, .. }
            | ConfigError::FeasibilityViolation { key, .. } => Some(key),
            ConfigError::Syntax { .. } | ConfigError::Io { .. } => None,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::UnknownKey { line, .. }
            | ConfigError::MissingKey { line, .. }
            | ConfigError::TypeMismatch { line, .. }
            | ConfigError::FeasibilityViolation { line, .. }
            | ConfigError::Syntax { line, .. } => *line,
            ConfigError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EstimateMedian,
    EstimateMad,
    BaiSimple,
    BaiSuccelim,
    Gaps,
    LowerBound,
    Verify,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::EstimateMedian => "estimate-median",
            ExperimentKind::EstimateMad => "estimate-mad",
            ExperimentKind::BaiSimple => "bai-simple",
            ExperimentKind::BaiSuccelim => "bai-succelim",
            ExperimentKind::Gaps => "gaps",
            ExperimentKind::LowerBound => "lower-bound",
            ExperimentKind::Verify => "verify",
        }
    }
}

/// Which lifting turns the smoothed Bernoulli parameters into an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftingKind {
    Oblivious,
    Malicious,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    #[serde(default)]
    instance: RawInstance,
    #[serde(default)]
    algorithm: RawAlgorithm,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: ExperimentKind,
    replications: Option<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    suites: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(default)]
    eps: f64,
    #[serde(default)]
    arms: Vec<RawArm>,
    #[serde(default)]
    sber_p: Vec<f64>,
    lifting: Option<LiftingKind>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArm {
    dist: Distribution,
    strategy: Option<ContaminationStrategy>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    model: Option<AdversaryModel>,
    alpha: Option<f64>,
    delta: Option<f64>,
    t_bar: Option<f64>,
    b: Option<f64>,
    m2_bar: Option<f64>,
    kappa: Option<f64>,
    eps0: Option<f64>,
    half_width: Option<f64>,
    max_rounds: Option<u64>,
    #[serde(default)]
    early_stop: bool,
    #[serde(default)]
    alpha_constant: AlphaConstant,
    c_eta: Option<f64>,
    #[serde(default)]
    t_values: Vec<f64>,
    #[serde(default)]
    bias_source: BiasSource,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// Algorithm parameters after defaults are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmParams {
    pub model: AdversaryModel,
    pub alpha: f64,
    pub delta: f64,
    pub family: Option<FamilyParams>,
    /// Slope constant, also present when only `b` was given.
    pub b: Option<f64>,
    pub eps0: f64,
    pub half_width: Option<f64>,
    pub max_rounds: u64,
    pub early_stop: bool,
    pub alpha_constant: AlphaConstant,
    pub c_eta: f64,
    pub t_values: Vec<f64>,
    pub bias_source: BiasSource,
}

impl AlgorithmParams {
    /// Algorithm configuration; `None` when the family is incomplete.
    pub fn algo_config(&self) -> Option<AlgoConfig> {
        let family = self.family?;
        let mut config = AlgoConfig::new(self.alpha, self.delta, family, self.eps0);
        config.max_rounds = self.max_rounds;
        config.early_stop = self.early_stop;
        config.alpha_constant = self.alpha_constant;
        Some(config)
    }

    pub fn estimation_params(&self) -> Option<EstimationParams> {
        Some(EstimationParams {
            eps0: self.eps0,
            family: self.family?,
            model: self.model,
        })
    }
}

/// A validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub replications: usize,
    /// True when `replications` came from the file rather than a default.
    pub replications_given: bool,
    pub seed: u64,
    pub instance: Option<BanditInstance>,
    pub lifting: Option<LiftedInstance>,
    pub algorithm: AlgorithmParams,
    pub suites: Vec<Suite>,
    pub output_dir: Option<PathBuf>,
}

/// Reads and validates a config file.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_config(&text)
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| classify(text, &e))?;
    Validator { text }.finish(raw)
}

/// 1-based line containing byte `offset`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Name between the first pair of backticks.
fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// Key assigned on `line`, when the line is a `key = value` pair.
fn key_on_line(text: &str, line: usize) -> Option<String> {
    let content = text.lines().nth(line.checked_sub(1)?)?;
    let (key, _) = content.split_once('=')?;
    let key = key.trim();
    (!key.is_empty() && !key.starts_with('[')).then(|| key.to_string())
}

fn classify(text: &str, err: &toml::de::Error) -> ConfigError {
    let line = err.span().map(|s| line_of(text, s.start));
    let detail = err.message().trim().to_string();
    let fallback = || line.and_then(|l| key_on_line(text, l)).unwrap_or_else(|| "?".into());
    if detail.starts_with("unknown field") {
        ConfigError::UnknownKey {
            key: backticked(&detail).unwrap_or_else(fallback),
            line,
            detail,
        }
    } else if detail.starts_with("missing field") {
        ConfigError::MissingKey {
            key: backticked(&detail).unwrap_or_else(fallback),
            line,
            detail: String::new(),
        }
    } else if detail.contains("invalid type")
        || detail.contains("invalid value")
        || detail.contains("unknown variant")
        || detail.contains("invalid length")
    {
        ConfigError::TypeMismatch {
            key: fallback(),
            line,
            detail,
        }
    } else {
        ConfigError::Syntax { line, detail }
    }
}

struct Validator<'a> {
    text: &'a str,
}

impl Validator<'_> {
    /// Line of `key` inside `[section]`, or of the section header when the
    /// key is absent.
    fn line(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = "";
        let mut header = None;
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = name.trim();
                if current == section {
                    header = Some(i + 1);
                }
                continue;
            }
            if current == section {
                if let Some((k, _)) = line.split_once('=') {
                    if k.trim() == key {
                        return Some(i + 1);
                    }
                }
            }
        }
        header
    }

    fn infeasible(&self, section: &str, key: &str, detail: impl Into<String>) -> ConfigError {
        ConfigError::FeasibilityViolation {
            key: format!("{section}.{key}"),
            line: self.line(section, key),
            detail: detail.into(),
        }
    }

    fn missing(&self, section: &str, key: &str, why: &str) -> ConfigError {
        ConfigError::MissingKey {
            key: format!("{section}.{key}"),
            line: self.line(section, key),
            detail: why.into(),
        }
    }

    fn require(&self, value: Option<f64>, key: &str, kind: ExperimentKind) -> Result<f64, ConfigError> {
        value.ok_or_else(|| self.missing("algorithm", key, &format!("required by {}", kind.name())))
    }

    fn family(&self, raw: &RawAlgorithm, kind: ExperimentKind) -> Result<FamilyParams, ConfigError> {
        let family = FamilyParams {
            t_bar: self.require(raw.t_bar, "t_bar", kind)?,
            b: self.require(raw.b, "b", kind)?,
            m2_bar: self.require(raw.m2_bar, "m2_bar", kind)?,
            kappa: self.require(raw.kappa, "kappa", kind)?,
        };
        family.validate().map_err(|e| self.infeasible("algorithm", "t_bar", e.to_string()))?;
        Ok(family)
    }

    fn probability(&self, section: &str, key: &str, value: f64) -> Result<f64, ConfigError> {
        if value > 0.0 && value < 1.0 {
            Ok(value)
        } else {
            Err(self.infeasible(section, key, format!("{value} must lie in (0, 1)")))
        }
    }

    fn arms(&self, raw: &RawInstance, model: AdversaryModel) -> Result<BanditInstance, ConfigError> {
        if raw.arms.is_empty() {
            return Err(self.missing("instance", "arms", "at least one arm is required"));
        }
        if !(0.0..0.5).contains(&raw.eps) {
            return Err(self.infeasible("instance", "eps", format!("{} must lie in [0, 1/2)", raw.eps)));
        }
        let mut arms = Vec::with_capacity(raw.arms.len());
        for (i, arm) in raw.arms.iter().enumerate() {
            let built = match &arm.strategy {
                Some(strategy) => ContaminatedArm::new(arm.dist.clone(), strategy.clone(), raw.eps, model),
                None if raw.eps > 0.0 => {
                    return Err(self.missing(
                        "instance",
                        "arms",
                        &format!("arm {i} needs a strategy because eps = {} > 0", raw.eps),
                    ))
                }
                None => ContaminatedArm::clean(arm.dist.clone(), model),
            };
            arms.push(built.map_err(|e| self.infeasible("instance", "arms", format!("arm {i}: {e}")))?);
        }
        BanditInstance::new(arms).map_err(|e| self.infeasible("instance", "arms", e.to_string()))
    }

    fn unique_medians(&self, instance: &BanditInstance) -> Result<(), ConfigError> {
        for (i, arm) in instance.arms().iter().enumerate() {
            if let Err(e) = arm.dist().robust_moments().require_unique_median() {
                return Err(self.infeasible("instance", "arms", format!("arm {i}: {e}")));
            }
        }
        Ok(())
    }

    fn eps_within_bound(&self, eps: f64, eps0: f64) -> Result<(), ConfigError> {
        if eps > eps0 {
            return Err(self.infeasible(
                "algorithm",
                "eps0",
                format!("the instance contamination eps = {eps} exceeds the assumed bound eps0 = {eps0}"),
            ));
        }
        Ok(())
    }

    fn finish(&self, raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
        let kind = raw.experiment.kind;
        let replications = raw.experiment.replications.unwrap_or(1);
        if replications == 0 {
            return Err(self.infeasible("experiment", "replications", "must be at least 1"));
        }
        let suites = if kind == ExperimentKind::Verify {
            self.suites(&raw.experiment.suites)?
        } else {
            if !raw.experiment.suites.is_empty() {
                return Err(self.infeasible("experiment", "suites", "only used by the verify kind"));
            }
            Vec::new()
        };

        let alg = &raw.algorithm;
        let delta = match alg.delta {
            Some(d) => self.probability("algorithm", "delta", d)?,
            None => 0.1,
        };
        let alpha = alg.alpha.unwrap_or(0.0);
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(self.infeasible("algorithm", "alpha", format!("{alpha} must be nonnegative")));
        }
        let c_eta = alg.c_eta.unwrap_or(robandit_core::lower_bounds::DEFAULT_C_ETA);
        if !(c_eta > 0.0 && c_eta.is_finite()) {
            return Err(self.infeasible("algorithm", "c_eta", format!("{c_eta} must be positive")));
        }
        let max_rounds = alg.max_rounds.unwrap_or(robandit_core::bandit::DEFAULT_MAX_ROUNDS);
        if max_rounds == 0 {
            return Err(self.infeasible("algorithm", "max_rounds", "must be at least 1"));
        }
        let eps0 = alg.eps0.unwrap_or(raw.instance.eps);
        let model = alg.model.unwrap_or(AdversaryModel::Oblivious);
        let mut algorithm = AlgorithmParams {
            model,
            alpha,
            delta,
            family: None,
            b: alg.b,
            eps0,
            half_width: alg.half_width,
            max_rounds,
            early_stop: alg.early_stop,
            alpha_constant: alg.alpha_constant,
            c_eta,
            t_values: alg.t_values.clone(),
            bias_source: alg.bias_source,
        };
        let mut config = ExperimentConfig {
            kind,
            replications,
            replications_given: raw.experiment.replications.is_some(),
            seed: raw.experiment.seed,
            instance: None,
            lifting: None,
            algorithm: algorithm.clone(),
            suites,
            output_dir: raw.output.dir.clone(),
        };
        if !algorithm.t_values.is_empty() && kind != ExperimentKind::BaiSimple {
            return Err(self.infeasible("algorithm", "t_values", "only used by the bai-simple kind"));
        }

        match kind {
            ExperimentKind::Verify => {}
            ExperimentKind::Gaps => {
                let b = self.require(alg.b, "b", kind)?;
                if !(b > 0.0 && b.is_finite()) {
                    return Err(self.infeasible("algorithm", "b", format!("{b} must be positive")));
                }
                let instance = self.arms(&raw.instance, model)?;
                self.unique_medians(&instance)?;
                config.instance = Some(instance);
            }
            ExperimentKind::EstimateMedian | ExperimentKind::EstimateMad => {
                let family = self.family(alg, kind)?;
                algorithm.family = Some(family);
                let half_width = self.require(alg.half_width, "half_width", kind)?;
                if !(half_width > 0.0 && half_width.is_finite()) {
                    return Err(self.infeasible("algorithm", "half_width", format!("{half_width} must be positive")));
                }
                self.regime(&algorithm, kind == ExperimentKind::EstimateMad)?;
                let instance = self.arms(&raw.instance, model)?;
                if instance.k() != 1 {
                    return Err(self.infeasible(
                        "instance",
                        "arms",
                        format!("estimation takes exactly one arm, got {}", instance.k()),
                    ));
                }
                self.eps_within_bound(instance.eps(), eps0)?;
                let moments = instance.arms()[0].dist().robust_moments();
                if kind == ExperimentKind::EstimateMedian {
                    self.unique_medians(&instance)?;
                } else if !moments.m1_unique || !moments.m2_unique {
                    return Err(self.infeasible(
                        "instance",
                        "arms",
                        "the arm needs a unique median and MAD to score coverage",
                    ));
                }
                config.instance = Some(instance);
            }
            ExperimentKind::BaiSimple | ExperimentKind::BaiSuccelim => {
                algorithm.family = Some(self.family(alg, kind)?);
                if kind == ExperimentKind::BaiSimple && alpha <= 0.0 {
                    return Err(self.infeasible("algorithm", "alpha", "uniform exploration needs alpha > 0"));
                }
                self.regime(&algorithm, false)?;
                let instance = self.arms(&raw.instance, model)?;
                self.eps_within_bound(instance.eps(), eps0)?;
                self.unique_medians(&instance)?;
                let t_bar = algorithm.family.map(|f| f.t_bar).unwrap_or_default();
                for &t in &algorithm.t_values {
                    if !(0.0..=t_bar).contains(&t) {
                        return Err(self.infeasible("algorithm", "t_values", format!("t = {t} must lie in [0, {t_bar}]")));
                    }
                }
                config.instance = Some(instance);
            }
            ExperimentKind::LowerBound => {
                algorithm.family = Some(self.family(alg, kind)?);
                if delta >= MAX_LOWER_BOUND_DELTA {
                    return Err(self.infeasible(
                        "algorithm",
                        "delta",
                        format!("the lower bound holds for delta < {MAX_LOWER_BOUND_DELTA}, got {delta}"),
                    ));
                }
                if replications < MIN_PROBE_REPLICATIONS {
                    return Err(self.infeasible(
                        "experiment",
                        "replications",
                        format!("the hardness probe needs at least {MIN_PROBE_REPLICATIONS}, got {replications}"),
                    ));
                }
                let lifting_kind = raw
                    .instance
                    .lifting
                    .ok_or_else(|| self.missing("instance", "lifting", "required by lower-bound"))?;
                if raw.instance.sber_p.len() < 2 {
                    return Err(self.missing("instance", "sber_p", "at least two arm parameters are required"));
                }
                let lifted = match lifting_kind {
                    LiftingKind::Oblivious => build_lifting_oblivious(&raw.instance.sber_p, raw.instance.eps),
                    LiftingKind::Malicious => build_lifting_malicious(&raw.instance.sber_p, raw.instance.eps),
                }
                .map_err(|e| self.infeasible("instance", "sber_p", e.to_string()))?;
                algorithm.model = lifted.model;
                self.regime(&algorithm, false)?;
                self.eps_within_bound(lifted.eps, eps0)?;
                config.lifting = Some(lifted);
            }
        }
        config.algorithm = algorithm;
        Ok(config)
    }

    /// Checks that `eps0` leaves room inside the quantile window.
    fn regime(&self, algorithm: &AlgorithmParams, mad: bool) -> Result<(), ConfigError> {
        let params = algorithm.estimation_params().expect("family set by caller");
        let checked = if mad { params.validate_mad() } else { params.validate_median() };
        checked.map_err(|e| {
            let reason = match (mad, algorithm.model) {
                (true, _) => "MAD estimation needs eps0 < 1/B and eps0 inside the median regime",
                (false, AdversaryModel::Malicious) => {
                    "a malicious adversary can move the median by eps0 quantiles, so eps0 must stay below t_bar"
                }
                (false, _) => {
                    "an oblivious or prescient adversary can move the median by eps0/(2(1-eps0)) quantiles, which must stay below t_bar"
                }
            };
            self.infeasible("algorithm", "eps0", format!("{e} ({reason})"))
        })?;
        if let Some(config) = algorithm.algo_config() {
            config
                .validate(algorithm.model)
                .map_err(|e| self.infeasible("algorithm", "alpha", e.to_string()))?;
        }
        Ok(())
    }

    fn suites(&self, names: &[String]) -> Result<Vec<Suite>, ConfigError> {
        if names.is_empty() {
            return Ok(Suite::ALL.to_vec());
        }
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let suite = Suite::from_name(name).ok_or_else(|| ConfigError::TypeMismatch {
                key: "experiment.suites".into(),
                line: self.line("experiment", "suites"),
                detail: format!(
                    "unknown suite `{name}`, expected one of {}",
                    Suite::ALL.map(|s| s.name()).join(", ")
                ),
            })?;
            if !out.contains(&suite) {
                out.push(suite);
            }
        }
        Ok(out)
    }
}
