//! Runs a validated experiment and writes its CSV files.
//!
//! Replication `i` draws from a ChaCha8 stream seeded with
//! `replication_seed(seed, i)`, and records are written in index order, so
//! the files depend only on the config and the seed.

use std::fs;
use std::path::{Path, PathBuf};

use robandit_core::bandit::{effective_gaps, run_simple, run_succ_elim_cbai, BanditRunResult};
use robandit_core::estimators::{
    empirical_median, estimate_mad_ci, estimate_median_ci, sample_size_mad, sample_size_median,
};
use robandit_core::lower_bounds::hardness_probe;
use robandit_core::quality::{quantile_guarantee, u_bar, GuaranteeInputs};
use robandit_core::replication::{replication_seed, run_replications, wilson_interval, Z_95};
use robandit_core::{BanditInstance, Termination};
use thiserror::Error;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::verify::{run_suite, VerifyOptions};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] robandit_core::Error),
    #[error("cannot write {path}: {detail}")]
    Io { path: String, detail: String },
    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Files written by a run and whether the experiment itself failed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Set when a verify suite missed its threshold.
    pub failed: bool,
    pub failures: Vec<String>,
}

struct Table {
    name: &'static str,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&str]) -> Self {
        Self {
            name,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<PathBuf, RunError> {
        let path = dir.join(self.name);
        let mut out = csv::Writer::from_path(&path)?;
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush().map_err(|e| RunError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        Ok(path)
    }
}

fn num(x: f64) -> String {
    debug_assert!(x.is_finite(), "non-finite CSV cell");
    format!("{x}")
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn termination(t: Termination) -> &'static str {
    match t {
        Termination::SingleSurvivor => "single_survivor",
        Termination::EarlyStop => "early_stop",
        Termination::RoundCap => "round_cap",
        Termination::Budget => "budget",
    }
}

/// `metric,value` summary with success rate, Wilson interval and pull counts.
fn summary(kind: ExperimentKind, successes: usize, pulls: &[f64]) -> Result<Table, RunError> {
    let trials = pulls.len();
    let (lo, hi) = wilson_interval(successes, trials, Z_95);
    let mut table = Table::new("summary.csv", &["metric", "value"]);
    let mean = pulls.iter().sum::<f64>() / trials as f64;
    let rows: [(&str, String); 8] = [
        ("kind", kind.name().to_string()),
        ("replications", trials.to_string()),
        ("successes", successes.to_string()),
        ("success_rate", num(successes as f64 / trials as f64)),
        ("wilson95_lower", num(lo)),
        ("wilson95_upper", num(hi)),
        ("mean_total_pulls", num(mean)),
        ("median_total_pulls", num(empirical_median(pulls)?)),
    ];
    for (k, v) in rows {
        table.push(vec![k.into(), v]);
    }
    Ok(table)
}

/// Runs `config` with `parallelism` workers and writes the output files into
/// `out_dir`, creating it if needed.
pub fn run_experiment(config: &ExperimentConfig, parallelism: usize, out_dir: &Path) -> Result<RunReport, RunError> {
    fs::create_dir_all(out_dir).map_err(|e| RunError::Io {
        path: out_dir.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut failures = Vec::new();
    let tables = match config.kind {
        ExperimentKind::EstimateMedian | ExperimentKind::EstimateMad => estimate(config, parallelism)?,
        ExperimentKind::BaiSimple | ExperimentKind::BaiSuccelim => bai(config, parallelism)?,
        ExperimentKind::Gaps => gaps(config)?,
        ExperimentKind::LowerBound => lower_bound(config, parallelism)?,
        ExperimentKind::Verify => verify(config, parallelism, &mut failures)?,
    };
    let files = tables
        .iter()
        .map(|t| t.write(out_dir))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunReport {
        files,
        failed: !failures.is_empty(),
        failures,
    })
}

fn instance(config: &ExperimentConfig) -> &BanditInstance {
    config.instance.as_ref().expect("validated config carries an instance")
}

fn estimate(config: &ExperimentConfig, parallelism: usize) -> Result<Vec<Table>, RunError> {
    let mad = config.kind == ExperimentKind::EstimateMad;
    let arm = &instance(config).arms()[0];
    let alg = &config.algorithm;
    let params = alg.estimation_params().expect("validated family");
    let e = alg.half_width.expect("validated half width");
    let n = if mad {
        sample_size_mad(e, alg.delta, &params)?
    } else {
        sample_size_median(e, alg.delta, &params)?
    };
    let moments = arm.dist().robust_moments();
    let truth = if mad { moments.m2 } else { moments.m1 };
    let reports = run_replications(config.replications, config.seed, parallelism, |_, rng| {
        let xs = arm.draw_batch(n as usize, rng);
        if mad {
            estimate_mad_ci(&xs, alg.delta, &params, params.family.m2_bar)
        } else {
            estimate_median_ci(&xs, alg.delta, &params, params.family.m2_bar)
        }
    })?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut records = Table::new(
        "records.csv",
        &["replication", "seed", "n", "estimate", "truth", "bias", "half_width", "lower", "upper", "covered"],
    );
    for (i, r) in reports.iter().enumerate() {
        let (lo, hi) = r.interval();
        records.push(vec![
            i.to_string(),
            replication_seed(config.seed, i).to_string(),
            r.n.to_string(),
            num(r.estimate),
            num(truth),
            num(r.bias_u),
            num(r.half_width_e),
            num(lo),
            num(hi),
            flag(r.covers(truth)),
        ]);
    }
    let successes = reports.iter().filter(|r| r.covers(truth)).count();
    let pulls = vec![n as f64; reports.len()];
    Ok(vec![records, summary(config.kind, successes, &pulls)?])
}

fn bai(config: &ExperimentConfig, parallelism: usize) -> Result<Vec<Table>, RunError> {
    let instance = instance(config);
    let alg = &config.algorithm;
    let algo = alg.algo_config().expect("validated family");
    let gaps = effective_gaps(instance, &algo.family)?;
    let params = algo.estimation_params(instance.model());
    let k = instance.k();
    let simple = config.kind == ExperimentKind::BaiSimple;
    // (run, per-t (threshold, floor, vacuous, fresh draw))
    type Outcome = (BanditRunResult, Vec<(f64, f64, bool, f64)>);
    let outcomes: Vec<Outcome> = run_replications(config.replications, config.seed, parallelism, |_, rng| {
        let run = if simple {
            run_simple(instance, &algo, rng)?
        } else {
            run_succ_elim_cbai(instance, &algo, rng)?
        };
        let mut quality = Vec::with_capacity(alg.t_values.len());
        if simple {
            let arm = &instance.arms()[run.chosen_arm];
            let m2 = arm.dist().robust_moments().m2;
            for &t in &alg.t_values {
                let g = quantile_guarantee(&GuaranteeInputs {
                    m1_hat: run.chosen_median.expect("uniform exploration reports the median"),
                    m2_hat: run.chosen_mad.expect("uniform exploration reports the MAD"),
                    t,
                    t_bar: algo.family.t_bar,
                    alpha: algo.alpha,
                    u_bar: u_bar(&params, alg.bias_source, m2),
                    b: algo.family.b,
                    kappa: algo.family.kappa,
                    delta: algo.delta,
                    k,
                })?;
                quality.push((g.threshold, g.probability_floor, g.vacuous, arm.dist().sample(rng)));
            }
        }
        Ok((run, quality))
    })?
    .into_iter()
    .collect::<Result<Vec<_>, robandit_core::Error>>()?;

    let success = |run: &BanditRunResult| gaps.gaps[run.chosen_arm].unwrap_or(0.0) <= algo.alpha;
    let mut header: Vec<String> = [
        "replication",
        "seed",
        "chosen_arm",
        "success",
        "total_pulls",
        "rounds",
        "terminated_by",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..k).map(|i| format!("pulls_arm{i}")));
    let mut records = Table {
        name: "records.csv",
        header,
        rows: Vec::new(),
    };
    for (i, (run, _)) in outcomes.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            replication_seed(config.seed, i).to_string(),
            run.chosen_arm.to_string(),
            flag(success(run)),
            run.total_pulls.to_string(),
            run.rounds.to_string(),
            termination(run.terminated_by).to_string(),
        ];
        row.extend(run.pulls_per_arm.iter().map(|p| p.to_string()));
        records.push(row);
    }
    let successes = outcomes.iter().filter(|(run, _)| success(run)).count();
    let pulls: Vec<f64> = outcomes.iter().map(|(run, _)| run.total_pulls as f64).collect();
    let mut summary = summary(config.kind, successes, &pulls)?;
    let capped = outcomes.iter().filter(|(run, _)| run.hit_round_cap()).count();
    summary.push(vec!["round_cap_hits".into(), capped.to_string()]);
    let mut tables = vec![records];
    if !alg.t_values.is_empty() {
        let mut quality = Table::new(
            "quality.csv",
            &["replication", "t", "threshold", "probability_floor", "vacuous", "fresh_draw", "exceeded"],
        );
        for (i, (_, q)) in outcomes.iter().enumerate() {
            for (&t, &(threshold, floor, vacuous, y)) in alg.t_values.iter().zip(q) {
                quality.push(vec![
                    i.to_string(),
                    num(t),
                    num(threshold),
                    num(floor),
                    flag(vacuous),
                    num(y),
                    flag(y >= threshold),
                ]);
            }
        }
        for (j, &t) in alg.t_values.iter().enumerate() {
            let hits = outcomes.iter().filter(|(_, q)| q[j].3 >= q[j].0).count();
            summary.push(vec![format!("quality_rate_t{t}"), num(hits as f64 / outcomes.len() as f64)]);
            summary.push(vec![format!("quality_floor_t{t}"), num(outcomes[0].1[j].1)]);
        }
        tables.push(quality);
    }
    tables.push(summary);
    Ok(tables)
}

fn gaps(config: &ExperimentConfig) -> Result<Vec<Table>, RunError> {
    let instance = instance(config);
    let b = config.algorithm.b.expect("validated slope constant");
    let scales = vec![b; instance.k()];
    let report = robandit_core::bandit::effective_gaps_with_scales(instance, &scales)?;
    let mut table = Table::new("gaps.csv", &["arm", "median", "bias", "is_best", "gap", "feasible"]);
    for i in 0..instance.k() {
        let gap = report.gaps[i];
        table.push(vec![
            i.to_string(),
            num(report.medians[i]),
            num(report.biases[i]),
            flag(i == report.best_arm),
            num(gap.unwrap_or(0.0)),
            flag(gap.is_none_or(|g| g > 0.0)),
        ]);
    }
    let mut summary = Table::new("summary.csv", &["metric", "value"]);
    summary.push(vec!["kind".into(), config.kind.name().into()]);
    summary.push(vec!["best_arm".into(), report.best_arm.to_string()]);
    if let Some(g) = report.min_gap() {
        summary.push(vec!["min_gap".into(), num(g)]);
    }
    summary.push(vec!["infeasible_arms".into(), report.infeasible.len().to_string()]);
    Ok(vec![table, summary])
}

fn lower_bound(config: &ExperimentConfig, parallelism: usize) -> Result<Vec<Table>, RunError> {
    let lifted = config.lifting.as_ref().expect("validated lifting");
    let algo = config.algorithm.algo_config().expect("validated family");
    let report = hardness_probe(
        lifted,
        &algo,
        config.replications,
        config.seed,
        parallelism,
        config.algorithm.c_eta,
    )?;
    let mut table = Table::new(
        "lb.csv",
        &["k", "gap", "delta", "lb_value", "mean_pulls", "ratio", "success_rate", "round_cap_hits"],
    );
    table.push(vec![
        report.k.to_string(),
        num(report.gap),
        num(report.delta),
        num(report.lb_value),
        num(report.mean_pulls),
        report.ratio.map(num).unwrap_or_default(),
        num(report.success_rate),
        report.round_cap_hits.to_string(),
    ]);
    let successes = (report.success_rate * report.replications as f64).round() as usize;
    let (lo, hi) = wilson_interval(successes, report.replications, Z_95);
    let mut summary = Table::new("summary.csv", &["metric", "value"]);
    for (k, v) in [
        ("kind", config.kind.name().to_string()),
        ("replications", report.replications.to_string()),
        ("successes", successes.to_string()),
        ("success_rate", num(report.success_rate)),
        ("wilson95_lower", num(lo)),
        ("wilson95_upper", num(hi)),
        ("mean_total_pulls", num(report.mean_pulls)),
        ("lb_value", num(report.lb_value)),
    ] {
        summary.push(vec![k.into(), v]);
    }
    Ok(vec![table, summary])
}

fn verify(config: &ExperimentConfig, parallelism: usize, failures: &mut Vec<String>) -> Result<Vec<Table>, RunError> {
    let options = VerifyOptions {
        seed: config.seed,
        parallelism,
        replications: config.replications_given.then_some(config.replications),
    };
    let mut table = Table::new(
        "verify.csv",
        &["suite", "passed", "statistic", "comparison", "threshold", "trials", "detail"],
    );
    for &suite in &config.suites {
        let report = run_suite(suite, &options)?;
        if !report.passed {
            failures.push(suite.name().to_string());
        }
        table.push(vec![
            suite.name().into(),
            flag(report.passed),
            format!("{}", report.statistic),
            report.comparison.into(),
            format!("{}", report.threshold),
            report.trials.to_string(),
            report.detail,
        ]);
    }
    let mut summary = Table::new("summary.csv", &["metric", "value"]);
    summary.push(vec!["kind".into(), config.kind.name().into()]);
    summary.push(vec!["suites".into(), config.suites.len().to_string()]);
    summary.push(vec!["passed".into(), (config.suites.len() - failures.len()).to_string()]);
    summary.push(vec!["failed".into(), failures.len().to_string()]);
    Ok(vec![table, summary])
}
