//! Command-line front end.
//!
//! `robandit <command> --config <path> [--seed N] [--parallelism P] [--out DIR]`.
//! The seed comes from `--seed`, then the `ROBANDIT_SEED` environment
//! variable, then the config. Exit status is 0 on success, 1 when the
//! experiment fails or a verify suite misses its threshold, and 2 on usage or
//! config errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{load_config, ExperimentKind};
use crate::runner::run_experiment;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Output directory used when neither `--out` nor `[output] dir` is given.
pub const DEFAULT_OUT_DIR: &str = "robandit-out";

#[derive(Debug, Parser)]
#[command(name = "robandit", version, about = "Contaminated best-arm identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Median or MAD estimation coverage (kinds estimate-median, estimate-mad).
    Estimate(Args),
    /// Best-arm identification (kinds bai-simple, bai-succelim).
    Bai(Args),
    /// Effective gaps of an instance (kind gaps).
    Gaps(Args),
    /// Lower bound and hardness probe on a lifted instance (kind lower-bound).
    Lb(Args),
    /// Invariant and property suites (kind verify).
    Verify(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Experiment config in TOML.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Master seed; overrides ROBANDIT_SEED and the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replications; results do not depend on it.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    parallelism: u64,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Args) {
        match self {
            Command::Estimate(a) => ("estimate", a),
            Command::Bai(a) => ("bai", a),
            Command::Gaps(a) => ("gaps", a),
            Command::Lb(a) => ("lb", a),
            Command::Verify(a) => ("verify", a),
        }
    }

    fn accepts(&self, kind: ExperimentKind) -> bool {
        use ExperimentKind::*;
        matches!(
            (self, kind),
            (Command::Estimate(_), EstimateMedian | EstimateMad)
                | (Command::Bai(_), BaiSimple | BaiSuccelim)
                | (Command::Gaps(_), Gaps)
                | (Command::Lb(_), LowerBound)
                | (Command::Verify(_), Verify)
        )
    }
}

/// Runs the command line and returns the exit status.
pub fn run<I, T>(args: I, env_seed: Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (name, args) = cli.command.parts();
    let mut config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return EXIT_USAGE;
        }
    };
    if !cli.command.accepts(config.kind) {
        eprintln!(
            "error: command `{name}` cannot run experiment kind `{}`",
            config.kind.name()
        );
        return EXIT_USAGE;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    } else if let Some(text) = env_seed {
        match text.trim().parse::<u64>() {
            Ok(seed) => config.seed = seed,
            Err(_) => {
                eprintln!("error: ROBANDIT_SEED = {text:?} is not a 64-bit unsigned integer");
                return EXIT_USAGE;
            }
        }
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    match run_experiment(&config, args.parallelism as usize, &out) {
        Ok(report) => {
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            if report.failed {
                eprintln!("failed: {}", report.failures.join(", "));
                EXIT_FAILURE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
