//! Command-line front end: classify models, decide compatibility, evaluate
//! measurement scenarios, and run the randomized screener, all over JSON
//! files.
//!
//! Exit codes carry the outcome so shell pipelines can branch on it:
//! 0 = ok/compatible/no violation, 1 = input error, 2 = structure
//! violation, 3 = incompatible or violation witnessed, 4 = resource
//! limit reached.

use clap::{Parser, Subcommand, ValueEnum};
use kdq_core::compat::{
    check_closure_with_cap, check_enumerated_with_budget, DEFAULT_CLOSURE_CAP,
    DEFAULT_ENUM_BUDGET,
};
use kdq_core::kdq::{kdq_distribution, QuasiDistribution, Scenario};
use kdq_core::model::Model;
use kdq_core::witness::{screen_darwinism, RankPolicy, ScreenVerdict, SearchBudget};
use kdq_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_STRUCTURE: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "kdq",
    version,
    about = "Decide, evaluate, and screen classical compatibility of disjoint \
             measurements on partitioned spin models"
)]
struct Cli {
    /// Worker threads for parallel sections (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    /// Fixed-point closure analysis: decides all nesting depths at once.
    Closure,
    /// Depth-bounded enumeration of nested-commutator constraints.
    Enumerate,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RankPolicyArg {
    /// Complete rank-1 projector families.
    RankOne,
    /// Random rank compositions, coarse families included.
    Random,
}

impl From<RankPolicyArg> for RankPolicy {
    fn from(value: RankPolicyArg) -> Self {
        match value {
            RankPolicyArg::RankOne => RankPolicy::RankOne,
            RankPolicyArg::Random => RankPolicy::Random,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a model's terms against its partition.
    ///
    /// Prints the bucketed structure report; exits 0 when every term is
    /// local, interaction, or remainder, and 2 when a term couples two
    /// observer blocks directly.
    Classify {
        /// Model JSON file.
        model: PathBuf,
    },
    /// Decide measurement compatibility exactly.
    ///
    /// Exits 0 for compatible, 3 for incompatible, 4 when the work budget
    /// ran out first (the JSON then carries the partial report).
    Check {
        /// Model JSON file.
        model: PathBuf,
        /// Decision procedure.
        #[arg(long, value_enum, default_value_t = MethodArg::Closure)]
        method: MethodArg,
        /// Maximum constraint nesting depth (enumerate method only).
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Work budget: commutator evaluations for enumerate, basis
        /// dimensions for closure.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Evaluate a scenario's joint quasiprobability and sequential
    /// distributions.
    Kdq {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Append a CSV table of outcomes after the JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Randomized one-sided screening for non-classicality.
    ///
    /// Exits 3 when a violation above threshold is witnessed (the model
    /// cannot broadcast redundant classical records), 0 when nothing was
    /// found within the budget.
    Screen {
        /// Model JSON file.
        model: PathBuf,
        /// Number of random scenarios to evaluate.
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        /// Master seed; fully determines the output.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Violation threshold on the non-classicality score.
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
        /// Earliest measurement time.
        #[arg(long, default_value_t = 0.0)]
        tmin: f64,
        /// Latest measurement time.
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        /// Projector ranks per sampled measurement.
        #[arg(long, value_enum, default_value_t = RankPolicyArg::RankOne)]
        rank_policy: RankPolicyArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify_error(&err))
        }
    }
}

fn classify_error(err: &Error) -> u8 {
    match err {
        Error::Capacity { .. } | Error::Resource { .. } => EXIT_RESOURCE,
        _ => EXIT_INPUT,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    if let Ok(text) = std::env::var("KDQ_MAX_DIM") {
        let dim: usize = text.trim().parse().map_err(|_| {
            Error::Validation(vec![format!(
                "KDQ_MAX_DIM must be a positive integer, got '{text}'"
            )])
        })?;
        if dim == 0 {
            return Err(Error::Validation(vec![
                "KDQ_MAX_DIM must be a positive integer".to_string(),
            ]));
        }
        kdq_core::densemat::set_max_dim(dim);
    }
    if cli.threads > 0 {
        // Ignore "already built": the pool can only be configured once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }

    match cli.command {
        Command::Classify { model } => {
            let model = Model::from_file(&model)?;
            let report = model.structure();
            print_json(&report.to_json_value());
            Ok(if report.hform_ok() { EXIT_OK } else { EXIT_STRUCTURE })
        }
        Command::Check { model, method, depth, budget } => {
            let model = Model::from_file(&model)?;
            let structure = model.structure();
            let outcome = match method {
                MethodArg::Closure => {
                    let cap = budget
                        .map(|b| usize::try_from(b).unwrap_or(usize::MAX))
                        .unwrap_or(DEFAULT_CLOSURE_CAP);
                    check_closure_with_cap(&structure, cap)
                }
                MethodArg::Enumerate => {
                    let b = budget.unwrap_or(DEFAULT_ENUM_BUDGET);
                    check_enumerated_with_budget(&structure, depth, b)
                }
            };
            match outcome {
                Ok(report) => {
                    print_json(&serde_json::to_value(&report)?);
                    Ok(if report.compatible { EXIT_OK } else { EXIT_VIOLATION })
                }
                Err(Error::Resource { what, partial }) => {
                    let mut value = serde_json::json!({
                        "error": format!("resource budget exhausted: {what}"),
                    });
                    if let Some(partial) = partial {
                        value["partial"] = serde_json::to_value(&*partial)?;
                    }
                    print_json(&value);
                    Ok(EXIT_RESOURCE)
                }
                Err(other) => Err(other),
            }
        }
        Command::Kdq { scenario, csv } => {
            let scenario = Scenario::from_file(&scenario)?;
            let d = kdq_distribution(&scenario)?;
            print_json(&d.to_json_value());
            if csv {
                print!("{}", csv_table(&d));
            }
            Ok(EXIT_OK)
        }
        Command::Screen { model, samples, seed, threshold, tmin, tmax, rank_policy } => {
            let model = Model::from_file(&model)?;
            let budget = SearchBudget {
                samples,
                t_min: tmin,
                t_max: tmax,
                rank_policy: rank_policy.into(),
                seed,
            };
            let report = screen_darwinism(&model, &budget, threshold)?;
            print_json(&report.to_json_value());
            Ok(match report.verdict {
                ScreenVerdict::CannotSupportQd => EXIT_VIOLATION,
                ScreenVerdict::NoViolationFound => EXIT_OK,
            })
        }
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON output"));
}

/// Flat per-outcome projection: one row per outcome tuple, with the
/// quasiprobability split into real and imaginary parts.
fn csv_table(d: &QuasiDistribution) -> String {
    let rank = d.outcome_shape().len();
    let mut out = String::new();
    for axis in 1..=rank {
        out.push_str(&format!("outcome_{axis},"));
    }
    out.push_str("q_re,q_im,tpm\n");
    for ((idx, q), (_, tpm)) in d.q.indexed_values().zip(d.tpm.indexed_values()) {
        for i in idx {
            out.push_str(&format!("{i},"));
        }
        out.push_str(&format!("{:.12},{:.12},{:.12}\n", q.re, q.im, tpm));
    }
    out
}
