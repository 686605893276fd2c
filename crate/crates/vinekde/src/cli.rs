//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vinekde_core::vinefit::MIN_OBSERVATIONS;
use vinekde_core::{fit_vine, FitOptions};

use crate::classification::{load_labeled_csv, run_classification, write_scores, ClassifyOptions};
use crate::csvio::{default_header, read_table, write_table};
use crate::error::{AppError, AppResult};
use crate::harness::{parse_scenario, run_scenario, ScenarioSpec, DEFAULT_MC_SAMPLES, DEFAULT_REPLICATES, DEFAULT_TAU};
use crate::model_file;

#[derive(Debug, Parser)]
#[command(name = "vinekde", version, about = "Kernel density estimation with simplified vine copulas")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "VINEKDE_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a vine density estimator to a CSV sample and save it as JSON.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Factor applied to the marginal bandwidths.
        #[arg(long, default_value_t = 1.0)]
        bandwidth_multiplier: f64,
        /// Level of the Kendall's tau independence test (off when omitted).
        #[arg(long)]
        independence_level: Option<f64>,
        /// `normalized` or `literal` h-functions.
        #[arg(long, default_value = "normalized")]
        h_form: String,
    },
    /// Evaluate a saved model at the rows of a CSV file.
    Density {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a sample from one of the benchmark targets.
    Simulate {
        /// gauss, gumbel or nonsimplified.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicated IAE comparison of the vine estimator and the product-kernel baseline.
    Benchmark {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        mc: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-class Bayes classification with one vine per class.
    Classify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label_col: String,
        /// Leading share of rows used for training.
        #[arg(long, default_value_t = 0.6667)]
        split: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Train on at most this many rows per class.
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        prior_g: f64,
        #[arg(long, default_value_t = 2.0)]
        bandwidth_multiplier: f64,
        #[arg(long, default_value_t = 0.05)]
        independence_level: f64,
        /// Keep every pair-copula nonparametric.
        #[arg(long)]
        no_independence_test: bool,
    },
}

fn invalid(msg: impl Into<String>) -> AppError {
    AppError::Validation(msg.into())
}

fn check_positive(name: &str, v: f64) -> AppResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("--{name} must be a positive number, got {v}")))
    }
}

fn check_level(name: &str, v: f64) -> AppResult<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("--{name} must lie strictly between 0 and 1, got {v}")))
    }
}

fn check_dims(d: usize, n: usize) -> AppResult<()> {
    if d < 2 {
        return Err(invalid(format!("--d must be at least 2, got {d}")));
    }
    if n < 1 {
        return Err(invalid("--n must be at least 1"));
    }
    Ok(())
}

fn scenario_arg(name: &str) -> AppResult<vinekde_core::ScenarioKind> {
    parse_scenario(name).ok_or_else(|| invalid(format!("unknown --scenario {name:?} (gauss, gumbel, nonsimplified)")))
}

fn write_text(path: &PathBuf, text: &str) -> AppResult<()> {
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn execute(command: Command) -> AppResult<()> {
    match command {
        Command::Fit { input, output, bandwidth_multiplier, independence_level, h_form } => {
            check_positive("bandwidth-multiplier", bandwidth_multiplier)?;
            if let Some(a) = independence_level {
                check_level("independence-level", a)?;
            }
            let h_form = model_file::parse_h_form(&h_form)
                .ok_or_else(|| invalid(format!("unknown --h-form {h_form:?} (normalized, literal)")))?;
            let table = read_table(&input)?;
            if table.data.ncols() < 2 {
                return Err(AppError::schema(&input, "need at least two columns"));
            }
            if table.data.nrows() < MIN_OBSERVATIONS {
                return Err(AppError::schema(&input, format!("need at least {MIN_OBSERVATIONS} rows")));
            }
            let options = FitOptions {
                margin_bandwidth_multiplier: bandwidth_multiplier,
                independence_level,
                h_form,
                structure: None,
            };
            let model = fit_vine(&table.data, &options).map_err(|e| AppError::estimation("fit", e))?;
            model_file::save(&model, &output)
        }
        Command::Density { model, input, out } => {
            let m = model_file::load(&model)?;
            let table = read_table(&input)?;
            if table.data.ncols() != m.dim() {
                return Err(AppError::schema(
                    &input,
                    format!("{} columns, model has dimension {}", table.data.ncols(), m.dim()),
                ));
            }
            let values: Vec<[f64; 1]> = (0..table.data.nrows())
                .into_par_iter()
                .map(|i| {
                    m.density(table.data.row(i))
                        .map(|f| [f])
                        .map_err(|e| AppError::estimation(format!("row {}", i + 1), e))
                })
                .collect::<AppResult<_>>()?;
            write_table(&out, &["density".to_owned()], values.iter().map(|v| &v[..]))
        }
        Command::Simulate { scenario, d, n, seed, tau, out } => {
            check_dims(d, n)?;
            let spec = ScenarioSpec { kind: scenario_arg(&scenario)?, d, tau };
            let target = spec.target()?;
            let sample = target.sample(n, &mut ChaCha8Rng::seed_from_u64(seed));
            write_table(&out, &default_header(d), sample.rows())
        }
        Command::Benchmark { scenario, d, n, reps, mc, seed, tau, out } => {
            check_dims(d, n)?;
            let spec = ScenarioSpec { kind: scenario_arg(&scenario)?, d, tau };
            let start = Instant::now();
            let report = run_scenario(&spec, n, reps, mc, seed)?;
            write_text(&out, &report.to_json())?;
            eprintln!("info: benchmark finished in {:.3} s", start.elapsed().as_secs_f64());
            Ok(())
        }
        Command::Classify {
            data,
            label_col,
            split,
            out,
            scores,
            subsample,
            prior_g,
            bandwidth_multiplier,
            independence_level,
            no_independence_test,
        } => {
            check_level("split", split)?;
            check_positive("bandwidth-multiplier", bandwidth_multiplier)?;
            check_level("independence-level", independence_level)?;
            if !(0.0..=1.0).contains(&prior_g) {
                return Err(invalid(format!("--prior-g must lie in [0, 1], got {prior_g}")));
            }
            if subsample == Some(0) {
                return Err(invalid("--subsample must be at least 1"));
            }
            let dataset = load_labeled_csv(&data, &label_col)?;
            let (train, test) = dataset.split_positional(split);
            let options = ClassifyOptions {
                margin_bandwidth_multiplier: bandwidth_multiplier,
                independence_level: (!no_independence_test).then_some(independence_level),
                prior_g,
                subsample,
            };
            let outcome = run_classification(&train, &test, &options)?;
            write_text(&out, &outcome.summary.to_json())?;
            if let Some(path) = scores {
                write_scores(&path, &outcome.scores)?;
            }
            Ok(())
        }
    }
}

/// Runs the tool on `args` (program name first) and returns the exit code:
/// 0 on success, 1 for invalid arguments, 2 for failures while running.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[invalid-argument]: {line}");
            return 1;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t as usize);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error[runtime]: cannot start worker threads: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("{}: {msg}", e.prefix());
            e.exit_code()
        }
    }
}
