use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphamax::bench::{run_trials, write_outputs, BenchSpec};
use alphamax::export::{curve_svg, write_curve_csv};
use alphamax::pipeline::{estimate_prepared, prepare};
use alphamax::transform::write_scores;
use alphamax::{
    load_csv, load_two_files, AlphaMaxConfig, EstimateOptions, GenParams, Method, PUDataset,
    PriorEstimate, TransformMode,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "alphamax", version, about = "Class prior estimation from positive and unlabeled data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the class prior of the unlabeled sample.
    Estimate(EstimateArgs),
    /// Generate a synthetic positive/unlabeled dataset.
    Gen(GenArgs),
    /// Run a benchmark described by a JSON spec.
    Bench(BenchArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV of positive points, one per row.
    #[arg(long, requires = "unlabeled", conflicts_with = "data")]
    positives: Option<PathBuf>,
    /// CSV of unlabeled points, one per row.
    #[arg(long, requires = "positives")]
    unlabeled: Option<PathBuf>,
    /// Single CSV with a 1/0 label column (1 = positive, 0 = unlabeled).
    #[arg(long, required_unless_present = "positives")]
    data: Option<PathBuf>,
    /// Label column name (needs a header) or zero-based index; default 0.
    #[arg(long, requires = "data")]
    label_column: Option<String>,
    /// alphamax, pdf-ratio, cdf, gmm or all.
    #[arg(long, default_value = "alphamax")]
    method: String,
    /// auto transforms only multivariate input.
    #[arg(long, value_enum)]
    transform: Option<Mode>,
    /// JSON file with AlphaMax settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the curve table, curve plot and scores.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    On,
    Off,
}

impl From<Mode> for TransformMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Auto => TransformMode::Auto,
            Mode::On => TransformMode::On,
            Mode::Off => TransformMode::Off,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Gaussian,
    Laplace,
    Ball,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    alpha: f64,
    /// Size of the unlabeled sample.
    #[arg(long)]
    n: usize,
    /// Size of the positive sample.
    #[arg(long)]
    n1: usize,
    /// Mean separation of the univariate families.
    #[arg(long)]
    delta_mu: Option<f64>,
    /// Dimension of the ball-in-box family.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Overrides the trial count of the spec.
    #[arg(long)]
    trials: Option<usize>,
}

/// Exit status 1 for bad input, 2 for an estimator that failed.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn from_error(e: alphamax::Error) -> Self {
        use alphamax::Error::*;
        let code = match e {
            Csv { .. } | InvalidDataset(_) | InvalidParameter(_) | TransformRequired
            | BenchSpec(_) | Io(_) | Json(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Failure::input)?;
    println!("{text}");
    Ok(())
}

fn load_dataset(a: &EstimateArgs) -> Result<PUDataset, Failure> {
    let ds = match (&a.positives, &a.unlabeled, &a.data) {
        (Some(p), Some(u), None) => load_two_files(p, u),
        (None, None, Some(d)) => load_csv(d, a.label_column.as_deref()),
        _ => return Err(Failure::input("give --positives and --unlabeled, or --data")),
    };
    ds.map_err(Failure::from_error)
}

fn parse_methods(s: &str) -> Result<Vec<Method>, Failure> {
    if s == "all" {
        return Ok(Method::ALL.to_vec());
    }
    s.parse::<Method>().map(|m| vec![m]).map_err(Failure::from_error)
}

fn load_config(path: &Path) -> Result<AlphaMaxConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| Failure::input(format!("{}: {}: {}", path.display(), e.path(), e.inner())))
}

#[derive(Serialize)]
struct Summary<'a> {
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transform_used: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    low_confidence: Option<bool>,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn summary(method: Method, result: &Result<PriorEstimate, alphamax::Error>) -> Summary<'_> {
    match result {
        Ok(e) => Summary {
            method,
            alpha_hat: Some(e.alpha_hat),
            transform_used: Some(e.transform_used),
            low_confidence: Some(e.low_confidence),
            warnings: &e.warnings,
            error: None,
        },
        Err(err) => Summary {
            method,
            alpha_hat: None,
            transform_used: None,
            low_confidence: None,
            warnings: &[],
            error: Some(err.to_string()),
        },
    }
}

fn cmd_estimate(a: EstimateArgs) -> Result<u8, Failure> {
    let methods = parse_methods(&a.method)?;
    let mut options = EstimateOptions::default();
    if let Some(path) = &a.config {
        options.alphamax = load_config(path)?;
    }
    if let Some(mode) = a.transform {
        options.transform = mode.into();
    }
    let options = options.with_seed(a.seed);
    options.validate().map_err(Failure::from_error)?;
    let dataset = load_dataset(&a)?;
    let prepared = prepare(&dataset, &options).map_err(Failure::from_error)?;
    for w in &prepared.warnings {
        eprintln!("warning: {w}");
    }

    let results: Vec<(Method, Result<PriorEstimate, alphamax::Error>)> = methods
        .iter()
        .map(|&m| (m, estimate_prepared(&prepared, m, &options)))
        .collect();

    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(Failure::input)?;
        for (_, r) in &results {
            if let Ok(PriorEstimate {
                curve: Some(curve),
                alpha_hat,
                ..
            }) = r
            {
                write_curve_csv(&dir.join("curve.csv"), curve).map_err(Failure::from_error)?;
                std::fs::write(dir.join("curve.svg"), curve_svg(curve, *alpha_hat, None))
                    .map_err(Failure::input)?;
            }
        }
        if prepared.transform_used {
            write_scores(&dir.join("scores_positives.csv"), &prepared.x1)
                .map_err(Failure::from_error)?;
            write_scores(&dir.join("scores_unlabeled.csv"), &prepared.x)
                .map_err(Failure::from_error)?;
        }
    }

    let failed = results.iter().filter(|(_, r)| r.is_err()).count();
    if let [(m, r)] = results.as_slice() {
        print_json(&summary(*m, r))?;
    } else {
        #[derive(Serialize)]
        struct All<'a> {
            estimates: Vec<Summary<'a>>,
        }
        print_json(&All {
            estimates: results.iter().map(|(m, r)| summary(*m, r)).collect(),
        })?;
    }
    for (m, r) in &results {
        if let Err(e) = r {
            eprintln!("error: {m}: {e}");
        }
    }
    Ok(if failed > 0 { 2 } else { 0 })
}

fn cmd_gen(a: GenArgs) -> Result<u8, Failure> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::input(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let params = match a.family {
        Family::Gaussian | Family::Laplace => {
            if a.dim.is_some() {
                eprintln!("warning: --dim is ignored for this family");
            }
            let delta_mu = a.delta_mu.unwrap_or(2.0);
            if matches!(a.family, Family::Gaussian) {
                GenParams::Gaussian {
                    alpha: a.alpha,
                    delta_mu,
                    n: a.n,
                    n1: a.n1,
                }
            } else {
                GenParams::Laplace {
                    alpha: a.alpha,
                    delta_mu,
                    n: a.n,
                    n1: a.n1,
                }
            }
        }
        Family::Ball => {
            if a.delta_mu.is_some() {
                eprintln!("warning: --delta-mu is ignored for this family");
            }
            GenParams::Ball {
                alpha: a.alpha,
                dim: a.dim.unwrap_or(10),
                n: a.n,
                n1: a.n1,
            }
        }
    };
    let synth = params.generate(a.seed).map_err(Failure::from_error)?;
    std::fs::create_dir_all(&a.out).map_err(Failure::input)?;
    synth
        .dataset
        .save_two_files(&a.out.join("positives.csv"), &a.out.join("unlabeled.csv"))
        .map_err(Failure::from_error)?;
    let meta = json!({
        "params": params,
        "seed": a.seed,
        "realized_alpha": synth.realized_alpha(),
        "positives_in_unlabeled": synth.from_positive.iter().filter(|&&p| p).count(),
    });
    let text = serde_json::to_string_pretty(&meta).map_err(Failure::input)?;
    std::fs::write(a.out.join("meta.json"), text + "\n").map_err(Failure::input)?;
    print_json(&meta)?;
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> Result<u8, Failure> {
    let mut spec = BenchSpec::load(&a.spec).map_err(Failure::from_error)?;
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    let base = a.spec.parent().unwrap_or(Path::new("."));
    let plan = spec.plan(base).map_err(Failure::from_error)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        if j == 0 {
            return Err(Failure::input("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(Failure::input)?;
    eprintln!(
        "running {} cells x {} trials x {} estimators",
        plan.cells.len(),
        plan.trials,
        plan.estimators.len()
    );
    let results = pool.install(|| run_trials(&plan)).map_err(Failure::from_error)?;
    let summary = write_outputs(&a.out, &plan, &results).map_err(Failure::from_error)?;
    print_json(&json!({ "name": plan.name, "out": a.out, "cells": summary }))?;
    Ok(0)
}
