//! Repeated-trial benchmarking of the estimators.
//!
//! A benchmark spec is a JSON document:
//!
//! ```json
//! {
//!   "name": "gaussian-sweep",
//!   "trials": 10,
//!   "seed": 1,
//!   "estimators": ["alphamax", "gmm"],
//!   "options": { "cdf_step": 0.001 },
//!   "configs": [
//!     { "family": "gaussian", "alpha": [0.25, 0.5], "delta_mu": 4, "n": 10000, "n1": 1000 },
//!     { "family": "ball", "alpha": 0.25, "dim": 10, "n": 10000, "n1": 1000 },
//!     { "family": "csv", "positives": "pos.csv", "unlabeled": "unl.csv", "alpha": 0.3 }
//!   ]
//! }
//! ```
//!
//! Numeric generator fields accept a single value or a list; lists expand to
//! their Cartesian product. CSV paths are relative to the spec file. Each
//! (config, trial) pair gets its own derived seed, so results do not depend
//! on scheduling.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::{format_value, load_csv, load_two_files, PUDataset};
use crate::error::{Error, Result};
use crate::export::boxplot_svg;
use crate::pipeline::{estimate_prepared, prepare, EstimateOptions};
use crate::synthdata::GenParams;
use crate::types::Method;

/// Family-wise significance level for declaring a winner.
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_dim() -> OneOrMany<usize> {
    OneOrMany::One(10)
}

/// Fields of the shifted-location families (Gaussian and Laplace).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftConfig {
    pub alpha: OneOrMany<f64>,
    pub delta_mu: OneOrMany<f64>,
    pub n: OneOrMany<usize>,
    pub n1: OneOrMany<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub alpha: OneOrMany<f64>,
    #[serde(default = "default_dim")]
    pub dim: OneOrMany<usize>,
    pub n: OneOrMany<usize>,
    pub n1: OneOrMany<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub positives: Option<PathBuf>,
    #[serde(default)]
    pub unlabeled: Option<PathBuf>,
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub label_column: Option<String>,
    /// Known proportion, if any; without it no errors are computed.
    #[serde(default)]
    pub alpha: Option<f64>,
}

/// One entry of `configs`, selected by its `family` field.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigSpec {
    Gaussian(ShiftConfig),
    Laplace(ShiftConfig),
    Ball(BallConfig),
    Csv(CsvConfig),
}

fn parse_at<T: serde::de::DeserializeOwned>(at: &str, value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let sep = if path.starts_with('[') { "" } else { "." };
        Error::BenchSpec(format!("{at}{sep}{path}: {}", e.into_inner()))
    })
}

impl ConfigSpec {
    /// Reads one config object. The family tag is resolved first so that
    /// errors carry the full path of the offending field.
    fn from_value(index: usize, value: serde_json::Value) -> Result<Self> {
        let at = format!("configs[{index}]");
        let serde_json::Value::Object(mut fields) = value else {
            return Err(Error::BenchSpec(format!("{at}: expected an object")));
        };
        let family = match fields.remove("family") {
            Some(serde_json::Value::String(f)) => f,
            Some(_) => return Err(Error::BenchSpec(format!("{at}.family: expected a string"))),
            None => return Err(Error::BenchSpec(format!("{at}: missing field `family`"))),
        };
        let body = serde_json::Value::Object(fields);
        match family.as_str() {
            "gaussian" => Ok(ConfigSpec::Gaussian(parse_at(&at, body)?)),
            "laplace" => Ok(ConfigSpec::Laplace(parse_at(&at, body)?)),
            "ball" => Ok(ConfigSpec::Ball(parse_at(&at, body)?)),
            "csv" => Ok(ConfigSpec::Csv(parse_at(&at, body)?)),
            other => Err(Error::BenchSpec(format!(
                "{at}.family: unknown family {other:?}, expected gaussian, laplace, ball or csv"
            ))),
        }
    }
}

fn default_trials() -> usize {
    10
}

fn default_name() -> String {
    "bench".into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub name: String,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<Method>,
    pub options: EstimateOptions,
    pub configs: Vec<ConfigSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default = "default_name")]
    name: String,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    seed: u64,
    estimators: Vec<Method>,
    #[serde(default)]
    options: EstimateOptions,
    configs: Vec<serde_json::Value>,
}

impl BenchSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::BenchSpec(format!("{path}: {}", e.into_inner()))
        })?;
        let configs = raw
            .configs
            .into_iter()
            .enumerate()
            .map(|(i, v)| ConfigSpec::from_value(i, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(BenchSpec {
            name: raw.name,
            trials: raw.trials,
            seed: raw.seed,
            estimators: raw.estimators,
            options: raw.options,
            configs,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Validates the spec and expands it into concrete cells. CSV inputs
    /// are read here, relative to `base_dir`.
    pub fn plan(&self, base_dir: &Path) -> Result<BenchPlan> {
        let bad = |path: String, msg: String| Error::BenchSpec(format!("{path}: {msg}"));
        if self.estimators.is_empty() {
            return Err(bad("estimators".into(), "list is empty".into()));
        }
        if self.configs.is_empty() {
            return Err(bad("configs".into(), "list is empty".into()));
        }
        if self.trials == 0 {
            return Err(bad("trials".into(), "must be at least 1".into()));
        }
        self.options
            .validate()
            .map_err(|e| bad("options".into(), e.to_string()))?;
        let mut cells = Vec::new();
        for (i, config) in self.configs.iter().enumerate() {
            let at = |field: &str| format!("configs[{i}].{field}");
            let alphas = |a: &OneOrMany<f64>| -> Result<Vec<f64>> {
                let v = a.values();
                if v.is_empty() {
                    return Err(bad(at("alpha"), "list is empty".into()));
                }
                if let Some(x) = v.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
                    return Err(bad(at("alpha"), format!("{x} outside (0, 1)")));
                }
                Ok(v)
            };
            let sizes = |field: &str, s: &OneOrMany<usize>| -> Result<Vec<usize>> {
                let v = s.values();
                if v.is_empty() || v.contains(&0) {
                    return Err(bad(at(field), "sizes must be at least 1".into()));
                }
                Ok(v)
            };
            match config {
                ConfigSpec::Gaussian(ShiftConfig {
                    alpha,
                    delta_mu,
                    n,
                    n1,
                })
                | ConfigSpec::Laplace(ShiftConfig {
                    alpha,
                    delta_mu,
                    n,
                    n1,
                }) => {
                    let mus = delta_mu.values();
                    if mus.is_empty() || mus.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
                        return Err(bad(at("delta_mu"), "values must be positive".into()));
                    }
                    let gaussian = matches!(config, ConfigSpec::Gaussian(_));
                    for &n1 in &sizes("n1", n1)? {
                        for &mu in &mus {
                            for &a in &alphas(alpha)? {
                                for &n in &sizes("n", n)? {
                                    let params = if gaussian {
                                        GenParams::Gaussian {
                                            alpha: a,
                                            delta_mu: mu,
                                            n,
                                            n1,
                                        }
                                    } else {
                                        GenParams::Laplace {
                                            alpha: a,
                                            delta_mu: mu,
                                            n,
                                            n1,
                                        }
                                    };
                                    cells.push(Cell::synthetic(params));
                                }
                            }
                        }
                    }
                }
                ConfigSpec::Ball(BallConfig { alpha, dim, n, n1 }) => {
                    for &n1 in &sizes("n1", n1)? {
                        for &d in &sizes("dim", dim)? {
                            for &a in &alphas(alpha)? {
                                for &n in &sizes("n", n)? {
                                    cells.push(Cell::synthetic(GenParams::Ball {
                                        alpha: a,
                                        dim: d,
                                        n,
                                        n1,
                                    }));
                                }
                            }
                        }
                    }
                }
                ConfigSpec::Csv(CsvConfig {
                    name,
                    positives,
                    unlabeled,
                    data,
                    label_column,
                    alpha,
                }) => {
                    if let Some(a) = alpha {
                        if !(*a > 0.0 && *a < 1.0) {
                            return Err(bad(at("alpha"), format!("{a} outside (0, 1)")));
                        }
                    }
                    let dataset = match (positives, unlabeled, data) {
                        (Some(p), Some(u), None) => {
                            load_two_files(&base_dir.join(p), &base_dir.join(u))
                        }
                        (None, None, Some(d)) => {
                            load_csv(&base_dir.join(d), label_column.as_deref())
                        }
                        _ => {
                            return Err(bad(
                                at("data"),
                                "give either positives and unlabeled, or data".into(),
                            ))
                        }
                    }
                    .map_err(|e| bad(format!("configs[{i}]"), e.to_string()))?;
                    let label = name.clone().unwrap_or_else(|| dataset.provenance.clone());
                    cells.push(Cell {
                        label,
                        source: Source::Csv {
                            dataset,
                            alpha: *alpha,
                        },
                    });
                }
            }
        }
        Ok(BenchPlan {
            name: self.name.clone(),
            trials: self.trials,
            seed: self.seed,
            estimators: self.estimators.clone(),
            options: self.options.clone(),
            cells,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Synthetic(GenParams),
    Csv {
        dataset: PUDataset,
        alpha: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub source: Source,
}

impl Cell {
    fn synthetic(params: GenParams) -> Self {
        let label = match params {
            GenParams::Gaussian {
                alpha,
                delta_mu,
                n,
                n1,
            }
            | GenParams::Laplace {
                alpha,
                delta_mu,
                n,
                n1,
            } => format!(
                "{} alpha={alpha} delta_mu={delta_mu} n={n} n1={n1}",
                params.family()
            ),
            GenParams::Ball { alpha, dim, n, n1 } => {
                format!("ball alpha={alpha} dim={dim} n={n} n1={n1}")
            }
        };
        Cell {
            label,
            source: Source::Synthetic(params),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match &self.source {
            Source::Synthetic(p) => Some(p.alpha()),
            Source::Csv { alpha, .. } => *alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub name: String,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<Method>,
    pub options: EstimateOptions,
    pub cells: Vec<Cell>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one (cell, trial) pair, derived from the base seed.
pub fn trial_seed(base: u64, cell: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(cell as u64)) ^ trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub config: usize,
    pub label: String,
    pub trial: usize,
    pub seed: u64,
    pub estimator: Method,
    pub alpha: Option<f64>,
    pub realized_alpha: Option<f64>,
    pub alpha_hat: Option<f64>,
    pub abs_error: Option<f64>,
    pub low_confidence: bool,
    pub error: Option<String>,
}

/// Wall-clock seconds, kept apart from the deterministic rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub config: usize,
    pub trial: usize,
    pub estimator: Method,
    pub prepare_seconds: f64,
    pub estimate_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResults {
    pub rows: Vec<TrialRow>,
    pub timings: Vec<Timing>,
}

fn run_one(plan: &BenchPlan, cell_index: usize, trial: usize) -> (Vec<TrialRow>, Vec<Timing>) {
    let cell = &plan.cells[cell_index];
    let seed = trial_seed(plan.seed, cell_index, trial);
    let options = plan.options.clone().with_seed(seed);
    let start = Instant::now();
    let (prepared, realized) = match &cell.source {
        Source::Synthetic(params) => match params.generate(seed) {
            Ok(s) => (prepare(&s.dataset, &options), Some(s.realized_alpha())),
            Err(e) => (Err(e), None),
        },
        Source::Csv { dataset, .. } => (prepare(dataset, &options), None),
    };
    let prepare_seconds = start.elapsed().as_secs_f64();
    let alpha = cell.alpha();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for &method in &plan.estimators {
        let start = Instant::now();
        let result = prepared
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|p| estimate_prepared(p, method, &options).map_err(|e| e.to_string()));
        timings.push(Timing {
            config: cell_index,
            trial,
            estimator: method,
            prepare_seconds,
            estimate_seconds: start.elapsed().as_secs_f64(),
        });
        let (alpha_hat, low_confidence, error) = match result {
            Ok(est) => (Some(est.alpha_hat), est.low_confidence, None),
            Err(e) => (None, false, Some(e)),
        };
        rows.push(TrialRow {
            config: cell_index,
            label: cell.label.clone(),
            trial,
            seed,
            estimator: method,
            alpha,
            realized_alpha: realized,
            alpha_hat,
            abs_error: alpha_hat.zip(alpha).map(|(h, a)| (h - a).abs()),
            low_confidence,
            error,
        });
    }
    (rows, timings)
}

/// Every (cell, trial) pair as a parallel map; rows come back ordered by
/// cell, trial, then estimator.
pub fn run_trials(plan: &BenchPlan) -> Result<BenchResults> {
    if plan.estimators.is_empty() {
        return Err(Error::BenchSpec("estimators: list is empty".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..plan.cells.len())
        .flat_map(|c| (0..plan.trials).map(move |t| (c, t)))
        .collect();
    let out: Vec<(Vec<TrialRow>, Vec<Timing>)> = jobs
        .par_iter()
        .map(|&(c, t)| run_one(plan, c, t))
        .collect();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (r, t) in out {
        rows.extend(r);
        timings.extend(t);
    }
    Ok(BenchResults { rows, timings })
}

/// `(1/m) Σ |α̂ᵢ − α|`.
pub fn mean_abs_error(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidParameter("no estimates to average".into()));
    }
    Ok(estimates.iter().map(|e| (e - truth).abs()).sum::<f64>() / estimates.len() as f64)
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var)
}

/// Two-sided p-value of Welch's unequal-variance t-test. When both samples
/// have zero variance the p-value is 1 for equal means and 0 otherwise.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidParameter(
            "t-test needs at least two values per sample".into(),
        ));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(if ma == mb { 1.0 } else { 0.0 });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidParameter(format!("t distribution: {e}")))?;
    Ok((2.0 * dist.cdf(-t.abs())).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: Method,
    pub mae: Option<f64>,
    pub sd: Option<f64>,
    pub ok: usize,
    pub failed: usize,
    pub star: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub config: usize,
    pub label: String,
    pub alpha: Option<f64>,
    pub estimators: Vec<EstimatorSummary>,
}

/// Absolute errors of one estimator in one cell, in trial order.
fn errors(rows: &[TrialRow], config: usize, method: Method) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.config == config && r.estimator == method)
        .filter_map(|r| r.abs_error)
        .collect()
}

/// Per-cell MAE, failure counts and winner stars. An estimator is starred
/// when it has the lowest MAE and beats every other estimator with at
/// least two results at level `0.05 / (m(m−1)/2)`.
pub fn summarize(plan: &BenchPlan, rows: &[TrialRow]) -> Result<Vec<CellSummary>> {
    let mut out = Vec::new();
    for (c, cell) in plan.cells.iter().enumerate() {
        let mut ests: Vec<EstimatorSummary> = plan
            .estimators
            .iter()
            .map(|&m| {
                let errs = errors(rows, c, m);
                let failed = rows
                    .iter()
                    .filter(|r| r.config == c && r.estimator == m && r.error.is_some())
                    .count();
                let mae = if errs.is_empty() {
                    None
                } else {
                    Some(errs.iter().sum::<f64>() / errs.len() as f64)
                };
                let sd = (errs.len() >= 2).then(|| mean_var(&errs).1.sqrt());
                EstimatorSummary {
                    estimator: m,
                    mae,
                    sd,
                    ok: errs.len(),
                    failed,
                    star: false,
                }
            })
            .collect();
        let eligible: Vec<usize> = (0..ests.len()).filter(|&i| ests[i].ok >= 2).collect();
        let m = eligible.len();
        if m >= 2 {
            let threshold = SIGNIFICANCE / (m * (m - 1) / 2) as f64;
            let best = *eligible
                .iter()
                .min_by(|&&i, &&j| ests[i].mae.unwrap().total_cmp(&ests[j].mae.unwrap()))
                .unwrap();
            let best_errs = errors(rows, c, ests[best].estimator);
            let mut wins = true;
            for &j in eligible.iter().filter(|&&j| j != best) {
                let p = welch_t_test(&best_errs, &errors(rows, c, ests[j].estimator))?;
                if !(ests[best].mae.unwrap() < ests[j].mae.unwrap() && p < threshold) {
                    wins = false;
                }
            }
            ests[best].star = wins;
        }
        out.push(CellSummary {
            config: c,
            label: cell.label.clone(),
            alpha: cell.alpha(),
            estimators: ests,
        });
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        row: 0,
        message: e.to_string(),
    }
}

pub fn write_trials_csv(path: &Path, rows: &[TrialRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let e = |err| csv_error(path, err);
    w.write_record([
        "config",
        "label",
        "trial",
        "seed",
        "estimator",
        "alpha",
        "realized_alpha",
        "alpha_hat",
        "abs_error",
        "low_confidence",
        "error",
    ])
    .map_err(e)?;
    for r in rows {
        w.write_record([
            r.config.to_string(),
            r.label.clone(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.estimator.to_string(),
            opt(r.alpha),
            opt(r.realized_alpha),
            opt(r.alpha_hat),
            opt(r.abs_error),
            r.low_confidence.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings_csv(path: &Path, timings: &[Timing]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let e = |err| csv_error(path, err);
    w.write_record(["config", "trial", "estimator", "prepare_seconds", "estimate_seconds"])
        .map_err(e)?;
    for t in timings {
        w.write_record([
            t.config.to_string(),
            t.trial.to_string(),
            t.estimator.to_string(),
            format!("{:.6}", t.prepare_seconds),
            format!("{:.6}", t.estimate_seconds),
        ])
        .map_err(e)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per cell; per estimator the columns `<name>_mae`, `<name>_sd`,
/// `<name>_ok`, `<name>_failed` and `<name>_star` (`*` for a winner).
pub fn write_summary_csv(path: &Path, summary: &[CellSummary], estimators: &[Method]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let e = |err| csv_error(path, err);
    let mut header = vec!["config".to_string(), "label".into(), "alpha".into()];
    for m in estimators {
        for col in ["mae", "sd", "ok", "failed", "star"] {
            header.push(format!("{m}_{col}"));
        }
    }
    w.write_record(&header).map_err(e)?;
    for s in summary {
        let mut rec = vec![s.config.to_string(), s.label.clone(), opt(s.alpha)];
        for es in &s.estimators {
            rec.push(opt(es.mae));
            rec.push(opt(es.sd));
            rec.push(es.ok.to_string());
            rec.push(es.failed.to_string());
            rec.push(if es.star { "*".into() } else { String::new() });
        }
        w.write_record(&rec).map_err(e)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `trials.csv`, `timings.csv`, `summary.csv` and one box plot of
/// absolute errors per cell under `dir/boxplots`.
pub fn write_outputs(dir: &Path, plan: &BenchPlan, results: &BenchResults) -> Result<Vec<CellSummary>> {
    std::fs::create_dir_all(dir.join("boxplots"))?;
    let summary = summarize(plan, &results.rows)?;
    write_trials_csv(&dir.join("trials.csv"), &results.rows)?;
    write_timings_csv(&dir.join("timings.csv"), &results.timings)?;
    write_summary_csv(&dir.join("summary.csv"), &summary, &plan.estimators)?;
    for (c, cell) in plan.cells.iter().enumerate() {
        if cell.alpha().is_none() {
            continue;
        }
        let groups: Vec<(String, Vec<f64>)> = plan
            .estimators
            .iter()
            .map(|&m| (m.to_string(), errors(&results.rows, c, m)))
            .collect();
        let svg = boxplot_svg(&cell.label, "absolute error", &groups);
        std::fs::write(dir.join("boxplots").join(format!("config_{c:03}.svg")), svg)?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> Result<BenchPlan> {
        BenchSpec::from_json(json)?.plan(Path::new("."))
    }

    #[test]
    fn mae_examples() {
        assert!((mean_abs_error(&[0.3, 0.5], 0.4).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(mean_abs_error(&[0.2, 0.2], 0.2).unwrap(), 0.0);
        assert!((mean_abs_error(&[0.7], 0.4).unwrap() - 0.3).abs() < 1e-15);
        assert!(mean_abs_error(&[], 0.4).is_err());
    }

    #[test]
    fn welch_degenerate_and_symmetric() {
        let a = [0.1, 0.2, 0.3, 0.5];
        assert_eq!(welch_t_test(&a, &a).unwrap(), 1.0);
        assert_eq!(welch_t_test(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), 0.0);
        let b = [0.4, 0.9, 0.7];
        assert_eq!(welch_t_test(&a, &b).unwrap(), welch_t_test(&b, &a).unwrap());
        assert!(welch_t_test(&[1.0], &b).is_err());
    }

    #[test]
    fn grid_expansion() {
        let plan = spec(
            r#"{"estimators":["gmm"],"configs":[
                {"family":"gaussian","alpha":[0.25,0.5],"delta_mu":[1,4],"n":100,"n1":[10,20]}]}"#,
        )
        .unwrap();
        assert_eq!(plan.cells.len(), 8);
        assert_eq!(plan.trials, 10);
        assert_eq!(plan.cells[0].label, "gaussian alpha=0.25 delta_mu=1 n=100 n1=10");
    }

    #[test]
    fn spec_errors_name_the_path() {
        let e = spec(r#"{"estimators":[],"configs":[]}"#).unwrap_err();
        assert!(e.to_string().contains("estimators"), "{e}");
        let e = spec(
            r#"{"estimators":["gmm"],"configs":[{"family":"ball","alpha":1.5,"n":10,"n1":5}]}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("configs[0].alpha"), "{e}");
        let e = spec(r#"{"estimators":["gmm"],"configs":[{"family":"ball","alpha":0.5,"n":"x","n1":5}]}"#)
            .unwrap_err();
        assert!(e.to_string().contains("configs[0]"), "{e}");
        let e = spec(r#"{"estimators":["nope"],"configs":[]}"#).unwrap_err();
        assert!(e.to_string().contains("estimators[0]"), "{e}");
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for c in 0..20 {
            for t in 0..20 {
                assert!(seen.insert(trial_seed(7, c, t)));
            }
        }
    }

    #[test]
    fn rows_are_ordered_and_repeatable() {
        let plan = spec(
            r#"{"trials":2,"seed":3,"estimators":["pdf-ratio","cdf-based"],"configs":[
                {"family":"gaussian","alpha":0.5,"delta_mu":4,"n":300,"n1":50}]}"#,
        )
        .unwrap();
        let a = run_trials(&plan).unwrap();
        let b = run_trials(&plan).unwrap();
        assert_eq!(a.rows, b.rows);
        let order: Vec<(usize, Method)> = a.rows.iter().map(|r| (r.trial, r.estimator)).collect();
        assert_eq!(
            order,
            vec![
                (0, Method::PdfRatio),
                (0, Method::CdfBased),
                (1, Method::PdfRatio),
                (1, Method::CdfBased)
            ]
        );
    }

    #[test]
    fn star_requires_significance() {
        let plan = spec(
            r#"{"trials":3,"estimators":["alphamax","gmm"],"configs":[
                {"family":"gaussian","alpha":0.5,"delta_mu":4,"n":10,"n1":10}]}"#,
        )
        .unwrap();
        let row = |trial, estimator, err: f64| TrialRow {
            config: 0,
            label: String::new(),
            trial,
            seed: 0,
            estimator,
            alpha: Some(0.5),
            realized_alpha: None,
            alpha_hat: Some(0.5 + err),
            abs_error: Some(err),
            low_confidence: false,
            error: None,
        };
        let mut rows = Vec::new();
        for (t, (a, g)) in [(0.01, 0.30), (0.02, 0.31), (0.015, 0.29)].into_iter().enumerate() {
            rows.push(row(t, Method::Alphamax, a));
            rows.push(row(t, Method::Gmm, g));
        }
        let s = summarize(&plan, &rows).unwrap();
        assert!(s[0].estimators[0].star);
        assert!(!s[0].estimators[1].star);
        // overlapping errors: no winner
        for r in rows.iter_mut().filter(|r| r.estimator == Method::Gmm) {
            r.abs_error = Some(r.abs_error.unwrap() - 0.28);
        }
        let s = summarize(&plan, &rows).unwrap();
        assert!(s[0].estimators.iter().all(|e| !e.star));
    }
}
