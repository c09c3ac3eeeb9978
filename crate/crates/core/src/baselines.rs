//! Baseline estimators: histogram density ratio, empirical-CDF monotonicity
//! and a two-component Gaussian mixture fitted by EM.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{Ecdf, HistogramModel};
use crate::error::{Error, Result};
use crate::synthdata::rng_for;
use crate::types::{Method, PriorEstimate};

/// `min f̂(x)/f̂₁(x)` over the points of `x1`, i.e. over the bins they occupy.
pub fn pdf_ratio_estimate(model: &HistogramModel, x1: &[f64]) -> Result<PriorEstimate> {
    if x1.is_empty() {
        return Err(Error::DegenerateSample("component sample is empty".into()));
    }
    let mut ratio = f64::INFINITY;
    for &v in x1 {
        let i = model.bin_of(v).ok_or_else(|| {
            Error::InvalidParameter(format!("point {v} lies outside the histogram grid"))
        })?;
        ratio = ratio.min(model.w()[i] / model.comp_mass()[i]);
    }
    Ok(PriorEstimate::new(ratio.min(1.0), Method::PdfRatio))
}

/// `G = F̂ − αF̂₁` at the sorted distinct points of `x1`: nonnegative with
/// nonnegative first differences?
fn cdf_feasible(f: &[f64], f1: &[f64], alpha: f64) -> bool {
    const SLACK: f64 = 1e-12;
    let mut prev = 0.0;
    for (a, b) in f.iter().zip(f1) {
        let g = a - alpha * b;
        if g < -SLACK || g - prev < -SLACK {
            return false;
        }
        prev = g;
    }
    true
}

/// Largest grid value `α` for which `F̂ − αF̂₁` is nonnegative and
/// non-decreasing on the points of `x1`. The grid is `step, 2·step, …, 1`.
pub fn cdf_based_estimate(x: &[f64], x1: &[f64], step: f64) -> Result<PriorEstimate> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParameter(format!("grid step {step} outside (0, 1]")));
    }
    let ecdf = Ecdf::new(x)?;
    let ecdf1 = Ecdf::new(x1)?;
    let mut points = x1.to_vec();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let f: Vec<f64> = points.iter().map(|&t| ecdf.eval(t)).collect();
    let f1: Vec<f64> = points.iter().map(|&t| ecdf1.eval(t)).collect();

    let m = (1.0 / step).round() as usize;
    let alpha = |i: usize| if i == m { 1.0 } else { i as f64 * step };
    let feasible = |i: usize| cdf_feasible(&f, &f1, alpha(i));
    if !feasible(1) {
        let mut est = PriorEstimate::new(step, Method::CdfBased);
        est.low_confidence = true;
        est.warn("no feasible grid value; reporting the smallest");
        return Ok(est);
    }
    // feasible(lo) && !feasible(hi), with hi = m + 1 standing for "past the grid"
    let (mut lo, mut hi) = (1, m + 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the constraints are linear in α with F̂₁ increments ≥ 0, so the
    // feasible set is a down-set
    assert!(lo == 1 || feasible(lo - 1), "feasible set is not a down-set");
    Ok(PriorEstimate::new(alpha(lo), Method::CdfBased))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmConfig {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            restarts: 5,
            tol: 1e-8,
            max_iter: 1000,
            seed: 0,
        }
    }
}

impl GmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(
                "gmm needs restarts ≥ 1, max_iter ≥ 1 and tol > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub weight: [f64; 2],
    pub mean: [f64; 2],
    pub var: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    pub params: GmmParams,
    /// Mean log-likelihood of the parameters entering each iteration, then
    /// of the final parameters.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
}

impl GmmFit {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("trace is never empty")
    }
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean) * (x - mean) / var)
}

/// One EM update. Returns the new parameters and the mean log-likelihood of
/// the old ones. Variances are kept at or above `var_floor`.
pub fn em_step(x: &[f64], p: &GmmParams, var_floor: f64) -> (GmmParams, f64) {
    let n = x.len() as f64;
    let mut loglik = 0.0;
    let mut sum_r = [0.0; 2];
    let mut sum_rx = [0.0; 2];
    let mut resp = Vec::with_capacity(x.len());
    for &v in x {
        let a = p.weight[0].ln() + log_normal(v, p.mean[0], p.var[0]);
        let b = p.weight[1].ln() + log_normal(v, p.mean[1], p.var[1]);
        let m = a.max(b);
        let lse = m + ((a - m).exp() + (b - m).exp()).ln();
        loglik += lse;
        let r0 = (a - lse).exp();
        resp.push(r0);
        sum_r[0] += r0;
        sum_r[1] += 1.0 - r0;
        sum_rx[0] += r0 * v;
        sum_rx[1] += (1.0 - r0) * v;
    }
    let mean = [sum_rx[0] / sum_r[0], sum_rx[1] / sum_r[1]];
    let mut sq = [0.0; 2];
    for (&v, &r0) in x.iter().zip(&resp) {
        sq[0] += r0 * (v - mean[0]) * (v - mean[0]);
        sq[1] += (1.0 - r0) * (v - mean[1]) * (v - mean[1]);
    }
    let next = GmmParams {
        weight: [sum_r[0] / n, sum_r[1] / n],
        mean,
        var: [
            (sq[0] / sum_r[0]).max(var_floor),
            (sq[1] / sum_r[1]).max(var_floor),
        ],
    };
    (next, loglik / n)
}

fn mean_loglik(x: &[f64], p: &GmmParams) -> f64 {
    em_step(x, p, 0.0).1
}

fn collapsed(p: &GmmParams, n: usize, var_floor: f64) -> bool {
    let min_weight = 1.0 / n as f64;
    (0..2).any(|k| {
        !(p.weight[k] >= min_weight)
            || !p.mean[k].is_finite()
            || !(p.var[k] > var_floor * (1.0 + 1e-9))
    })
}

/// EM from `init` until the mean log-likelihood changes by less than `tol`.
pub fn fit_gmm2(x: &[f64], init: GmmParams, tol: f64, max_iter: usize, var_floor: f64) -> GmmFit {
    let mut p = init;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let (next, ll) = em_step(x, &p, var_floor);
        iterations += 1;
        if let Some(&prev) = trace.last() {
            if (ll - prev).abs() < tol {
                converged = true;
            }
        }
        trace.push(ll);
        if converged || collapsed(&next, x.len(), var_floor) {
            p = next;
            break;
        }
        p = next;
    }
    trace.push(mean_loglik(x, &p));
    let degenerate = collapsed(&p, x.len(), var_floor) || !trace.last().unwrap().is_finite();
    GmmFit {
        params: p,
        loglik_trace: trace,
        iterations,
        converged,
        degenerate,
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Starting point of restart `r`: means at the quartiles, equal weights and
/// the sample variance; restarts after the first jitter each mean by up to
/// half a standard deviation.
fn initial_params(x: &[f64], r: usize, seed: u64) -> GmmParams {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    let mut mean = [quantile(&sorted, 0.25), quantile(&sorted, 0.75)];
    if r > 0 {
        let mut rng = rng_for(seed, r as u64);
        let sd = var.sqrt();
        for m in &mut mean {
            *m += rng.random_range(-0.5..=0.5) * sd;
        }
    }
    GmmParams {
        weight: [0.5, 0.5],
        mean,
        var: [var, var],
    }
}

/// The component whose mean is nearest `target`; ties go to the heavier one.
pub fn select_component(p: &GmmParams, target: f64) -> usize {
    let d0 = (p.mean[0] - target).abs();
    let d1 = (p.mean[1] - target).abs();
    if d0 < d1 || (d0 == d1 && p.weight[0] >= p.weight[1]) {
        0
    } else {
        1
    }
}

/// Two-component Gaussian mixture on `x`; the prior is the weight of the
/// component closest to the mean of `x1`.
pub fn gmm_em_estimate(x: &[f64], x1: &[f64], config: &GmmConfig) -> Result<(PriorEstimate, GmmFit)> {
    config.validate()?;
    if x.len() < 4 {
        return Err(Error::DegenerateSample(format!(
            "mixture fit needs at least 4 points, got {}",
            x.len()
        )));
    }
    if x1.is_empty() {
        return Err(Error::DegenerateSample("component sample is empty".into()));
    }
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::DegenerateSample("mixture sample has zero variance".into()));
    }
    let floor = 1e-6 * var;
    let fits: Vec<GmmFit> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            fit_gmm2(
                x,
                initial_params(x, r, config.seed),
                config.tol,
                config.max_iter,
                floor,
            )
        })
        .collect();
    let degenerate = fits.iter().filter(|f| f.degenerate).count();
    let best = fits
        .into_iter()
        .filter(|f| !f.degenerate)
        .reduce(|a, b| if b.loglik() > a.loglik() { b } else { a })
        .ok_or(Error::EmDegenerate(config.restarts))?;

    let target = x1.iter().sum::<f64>() / x1.len() as f64;
    let k = select_component(&best.params, target);
    let mut est = PriorEstimate::new(best.params.weight[k], Method::Gmm);
    if degenerate > 0 {
        est.warn(format!("{degenerate} of {} EM restarts collapsed", config.restarts));
    }
    if !best.converged {
        est.warn("EM reached its iteration limit");
    }
    Ok((est, best))
}
