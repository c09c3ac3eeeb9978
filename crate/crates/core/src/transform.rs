//! Reduction of multivariate PU data to one dimension.
//!
//! A logistic model is trained to separate the positive sample (label 1)
//! from the unlabeled sample (label 0). Its score
//! `tau(x) = p(labeled | x, x in either sample)` is a one-to-one function of
//! the positive-to-mixture density ratio, so the class prior of the scored
//! samples equals the class prior of the raw samples. Scores are produced
//! out-of-fold for both samples.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{format_value, PUDataset};
use crate::error::{Error, Result};

/// Logit range kept away from saturation so scores stay strictly inside (0, 1).
const MAX_LOGIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    None,
    /// Appends all squares and pairwise products of the standardized inputs.
    #[default]
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub folds: usize,
    pub expansion: Expansion,
    pub l2: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            folds: 5,
            expansion: Expansion::Quadratic,
            l2: 1e-4,
            seed: 0,
            max_iter: 5000,
            grad_tol: 1e-6,
        }
    }
}

impl TransformConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidParameter("folds must be at least 2".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidParameter("l2 must be a nonnegative number".into()));
        }
        if !(self.grad_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "grad_tol must be positive and max_iter at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A fitted logistic model with its feature standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub expansion: Expansion,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Training objective after each accepted step, starting at the zero model.
    pub objective_trace: Vec<f64>,
}

impl Classifier {
    fn features(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = x
            .iter()
            .zip(self.input_mean.iter().zip(&self.input_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let mut f = expand(&z, self.expansion);
        for (v, (m, s)) in f.iter_mut().zip(self.feature_mean.iter().zip(&self.feature_scale)) {
            *v = (*v - m) / s;
        }
        f
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let f = self.features(x);
        self.intercept + dot(&self.weights, &f)
    }

    /// Score `tau(x)` in (0, 1).
    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x).clamp(-MAX_LOGIT, MAX_LOGIT))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn expand(z: &[f64], expansion: Expansion) -> Vec<f64> {
    match expansion {
        Expansion::None => z.to_vec(),
        Expansion::Quadratic => {
            let d = z.len();
            let mut f = Vec::with_capacity(d + d * (d + 1) / 2);
            f.extend_from_slice(z);
            for i in 0..d {
                for j in i..d {
                    f.push(z[i] * z[j]);
                }
            }
            f
        }
    }
}

/// Per-column mean and standard deviation; zero spread maps to scale 1.
fn standardizer(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

fn standardize(rows: &mut [Vec<f64>], mean: &[f64], scale: &[f64]) {
    for r in rows {
        for (v, (m, s)) in r.iter_mut().zip(mean.iter().zip(scale)) {
            *v = (*v - m) / s;
        }
    }
}

struct Problem<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [bool],
    l2: f64,
}

impl Problem<'_> {
    /// Mean cross-entropy plus `l2/2 |w|^2`; `theta = (intercept, w)`.
    fn objective(&self, theta: &[f64]) -> f64 {
        let n = self.features.len() as f64;
        let loss: f64 = self
            .features
            .iter()
            .zip(self.labels)
            .map(|(f, &y)| {
                let z = theta[0] + dot(&theta[1..], f);
                softplus(z) - if y { z } else { 0.0 }
            })
            .sum();
        loss / n + 0.5 * self.l2 * dot(&theta[1..], &theta[1..])
    }

    fn gradient_hessian(&self, theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let p = theta.len();
        let n = self.features.len() as f64;
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        let mut row = vec![1.0; p];
        for (f, &y) in self.features.iter().zip(self.labels) {
            row[1..].copy_from_slice(f);
            let prob = sigmoid(theta[0] + dot(&theta[1..], f));
            let r = prob - if y { 1.0 } else { 0.0 };
            let d = prob * (1.0 - prob);
            for i in 0..p {
                g[i] += r * row[i];
                let di = d * row[i];
                for j in i..p {
                    h[(i, j)] += di * row[j];
                }
            }
        }
        g /= n;
        h /= n;
        for i in 1..p {
            g[i] += self.l2 * theta[i];
            h[(i, i)] += self.l2;
        }
        for i in 0..p {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
        }
        (g, h)
    }
}

fn newton_direction(g: &DVector<f64>, h: DMatrix<f64>) -> DVector<f64> {
    let mut jitter = 0.0;
    loop {
        let mut m = h.clone();
        if jitter > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
        }
        if let Some(chol) = m.cholesky() {
            return -chol.solve(g);
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
        if jitter > 1e6 {
            return -g.clone();
        }
    }
}

fn fit_rows(
    rows: &[Vec<f64>],
    labels: &[bool],
    expansion: Expansion,
    l2: f64,
    max_iter: usize,
    grad_tol: f64,
) -> Result<Classifier> {
    if rows.is_empty() || !labels.contains(&true) || !labels.contains(&false) {
        return Err(Error::DegenerateSample(
            "classifier training needs both labeled and unlabeled points".into(),
        ));
    }
    let (input_mean, input_scale) = standardizer(rows);
    let mut features: Vec<Vec<f64>> = rows.to_vec();
    standardize(&mut features, &input_mean, &input_scale);
    let mut features: Vec<Vec<f64>> = features.iter().map(|z| expand(z, expansion)).collect();
    let (feature_mean, feature_scale) = standardizer(&features);
    standardize(&mut features, &feature_mean, &feature_scale);

    let problem = Problem {
        features: &features,
        labels,
        l2,
    };
    let p = features[0].len() + 1;
    let mut theta = vec![0.0; p];
    let mut value = problem.objective(&theta);
    let mut trace = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let (g, h) = problem.gradient_hessian(&theta);
        if g.norm() <= grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let dir = newton_direction(&g, h);
        let slope = g.dot(&dir);
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-14 {
            let trial: Vec<f64> = theta.iter().zip(dir.iter()).map(|(t, d)| t + step * d).collect();
            let v = problem.objective(&trial);
            if v <= value + 1e-4 * step * slope {
                accepted = Some((trial, v));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((t, v)) => {
                theta = t;
                value = v;
                trace.push(v);
            }
            // no decrease representable in floating point
            None => break,
        }
    }
    if !converged {
        let (g, _) = problem.gradient_hessian(&theta);
        converged = g.norm() <= grad_tol;
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::DegenerateSample("classifier weights are not finite".into()));
    }
    Ok(Classifier {
        expansion,
        input_mean,
        input_scale,
        feature_mean,
        feature_scale,
        intercept: theta[0],
        weights: theta[1..].to_vec(),
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Logistic regression of positives (1) against unlabeled points (0) on the
/// whole dataset.
pub fn fit_classifier(dataset: &PUDataset, expansion: Expansion, l2: f64) -> Result<Classifier> {
    let config = TransformConfig {
        expansion,
        l2,
        ..TransformConfig::default()
    };
    config.validate()?;
    let mut rows = dataset.positives.clone();
    rows.extend(dataset.unlabeled.iter().cloned());
    let mut labels = vec![true; dataset.n_positive()];
    labels.resize(rows.len(), false);
    fit_rows(&rows, &labels, expansion, l2, config.max_iter, config.grad_tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformOutput {
    pub tau_x1: Vec<f64>,
    pub tau_x: Vec<f64>,
    pub folds: usize,
    /// Number of fold models that stopped before reaching the gradient tolerance.
    pub unconverged: usize,
    pub warnings: Vec<String>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn point_key(seed: u64, class: u64, x: &[f64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(class));
    for v in x {
        // +0.0 and -0.0 are the same point
        let bits = if *v == 0.0 { 0 } else { v.to_bits() };
        h = splitmix64(h ^ bits);
    }
    h
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Canonical order of a class (by seeded hash, then coordinates) and the
/// fold of every point. Identical points share a fold, so the result depends
/// only on the multiset of points.
fn assign_folds(points: &[Vec<f64>], class: u64, seed: u64, folds: usize) -> (Vec<usize>, Vec<usize>) {
    let keys: Vec<u64> = points.iter().map(|p| point_key(seed, class, p)).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then_with(|| cmp_points(&points[a], &points[b])));
    let mut fold = vec![0; points.len()];
    let mut rank = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && cmp_points(&points[order[pos - 1]], &points[i]).is_ne() {
            rank += 1;
        }
        fold[i] = rank % folds;
    }
    (order, fold)
}

/// Out-of-fold classifier scores for both samples, in input order.
///
/// Folds are stratified: each sample is split separately. If a sample has
/// fewer distinct points than `config.folds`, the fold count is reduced with
/// a warning.
pub fn cv_transform(dataset: &PUDataset, config: &TransformConfig) -> Result<TransformOutput> {
    config.validate()?;
    let mut warnings = Vec::new();
    let distinct = |pts: &[Vec<f64>]| {
        let mut v: Vec<&Vec<f64>> = pts.iter().collect();
        v.sort_by(|a, b| cmp_points(a, b));
        v.dedup_by(|a, b| cmp_points(a, b).is_eq());
        v.len()
    };
    let smallest = distinct(&dataset.positives).min(distinct(&dataset.unlabeled));
    let mut folds = config.folds;
    if smallest < folds {
        if smallest < 2 {
            return Err(Error::DegenerateSample(
                "cross-validation needs at least two distinct points per sample".into(),
            ));
        }
        warnings.push(format!(
            "a sample has only {smallest} distinct points; using {smallest} folds instead of {folds}"
        ));
        folds = smallest;
    }

    let (order1, fold1) = assign_folds(&dataset.positives, 1, config.seed, folds);
    let (order0, fold0) = assign_folds(&dataset.unlabeled, 0, config.seed, folds);

    let models: Vec<Result<Classifier>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for &i in order1.iter().filter(|&&i| fold1[i] != f) {
                rows.push(dataset.positives[i].clone());
                labels.push(true);
            }
            for &i in order0.iter().filter(|&&i| fold0[i] != f) {
                rows.push(dataset.unlabeled[i].clone());
                labels.push(false);
            }
            fit_rows(&rows, &labels, config.expansion, config.l2, config.max_iter, config.grad_tol)
        })
        .collect();
    let models = models.into_iter().collect::<Result<Vec<_>>>()?;

    let unconverged = models.iter().filter(|m| !m.converged).count();
    if unconverged > 0 {
        warnings.push(format!(
            "classifier did not reach the gradient tolerance in {unconverged} of {folds} folds"
        ));
    }
    let tau_x1 = dataset
        .positives
        .iter()
        .zip(&fold1)
        .map(|(p, &f)| models[f].predict(p))
        .collect();
    let tau_x = dataset
        .unlabeled
        .iter()
        .zip(&fold0)
        .map(|(p, &f)| models[f].predict(p))
        .collect();
    Ok(TransformOutput {
        tau_x1,
        tau_x,
        folds,
        unconverged,
        warnings,
    })
}

/// Positive-class posterior from a score: `min(1, c_ratio * alpha_hat * tau / (1 - tau))`,
/// where `c_ratio = |X| / |X1|`.
pub fn posterior(tau: f64, alpha_hat: f64, c_ratio: f64) -> Result<f64> {
    if !(tau < 1.0) {
        return Err(Error::TauOutOfRange(tau));
    }
    if !(tau >= 0.0) {
        return Err(Error::TauOutOfRange(tau));
    }
    if !(0.0..=1.0).contains(&alpha_hat) || !(c_ratio > 0.0 && c_ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "posterior needs alpha_hat in [0, 1] and positive c_ratio, got {alpha_hat} and {c_ratio}"
        )));
    }
    Ok((c_ratio * alpha_hat * tau / (1.0 - tau)).min(1.0))
}

/// Writes scores as `id,tau` rows.
pub fn write_scores(path: &Path, tau: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "id,tau")?;
    for (i, t) in tau.iter().enumerate() {
        writeln!(out, "{i},{}", format_value(*t))?;
    }
    out.flush()?;
    Ok(())
}
