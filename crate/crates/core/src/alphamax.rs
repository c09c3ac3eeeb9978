//! The AlphaMax estimator.
//!
//! 1. Solve the level-set problem for every `c` on a grid in `(0, 1)`,
//!    giving the profile log-likelihood `ℓ(c)`.
//! 2. Force `ℓ` to be non-increasing (running maximum from the right);
//!    solver noise near `c → 0` otherwise produces spurious dips.
//! 3. Median-smooth, rescale to `[0, 1]`.
//! 4. Pick the grid point where the slope drops the most, favouring points
//!    where `ℓ` is still close to its maximum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PUDataset;
use crate::density::{build_histogram, HistogramModel, DEFAULT_PSEUDOCOUNT};
use crate::error::{Error, Result};
use crate::levelset::{solve_level_set, SolverOptions};
use crate::likelihood::Objective;
use crate::transform::{cv_transform, TransformConfig};
use crate::types::{CurveReport, LevelSetCurve, Method, PriorEstimate, WeightScheme};

/// Differences in slope smaller than this are treated as zero.
const SLOPE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaMaxConfig {
    /// Candidate mixing proportions, strictly increasing in `(0, 1)`.
    pub grid: Vec<f64>,
    /// Half-width of the median smoothing window.
    pub smooth_k: usize,
    /// Number of grid steps on each side of a candidate knee.
    pub win: usize,
    pub epsilon: f64,
    pub weights: WeightScheme,
    pub pseudocount: f64,
    pub solver: SolverOptions,
    /// Used only when the input is multivariate.
    pub transform: TransformConfig,
}

impl Default for AlphaMaxConfig {
    fn default() -> Self {
        AlphaMaxConfig {
            grid: default_grid(),
            smooth_k: 3,
            win: 5,
            epsilon: 0.01,
            weights: WeightScheme::PerSample,
            pseudocount: DEFAULT_PSEUDOCOUNT,
            solver: SolverOptions::default(),
            transform: TransformConfig::default(),
        }
    }
}

/// `0.01, 0.02, …, 0.99`.
pub fn default_grid() -> Vec<f64> {
    (1..=99).map(|j| j as f64 / 100.0).collect()
}

impl AlphaMaxConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if self.grid.iter().any(|&c| !(c > 0.0 && c < 1.0))
            || self.grid.windows(2).any(|p| p[1] <= p[0])
        {
            return Err(Error::InvalidParameter(
                "grid must be strictly increasing inside (0, 1)".into(),
            ));
        }
        if self.win == 0 {
            return Err(Error::InvalidParameter("win must be positive".into()));
        }
        if 2 * (self.win + self.smooth_k) >= n {
            return Err(Error::InvalidParameter(format!(
                "win + smooth_k = {} must be below half the grid length ({n})",
                self.win + self.smooth_k
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// The raw profile and its monotone-corrected version.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSolve {
    pub raw: Vec<f64>,
    /// Corrected values, with the maximizing `β` per grid point.
    pub curve: LevelSetCurve,
    /// Grid indices where the solver stopped at its iteration limit.
    pub unconverged: Vec<usize>,
}

/// Profile log-likelihood over `config.grid`, monotone-corrected.
pub fn compute_curve(obj: &Objective<'_>, config: &AlphaMaxConfig) -> Result<CurveSolve> {
    let solutions = config
        .grid
        .par_iter()
        .map(|&c| solve_level_set(obj, c, &config.solver))
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = solutions.iter().map(|s| s.ell).collect();
    let unconverged = solutions
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.converged)
        .map(|(j, _)| j)
        .collect();
    let mut curve = LevelSetCurve::new(config.grid.clone(), monotone_correct(&raw))?;
    curve.betas = Some(solutions.into_iter().map(|s| s.beta).collect());
    Ok(CurveSolve {
        raw,
        curve,
        unconverged,
    })
}

/// `ℓ(j) ← max_{m ≥ j} ℓ(m)`: the smallest upward change that makes `ℓ`
/// non-increasing.
pub fn monotone_correct(ells: &[f64]) -> Vec<f64> {
    let mut out = ells.to_vec();
    for j in (0..out.len().saturating_sub(1)).rev() {
        if out[j + 1] > out[j] || out[j].is_nan() {
            out[j] = out[j + 1];
        }
    }
    out
}

/// Replaces each interior point by the median of itself and its `k`
/// neighbours on either side; the `k` points at each end are copied.
pub fn median_smooth(ells: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(ells.to_vec());
    }
    let n = ells.len();
    if 2 * k + 1 > n {
        return Err(Error::InvalidParameter(format!(
            "smoothing window {} exceeds curve length {n}",
            2 * k + 1
        )));
    }
    let mut out = ells.to_vec();
    let mut window = vec![0.0; 2 * k + 1];
    for j in k..n - k {
        window.copy_from_slice(&ells[j - k..=j + k]);
        window.sort_by(f64::total_cmp);
        out[j] = window[k];
    }
    Ok(out)
}

/// Rescaled curve; `flat` is set when the input had no range.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    pub flat: bool,
}

/// `(ℓ − min) / (max − min)`; a constant curve maps to all `0.5`.
pub fn normalize01(ells: &[f64]) -> Normalized {
    let (lo, hi) = ells
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return Normalized {
            values: vec![0.5; ells.len()],
            flat: true,
        };
    }
    Normalized {
        values: ells.iter().map(|v| (v - lo) / range).collect(),
        flat: false,
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Outcome of the knee search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knee {
    pub alpha_hat: f64,
    pub index: usize,
    /// `(c, heuristic)` for every eligible grid point.
    pub trace: Vec<(f64, f64)>,
    pub low_confidence: bool,
    pub notes: Vec<String>,
}

/// Slope-difference knee detector on a normalized curve.
///
/// For each grid index with `win` neighbours on both sides, fits a line to
/// the `win + 1` points ending at it and to the `win + 1` points starting at
/// it; the drop in slope divided by `1 − ℓ + ε` is the heuristic. The first
/// maximizer wins ties.
pub fn detect_knee(cs: &[f64], ells: &[f64], win: usize, epsilon: f64) -> Result<Knee> {
    let n = cs.len();
    if ells.len() != n {
        return Err(Error::InvalidParameter("grid and curve lengths differ".into()));
    }
    if win == 0 || n < 2 * win + 1 {
        return Err(Error::InvalidParameter(format!(
            "window {win} leaves no eligible point on a curve of length {n}"
        )));
    }
    if ells.iter().all(|&v| v == ells[0]) {
        return Err(Error::NoKnee);
    }
    let mut trace = Vec::with_capacity(n - 2 * win);
    let mut best: Option<(usize, f64)> = None;
    let mut max_delta = f64::NEG_INFINITY;
    for j in win..n - win {
        let before = ols_slope(&cs[j - win..=j], &ells[j - win..=j]);
        let after = ols_slope(&cs[j..=j + win], &ells[j..=j + win]);
        let mut delta = before - after;
        if delta.abs() <= SLOPE_EPS {
            delta = 0.0;
        }
        max_delta = max_delta.max(delta);
        let h = delta / (1.0 - ells[j] + epsilon);
        trace.push((cs[j], h));
        if best.is_none_or(|(_, b)| h > b) {
            best = Some((j, h));
        }
    }
    let (index, _) = best.expect("at least one eligible index");
    let mut notes = Vec::new();
    if max_delta <= 0.0 {
        notes.push("no slope decrease anywhere on the curve".to_string());
    }
    if index == win || index == n - win - 1 {
        notes.push(format!("knee at the edge of the eligible range (c = {})", cs[index]));
    }
    Ok(Knee {
        alpha_hat: cs[index],
        index,
        trace,
        low_confidence: !notes.is_empty(),
        notes,
    })
}

/// AlphaMax on a dataset. Multivariate inputs are first reduced to
/// classifier scores with `config.transform`.
pub fn estimate_alphamax(dataset: &PUDataset, config: &AlphaMaxConfig) -> Result<PriorEstimate> {
    match dataset.as_univariate() {
        Some((x1, x)) => estimate_alphamax_univariate(&x1, &x, config),
        None => {
            let scores = cv_transform(dataset, &config.transform)?;
            let mut est = estimate_alphamax_univariate(&scores.tau_x1, &scores.tau_x, config)?;
            est.transform_used = true;
            est.warnings.extend(scores.warnings);
            Ok(est)
        }
    }
}

/// AlphaMax on two univariate samples.
pub fn estimate_alphamax_univariate(
    x1: &[f64],
    x: &[f64],
    config: &AlphaMaxConfig,
) -> Result<PriorEstimate> {
    config.validate()?;
    let model = build_histogram(x1, x, config.pseudocount)?;
    estimate_from_model(&model, config, x.len(), x1.len())
}

fn estimate_from_model(
    model: &HistogramModel,
    config: &AlphaMaxConfig,
    n_mix: usize,
    n_comp: usize,
) -> Result<PriorEstimate> {
    let weights = config.weights.resolve(n_mix, n_comp)?;
    let obj = Objective::from_model(model, weights);
    let solved = compute_curve(&obj, config)?;
    let smoothed = median_smooth(&solved.curve.ells, config.smooth_k)?;
    let normalized = normalize01(&smoothed);

    let cs = &config.grid;
    let mut heuristic = vec![None; cs.len()];
    let mut est;
    if normalized.flat {
        // the data cannot tell the two samples apart
        est = PriorEstimate::new(1.0, Method::Alphamax);
        est.low_confidence = true;
        est.warn("flat curve: knee undefined, reporting 1");
    } else {
        let knee = detect_knee(cs, &normalized.values, config.win, config.epsilon)?;
        for (j, (_, h)) in (config.win..).zip(&knee.trace) {
            heuristic[j] = Some(*h);
        }
        est = PriorEstimate::new(knee.alpha_hat, Method::Alphamax);
        est.low_confidence = knee.low_confidence;
        est.warnings.extend(knee.notes);
        est.heuristic_trace = Some(knee.trace);
    }
    if !solved.unconverged.is_empty() {
        est.warn(format!(
            "level-set solver hit its iteration limit at {} grid points",
            solved.unconverged.len()
        ));
    }
    est.curve = Some(CurveReport {
        cs: cs.clone(),
        ell_raw: solved.raw,
        ell_corrected: solved.curve.ells,
        ell_smoothed: smoothed,
        ell_normalized: normalized.values,
        heuristic,
        unconverged: solved.unconverged,
    });
    Ok(est)
}
