//! Maximizes the combined log-likelihood on one level set
//! `{β : Σ βᵢwᵢ = c, 0 ≤ βᵢ ≤ 1}`.
//!
//! On a level set the `−log Σβw` part of the component likelihood is the
//! constant `−log c`, so what remains is concave and separable across bins.
//! The solver is projected-gradient ascent with a monotone Armijo
//! backtracking search. By default each step is measured in the metric of
//! the objective's diagonal curvature, which makes it a projected Newton
//! step and copes with the very different curvatures of sparse and dense
//! bins. The plain Euclidean step, with Barzilai-Borwein trial lengths, is
//! the fallback.

use serde::{Deserialize, Serialize};

use crate::density::HistogramModel;
use crate::error::{Error, Result};
use crate::likelihood::Objective;
use crate::types::BetaVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Converged once the duality gap, an upper bound on the distance to the
    /// optimal value, is below `tol · max(1, |objective|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Also required for convergence: `‖P(β + ∇) − β‖ ≤ pg_tol`.
    pub pg_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_increase: f64,
    /// Use Barzilai-Borwein trial steps after the first iteration.
    pub bb_steps: bool,
    /// Measure steps and projections in the metric of the objective's
    /// diagonal curvature, a projected Newton step. Falls back to the
    /// Euclidean step when the scaled one makes no progress.
    pub scaled: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-7,
            max_iter: 500,
            pg_tol: 1e-6,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_increase: 1e-4,
            bb_steps: true,
            scaled: true,
        }
    }
}

/// Result of one level-set solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSolution {
    pub beta: BetaVector,
    /// Full log-likelihood at `beta`.
    pub ell: f64,
    /// Level-set objective (without the constant `−γ₁|X₁| log c`).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mixing proportion must lie in (0, 1), got {c}"
        )));
    }
    Ok(())
}

/// `βᵢ = c` for every bin, which satisfies `Σ βᵢwᵢ = c` since `Σ wᵢ = 1`.
pub fn feasible_init(model: &HistogramModel, c: f64) -> Result<BetaVector> {
    check_c(c)?;
    BetaVector::uniform(model.k(), c)
}

/// Euclidean projection of `beta` onto `{Σ βᵢwᵢ = c} ∩ [0,1]ᵏ`.
///
/// The minimizer has the form `βᵢ = clip(yᵢ − λwᵢ, 0, 1)`; `λ` is bracketed
/// by bisection and then solved exactly on the resulting active set.
pub fn project(beta: &[f64], w: &[f64], c: f64) -> Result<BetaVector> {
    project_scaled(beta, w, &vec![1.0; w.len()], c)
}

/// Projection in the metric `Σ (βᵢ − yᵢ)² / sᵢ`: the minimizer is
/// `βᵢ = clip(yᵢ − λsᵢwᵢ, 0, 1)`. With `s ≡ 1` this is [`project`].
fn project_scaled(beta: &[f64], w: &[f64], scale: &[f64], c: f64) -> Result<BetaVector> {
    if beta.len() != w.len() || scale.len() != w.len() {
        return Err(Error::InvalidParameter("beta and w lengths differ".into()));
    }
    if w.iter().any(|&wi| !(wi > 0.0)) {
        return Err(Error::InvalidParameter("projection needs w > 0".into()));
    }
    let total: f64 = w.iter().sum();
    if !(c >= 0.0 && c <= total) || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::InfeasibleProjection(c));
    }
    let v: Vec<f64> = w.iter().zip(scale).map(|(wi, si)| wi * si).collect();
    let at = |lambda: f64| -> f64 {
        beta.iter()
            .zip(w.iter().zip(&v))
            .map(|(y, (wi, vi))| wi * (y - lambda * vi).clamp(0.0, 1.0))
            .sum()
    };
    // sum(λ) is non-increasing; at `lo` every coordinate clips to 1, at `hi` to 0
    let mut lo = beta
        .iter()
        .zip(&v)
        .map(|(y, vi)| (y - 1.0) / vi)
        .fold(f64::INFINITY, f64::min);
    let mut hi = beta
        .iter()
        .zip(&v)
        .map(|(y, vi)| y / vi)
        .fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // exact λ on the active set identified by the bracket
    let lambda = {
        let probe = 0.5 * (lo + hi);
        let (mut num, mut den) = (-c, 0.0);
        for (y, (wi, vi)) in beta.iter().zip(w.iter().zip(&v)) {
            let t = y - probe * vi;
            if t >= 1.0 {
                num += wi;
            } else if t > 0.0 {
                num += wi * y;
                den += wi * vi;
            }
        }
        if den > 0.0 {
            (num / den).clamp(lo, hi)
        } else {
            probe
        }
    };
    let mut out: Vec<f64> = beta
        .iter()
        .zip(&v)
        .map(|(y, vi)| (y - lambda * vi).clamp(0.0, 1.0))
        .collect();
    // With very large inputs `y − λv` cancels badly; move the leftover mass
    // along v over the coordinates that still have room.
    for _ in 0..50 {
        let r = c - dot(&out, w);
        if r.abs() <= 1e-14 {
            break;
        }
        let room = |b: f64| if r > 0.0 { b < 1.0 } else { b > 0.0 };
        let den: f64 = out
            .iter()
            .zip(w.iter().zip(&v))
            .filter(|(b, _)| room(**b))
            .map(|(_, (wi, vi))| wi * vi)
            .sum();
        if den == 0.0 {
            break;
        }
        for (b, vi) in out.iter_mut().zip(&v) {
            if room(*b) {
                *b = (*b + r * vi / den).clamp(0.0, 1.0);
            }
        }
    }
    let got = dot(&out, w);
    if (got - c).abs() > 1e-10 {
        return Err(Error::InfeasibleProjection(c));
    }
    Ok(BetaVector::from_clipped(out))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Frank-Wolfe gap `max_{β' feasible} g·(β' − β)`. For a concave objective
/// it bounds `f* − f(β)` from above. The inner maximization is a fractional
/// knapsack: fill coordinates in decreasing order of `gᵢ/wᵢ`.
fn duality_gap(beta: &[f64], g: &[f64], w: &[f64], c: f64) -> f64 {
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| (g[b] / w[b]).total_cmp(&(g[a] / w[a])));
    let mut budget = c;
    let mut best = 0.0;
    for i in order {
        if budget <= 0.0 {
            break;
        }
        let take = (budget / w[i]).min(1.0);
        best += g[i] * take;
        budget -= take * w[i];
    }
    best - dot(g, beta)
}

/// An accepted iterate: the point, the step taken and the objective there.
type Step = (Vec<f64>, Vec<f64>, f64);

/// Projected Newton step: `β + D⁻¹g` projected in the metric `D`, where
/// `D` is the negated (diagonal) Hessian, then an Armijo search along the
/// segment towards that point. Returns `None` when it gives no ascent.
fn scaled_step(
    obj: &Objective<'_>,
    beta: &[f64],
    g: &[f64],
    f: f64,
    c: f64,
    opts: &SolverOptions,
) -> Result<Option<Step>> {
    let curv = obj.levelset_curvature(beta, c);
    let top = curv.iter().copied().fold(0.0, f64::max);
    if !(top > 0.0 && top.is_finite()) {
        return Ok(None);
    }
    // bins that do not enter the objective get a tiny curvature so they
    // absorb slack in the constraint first
    let floor = top * 1e-12;
    let scale: Vec<f64> = curv.iter().map(|&d| 1.0 / d.max(floor)).collect();
    let newton: Vec<f64> = beta
        .iter()
        .zip(g.iter().zip(&scale))
        .map(|(b, (gi, si))| b + gi * si)
        .collect();
    let target = project_scaled(&newton, obj.model().w(), &scale, c)?.into_inner();
    let dir: Vec<f64> = target.iter().zip(beta).map(|(a, b)| a - b).collect();
    let slope = dot(g, &dir);
    if !(slope > 0.0) {
        return Ok(None);
    }
    let mut t = 1.0;
    for _ in 0..60 {
        let cand: Vec<f64> = beta
            .iter()
            .zip(&dir)
            .map(|(b, di)| (b + t * di).clamp(0.0, 1.0))
            .collect();
        let f_new = obj.levelset_value(&cand, c);
        if f_new.is_finite() && f_new >= f + opts.sufficient_increase * t * slope {
            let d: Vec<f64> = cand.iter().zip(beta).map(|(a, b)| a - b).collect();
            return Ok(Some((cand, d, f_new)));
        }
        t *= opts.shrink;
    }
    Ok(None)
}

fn ascent_point(beta: &[f64], g: &[f64], step: f64) -> Vec<f64> {
    beta.iter().zip(g).map(|(b, gi)| b + step * gi).collect()
}

/// Maximizes the log-likelihood on the level set `Σ βᵢwᵢ = c`, starting
/// from the uniform feasible point.
pub fn solve_level_set(obj: &Objective<'_>, c: f64, opts: &SolverOptions) -> Result<LevelSetSolution> {
    let start = feasible_init(obj.model(), c)?;
    solve_level_set_from(obj, c, start, opts)
}

/// As [`solve_level_set`], from a caller-supplied feasible start.
pub fn solve_level_set_from(
    obj: &Objective<'_>,
    c: f64,
    start: BetaVector,
    opts: &SolverOptions,
) -> Result<LevelSetSolution> {
    check_c(c)?;
    let w = obj.model().w();
    let mut beta = project(start.as_slice(), w, c)?.into_inner();
    let mut f = obj.levelset_value(&beta, c);
    if !f.is_finite() {
        return Err(Error::InvalidParameter(
            "starting point has zero likelihood".into(),
        ));
    }
    let mut g = obj.levelset_gradient(&beta, c);
    let mut history = vec![f];
    let mut step = opts.initial_step;
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let pg = project(&ascent_point(&beta, &g, 1.0), w, c)?;
        if norm_diff(pg.as_slice(), &beta) <= opts.pg_tol
            && duality_gap(&beta, &g, w, c) <= opts.tol * f.abs().max(1.0)
        {
            converged = true;
            break;
        }
        if iterations == opts.max_iter {
            break;
        }
        iterations += 1;

        let mut accepted = if opts.scaled {
            scaled_step(obj, &beta, &g, f, c, opts)?
        } else {
            None
        };
        let mut t = step;
        for _ in 0..80 {
            if accepted.is_some() {
                break;
            }
            let cand = project(&ascent_point(&beta, &g, t), w, c)?.into_inner();
            let d: Vec<f64> = cand.iter().zip(&beta).map(|(a, b)| a - b).collect();
            let f_new = obj.levelset_value(&cand, c);
            if f_new.is_finite() && f_new >= f + opts.sufficient_increase * dot(&g, &d) {
                accepted = Some((cand, d, f_new));
                break;
            }
            t *= opts.shrink;
        }
        let Some((cand, d, f_new)) = accepted else {
            // no ascent possible at machine precision
            converged = true;
            break;
        };

        let g_new = obj.levelset_gradient(&cand, c);
        if opts.bb_steps {
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let curv = -dot(&d, &y);
            step = if curv > 0.0 {
                (dot(&d, &d) / curv).clamp(1e-12, 1e12)
            } else {
                opts.initial_step
            };
        }
        beta = cand;
        f = f_new;
        g = g_new;
        history.push(f);
    }

    let ell = obj.levelset_to_full(f, c);
    Ok(LevelSetSolution {
        beta: BetaVector::from_clipped(beta),
        ell,
        objective: f,
        iterations,
        converged,
        history,
    })
}
