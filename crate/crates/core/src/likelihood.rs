//! Reweighted mixture components and the combined log-likelihood.
//!
//! For a reweighting `β` the mixture estimate splits as
//! `f̂ = s·h₁(·|β) + (1 − s)·h₀(·|β)` with `s = Σ βᵢ wᵢ`, where `h₁` keeps
//! mass `βᵢwᵢ` of each kernel and `h₀` keeps the rest. The fitted mixture
//! `h` replaces `h₁` by the component estimate `f̂₁`. All sums run over
//! bins, so every evaluation costs `O(k)` regardless of the sample sizes.

use crate::density::{pdf_component, HistogramModel};
use crate::error::{Error, Result};
use crate::types::{BetaVector, LikelihoodWeights};

fn check_len(model: &HistogramModel, beta: &BetaVector) -> Result<()> {
    if beta.len() != model.k() {
        return Err(Error::InvalidParameter(format!(
            "beta has {} entries but the model has {} bins",
            beta.len(),
            model.k()
        )));
    }
    Ok(())
}

fn negative_mass(model: &HistogramModel, beta: &BetaVector) -> Result<f64> {
    check_len(model, beta)?;
    let mass: f64 = beta
        .as_slice()
        .iter()
        .zip(model.w())
        .map(|(b, w)| (1.0 - b) * w)
        .sum();
    if mass <= 0.0 {
        return Err(Error::EmptyNegativeComponent);
    }
    Ok(mass)
}

/// `h₀(x|β) = Σ (1−βᵢ) wᵢ κᵢ(x) / Σ (1−βᵢ) wᵢ`.
pub fn eval_h0(model: &HistogramModel, beta: &BetaVector, x: f64) -> Result<f64> {
    let mass = negative_mass(model, beta)?;
    Ok(model.bin_of(x).map_or(0.0, |i| {
        (1.0 - beta.as_slice()[i]) * model.w()[i] / model.width() / mass
    }))
}

/// `h₁(x|β) = Σ βᵢ wᵢ κᵢ(x) / Σ βᵢ wᵢ`.
pub fn eval_h1(model: &HistogramModel, beta: &BetaVector, x: f64) -> Result<f64> {
    check_len(model, beta)?;
    let s = beta.proportion(model);
    if s <= 0.0 {
        return Err(Error::InvalidParameter(
            "h1 undefined: every beta equals 0".into(),
        ));
    }
    Ok(model
        .bin_of(x)
        .map_or(0.0, |i| beta.as_slice()[i] * model.w()[i] / model.width() / s))
}

/// `h(x|β) = s·f̂₁(x) + (1 − s)·h₀(x|β)`, `s = Σ βᵢ wᵢ`.
pub fn eval_h(model: &HistogramModel, beta: &BetaVector, x: f64) -> Result<f64> {
    let s = beta.proportion(model);
    let h0 = eval_h0(model, beta, x)?;
    Ok(s * pdf_component(model, x) + (1.0 - s) * h0)
}

/// Bin-aggregated log-likelihood of a pair of samples under a histogram model.
///
/// Counts are tallied once at construction; every evaluation is `O(k)`.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    model: &'a HistogramModel,
    mix: Vec<u64>,
    comp: Vec<u64>,
    weights: LikelihoodWeights,
    n_comp: f64,
}

impl<'a> Objective<'a> {
    /// Uses the counts the model was built from.
    pub fn from_model(model: &'a HistogramModel, weights: LikelihoodWeights) -> Self {
        Self::with_counts(
            model,
            model.counts_mix().to_vec(),
            model.counts_comp().to_vec(),
            weights,
        )
    }

    /// Bins arbitrary samples against the model.
    pub fn new(
        model: &'a HistogramModel,
        x1: &[f64],
        x: &[f64],
        weights: LikelihoodWeights,
    ) -> Self {
        Self::with_counts(model, model.count(x), model.count(x1), weights)
    }

    fn with_counts(
        model: &'a HistogramModel,
        mix: Vec<u64>,
        comp: Vec<u64>,
        weights: LikelihoodWeights,
    ) -> Self {
        let n_comp = comp.iter().sum::<u64>() as f64;
        Objective {
            model,
            mix,
            comp,
            weights,
            n_comp,
        }
    }

    pub fn model(&self) -> &HistogramModel {
        self.model
    }

    pub fn weights(&self) -> LikelihoodWeights {
        self.weights
    }

    pub fn counts_mix(&self) -> &[u64] {
        &self.mix
    }

    pub fn counts_comp(&self) -> &[u64] {
        &self.comp
    }

    fn mix_term(&self, beta: &[f64], s: f64) -> f64 {
        let (w, cm, width) = (self.model.w(), self.model.comp_mass(), self.model.width());
        let mut acc = 0.0;
        for i in 0..w.len() {
            if self.mix[i] > 0 {
                let h = (s * cm[i] + (1.0 - beta[i]) * w[i]) / width;
                acc += self.mix[i] as f64 * h.ln();
            }
        }
        acc
    }

    /// `Σ_{x∈X₁} log Σ βᵢwᵢκᵢ(x)`: the component term without its normaliser.
    fn comp_term(&self, beta: &[f64]) -> f64 {
        let (w, width) = (self.model.w(), self.model.width());
        let mut acc = 0.0;
        for i in 0..w.len() {
            if self.comp[i] > 0 {
                acc += self.comp[i] as f64 * (beta[i] * w[i] / width).ln();
            }
        }
        acc
    }

    /// Combined log-likelihood `γ Σ_X log h(x|β) + γ₁ Σ_{X₁} log h₁(x|β)`.
    /// Returns `-inf` when an occupied bin has zero density.
    pub fn log_likelihood(&self, beta: &[f64]) -> f64 {
        let s: f64 = beta.iter().zip(self.model.w()).map(|(b, w)| b * w).sum();
        let LikelihoodWeights { gamma, gamma1 } = self.weights;
        let mut value = 0.0;
        if gamma > 0.0 {
            value += gamma * self.mix_term(beta, s);
        }
        if gamma1 > 0.0 && self.n_comp > 0.0 {
            if s <= 0.0 {
                return f64::NEG_INFINITY;
            }
            value += gamma1 * (self.comp_term(beta) - self.n_comp * s.ln());
        }
        if value.is_nan() {
            f64::NEG_INFINITY
        } else {
            value
        }
    }

    /// Objective on the level set `Σ βᵢwᵢ = c`, with the constant
    /// `−γ₁|X₁| log c` dropped. Concave in `β`.
    pub fn levelset_value(&self, beta: &[f64], c: f64) -> f64 {
        let LikelihoodWeights { gamma, gamma1 } = self.weights;
        let mut value = 0.0;
        if gamma > 0.0 {
            value += gamma * self.mix_term(beta, c);
        }
        if gamma1 > 0.0 {
            value += gamma1 * self.comp_term(beta);
        }
        if value.is_nan() {
            f64::NEG_INFINITY
        } else {
            value
        }
    }

    /// Converts a level-set objective value back to the full log-likelihood.
    pub fn levelset_to_full(&self, value: f64, c: f64) -> f64 {
        value - self.weights.gamma1 * self.n_comp * c.ln()
    }

    /// Gradient of [`Objective::levelset_value`]:
    /// `γ₁ n₁ᵢ / βᵢ − γ nᵢ wᵢ / (c·cmᵢ + (1−βᵢ) wᵢ)`.
    pub fn levelset_gradient(&self, beta: &[f64], c: f64) -> Vec<f64> {
        let (w, cm) = (self.model.w(), self.model.comp_mass());
        let LikelihoodWeights { gamma, gamma1 } = self.weights;
        (0..w.len())
            .map(|i| {
                let mut g = 0.0;
                if self.comp[i] > 0 {
                    g += gamma1 * self.comp[i] as f64 / beta[i];
                }
                if self.mix[i] > 0 {
                    g -= gamma * self.mix[i] as f64 * w[i] / (c * cm[i] + (1.0 - beta[i]) * w[i]);
                }
                g
            })
            .collect()
    }

    /// Negated diagonal of the Hessian of [`Objective::levelset_value`]; the
    /// objective is separable, so this is the whole curvature.
    pub fn levelset_curvature(&self, beta: &[f64], c: f64) -> Vec<f64> {
        let (w, cm) = (self.model.w(), self.model.comp_mass());
        let LikelihoodWeights { gamma, gamma1 } = self.weights;
        (0..w.len())
            .map(|i| {
                let mut d = 0.0;
                if self.comp[i] > 0 {
                    d += gamma1 * self.comp[i] as f64 / (beta[i] * beta[i]);
                }
                if self.mix[i] > 0 {
                    let h = c * cm[i] + (1.0 - beta[i]) * w[i];
                    d += gamma * self.mix[i] as f64 * w[i] * w[i] / (h * h);
                }
                d
            })
            .collect()
    }

    /// Occupied bins where `h` or `h₁` vanishes under `β`.
    pub fn zero_density_bins(&self, beta: &[f64]) -> Vec<usize> {
        let (w, cm) = (self.model.w(), self.model.comp_mass());
        let s: f64 = beta.iter().zip(w).map(|(b, w)| b * w).sum();
        (0..w.len())
            .filter(|&i| {
                (self.comp[i] > 0 && beta[i] * w[i] <= 0.0)
                    || (self.mix[i] > 0 && s * cm[i] + (1.0 - beta[i]) * w[i] <= 0.0)
            })
            .collect()
    }
}

/// Combined log-likelihood of `β` given the two samples.
pub fn log_likelihood(
    model: &HistogramModel,
    beta: &BetaVector,
    x1: &[f64],
    x: &[f64],
    weights: LikelihoodWeights,
) -> Result<f64> {
    check_len(model, beta)?;
    Ok(Objective::new(model, x1, x, weights).log_likelihood(beta.as_slice()))
}

/// Gradient of the level-set objective at `β`, where `c = Σ βᵢwᵢ`.
pub fn gradient_on_levelset(
    model: &HistogramModel,
    beta: &BetaVector,
    x1: &[f64],
    x: &[f64],
    weights: LikelihoodWeights,
) -> Result<Vec<f64>> {
    check_len(model, beta)?;
    let c = beta.proportion(model);
    let obj = Objective::new(model, x1, x, weights);
    if !obj.zero_density_bins(beta.as_slice()).is_empty() {
        return Err(Error::InvalidParameter(
            "gradient undefined: an occupied bin has zero density".into(),
        ));
    }
    Ok(obj.levelset_gradient(beta.as_slice(), c))
}
