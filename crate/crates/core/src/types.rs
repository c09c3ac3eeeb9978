//! Value types shared by the estimators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::HistogramModel;
use crate::error::{Error, Result};

/// Per-bin reweighting coefficients, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaVector(Vec<f64>);

impl BetaVector {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if let Some(b) = beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::InvalidParameter(format!(
                "beta coefficient {b} outside [0, 1]"
            )));
        }
        Ok(BetaVector(beta))
    }

    /// Caller guarantees every coordinate lies in `[0, 1]`.
    pub(crate) fn from_clipped(beta: Vec<f64>) -> Self {
        debug_assert!(beta.iter().all(|b| (0.0..=1.0).contains(b)));
        BetaVector(beta)
    }

    pub fn uniform(k: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Implied mixing proportion `Σ βᵢ wᵢ`.
    pub fn proportion(&self, model: &HistogramModel) -> f64 {
        self.0.iter().zip(model.w()).map(|(b, w)| b * w).sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Weights `(γ, γ₁)` on the mixture-sample and component-sample log-likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodWeights {
    pub gamma: f64,
    pub gamma1: f64,
}

impl LikelihoodWeights {
    pub fn new(gamma: f64, gamma1: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma1 >= 0.0) || !gamma.is_finite() || !gamma1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "likelihood weights must be finite and nonnegative, got ({gamma}, {gamma1})"
            )));
        }
        if gamma == 0.0 && gamma1 == 0.0 {
            return Err(Error::InvalidParameter(
                "likelihood weights cannot both be zero".into(),
            ));
        }
        Ok(LikelihoodWeights { gamma, gamma1 })
    }

    /// `(1/|X|, 1/|X₁|)`: each sample counts equally regardless of size.
    pub fn per_sample(n_mix: usize, n_comp: usize) -> Self {
        LikelihoodWeights {
            gamma: 1.0 / n_mix as f64,
            gamma1: 1.0 / n_comp as f64,
        }
    }

    /// `(1, 1)`: each example counts equally.
    pub fn per_example() -> Self {
        LikelihoodWeights {
            gamma: 1.0,
            gamma1: 1.0,
        }
    }
}

/// How [`LikelihoodWeights`] are chosen for a given pair of samples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    #[default]
    PerSample,
    PerExample,
    Custom {
        gamma: f64,
        gamma1: f64,
    },
}

impl WeightScheme {
    pub fn resolve(&self, n_mix: usize, n_comp: usize) -> Result<LikelihoodWeights> {
        match *self {
            WeightScheme::PerSample => Ok(LikelihoodWeights::per_sample(n_mix, n_comp)),
            WeightScheme::PerExample => Ok(LikelihoodWeights::per_example()),
            WeightScheme::Custom { gamma, gamma1 } => LikelihoodWeights::new(gamma, gamma1),
        }
    }
}

/// Profile log-likelihood over a grid of mixing proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetCurve {
    pub cs: Vec<f64>,
    pub ells: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub betas: Option<Vec<BetaVector>>,
}

impl LevelSetCurve {
    pub fn new(cs: Vec<f64>, ells: Vec<f64>) -> Result<Self> {
        if cs.len() != ells.len() {
            return Err(Error::InvalidParameter(format!(
                "curve grid has {} points but {} values",
                cs.len(),
                ells.len()
            )));
        }
        if cs.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidParameter(
                "curve grid must be strictly increasing".into(),
            ));
        }
        Ok(LevelSetCurve {
            cs,
            ells,
            betas: None,
        })
    }

    pub fn len(&self) -> usize {
        self.cs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cs.is_empty()
    }
}

/// Estimator identity, as printed in JSON and CSV outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Alphamax,
    #[serde(alias = "pdf")]
    PdfRatio,
    #[serde(alias = "cdf")]
    CdfBased,
    Gmm,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Alphamax,
        Method::PdfRatio,
        Method::CdfBased,
        Method::Gmm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Alphamax => "alphamax",
            Method::PdfRatio => "pdf-ratio",
            Method::CdfBased => "cdf-based",
            Method::Gmm => "gmm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alphamax" => Ok(Method::Alphamax),
            "pdf-ratio" | "pdf" => Ok(Method::PdfRatio),
            "cdf-based" | "cdf" => Ok(Method::CdfBased),
            "gmm" => Ok(Method::Gmm),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

/// Full AlphaMax diagnostics: every stage of the curve plus the knee trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub cs: Vec<f64>,
    pub ell_raw: Vec<f64>,
    pub ell_corrected: Vec<f64>,
    pub ell_smoothed: Vec<f64>,
    pub ell_normalized: Vec<f64>,
    /// Heuristic value per grid point; `None` outside the eligible window.
    pub heuristic: Vec<Option<f64>>,
    /// Grid indices whose level-set solve hit the iteration limit.
    pub unconverged: Vec<usize>,
}

/// The output of any estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEstimate {
    pub alpha_hat: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub curve: Option<CurveReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub heuristic_trace: Option<Vec<(f64, f64)>>,
    pub transform_used: bool,
    pub low_confidence: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl PriorEstimate {
    /// A bare estimate; `alpha_hat` is clamped into `(0, 1]`.
    pub fn new(alpha_hat: f64, method: Method) -> Self {
        PriorEstimate {
            alpha_hat: clamp_prior(alpha_hat),
            method,
            curve: None,
            heuristic_trace: None,
            transform_used: false,
            low_confidence: false,
            warnings: Vec::new(),
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }
}

/// Smallest representable prior kept strictly positive.
pub(crate) const MIN_PRIOR: f64 = 1e-12;

pub(crate) fn clamp_prior(alpha: f64) -> f64 {
    if alpha.is_nan() {
        MIN_PRIOR
    } else {
        alpha.clamp(MIN_PRIOR, 1.0)
    }
}
