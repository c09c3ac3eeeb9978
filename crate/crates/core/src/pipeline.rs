//! Method dispatch shared by the command line and the benchmark harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alphamax::{estimate_alphamax_univariate, AlphaMaxConfig};
use crate::baselines::{cdf_based_estimate, gmm_em_estimate, pdf_ratio_estimate, GmmConfig};
use crate::dataset::PUDataset;
use crate::density::build_histogram;
use crate::error::{Error, Result};
use crate::transform::cv_transform;
use crate::types::{Method, PriorEstimate};

/// When to replace the inputs by out-of-fold classifier scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformMode {
    /// Only for multivariate data.
    #[default]
    Auto,
    On,
    Off,
}

impl FromStr for TransformMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(TransformMode::Auto),
            "on" => Ok(TransformMode::On),
            "off" => Ok(TransformMode::Off),
            _ => Err(Error::InvalidParameter(format!(
                "transform mode must be auto, on or off, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for TransformMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformMode::Auto => "auto",
            TransformMode::On => "on",
            TransformMode::Off => "off",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateOptions {
    pub alphamax: AlphaMaxConfig,
    pub gmm: GmmConfig,
    pub cdf_step: f64,
    pub transform: TransformMode,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            alphamax: AlphaMaxConfig::default(),
            gmm: GmmConfig::default(),
            cdf_step: 0.001,
            transform: TransformMode::Auto,
        }
    }
}

impl EstimateOptions {
    /// Seeds every randomized stage from one value.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.alphamax.transform.seed = seed;
        self.gmm.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.alphamax.validate()?;
        self.gmm.validate()?;
        if !(self.cdf_step > 0.0 && self.cdf_step <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cdf_step {} outside (0, 1]",
                self.cdf_step
            )));
        }
        Ok(())
    }
}

/// Univariate samples ready for any estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub x1: Vec<f64>,
    pub x: Vec<f64>,
    pub transform_used: bool,
    pub warnings: Vec<String>,
}

pub fn prepare(dataset: &PUDataset, options: &EstimateOptions) -> Result<Prepared> {
    let transform = match options.transform {
        TransformMode::On => true,
        TransformMode::Auto => dataset.dim > 1,
        TransformMode::Off if dataset.dim > 1 => return Err(Error::TransformRequired),
        TransformMode::Off => false,
    };
    if transform {
        let out = cv_transform(dataset, &options.alphamax.transform)?;
        Ok(Prepared {
            x1: out.tau_x1,
            x: out.tau_x,
            transform_used: true,
            warnings: out.warnings,
        })
    } else {
        let (x1, x) = dataset.as_univariate().ok_or(Error::TransformRequired)?;
        Ok(Prepared {
            x1,
            x,
            transform_used: false,
            warnings: Vec::new(),
        })
    }
}

pub fn estimate_prepared(
    data: &Prepared,
    method: Method,
    options: &EstimateOptions,
) -> Result<PriorEstimate> {
    let mut est = match method {
        Method::Alphamax => estimate_alphamax_univariate(&data.x1, &data.x, &options.alphamax)?,
        Method::PdfRatio => {
            let model = build_histogram(&data.x1, &data.x, options.alphamax.pseudocount)?;
            pdf_ratio_estimate(&model, &data.x1)?
        }
        Method::CdfBased => cdf_based_estimate(&data.x, &data.x1, options.cdf_step)?,
        Method::Gmm => gmm_em_estimate(&data.x, &data.x1, &options.gmm)?.0,
    };
    est.transform_used = data.transform_used;
    let mut warnings = data.warnings.clone();
    warnings.append(&mut est.warnings);
    est.warnings = warnings;
    Ok(est)
}

/// Runs one estimator, transforming first when `options.transform` asks for it.
pub fn estimate(dataset: &PUDataset, method: Method, options: &EstimateOptions) -> Result<PriorEstimate> {
    options.validate()?;
    estimate_prepared(&prepare(dataset, options)?, method, options)
}

/// Runs several estimators on one shared preparation. An error in the
/// preparation fails the call; estimator errors are reported per method.
pub fn estimate_many(
    dataset: &PUDataset,
    methods: &[Method],
    options: &EstimateOptions,
) -> Result<Vec<(Method, Result<PriorEstimate>)>> {
    options.validate()?;
    let data = prepare(dataset, options)?;
    Ok(methods
        .iter()
        .map(|&m| (m, estimate_prepared(&data, m, options)))
        .collect())
}
