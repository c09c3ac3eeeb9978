//! Class prior estimation from a positive sample and an unlabeled sample.
//!
//! The main estimator, AlphaMax, profiles a histogram-based likelihood over
//! a grid of candidate mixing proportions and picks the point where the
//! profile stops being flat. Closed-form pdf-ratio and cdf-based
//! estimators and a two-component Gaussian mixture are provided as
//! baselines, and multivariate inputs are reduced to one dimension with an
//! out-of-fold classifier score that preserves the prior.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alphamax;
pub mod baselines;
pub mod bench;
pub mod dataset;
pub mod density;
pub mod error;
pub mod export;
pub mod levelset;
pub mod likelihood;
pub mod pipeline;
pub mod synthdata;
pub mod transform;
pub mod types;

pub use alphamax::{
    compute_curve, default_grid, detect_knee, estimate_alphamax, estimate_alphamax_univariate,
    median_smooth, monotone_correct, normalize01, AlphaMaxConfig, Knee,
};
pub use baselines::{
    cdf_based_estimate, gmm_em_estimate, pdf_ratio_estimate, GmmConfig, GmmFit, GmmParams,
};
pub use dataset::{load_csv, load_two_files, Finding, PUDataset};
pub use density::{build_histogram, ecdf_eval, pdf_component, pdf_mixture, HistogramModel};
pub use error::{Error, Result};
pub use pipeline::{estimate, estimate_many, EstimateOptions, TransformMode};
pub use levelset::{feasible_init, project, solve_level_set, LevelSetSolution, SolverOptions};
pub use likelihood::{eval_h, eval_h0, eval_h1, gradient_on_levelset, log_likelihood, Objective};
pub use types::{
    BetaVector, CurveReport, LevelSetCurve, LikelihoodWeights, Method, PriorEstimate, WeightScheme,
};
pub use synthdata::{gen_ball_in_box, gen_gaussian, gen_laplace, GenParams, Synthetic};
pub use transform::{cv_transform, fit_classifier, posterior, Classifier, Expansion, TransformConfig};
