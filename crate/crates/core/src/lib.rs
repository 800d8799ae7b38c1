//! Divide-and-conquer forecasting for monthly multivariate series:
//! correlation-distance K-means groups the indicator series, kernel PCA
//! compresses each group, and a kernel extreme learning machine forecasts
//! the target from the concatenated features.

pub mod baselines;
pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod kernel;
pub mod kpca;
pub mod numerics;
pub mod pipeline;
pub mod regressors;
pub mod synth;

pub use error::{Error, Result};
pub use pipeline::panel::{DatasetMode, FeaturePanel, Month, Provenance};
pub use pipeline::{pipeline_fit, pipeline_predict, PipelineConfig, PipelineModel};
