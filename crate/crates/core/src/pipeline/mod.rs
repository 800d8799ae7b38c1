//! The divide-and-conquer forecaster: normalize, cluster the indicator
//! series, compress each cluster with kernel PCA, and regress the target
//! `lag` months ahead on the concatenated cluster features.

pub mod granger;
pub mod normalize;
pub mod panel;

use crate::clustering::{elbow_select, kmeans_fit, ClusterModel, Elbow, KMeansConfig};
use crate::error::{Error, Result, StageContext};
use crate::kernel::{Kernel, Width};
use crate::kpca::{kpca_fit, KpcaModel, Selection};
use crate::numerics::Matrix;
use crate::regressors::{ElmModel, KelmModel, DEFAULT_C, DEFAULT_HIDDEN};

use normalize::MinMax;
use panel::{FeaturePanel, Month};

/// Minimum number of training rows accepted by [`pipeline_fit`].
pub const MIN_TRAIN_ROWS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterChoice {
    Fixed(usize),
    /// Elbow selection over `min..=max` (clipped to the indicator count).
    Elbow { min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressorChoice {
    Kelm { sigma: Width, c: f64 },
    Elm { hidden: usize, c: f64 },
}

impl Default for RegressorChoice {
    fn default() -> Self {
        RegressorChoice::Kelm {
            sigma: Width::default(),
            c: DEFAULT_C,
        }
    }
}

impl RegressorChoice {
    pub fn default_elm() -> Self {
        RegressorChoice::Elm {
            hidden: DEFAULT_HIDDEN,
            c: DEFAULT_C,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub clusters: ClusterChoice,
    pub selection: Selection,
    /// KPCA Gaussian width, resolved per cluster.
    pub kpca_sigma: Width,
    pub regressor: RegressorChoice,
    /// Months between the indicator row and the forecast target.
    pub lag: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            clusters: ClusterChoice::Elbow { min: 1, max: 8 },
            selection: Selection::default(),
            kpca_sigma: Width::default(),
            regressor: RegressorChoice::default(),
            lag: 1,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedRegressor {
    Kelm(KelmModel),
    Elm(ElmModel),
}

impl FittedRegressor {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let out = match self {
            FittedRegressor::Kelm(m) => m.predict(x)?,
            FittedRegressor::Elm(m) => m.predict(x)?,
        };
        Ok(out[0])
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FittedRegressor::Kelm(m) => m.input_dim(),
            FittedRegressor::Elm(m) => m.input_dim(),
        }
    }
}

/// One cluster's indicator columns and its fitted KPCA.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterBlock {
    pub columns: Vec<String>,
    pub kpca: KpcaModel,
}

/// Normalization plus per-cluster KPCA: maps a panel row to the
/// concatenated feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    /// Indicator name and its training-row scaling, in panel order.
    pub indicator_scales: Vec<(String, MinMax)>,
    pub blocks: Vec<ClusterBlock>,
}

impl FeatureMap {
    pub fn n_components(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.kpca.n_components()).collect()
    }

    pub fn width(&self) -> usize {
        self.n_components().iter().sum()
    }

    fn scale_of(&self, name: &str) -> &MinMax {
        &self
            .indicator_scales
            .iter()
            .find(|(n, _)| n == name)
            .expect("block columns come from the indicator list")
            .1
    }

    pub fn features(&self, panel: &FeaturePanel, row: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.width());
        for block in &self.blocks {
            let x: Vec<f64> = block
                .columns
                .iter()
                .map(|name| Ok(self.scale_of(name).apply(panel.column(name)?.values[row])))
                .collect::<Result<_>>()?;
            out.extend(block.kpca.transform(&x)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub config: PipelineConfig,
    pub train_end: Month,
    pub target_name: String,
    pub target_scale: MinMax,
    pub clusters: ClusterModel,
    pub elbow: Option<Elbow>,
    pub features: FeatureMap,
    pub regressor: FittedRegressor,
    /// Number of supervised training pairs.
    pub n_pairs: usize,
}

impl PipelineModel {
    /// Retained KPCA dimension per cluster.
    pub fn n_components(&self) -> Vec<usize> {
        self.features.n_components()
    }

    pub fn feature_width(&self) -> usize {
        self.features.width()
    }
}

/// A forecast of the target at `target_date` from indicators at `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forecast {
    pub origin: Month,
    pub target_date: Month,
    pub normalized: f64,
    pub raw: f64,
}

/// Fits on the rows of `panel` dated at or before `train_end`; later rows
/// are never read.
pub fn pipeline_fit(
    panel: &FeaturePanel,
    train_end: Month,
    config: &PipelineConfig,
) -> Result<PipelineModel> {
    if config.lag == 0 {
        return Err(Error::invalid("lag must be at least 1 month"));
    }
    let n_train = panel.dates().partition_point(|d| *d <= train_end);
    if n_train < MIN_TRAIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "{n_train} training rows, need at least {MIN_TRAIN_ROWS}"
        )));
    }
    let train = panel.slice_rows(0..n_train);
    if !train.is_complete() {
        return Err(Error::NonFinite("training rows"));
    }

    let target = train.target().stage("normalize")?;
    let target_scale = MinMax::fit(&target.name, &target.values).stage("normalize")?;
    let mut indicator_scales = Vec::new();
    let mut series = Vec::new();
    for c in train.indicators() {
        let s = MinMax::fit(&c.name, &c.values).stage("normalize")?;
        series.push(s.apply_all(&c.values));
        indicator_scales.push((c.name.clone(), s));
    }
    if series.is_empty() {
        return Err(Error::invalid("panel has no indicator columns"));
    }

    let (clusters, elbow) = cluster_indicators(&series, config).stage("cluster")?;

    let mut blocks = Vec::with_capacity(clusters.k);
    for j in 0..clusters.k {
        let members = clusters.members(j);
        let x = Matrix::from_fn(n_train, members.len(), |t, c| series[members[c]][t]);
        let sigma = config.kpca_sigma.resolve(&x).stage("kpca")?;
        let kpca = kpca_fit(&x, Kernel::gaussian(sigma)?, config.selection).stage("kpca")?;
        blocks.push(ClusterBlock {
            columns: members.iter().map(|&m| indicator_scales[m].0.clone()).collect(),
            kpca,
        });
    }

    let features = FeatureMap {
        indicator_scales,
        blocks,
    };

    let lag = config.lag as i64;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (row, date) in train.dates().iter().enumerate() {
        if let Some(ahead) = train.row_of(date.plus(lag)) {
            inputs.push(features.features(&train, row).stage("features")?);
            targets.push(target_scale.apply(target.values[ahead]));
        }
    }
    if inputs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} supervised pairs at lag {lag}",
            inputs.len()
        )));
    }
    let x = Matrix::from_fn(inputs.len(), features.width(), |i, j| inputs[i][j]);
    let y = Matrix::from_column_slice(targets.len(), 1, &targets);
    let regressor = fit_regressor(&x, &y, config.regressor, config.seed).stage("regress")?;
    Ok(PipelineModel {
        config: config.clone(),
        train_end,
        target_name: target.name.clone(),
        target_scale,
        clusters,
        elbow,
        features,
        regressor,
        n_pairs: inputs.len(),
    })
}

fn cluster_indicators(
    series: &[Vec<f64>],
    config: &PipelineConfig,
) -> Result<(ClusterModel, Option<Elbow>)> {
    let base = KMeansConfig::new(1, config.seed);
    match config.clusters {
        ClusterChoice::Fixed(k) => Ok((kmeans_fit(series, &KMeansConfig { k, ..base })?, None)),
        ClusterChoice::Elbow { min, max } => {
            let max = max.min(series.len());
            let elbow = elbow_select(series, min..=max, &base)?;
            let model = kmeans_fit(series, &KMeansConfig { k: elbow.k, ..base })?;
            Ok((model, Some(elbow)))
        }
    }
}

pub(crate) fn fit_regressor(
    x: &Matrix,
    y: &Matrix,
    choice: RegressorChoice,
    seed: u64,
) -> Result<FittedRegressor> {
    Ok(match choice {
        RegressorChoice::Kelm { sigma, c } => {
            let sigma = sigma.resolve(x)?;
            FittedRegressor::Kelm(KelmModel::fit(x, y, Kernel::gaussian(sigma)?, c)?)
        }
        RegressorChoice::Elm { hidden, c } => {
            FittedRegressor::Elm(ElmModel::fit(x, y, hidden, c, seed)?)
        }
    })
}

/// One forecast per row of `rows`, for the month `lag` after that row.
pub fn pipeline_predict(model: &PipelineModel, rows: &FeaturePanel) -> Result<Vec<Forecast>> {
    for (name, _) in &model.features.indicator_scales {
        rows.column(name)?;
    }
    let lag = model.config.lag as i64;
    (0..rows.n_rows())
        .map(|row| {
            let f = model.features.features(rows, row)?;
            let normalized = model.regressor.predict(&f)?;
            Ok(Forecast {
                origin: rows.dates()[row],
                target_date: rows.dates()[row].plus(lag),
                normalized,
                raw: model.target_scale.invert(normalized),
            })
        })
        .collect()
}

/// Forecasts for every row of `test`, using the indicator rows `lag`
/// months earlier (which may fall inside the training window).
pub fn forecast_test_rows(
    model: &PipelineModel,
    panel: &FeaturePanel,
    test_dates: &[Month],
) -> Result<Vec<Forecast>> {
    let lag = model.config.lag as i64;
    let rows: Vec<usize> = test_dates
        .iter()
        .map(|d| {
            panel.row_of(d.plus(-lag)).ok_or_else(|| {
                Error::InsufficientData(format!("no indicator row {lag} month(s) before {d}"))
            })
        })
        .collect::<Result<_>>()?;
    let origins: Vec<FeaturePanel> = rows.iter().map(|&r| panel.slice_rows(r..r + 1)).collect();
    let mut out = Vec::with_capacity(rows.len());
    for p in &origins {
        out.extend(pipeline_predict(model, p)?);
    }
    Ok(out)
}
