//! Flat `key = value` run configuration.
//!
//! Every key has a default; [`RunConfig::pairs`] lists the effective values
//! in a fixed order, and that list is echoed into every output file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hybridcast::baselines::{Criterion, DEFAULT_DIFF, DEFAULT_LAGS, DEFAULT_MAX_P};
use hybridcast::kernel::Width;
use hybridcast::kpca::{Selection, DEFAULT_THETA};
use hybridcast::pipeline::{ClusterChoice, PipelineConfig, RegressorChoice};
use hybridcast::regressors::{DEFAULT_C, DEFAULT_HIDDEN};
use hybridcast::{DatasetMode, Month};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Naive,
    Ar,
    Elm,
    Kelm,
    KpcaElm,
    KpcaKelm,
    KmeansKpcaElm,
    KmeansKpcaKelm,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Naive,
        Method::Ar,
        Method::Elm,
        Method::Kelm,
        Method::KpcaElm,
        Method::KpcaKelm,
        Method::KmeansKpcaElm,
        Method::KmeansKpcaKelm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Ar => "ar",
            Method::Elm => "elm",
            Method::Kelm => "kelm",
            Method::KpcaElm => "kpca+elm",
            Method::KpcaKelm => "kpca+kelm",
            Method::KmeansKpcaElm => "kmeans+kpca+elm",
            Method::KmeansKpcaKelm => "kmeans+kpca+kelm",
        }
    }

    /// Uses indicator columns (as opposed to the target history alone).
    pub fn is_multivariate(&self) -> bool {
        matches!(
            self,
            Method::KpcaElm | Method::KpcaKelm | Method::KmeansKpcaElm | Method::KmeansKpcaKelm
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
                CliError::Config(format!("unknown method `{s}` (one of {})", names.join(", ")))
            })
    }
}

/// Which indicators the Granger screen is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrangerScope {
    Off,
    Gsvi,
    All,
}

impl GrangerScope {
    fn as_str(&self) -> &'static str {
        match self {
            GrangerScope::Off => "off",
            GrangerScope::Gsvi => "gsvi",
            GrangerScope::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub panel: Option<PathBuf>,
    pub tags: Option<PathBuf>,
    pub economic: Option<PathBuf>,
    pub gsvi: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub synth_seed: Option<u64>,
    pub synth_months: usize,
    pub synth_factors: usize,
    pub synth_per_factor: usize,
    pub synth_noise: f64,
    pub synth_target_noise: f64,
    pub split: Month,
    pub mode: DatasetMode,
    pub method: Method,
    /// `None` selects k by the elbow rule.
    pub k: Option<usize>,
    pub elbow_min: usize,
    pub elbow_max: usize,
    pub theta: f64,
    /// Overrides `theta` when set.
    pub n_components: Option<usize>,
    pub kpca_sigma: Width,
    pub sigma: Width,
    pub c: f64,
    pub hidden: usize,
    pub lag: usize,
    pub granger_scope: GrangerScope,
    pub granger_max_lag: usize,
    pub p_threshold: f64,
    pub ar_max_p: usize,
    pub ar_d: usize,
    pub ar_criterion: Criterion,
    pub uni_lags: usize,
    pub seed: u64,
    pub label: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            panel: None,
            tags: None,
            economic: None,
            gsvi: None,
            target: None,
            synth_seed: None,
            synth_months: 180,
            synth_factors: 3,
            synth_per_factor: 10,
            synth_noise: 0.1,
            synth_target_noise: 0.5,
            split: Month::new(2017, 12).expect("valid month"),
            mode: DatasetMode::H,
            method: Method::KmeansKpcaKelm,
            k: None,
            elbow_min: 1,
            elbow_max: 8,
            theta: DEFAULT_THETA,
            n_components: None,
            kpca_sigma: Width::default(),
            sigma: Width::default(),
            c: DEFAULT_C,
            hidden: DEFAULT_HIDDEN,
            lag: 1,
            granger_scope: GrangerScope::Gsvi,
            granger_max_lag: 3,
            p_threshold: 0.1,
            ar_max_p: DEFAULT_MAX_P,
            ar_d: DEFAULT_DIFF,
            ar_criterion: Criterion::Aic,
            uni_lags: DEFAULT_LAGS,
            seed: 42,
            label: None,
        }
    }
}

pub fn format_width(w: Width) -> String {
    match w {
        Width::Median(1.0) => "median".into(),
        Width::Median(f) => format!("median*{f}"),
        Width::Fixed(s) => s.to_string(),
    }
}

pub fn parse_width(s: &str) -> Result<Width> {
    if s == "median" {
        return Ok(Width::Median(1.0));
    }
    if let Some(f) = s.strip_prefix("median*") {
        return Ok(Width::Median(num(f)?));
    }
    Ok(Width::Fixed(num(s)?))
}

fn num<T: FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| CliError::Config(format!("cannot parse `{s}`")))
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        if value.contains(';') || value.contains('\n') {
            return Err(CliError::Config(format!("value for `{key}` may not contain `;`")));
        }
        let path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        let wrap = |e: CliError| match e {
            CliError::Config(m) => CliError::Config(format!("{key}: {m}")),
            other => other,
        };
        let r: Result<()> = (|| {
            match key {
                "panel" => self.panel = path(value),
                "tags" => self.tags = path(value),
                "economic" => self.economic = path(value),
                "gsvi" => self.gsvi = path(value),
                "target" => self.target = path(value),
                "synth_seed" => {
                    self.synth_seed = if value.is_empty() { None } else { Some(num(value)?) }
                }
                "synth_months" => self.synth_months = num(value)?,
                "synth_factors" => self.synth_factors = num(value)?,
                "synth_per_factor" => self.synth_per_factor = num(value)?,
                "synth_noise" => self.synth_noise = num(value)?,
                "synth_target_noise" => self.synth_target_noise = num(value)?,
                "split" => self.split = value.parse()?,
                "mode" => self.mode = value.parse()?,
                "method" => self.method = value.parse()?,
                "k" => self.k = if value == "elbow" { None } else { Some(num(value)?) },
                "elbow_min" => self.elbow_min = num(value)?,
                "elbow_max" => self.elbow_max = num(value)?,
                "theta" => self.theta = num(value)?,
                "n_components" => {
                    self.n_components = if value.is_empty() { None } else { Some(num(value)?) }
                }
                "kpca_sigma" => self.kpca_sigma = parse_width(value)?,
                "sigma" => self.sigma = parse_width(value)?,
                "c" => self.c = num(value)?,
                "hidden" => self.hidden = num(value)?,
                "lag" => self.lag = num(value)?,
                "granger_scope" => {
                    self.granger_scope = match value {
                        "off" => GrangerScope::Off,
                        "gsvi" => GrangerScope::Gsvi,
                        "all" => GrangerScope::All,
                        _ => return Err(CliError::Config(format!("`{value}` is not off, gsvi or all"))),
                    }
                }
                "granger_max_lag" => self.granger_max_lag = num(value)?,
                "p_threshold" => self.p_threshold = num(value)?,
                "ar_max_p" => self.ar_max_p = num(value)?,
                "ar_d" => self.ar_d = num(value)?,
                "ar_criterion" => {
                    self.ar_criterion = match value {
                        "aic" => Criterion::Aic,
                        "sc" => Criterion::Sc,
                        _ => return Err(CliError::Config(format!("`{value}` is not aic or sc"))),
                    }
                }
                "uni_lags" => self.uni_lags = num(value)?,
                "seed" => self.seed = num(value)?,
                "label" => self.label = (!value.is_empty()).then(|| value.to_string()),
                _ => return Err(CliError::UnknownKey(key.to_string())),
            }
            Ok(())
        })();
        r.map_err(wrap)
    }

    /// Effective values of every key, in documentation order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("panel", opt_path(&self.panel)),
            ("tags", opt_path(&self.tags)),
            ("economic", opt_path(&self.economic)),
            ("gsvi", opt_path(&self.gsvi)),
            ("target", opt_path(&self.target)),
            ("synth_seed", opt(&self.synth_seed)),
            ("synth_months", self.synth_months.to_string()),
            ("synth_factors", self.synth_factors.to_string()),
            ("synth_per_factor", self.synth_per_factor.to_string()),
            ("synth_noise", self.synth_noise.to_string()),
            ("synth_target_noise", self.synth_target_noise.to_string()),
            ("split", self.split.to_string()),
            ("mode", self.mode.to_string()),
            ("method", self.method.to_string()),
            ("k", self.k.map(|k| k.to_string()).unwrap_or_else(|| "elbow".into())),
            ("elbow_min", self.elbow_min.to_string()),
            ("elbow_max", self.elbow_max.to_string()),
            ("theta", self.theta.to_string()),
            ("n_components", opt(&self.n_components)),
            ("kpca_sigma", format_width(self.kpca_sigma)),
            ("sigma", format_width(self.sigma)),
            ("c", self.c.to_string()),
            ("hidden", self.hidden.to_string()),
            ("lag", self.lag.to_string()),
            ("granger_scope", self.granger_scope.as_str().into()),
            ("granger_max_lag", self.granger_max_lag.to_string()),
            ("p_threshold", self.p_threshold.to_string()),
            ("ar_max_p", self.ar_max_p.to_string()),
            ("ar_d", self.ar_d.to_string()),
            (
                "ar_criterion",
                match self.ar_criterion {
                    Criterion::Aic => "aic".into(),
                    Criterion::Sc => "sc".into(),
                },
            ),
            ("uni_lags", self.uni_lags.to_string()),
            ("seed", self.seed.to_string()),
            ("label", self.label()),
        ]
    }

    /// Single-line form, `key=value;key=value;...`.
    pub fn echo(&self) -> String {
        self.pairs()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn apply_echo(&mut self, echo: &str) -> Result<()> {
        for item in echo.split(';').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("echo item `{item}` has no `=`")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Applies a config file: `key = value` lines, `#` comments, blank lines.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::BadLine {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                message: "expected `key = value`".into(),
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("{}_{}", self.method.as_str().replace('+', "-"), self.mode))
    }

    pub fn selection(&self) -> Selection {
        match self.n_components {
            Some(n) => Selection::Count(n),
            None => Selection::Fraction(self.theta),
        }
    }

    pub fn regressor(&self, kernel: bool) -> RegressorChoice {
        if kernel {
            RegressorChoice::Kelm {
                sigma: self.sigma,
                c: self.c,
            }
        } else {
            RegressorChoice::Elm {
                hidden: self.hidden,
                c: self.c,
            }
        }
    }

    /// Pipeline settings for the multivariate methods.
    pub fn pipeline(&self) -> Option<PipelineConfig> {
        let (clusters, kernel) = match self.method {
            Method::KpcaElm => (ClusterChoice::Fixed(1), false),
            Method::KpcaKelm => (ClusterChoice::Fixed(1), true),
            Method::KmeansKpcaElm | Method::KmeansKpcaKelm => (
                match self.k {
                    Some(k) => ClusterChoice::Fixed(k),
                    None => ClusterChoice::Elbow {
                        min: self.elbow_min,
                        max: self.elbow_max,
                    },
                },
                self.method == Method::KmeansKpcaKelm,
            ),
            _ => return None,
        };
        Some(PipelineConfig {
            clusters,
            selection: self.selection(),
            kpca_sigma: self.kpca_sigma,
            regressor: self.regressor(kernel),
            lag: self.lag,
            seed: self.seed,
        })
    }
}
