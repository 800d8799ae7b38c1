//! Granger-causality screening of candidate indicators against the target.

use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::numerics::{least_squares, Matrix, Vector};
use crate::pipeline::panel::FeaturePanel;

/// Nested-regression F test of "lags of `x` help predict `y`".
#[derive(Debug, Clone, PartialEq)]
pub struct GrangerTest {
    pub f_stat: f64,
    pub p_value: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub sse_restricted: f64,
    pub sse_unrestricted: f64,
}

fn lag_design(y: &[f64], x: Option<&[f64]>, lags: usize) -> (Matrix, Vector) {
    let n = y.len() - lags;
    let cols = 1 + lags * if x.is_some() { 2 } else { 1 };
    let mut design = Matrix::zeros(n, cols);
    let mut target = Vector::zeros(n);
    for r in 0..n {
        let t = r + lags;
        target[r] = y[t];
        design[(r, 0)] = 1.0;
        for l in 1..=lags {
            design[(r, l)] = y[t - l];
            if let Some(x) = x {
                design[(r, lags + l)] = x[t - l];
            }
        }
    }
    (design, target)
}

/// Regresses `y_t` on its own lags `1..=lags` with and without lags of `x`.
///
/// Degrees of freedom are `(lags, n − 2·lags − 1)` with `n = len − lags`
/// usable observations.
pub fn granger_test(y: &[f64], x: &[f64], lags: usize) -> Result<GrangerTest> {
    if lags == 0 {
        return Err(Error::invalid("Granger test needs max_lag >= 1"));
    }
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "Granger series lengths",
            expected: y.len(),
            found: x.len(),
        });
    }
    if y.len() < 3 * lags + 2 {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot support {lags} lags (need at least {})",
            y.len(),
            3 * lags + 2
        )));
    }
    let (xr, target) = lag_design(y, None, lags);
    let (xu, _) = lag_design(y, Some(x), lags);
    let restricted = least_squares(&xr, &target)?;
    let unrestricted = least_squares(&xu, &target)?;

    let n = target.len();
    let df_num = lags;
    let df_den = n - 2 * lags - 1;
    let gain = (restricted.sse - unrestricted.sse).max(0.0);
    let f_stat = if unrestricted.sse > 0.0 {
        (gain / df_num as f64) / (unrestricted.sse / df_den as f64)
    } else if gain > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let p_value = if f_stat.is_infinite() {
        0.0
    } else {
        let dist = FisherSnedecor::new(df_num as f64, df_den as f64)
            .map_err(|e| Error::invalid(format!("F distribution: {e}")))?;
        dist.sf(f_stat)
    };
    Ok(GrangerTest {
        f_stat,
        p_value,
        df_num,
        df_den,
        sse_restricted: restricted.sse,
        sse_unrestricted: unrestricted.sse,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum GrangerOutcome {
    Retained(GrangerTest),
    Rejected(GrangerTest),
    /// The lag regression was rank deficient; the candidate is excluded.
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrangerReport {
    pub results: Vec<(String, GrangerOutcome)>,
}

impl GrangerReport {
    pub fn retained(&self) -> Vec<String> {
        self.results
            .iter()
            .filter(|(_, o)| matches!(o, GrangerOutcome::Retained(_)))
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn p_value(&self, name: &str) -> Option<f64> {
        self.results.iter().find(|(n, _)| n == name).and_then(|(_, o)| match o {
            GrangerOutcome::Retained(t) | GrangerOutcome::Rejected(t) => Some(t.p_value),
            GrangerOutcome::Inconclusive(_) => None,
        })
    }
}

/// Keeps candidates whose Granger p-value is at most `p_threshold`.
///
/// Uses every row of `panel`; pass the training rows only.
pub fn granger_filter(
    panel: &FeaturePanel,
    candidates: &[String],
    max_lag: usize,
    p_threshold: f64,
) -> Result<GrangerReport> {
    if !(0.0..=1.0).contains(&p_threshold) {
        return Err(Error::invalid(format!("p threshold {p_threshold} outside [0, 1]")));
    }
    let y = &panel.target()?.values;
    let mut results = Vec::with_capacity(candidates.len());
    for name in candidates {
        let x = &panel.column(name)?.values;
        let outcome = match granger_test(y, x, max_lag) {
            Ok(t) if t.p_value <= p_threshold => GrangerOutcome::Retained(t),
            Ok(t) => GrangerOutcome::Rejected(t),
            Err(Error::Singular(msg)) => {
                log::warn!("Granger test for `{name}` inconclusive: {msg}");
                GrangerOutcome::Inconclusive(msg)
            }
            Err(e) => return Err(e),
        };
        results.push((name.clone(), outcome));
    }
    Ok(GrangerReport { results })
}
