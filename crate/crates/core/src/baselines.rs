//! Univariate benchmarks: random walk, ARI(p, d) by least squares, and
//! ELM/KELM on lagged values of the target.

use crate::error::{Error, Result};
use crate::numerics::{least_squares, Matrix, Vector};
use crate::pipeline::normalize::MinMax;
use crate::pipeline::{fit_regressor, RegressorChoice};

pub const DEFAULT_LAGS: usize = 12;
pub const DEFAULT_DIFF: usize = 1;
pub const DEFAULT_MAX_P: usize = 12;

/// Last observed value, repeated.
pub fn naive_forecast(history: &[f64], steps: usize) -> Result<Vec<f64>> {
    let last = history
        .last()
        .ok_or_else(|| Error::InsufficientData("empty history".into()))?;
    Ok(vec![*last; steps])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Aic,
    Sc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArScore {
    pub p: usize,
    pub aic: f64,
    pub sc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub d: usize,
    pub p: usize,
    pub intercept: f64,
    /// `phi[i]` multiplies the value `i + 1` steps back.
    pub phi: Vec<f64>,
    pub criterion: Criterion,
    /// Scores of every candidate order that could be fitted.
    pub scores: Vec<ArScore>,
}

fn difference(y: &[f64], d: usize) -> Vec<f64> {
    match d {
        0 => y.to_vec(),
        _ => y.windows(2).map(|w| w[1] - w[0]).collect(),
    }
}

fn check_d(d: usize) -> Result<()> {
    if d > 1 {
        return Err(Error::invalid(format!("differencing order {d} not in {{0, 1}}")));
    }
    Ok(())
}

/// Fits AR(p) to the `d`-times differenced series for `p = 1..=max_p` on a
/// common sample window and keeps the order minimizing the criterion
/// `T·ln(SSE/T) + penalty·(p + 1)`.
pub fn ar_fit(y: &[f64], max_p: usize, d: usize, criterion: Criterion) -> Result<ArModel> {
    check_d(d)?;
    if max_p == 0 {
        return Err(Error::invalid("max_p must be at least 1"));
    }
    if y.len() <= max_p + d + 2 {
        return Err(Error::InsufficientData(format!(
            "{} values cannot support max_p = {max_p}, d = {d}",
            y.len()
        )));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("AR input"));
    }
    let z = difference(y, d);
    let t = z.len() - max_p;
    let target = Vector::from_fn(t, |r, _| z[r + max_p]);

    let scale = z.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let constant = z.iter().all(|v| (v - z[0]).abs() <= 1e-12 * scale);

    let mut scores = Vec::new();
    let mut best: Option<(f64, usize, Vector)> = None;
    for p in 1..=max_p {
        let (coef, sse) = if constant {
            // Every lag column equals the intercept column; take the
            // minimum-norm solution.
            let mut c = Vector::zeros(p + 1);
            c[0] = z[0];
            (c, 0.0)
        } else {
            let design = Matrix::from_fn(t, p + 1, |r, c| {
                if c == 0 {
                    1.0
                } else {
                    z[r + max_p - c]
                }
            });
            match least_squares(&design, &target) {
                Ok(ls) => (ls.coef, ls.sse),
                Err(Error::Singular(msg)) => {
                    log::debug!("AR order {p} skipped: {msg}");
                    continue;
                }
                Err(e) => return Err(e),
            }
        };
        let tf = t as f64;
        let fit = tf * (sse / tf).ln();
        let k = (p + 1) as f64;
        let score = ArScore {
            p,
            aic: fit + 2.0 * k,
            sc: fit + tf.ln() * k,
        };
        let value = match criterion {
            Criterion::Aic => score.aic,
            Criterion::Sc => score.sc,
        };
        scores.push(score);
        if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
            best = Some((value, p, coef));
        }
    }
    let (_, p, coef) = best.ok_or_else(|| Error::Singular("every AR order was singular".into()))?;
    Ok(ArModel {
        d,
        p,
        intercept: coef[0],
        phi: coef.iter().skip(1).copied().collect(),
        criterion,
        scores,
    })
}

/// Iterates the fitted recursion from the end of `history`, re-integrating
/// the differences.
pub fn ar_forecast(model: &ArModel, history: &[f64], steps: usize) -> Result<Vec<f64>> {
    check_d(model.d)?;
    if model.phi.len() != model.p {
        return Err(Error::DimensionMismatch {
            context: "AR coefficients",
            expected: model.p,
            found: model.phi.len(),
        });
    }
    if history.len() < model.p + model.d || history.is_empty() {
        return Err(Error::InsufficientData(format!(
            "history of {} cannot seed AR({}) with d = {}",
            history.len(),
            model.p,
            model.d
        )));
    }
    let mut z = difference(history, model.d);
    let mut level = *history.last().expect("non-empty");
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let n = z.len();
        let next = model.intercept
            + model
                .phi
                .iter()
                .enumerate()
                .map(|(i, phi)| phi * z[n - 1 - i])
                .sum::<f64>();
        z.push(next);
        if model.d == 1 {
            level += next;
            out.push(level);
        } else {
            out.push(next);
        }
    }
    Ok(out)
}

/// Supervised pairs `(y[t−1], …, y[t−lags]) → y[t]` for every valid `t`.
pub fn univariate_lag_features(y: &[f64], lags: usize) -> Result<(Matrix, Matrix)> {
    if lags == 0 {
        return Err(Error::invalid("lags must be at least 1"));
    }
    if y.len() <= lags {
        return Err(Error::InsufficientData(format!(
            "{} values cannot form pairs with {lags} lags",
            y.len()
        )));
    }
    let n = y.len() - lags;
    let x = Matrix::from_fn(n, lags, |r, c| y[r + lags - 1 - c]);
    let target = Matrix::from_fn(n, 1, |r, _| y[r + lags]);
    Ok((x, target))
}

/// Fits ELM or KELM on min-max scaled lags of `history` and forecasts
/// `steps` values recursively, feeding forecasts back as inputs.
pub fn univariate_forecast(
    history: &[f64],
    steps: usize,
    regressor: RegressorChoice,
    lags: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let scale = MinMax::fit("history", history)?;
    let mut z = scale.apply_all(history);
    let (x, y) = univariate_lag_features(&z, lags)?;
    if x.nrows() < 2 {
        return Err(Error::InsufficientData("need at least two lag pairs".into()));
    }
    let model = fit_regressor(&x, &y, regressor, seed)?;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let n = z.len();
        let input: Vec<f64> = (1..=lags).map(|l| z[n - l]).collect();
        let next = model.predict(&input)?;
        z.push(next);
        out.push(scale.invert(next));
    }
    Ok(out)
}
