//! Seeded synthetic panels with planted structure.
//!
//! Generator algorithm (one `ChaCha8Rng` stream seeded with `seed` via
//! `seed_from_u64`, consumed strictly in this order):
//!
//! 1. For each factor `f` in `0..F`: draw `T + lag + W − 1` standard normals
//!    (`rand_distr::StandardNormal`), take their cumulative sum (a random
//!    walk starting at the first draw), average each trailing window of
//!    width `W` to get `T + lag` values, and center them. Then run classical
//!    Gram-Schmidt over the factors in index order (subtract from factor `f`
//!    its projections on the already orthogonalized factors `0..f`) and
//!    scale each to unit population variance, so the planted factors are
//!    exactly uncorrelated. Index `i` of a factor is month `i − lag`.
//! 2. For each factor `f`, for each series `g` in `0..G`: draw a loading
//!    `a ~ U[0.5, 2)` then an offset `b ~ U[10, 100)`, then for each month
//!    `t` in `0..T` one standard normal `e`; the value is
//!    `b + a · (factor_f[t + lag] + noise · e)`.
//! 3. For each factor draw `|w_f| ~ U[0.5, 1.5)`; the sign is `+` for even
//!    `f` and `−` for odd `f`.
//! 4. For each month `t`: one standard normal `e`; the target is
//!    `60 + 12 · Σ_f w_f · tanh(factor_f[t]) / Σ_f |w_f| + target_noise · e`.
//!
//! Indicators of even factors are tagged `economic`, odd factors `gsvi`.
//! Column names are `econ_f{f}_{g:02}` / `gsvi_f{f}_{g:02}` and `target`.
//! Uniform draws use `rand` 0.9 `random_range`; normals use the ziggurat
//! sampler of `rand_distr` 0.5.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::pipeline::panel::{Column, FeaturePanel, Month, Provenance};

/// Named nonlinear map from factors to the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetLink {
    /// `60 + 12 · Σ w_f tanh(f) / Σ |w_f|`.
    TanhMixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub months: usize,
    pub factors: usize,
    pub per_factor: usize,
    /// Indicator noise, relative to the unit-variance factor.
    pub noise: f64,
    pub target_link: TargetLink,
    /// Target noise, in target units.
    pub target_noise: f64,
    /// Months between a factor value and the target it drives.
    pub lag: usize,
    /// Moving-average width used to smooth the factor random walks.
    pub smoothing: usize,
    pub start: Month,
}

impl SynthSpec {
    /// Three factors, ten series each, 180 months from 2004-01.
    pub fn standard(seed: u64) -> Self {
        SynthSpec {
            seed,
            months: 180,
            factors: 3,
            per_factor: 10,
            noise: 0.1,
            target_link: TargetLink::TanhMixture,
            target_noise: 0.5,
            lag: 1,
            smoothing: 6,
            start: Month::new(2004, 1).expect("valid month"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.months < 36 {
            return Err(Error::invalid(format!("months = {} < 36", self.months)));
        }
        if self.factors < 1 {
            return Err(Error::invalid("need at least one factor"));
        }
        if self.per_factor < 2 {
            return Err(Error::invalid("need at least two series per factor"));
        }
        if self.smoothing < 1 {
            return Err(Error::invalid("smoothing window must be at least 1"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite())
            || !(self.target_noise >= 0.0 && self.target_noise.is_finite())
        {
            return Err(Error::invalid("noise scales must be finite and non-negative"));
        }
        Ok(())
    }
}

/// What the generator planted.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Factor values observed by the indicators, aligned with panel rows.
    pub factors: Vec<Vec<f64>>,
    /// Factor index of every indicator column, in panel order.
    pub labels: Vec<usize>,
    pub weights: Vec<f64>,
    /// Noise-free target, aligned with panel rows.
    pub clean_target: Vec<f64>,
}

fn smoothed_walk(rng: &mut ChaCha8Rng, len: usize, window: usize) -> Vec<f64> {
    let mut level = 0.0;
    let walk: Vec<f64> = (0..len + window - 1)
        .map(|_| {
            let step: f64 = StandardNormal.sample(rng);
            level += step;
            level
        })
        .collect();
    let mut out: Vec<f64> = walk
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect();
    let mean = out.iter().sum::<f64>() / len as f64;
    for v in &mut out {
        *v -= mean;
    }
    out
}

fn orthonormalize(factors: &mut [Vec<f64>]) -> Result<()> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for f in 0..factors.len() {
        let (done, rest) = factors.split_at_mut(f);
        let v = &mut rest[0];
        for u in done.iter() {
            let c = dot(v, u) / dot(u, u);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
        let sd = (dot(v, v) / v.len() as f64).sqrt();
        if sd < 1e-8 {
            return Err(Error::invalid("more factors than the series length can separate"));
        }
        for x in v.iter_mut() {
            *x /= sd;
        }
    }
    Ok(())
}

pub fn synth_generate(spec: &SynthSpec) -> Result<(FeaturePanel, GroundTruth)> {
    spec.validate()?;
    let (t_len, lag) = (spec.months, spec.lag);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut factors: Vec<Vec<f64>> = (0..spec.factors)
        .map(|_| smoothed_walk(&mut rng, t_len + lag, spec.smoothing))
        .collect();
    orthonormalize(&mut factors)?;

    let mut columns = Vec::with_capacity(spec.factors * spec.per_factor + 1);
    let mut labels = Vec::new();
    for (f, factor) in factors.iter().enumerate() {
        let (prefix, tag) = if f % 2 == 0 {
            ("econ", Provenance::Economic)
        } else {
            ("gsvi", Provenance::Gsvi)
        };
        for g in 0..spec.per_factor {
            let a: f64 = rng.random_range(0.5..2.0);
            let b: f64 = rng.random_range(10.0..100.0);
            let values = (0..t_len)
                .map(|t| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    b + a * (factor[t + lag] + spec.noise * e)
                })
                .collect();
            columns.push(Column::new(format!("{prefix}_f{f}_{g:02}"), tag, values));
            labels.push(f);
        }
    }

    let weights: Vec<f64> = (0..spec.factors)
        .map(|f| {
            let w: f64 = rng.random_range(0.5..1.5);
            if f % 2 == 0 {
                w
            } else {
                -w
            }
        })
        .collect();
    let norm: f64 = weights.iter().map(|w| w.abs()).sum();
    let clean_target: Vec<f64> = (0..t_len)
        .map(|t| match spec.target_link {
            TargetLink::TanhMixture => {
                let mix: f64 = factors
                    .iter()
                    .zip(&weights)
                    .map(|(f, w)| w * f[t].tanh())
                    .sum();
                60.0 + 12.0 * mix / norm
            }
        })
        .collect();
    let target: Vec<f64> = clean_target
        .iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            v + spec.target_noise * e
        })
        .collect();
    columns.push(Column::new("target", Provenance::Target, target));

    let dates = (0..t_len as i64).map(|i| spec.start.plus(i)).collect();
    let panel = FeaturePanel::new(dates, columns)?;
    let truth = GroundTruth {
        factors: factors.iter().map(|f| f[lag..].to_vec()).collect(),
        labels,
        weights,
        clean_target,
    };
    Ok((panel, truth))
}
