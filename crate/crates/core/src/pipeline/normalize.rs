//! Per-column min-max scaling fitted on training rows.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    /// Fits on `values`; a constant column cannot be scaled.
    pub fn fit(name: &str, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData(format!("column `{name}` is empty")));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("normalization input"));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max > min) {
            return Err(Error::DegenerateSeries(format!("`{name}` is constant on the training rows")));
        }
        Ok(MinMax { min, max })
    }

    /// Maps training range onto `[0, 1]`; values outside it are not clipped.
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn invert(&self, v: f64) -> f64 {
        v * (self.max - self.min) + self.min
    }

    pub fn apply_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.apply(v)).collect()
    }

    pub fn invert_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.invert(v)).collect()
    }
}
