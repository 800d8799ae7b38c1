//! Kernel functions shared by KPCA and KELM.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// `Gaussian` is `exp(-‖x − z‖² / (2σ²))`. `Linear` is the plain dot product;
/// it exists so kernel code can be checked against linear PCA and ridge
/// regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Gaussian { sigma: f64 },
    Linear,
}

impl Kernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let k = Kernel::Gaussian { sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                Error::invalid(format!("Gaussian kernel width must be positive, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            Kernel::Gaussian { sigma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
            Kernel::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
        }
    }
}

pub(crate) fn rows(x: &Matrix) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// `K[i][j] = k(x_i, x_j)` over the rows of `x`; filled symmetrically.
pub fn kernel_matrix(x: &Matrix, kernel: Kernel) -> Result<Matrix> {
    kernel.validate()?;
    let samples = rows(x);
    let n = samples.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&samples[i], &samples[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Kernel row `[k(x, x_1), …, k(x, x_N)]` against stored training rows.
pub fn kernel_row(train: &Matrix, x: &[f64], kernel: Kernel) -> Result<Vec<f64>> {
    if x.len() != train.ncols() {
        return Err(Error::DimensionMismatch {
            context: "kernel row input",
            expected: train.ncols(),
            found: x.len(),
        });
    }
    Ok(train
        .row_iter()
        .map(|r| {
            let r: Vec<f64> = r.iter().copied().collect();
            kernel.eval(x, &r)
        })
        .collect())
}

/// Median pairwise Euclidean distance between rows.
///
/// Falls back to the mean non-zero distance when more than half the pairs
/// coincide. Errors when every pair coincides.
pub fn median_heuristic(x: &Matrix) -> Result<f64> {
    let samples = rows(x);
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "median heuristic needs at least 2 samples".into(),
        ));
    }
    let mut d: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = samples[i]
                .iter()
                .zip(&samples[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d.push(d2.sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let median = if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    };
    if median > 0.0 {
        return Ok(median);
    }
    let nonzero: Vec<f64> = d.into_iter().filter(|&v| v > 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::invalid("all samples coincide; kernel width undefined"));
    }
    Ok(nonzero.iter().sum::<f64>() / nonzero.len() as f64)
}

/// How a Gaussian width is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Width {
    Fixed(f64),
    /// A multiple of the median pairwise distance of the training samples.
    Median(f64),
}

impl Default for Width {
    fn default() -> Self {
        Width::Median(1.0)
    }
}

impl Width {
    pub fn resolve(&self, x: &Matrix) -> Result<f64> {
        let sigma = match *self {
            Width::Fixed(s) => s,
            Width::Median(f) => f * median_heuristic(x)?,
        };
        Kernel::gaussian(sigma)?;
        Ok(sigma)
    }
}
