//! Kernel principal component analysis.
//!
//! The training Gram matrix is double-centered before the eigenproblem, and
//! out-of-sample kernel rows are centered with the stored training
//! statistics. Coefficient vectors are scaled so that `λ_j · α_jᵀα_j = 1`,
//! which makes every feature-space eigenvector unit length. With that
//! scaling the training projections of component `j` have variance `λ_j / N`.

use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix, kernel_row, Kernel};
use crate::numerics::{check_symmetric, sym_eig, Matrix, Vector};

/// Relative eigenvalue floor; components at or below it are never kept.
pub const EIGEN_FLOOR_REL: f64 = 1e-10;

/// Default retained variance fraction.
pub const DEFAULT_THETA: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    /// Keep exactly this many leading components.
    Count(usize),
    /// Keep the fewest leading components reaching this share of the
    /// positive eigenvalue mass.
    Fraction(f64),
}

impl Default for Selection {
    fn default() -> Self {
        Selection::Fraction(DEFAULT_THETA)
    }
}

/// Statistics of the training Gram matrix needed to center new kernel rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringStats {
    pub col_means: Vector,
    pub grand_mean: f64,
}

impl CenteringStats {
    /// Centers a raw kernel row `k(x, x_i)` against the training set.
    pub fn center_row(&self, row: &[f64]) -> Vec<f64> {
        let n = row.len() as f64;
        let row_mean = row.iter().sum::<f64>() / n;
        row.iter()
            .zip(self.col_means.iter())
            .map(|(k, m)| k - row_mean - m + self.grand_mean)
            .collect()
    }
}

/// `K − 1_N K − K 1_N + 1_N K 1_N`.
pub fn center_kernel(k: &Matrix) -> Result<(Matrix, CenteringStats)> {
    check_symmetric(k)?;
    let n = k.nrows();
    if n == 0 {
        return Err(Error::InsufficientData("empty kernel matrix".into()));
    }
    let nf = n as f64;
    let col_means = Vector::from_iterator(n, k.column_iter().map(|c| c.sum() / nf));
    let grand_mean = col_means.sum() / nf;
    // K is symmetric, so row means equal column means.
    let kc = Matrix::from_fn(n, n, |i, j| k[(i, j)] - col_means[i] - col_means[j] + grand_mean);
    // Average with the transpose so the centered matrix is exactly symmetric.
    let kc = (&kc + kc.transpose()) * 0.5;
    Ok((
        kc,
        CenteringStats {
            col_means,
            grand_mean,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpcaModel {
    train: Matrix,
    kernel: Kernel,
    centering: CenteringStats,
    eigenvalues: Vector,
    /// `N × n′`, one scaled coefficient column per retained component.
    alphas: Matrix,
    /// Positive eigenvalue mass of the centered kernel (before truncation).
    total_variance: f64,
}

impl KpcaModel {
    pub fn n_components(&self) -> usize {
        self.alphas.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.train.ncols()
    }

    pub fn n_train(&self) -> usize {
        self.train.nrows()
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn eigenvalues(&self) -> &Vector {
        &self.eigenvalues
    }

    pub fn alphas(&self) -> &Matrix {
        &self.alphas
    }

    pub fn centering(&self) -> &CenteringStats {
        &self.centering
    }

    /// Share of the positive eigenvalue mass captured by the kept components.
    pub fn explained_fraction(&self) -> f64 {
        self.eigenvalues.sum() / self.total_variance
    }

    /// Projections of the training samples, `K_c · α` (`N × n′`).
    pub fn training_projection(&self) -> Result<Matrix> {
        let k = kernel_matrix(&self.train, self.kernel)?;
        let (kc, _) = center_kernel(&k)?;
        Ok(kc * &self.alphas)
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw = kernel_row(&self.train, x, self.kernel)?;
        let centered = Vector::from_vec(self.centering.center_row(&raw));
        Ok((self.alphas.transpose() * centered).iter().copied().collect())
    }

    /// Projects every row of `x` (`M × d` to `M × n′`).
    pub fn transform_rows(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(x.nrows(), self.n_components());
        for (i, row) in x.row_iter().enumerate() {
            let r: Vec<f64> = row.iter().copied().collect();
            let f = self.transform(&r)?;
            for (j, v) in f.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

pub fn kpca_fit(x: &Matrix, kernel: Kernel, selection: Selection) -> Result<KpcaModel> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InsufficientData("KPCA needs at least 2 samples".into()));
    }
    match selection {
        Selection::Count(c) if c == 0 || c > n => {
            return Err(Error::invalid(format!("component count {c} outside [1, {n}]")))
        }
        Selection::Fraction(t) if !(t > 0.0 && t <= 1.0) => {
            return Err(Error::invalid(format!("variance fraction {t} outside (0, 1]")))
        }
        _ => {}
    }
    let k = kernel_matrix(x, kernel)?;
    let (kc, centering) = center_kernel(&k)?;
    let eig = sym_eig(&kc)?;

    let lambda_max = eig.values.iter().copied().fold(0.0_f64, f64::max);
    let k_scale = k.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = (EIGEN_FLOOR_REL * lambda_max).max(10.0 * n as f64 * f64::EPSILON * k_scale);
    let usable = eig.values.iter().take_while(|&&l| l > floor).count();
    if usable == 0 {
        return Err(Error::DegenerateKernel);
    }
    let total: f64 = eig.values.iter().filter(|&&l| l > 0.0).sum();
    let keep = match selection {
        Selection::Count(c) => c.min(usable),
        Selection::Fraction(theta) => {
            let target = theta * total;
            let mut cum = 0.0;
            let mut count = usable;
            for (i, &l) in eig.values.iter().take(usable).enumerate() {
                cum += l;
                if cum >= target * (1.0 - 1e-12) {
                    count = i + 1;
                    break;
                }
            }
            count
        }
    };
    if let Selection::Count(c) = selection {
        if keep < c {
            log::warn!("requested {c} components but only {keep} exceed the eigenvalue floor");
        }
    }

    let eigenvalues = eig.values.rows(0, keep).clone_owned();
    let mut alphas = eig.vectors.columns(0, keep).clone_owned();
    for (j, mut col) in alphas.column_iter_mut().enumerate() {
        col /= eigenvalues[j].sqrt();
    }
    Ok(KpcaModel {
        train: x.clone(),
        kernel,
        centering,
        eigenvalues,
        alphas,
        total_variance: total,
    })
}
