//! Dense linear algebra used by the kernel models: symmetric
//! eigendecomposition, SPD solves and the ridge pseudoinverse.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Largest tolerated `|A[i][j] - A[j][i]|` for symmetric routines.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
///
/// Column `j` of `vectors` belongs to `values[j]`. Each column is flipped so
/// that its largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEig {
    pub values: Vector,
    pub vectors: Matrix,
}

pub fn check_finite(a: &Matrix, what: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Rejects non-square or asymmetric input, reporting the worst index pair.
pub fn check_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "symmetric matrix",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut worst = (0, 0, 0.0_f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (a[(i, j)] - a[(j, i)]).abs();
            if d > worst.2 {
                worst = (i, j, d);
            }
        }
    }
    if worst.2 > SYMMETRY_TOL {
        return Err(Error::NotSymmetric {
            row: worst.0,
            col: worst.1,
            diff: worst.2,
        });
    }
    Ok(())
}

pub fn sym_eig(a: &Matrix) -> Result<SymEig> {
    check_finite(a, "symmetric eigenproblem input")?;
    check_symmetric(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(SymEig {
            values: Vector::zeros(0),
            vectors: Matrix::zeros(0, 0),
        });
    }
    // Symmetrize exactly so the solver sees the matrix we validated.
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));

    let mut values = Vector::zeros(n);
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).clone_owned();
        if leading_entry(&col) < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok(SymEig { values, vectors })
}

/// Value of the largest-magnitude entry; near-ties resolve to the first index.
fn leading_entry(v: &Vector) -> f64 {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    v.iter()
        .copied()
        .find(|x| x.abs() >= max * (1.0 - 1e-9))
        .unwrap_or(0.0)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: Matrix,
}

impl SpdFactor {
    pub fn new(a: &Matrix) -> Result<Self> {
        check_finite(a, "SPD factorization input")?;
        check_symmetric(a)?;
        let n = a.nrows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(SpdFactor { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solves `A X = B` by forward then backward substitution.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "SPD solve right-hand side",
                expected: n,
                found: b.nrows(),
            });
        }
        let l = &self.lower;
        let mut x = b.clone();
        for c in 0..x.ncols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in (i + 1)..n {
                    s -= l[(k, i)] * x[(k, c)];
                }
                x[(i, c)] = s / l[(i, i)];
            }
        }
        Ok(x)
    }
}

pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    SpdFactor::new(a)?.solve(b)
}

/// Regularized output weights `Hᵀ (I/C + H Hᵀ)⁻¹ Y`.
pub fn ridge_pinv(h: &Matrix, y: &Matrix, c: f64) -> Result<Matrix> {
    if !(c > 0.0) {
        return Err(Error::invalid(format!("penalty C must be positive, got {c}")));
    }
    if h.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            context: "ridge_pinv rows of H and Y",
            expected: h.nrows(),
            found: y.nrows(),
        });
    }
    check_finite(h, "hidden-layer matrix")?;
    check_finite(y, "targets")?;
    let mut gram = h * h.transpose();
    add_to_diagonal(&mut gram, 1.0 / c);
    let dual = solve_spd(&gram, y)?;
    Ok(h.transpose() * dual)
}

pub(crate) fn add_to_diagonal(a: &mut Matrix, v: f64) {
    for i in 0..a.nrows().min(a.ncols()) {
        a[(i, i)] += v;
    }
}

/// Ordinary least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coef: Vector,
    pub sse: f64,
}

/// Least squares via Householder QR; a rank-deficient design is an error.
pub fn least_squares(x: &Matrix, y: &Vector) -> Result<LeastSquares> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "least squares rows",
            expected: n,
            found: y.len(),
        });
    }
    if n < p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} regressors"
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).fold(0.0_f64, |m, i| m.max(r[(i, i)].abs()));
    if let Some(i) = (0..p).find(|&i| r[(i, i)].abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Singular(format!("design column {i} is collinear")));
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let resid = y - x * &coef;
    Ok(LeastSquares {
        coef,
        sse: resid.norm_squared(),
    })
}
