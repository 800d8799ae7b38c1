//! Extreme learning machine and its kernel variant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix, kernel_row, Kernel};
use crate::numerics::{add_to_diagonal, check_finite, ridge_pinv, solve_spd, Matrix, Vector};

pub const DEFAULT_C: f64 = 100.0;
pub const DEFAULT_HIDDEN: usize = 100;

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn check_penalty(c: f64) -> Result<()> {
    if c > 0.0 && !c.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(format!("penalty C must be positive, got {c}")))
    }
}

fn check_xy(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            context: "training inputs vs targets",
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    check_finite(x, "training inputs")?;
    check_finite(y, "training targets")
}

fn check_input(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "prediction input",
            expected: dim,
            found: x.len(),
        });
    }
    Ok(())
}

/// Single-hidden-layer network with random, frozen input weights and a
/// logistic activation. Only the output weights are solved for.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    /// `L × n`, uniform on `[-1, 1]`.
    input_weights: Matrix,
    /// Length `L`, uniform on `[-1, 1]`.
    biases: Vector,
    /// `L × m`.
    output_weights: Matrix,
    c: f64,
}

impl ElmModel {
    pub fn fit(x: &Matrix, y: &Matrix, hidden: usize, c: f64, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::invalid("hidden layer needs at least one node"));
        }
        check_penalty(c)?;
        check_xy(x, y)?;
        let n = x.ncols();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input_weights = Matrix::from_fn(hidden, n, |_, _| rng.random_range(-1.0..=1.0));
        let biases = Vector::from_fn(hidden, |_, _| rng.random_range(-1.0..=1.0));
        let mut model = ElmModel {
            input_weights,
            biases,
            output_weights: Matrix::zeros(hidden, y.ncols()),
            c,
        };
        let h = model.hidden_matrix(x);
        model.output_weights = ridge_pinv(&h, y, c)?;
        Ok(model)
    }

    pub fn hidden(&self) -> usize {
        self.input_weights.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.ncols()
    }

    pub fn penalty(&self) -> f64 {
        self.c
    }

    pub fn input_weights(&self) -> &Matrix {
        &self.input_weights
    }

    pub fn biases(&self) -> &Vector {
        &self.biases
    }

    pub fn output_weights(&self) -> &Matrix {
        &self.output_weights
    }

    /// Hidden-layer output `H` for the rows of `x` (`N × L`).
    pub fn hidden_matrix(&self, x: &Matrix) -> Matrix {
        let mut h = x * self.input_weights.transpose();
        for mut row in h.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(self.biases.iter()) {
                *v = sigmoid(*v + b);
            }
        }
        h
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(x, self.input_dim())?;
        let row = Matrix::from_row_slice(1, x.len(), x);
        Ok(self.predict_rows(&row)?.row(0).iter().copied().collect())
    }

    pub fn predict_rows(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "prediction input",
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        Ok(self.hidden_matrix(x) * &self.output_weights)
    }
}

/// Kernel ELM: dual coefficients `A = (I/C + Ω)⁻¹ Y` over the raw
/// (uncentered) training kernel matrix `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct KelmModel {
    train: Matrix,
    kernel: Kernel,
    c: f64,
    dual: Matrix,
}

impl KelmModel {
    pub fn fit(x: &Matrix, y: &Matrix, kernel: Kernel, c: f64) -> Result<Self> {
        check_penalty(c)?;
        check_xy(x, y)?;
        let mut system = kernel_matrix(x, kernel)?;
        add_to_diagonal(&mut system, 1.0 / c);
        let dual = solve_spd(&system, y)?;
        Ok(KelmModel {
            train: x.clone(),
            kernel,
            c,
            dual,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn penalty(&self) -> f64 {
        self.c
    }

    pub fn dual(&self) -> &Matrix {
        &self.dual
    }

    pub fn input_dim(&self) -> usize {
        self.train.ncols()
    }

    pub fn train_inputs(&self) -> &Matrix {
        &self.train
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(x, self.input_dim())?;
        let row = kernel_row(&self.train, x, self.kernel)?;
        Ok((0..self.dual.ncols())
            .map(|j| row.iter().zip(self.dual.column(j).iter()).map(|(k, a)| k * a).sum())
            .collect())
    }

    pub fn predict_rows(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(x.nrows(), self.dual.ncols());
        for (i, row) in x.row_iter().enumerate() {
            let r: Vec<f64> = row.iter().copied().collect();
            for (j, v) in self.predict(&r)?.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    /// Smooth 1-D interpolation problem: 20 points of tanh(x/4) on [-8, 8].
    fn interpolation_set() -> (Matrix, Matrix) {
        let x = Matrix::from_fn(20, 1, |i, _| -8.0 + 16.0 * i as f64 / 19.0);
        let y = x.map(|v| (v / 4.0).tanh());
        (x, y)
    }

    #[test]
    fn elm_zero_target() {
        let x = random(10, 3, 1);
        let m = ElmModel::fit(&x, &Matrix::zeros(10, 1), 20, 10.0, 4).unwrap();
        assert!(m.output_weights().iter().all(|&v| v == 0.0));
        assert_eq!(m.predict(&[0.1, 0.2, 0.3]).unwrap(), vec![0.0]);
    }

    #[test]
    fn elm_interpolates() {
        let (x, y) = interpolation_set();
        let m = ElmModel::fit(&x, &y, 50, 1e6, 17).unwrap();
        let pred = m.predict_rows(&x).unwrap();
        let err = (pred - &y).amax();
        assert!(err < 1e-3, "max training error {err}");
        let one = m.predict(&[x[(4, 0)]]).unwrap()[0];
        assert!((one - y[(4, 0)]).abs() < 1e-3);
    }

    #[test]
    fn elm_output_weights_solve_ridge_system() {
        let x = random(25, 4, 2);
        let y = random(25, 1, 3);
        let m = ElmModel::fit(&x, &y, 30, 50.0, 9).unwrap();
        let h = m.hidden_matrix(&x);
        let mut g = &h * h.transpose();
        add_to_diagonal(&mut g, 1.0 / 50.0);
        // β = Hᵀ u with (I/C + HHᵀ) u = Y
        let u = solve_spd(&g, &y).unwrap();
        assert!((&g * &u - &y).amax() <= 1e-8 * y.amax());
        assert!((h.transpose() * u - m.output_weights()).amax() < 1e-8);
    }

    #[test]
    fn elm_deterministic_and_continuous() {
        let x = random(15, 2, 5);
        let y = random(15, 1, 6);
        let a = ElmModel::fit(&x, &y, 40, 100.0, 77).unwrap();
        let b = ElmModel::fit(&x, &y, 40, 100.0, 77).unwrap();
        assert_eq!(a, b);
        let p = a.predict(&[0.3, -0.2]).unwrap()[0];
        let q = a.predict(&[0.3 + 1e-9, -0.2]).unwrap()[0];
        assert!((p - q).abs() < 1e-6);
    }

    #[test]
    fn elm_rejects() {
        let x = random(5, 2, 1);
        let y = random(5, 1, 2);
        assert!(ElmModel::fit(&x, &y, 10, 0.0, 0).is_err());
        assert!(ElmModel::fit(&x, &y, 0, 1.0, 0).is_err());
        let m = ElmModel::fit(&x, &y, 10, 1.0, 0).unwrap();
        assert!(matches!(m.predict(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn kelm_single_point() {
        let x = Matrix::from_row_slice(1, 2, &[0.4, -1.0]);
        let y = Matrix::from_row_slice(1, 1, &[5.0]);
        let m = KelmModel::fit(&x, &y, Kernel::gaussian(1.0).unwrap(), 1e8).unwrap();
        assert_abs_diff_eq!(m.dual()[(0, 0)], 5.0 / (1e-8 + 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(m.predict(&[0.4, -1.0]).unwrap()[0], 5.0, epsilon = 1e-6);
    }

    #[test]
    fn kelm_constant_target() {
        let x = random(12, 3, 8);
        let y = Matrix::from_element(12, 1, 2.5);
        let m = KelmModel::fit(&x, &y, Kernel::gaussian(1.0).unwrap(), 1e8).unwrap();
        assert!((m.predict_rows(&x).unwrap() - y).amax() < 1e-4);
    }

    /// Primal ridge `(XᵀX + I/C) w = XᵀY` via the normal equations.
    fn ridge_oracle(x: &Matrix, y: &Matrix, c: f64) -> Matrix {
        let mut a = x.transpose() * x;
        for i in 0..a.nrows() {
            a[(i, i)] += 1.0 / c;
        }
        a.lu().solve(&(x.transpose() * y)).unwrap()
    }

    #[test]
    fn kelm_linear_matches_ridge() {
        let x = random(50, 5, 9);
        let y = random(50, 1, 10);
        let m = KelmModel::fit(&x, &y, Kernel::Linear, 1e8).unwrap();
        let w = ridge_oracle(&x, &y, 1e8);
        let probe = random(10, 5, 11);
        assert!((m.predict_rows(&probe).unwrap() - probe * w).amax() < 1e-4);
    }

    #[test]
    fn kelm_far_point_decays_to_zero() {
        let x = random(10, 2, 12);
        let y = Matrix::from_element(10, 1, 3.0);
        let m = KelmModel::fit(&x, &y, Kernel::gaussian(0.5).unwrap(), 100.0).unwrap();
        assert!(m.predict(&[1e3, 1e3]).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn kelm_wide_kernel_on_constant_data() {
        // With σ = 1e6 every kernel entry is ~1, so Ω ≈ 11ᵀ and the
        // prediction is N·c·C / (1 + N·C) for a constant target c.
        let x = random(8, 2, 13);
        let y = Matrix::from_element(8, 1, 4.0);
        let c = 10.0;
        let m = KelmModel::fit(&x, &y, Kernel::gaussian(1e6).unwrap(), c).unwrap();
        let direct = 8.0 * 4.0 * c / (1.0 + 8.0 * c);
        assert_abs_diff_eq!(m.predict(&[0.0, 0.0]).unwrap()[0], direct, epsilon = 1e-6);
        assert!((m.predict(&[0.0, 0.0]).unwrap()[0] - 4.0).abs() < 0.1);
    }

    #[test]
    fn kelm_rejects() {
        let x = random(5, 2, 1);
        let y = random(5, 1, 2);
        assert!(KelmModel::fit(&x, &y, Kernel::Linear, -1.0).is_err());
        assert!(KelmModel::fit(&x, &y, Kernel::Gaussian { sigma: 0.0 }, 1.0).is_err());
        let m = KelmModel::fit(&x, &y, Kernel::Linear, 1.0).unwrap();
        assert!(matches!(m.predict(&[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kelm_dual_system_residual(seed in any::<u64>(), c in 0.01f64..1e4, sigma in 0.3f64..3.0) {
            let x = random(20, 3, seed);
            let y = random(20, 1, seed.wrapping_add(1));
            let m = KelmModel::fit(&x, &y, Kernel::gaussian(sigma).unwrap(), c).unwrap();
            let mut sys = kernel_matrix(&x, m.kernel()).unwrap();
            add_to_diagonal(&mut sys, 1.0 / c);
            let r = &sys * m.dual() - &y;
            prop_assert!(r.amax() <= 1e-8 * y.amax());
        }

        #[test]
        fn kelm_training_mse_monotone_in_c(seed in any::<u64>()) {
            let x = random(20, 3, seed);
            let y = random(20, 1, seed.wrapping_add(7));
            let mut prev = f64::INFINITY;
            for c in [0.01, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4] {
                let m = KelmModel::fit(&x, &y, Kernel::gaussian(1.0).unwrap(), c).unwrap();
                let mse = (m.predict_rows(&x).unwrap() - &y).norm_squared();
                prop_assert!(mse <= prev + 1e-10);
                prev = mse;
            }
        }
    }
}
