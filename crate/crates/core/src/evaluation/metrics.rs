use crate::error::{Error, Result};

fn check_pair(y: &[f64], yhat: &[f64], min: usize) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            context: "actuals vs forecasts",
            expected: y.len(),
            found: yhat.len(),
        });
    }
    if y.len() < min {
        return Err(Error::InsufficientData(format!(
            "metric needs at least {min} points, got {}",
            y.len()
        )));
    }
    if !y.iter().chain(yhat).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("metric input"));
    }
    Ok(())
}

/// Mean absolute percentage error, in percent.
pub fn mape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, 1)?;
    if let Some(i) = y.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroActual(i));
    }
    let sum: f64 = y.iter().zip(yhat).map(|(a, f)| ((a - f) / a).abs()).sum();
    Ok(sum / y.len() as f64 * 100.0)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, 1)?;
    let sum: f64 = y.iter().zip(yhat).map(|(a, f)| (a - f) * (a - f)).sum();
    Ok((sum / y.len() as f64).sqrt())
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, 1)?;
    let sum: f64 = y.iter().zip(yhat).map(|(a, f)| (a - f).abs()).sum();
    Ok(sum / y.len() as f64)
}

/// Direction hits over the `N − 1` transitions.
///
/// Entry `t` is 1 when `(y[t+1] − y[t]) · (ŷ[t+1] − y[t]) ≥ 0`. The forecast
/// move is measured from the previous *actual*, and a zero product counts
/// as a hit.
pub fn direction_hits(y: &[f64], yhat: &[f64]) -> Result<Vec<u8>> {
    check_pair(y, yhat, 2)?;
    Ok((0..y.len() - 1)
        .map(|t| u8::from((y[t + 1] - y[t]) * (yhat[t + 1] - y[t]) >= 0.0))
        .collect())
}

/// Directional accuracy in percent, over `N − 1` transitions.
pub fn da(y: &[f64], yhat: &[f64]) -> Result<f64> {
    let hits = direction_hits(y, yhat)?;
    let count: usize = hits.iter().map(|&d| d as usize).sum();
    Ok(100.0 * count as f64 / hits.len() as f64)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(mape(&[100.0, 100.0], &[90.0, 110.0]).unwrap(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mape(&[50.0], &[75.0]).unwrap(), 50.0, epsilon = 1e-12);
        assert_eq!(mape(&[1.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroActual(1)));
        assert!(mape(&[], &[]).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(rmse(&[2.0], &[-1.5]).unwrap(), 3.5, epsilon = 1e-12);
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(mae(&[1.0, 3.0], &[2.0, 1.0]).unwrap(), 1.5, epsilon = 1e-12);
        let c = 3.7;
        assert_abs_diff_eq!(mae(&[c, 3.0 * c], &[2.0 * c, c]).unwrap(), 1.5 * c, epsilon = 1e-12);
    }

    /// 12 actuals alternating up/down; forecasts flip direction on exactly
    /// three of the eleven transitions.
    pub(crate) fn eight_of_eleven() -> (Vec<f64>, Vec<f64>) {
        let y: Vec<f64> = (0..12).map(|t| if t % 2 == 0 { 10.0 } else { 12.0 }).collect();
        let mut f = y.clone();
        for t in [2usize, 5, 9] {
            // move opposite to the actual change from y[t-1]
            f[t] = y[t - 1] - (y[t] - y[t - 1]);
        }
        (y, f)
    }

    #[test]
    fn da_examples() {
        let y = [1.0, 3.0, 2.0, 5.0];
        assert_eq!(da(&y, &y).unwrap(), 100.0);

        let (y, f) = eight_of_eleven();
        let hits = direction_hits(&y, &f).unwrap();
        assert_eq!(hits.iter().filter(|&&d| d == 1).count(), 8);
        assert!((da(&y, &f).unwrap() - 72.73).abs() <= 0.01);

        // Forecast equal to the previous actual: every product is zero.
        let rising: Vec<f64> = (0..6).map(|t| t as f64).collect();
        let lagged: Vec<f64> = (0..6).map(|t| rising[t.max(1) - 1]).collect();
        assert_eq!(da(&rising, &lagged).unwrap(), 100.0);
        // A forecast frozen at the first actual only ties the first move.
        assert!((da(&rising, &[0.0; 6]).unwrap() - 20.0).abs() < 1e-12);
        assert!(da(&[1.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn zero_iff_equal(y in prop::collection::vec(1.0f64..100.0, 1..20), bump in 0usize..20, eps in 1e-6f64..1.0) {
            prop_assert_eq!(mae(&y, &y).unwrap(), 0.0);
            prop_assert_eq!(rmse(&y, &y).unwrap(), 0.0);
            prop_assert_eq!(mape(&y, &y).unwrap(), 0.0);
            let mut f = y.clone();
            let i = bump % y.len();
            f[i] += eps;
            prop_assert!(mae(&y, &f).unwrap() > 0.0);
            prop_assert!(rmse(&y, &f).unwrap() > 0.0);
            prop_assert!(mape(&y, &f).unwrap() > 0.0);
        }

        #[test]
        fn da_depends_only_on_signs(y in prop::collection::vec(-50.0f64..50.0, 2..20), f in prop::collection::vec(-50.0f64..50.0, 20)) {
            let f = &f[..y.len()];
            // Rescale every move by a positive factor: signs are unchanged.
            let y2: Vec<f64> = y.iter().map(|v| 3.0 * v + 7.0).collect();
            let f2: Vec<f64> = f.iter().map(|v| 3.0 * v + 7.0).collect();
            prop_assert_eq!(direction_hits(&y, f).unwrap(), direction_hits(&y2, &f2).unwrap());
            let d = da(&y, f).unwrap();
            prop_assert!((0.0..=100.0).contains(&d));
        }
    }
}
