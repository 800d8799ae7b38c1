//! Accuracy reports, improvement rates and hyperparameter grid search.

pub mod metrics;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pipeline::panel::{FeaturePanel, Month};
use crate::pipeline::{forecast_test_rows, pipeline_fit, PipelineConfig};

pub use metrics::{da, direction_hits, mae, mape, rmse};

/// One evaluated forecast. `hit` is the direction indicator for the
/// transition ending at this point; the first point has none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRecord {
    pub date: Month,
    pub actual: f64,
    pub forecast: f64,
    pub hit: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub label: String,
    pub n: usize,
    pub mape: f64,
    pub rmse: f64,
    pub mae: f64,
    pub da: f64,
    pub config_echo: String,
    /// Free-form `key = value` annotations, kept in insertion order.
    pub extra: Vec<(String, String)>,
    pub points: Vec<PointRecord>,
}

const POINTS_HEADER: &str = "[points]";
const POINTS_COLUMNS: &str = "date,actual,forecast,d";

impl EvalReport {
    pub fn from_points(
        label: impl Into<String>,
        dates: &[Month],
        actual: &[f64],
        forecast: &[f64],
        config_echo: impl Into<String>,
    ) -> Result<Self> {
        if dates.len() != actual.len() {
            return Err(Error::DimensionMismatch {
                context: "report dates vs actuals",
                expected: actual.len(),
                found: dates.len(),
            });
        }
        let hits = direction_hits(actual, forecast)?;
        let points = dates
            .iter()
            .enumerate()
            .map(|(i, &date)| PointRecord {
                date,
                actual: actual[i],
                forecast: forecast[i],
                hit: i.checked_sub(1).map(|j| hits[j]),
            })
            .collect();
        Ok(EvalReport {
            label: label.into(),
            n: actual.len(),
            mape: mape(actual, forecast)?,
            rmse: rmse(actual, forecast)?,
            mae: mae(actual, forecast)?,
            da: da(actual, forecast)?,
            config_echo: config_echo.into(),
            extra: Vec::new(),
            points,
        })
    }

    pub fn with_extra(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.extra.push((key.into(), value.to_string()));
        self
    }

    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// True when both reports cover the same dates.
    pub fn same_window(&self, other: &EvalReport) -> bool {
        self.points.len() == other.points.len()
            && self.points.iter().zip(&other.points).all(|(a, b)| a.date == b.date)
    }

    /// Flat `key = value` lines, then a `[points]` CSV table.
    /// Floats use the shortest representation that parses back exactly.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "label = {}", self.label);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "mape_pct = {}", self.mape);
        let _ = writeln!(s, "rmse = {}", self.rmse);
        let _ = writeln!(s, "mae = {}", self.mae);
        let _ = writeln!(s, "da_pct = {}", self.da);
        let _ = writeln!(s, "config_echo = {}", self.config_echo);
        for (k, v) in &self.extra {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "{POINTS_HEADER}");
        let _ = writeln!(s, "{POINTS_COLUMNS}");
        for p in &self.points {
            let d = p.hit.map(|h| h.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", p.date, p.actual, p.forecast, d);
        }
        s
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::invalid(format!("report line {line}: {msg}"));
        let num = |line: usize, v: &str| v.parse::<f64>().map_err(|_| bad(line, "not a number"));
        let mut fields: Vec<(String, String)> = Vec::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut saw_points = false;
        for (no, line) in lines.by_ref() {
            if line.trim().is_empty() {
                continue;
            }
            if line.trim() == POINTS_HEADER {
                saw_points = true;
                break;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| bad(no, "expected `key = value`"))?;
            fields.push((k.trim().to_string(), v.to_string()));
        }
        if !saw_points {
            return Err(Error::invalid("report has no [points] table"));
        }
        match lines.next() {
            Some((_, h)) if h.trim() == POINTS_COLUMNS => {}
            Some((no, _)) => return Err(bad(no, "unexpected points header")),
            None => return Err(Error::invalid("report points table has no header")),
        }
        let mut points = Vec::new();
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                return Err(bad(no, "expected 4 cells"));
            }
            let hit = match cells[3].trim() {
                "" => None,
                "0" => Some(0),
                "1" => Some(1),
                _ => return Err(bad(no, "d must be 0, 1 or empty")),
            };
            points.push(PointRecord {
                date: cells[0].parse().map_err(|_| bad(no, "bad date"))?,
                actual: num(no, cells[1])?,
                forecast: num(no, cells[2])?,
                hit,
            });
        }

        let mut take = |key: &str| -> Result<String> {
            let i = fields
                .iter()
                .position(|(k, _)| k == key)
                .ok_or_else(|| Error::MissingColumn(key.to_string()))?;
            Ok(fields.remove(i).1)
        };
        let label = take("label")?;
        let n = take("n")?
            .parse::<usize>()
            .map_err(|_| Error::invalid("report field n is not an integer"))?;
        let parse = |key: &str, v: String| {
            v.parse::<f64>()
                .map_err(|_| Error::invalid(format!("report field {key} is not a number")))
        };
        let mape = parse("mape_pct", take("mape_pct")?)?;
        let rmse = parse("rmse", take("rmse")?)?;
        let mae = parse("mae", take("mae")?)?;
        let da = parse("da_pct", take("da_pct")?)?;
        let config_echo = take("config_echo")?;
        if points.len() != n {
            return Err(Error::DimensionMismatch {
                context: "report n vs points",
                expected: n,
                found: points.len(),
            });
        }
        Ok(EvalReport {
            label,
            n,
            mape,
            rmse,
            mae,
            da,
            config_echo,
            extra: fields,
            points,
        })
    }
}

/// Percent improvement of report `a` over report `b`; positive means `a`
/// is better on that metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementRates {
    pub mape: f64,
    pub rmse: f64,
    pub da: f64,
}

pub fn improvement_rate(a: &EvalReport, b: &EvalReport) -> Result<ImprovementRates> {
    Ok(ImprovementRates {
        mape: ir_lower_better(a.mape, b.mape, "mape")?,
        rmse: ir_lower_better(a.rmse, b.rmse, "rmse")?,
        da: ir_higher_better(a.da, b.da, "da")?,
    })
}

pub fn ir_lower_better(a: f64, b: f64, metric: &'static str) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::ZeroDenominator(metric));
    }
    Ok(-(a - b) / b * 100.0)
}

pub fn ir_higher_better(a: f64, b: f64, metric: &'static str) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::ZeroDenominator(metric));
    }
    Ok((a - b) / b * 100.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub config: PipelineConfig,
    /// Validation MAE in target units, or the reason the config failed.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: usize,
    pub table: Vec<GridEntry>,
}

impl GridResult {
    pub fn best_config(&self) -> &PipelineConfig {
        &self.table[self.best].config
    }

    pub fn best_mae(&self) -> f64 {
        self.table[self.best].outcome.clone().expect("best entry succeeded")
    }
}

/// Scores every config on the last `validation_fraction` of the rows dated
/// at or before `train_end`, fitting on the rows before them.
pub fn grid_search(
    panel: &FeaturePanel,
    train_end: Month,
    grid: &[PipelineConfig],
    validation_fraction: f64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty config grid"));
    }
    if !(validation_fraction > 0.0 && validation_fraction <= 0.5) {
        return Err(Error::invalid(format!(
            "validation fraction {validation_fraction} outside (0, 0.5]"
        )));
    }
    let n_train = panel.dates().partition_point(|d| *d <= train_end);
    let n_val = ((n_train as f64 * validation_fraction).round() as usize).max(1);
    if n_val >= n_train {
        return Err(Error::InsufficientData(format!(
            "{n_train} training rows cannot hold a validation window"
        )));
    }
    let fit_end = panel.dates()[n_train - n_val - 1];
    let val_dates = &panel.dates()[n_train - n_val..n_train];
    let actual: Vec<f64> = panel.target()?.values[n_train - n_val..n_train].to_vec();
    let rows = panel.slice_rows(0..n_train);

    let table: Vec<GridEntry> = grid
        .iter()
        .map(|cfg| {
            let score = pipeline_fit(&rows, fit_end, cfg)
                .and_then(|m| forecast_test_rows(&m, &rows, val_dates))
                .and_then(|fc| {
                    let raw: Vec<f64> = fc.iter().map(|f| f.raw).collect();
                    mae(&actual, &raw)
                });
            if let Err(e) = &score {
                log::warn!("grid config failed: {e}");
            }
            GridEntry {
                config: cfg.clone(),
                outcome: score.map_err(|e| e.to_string()),
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, e) in table.iter().enumerate() {
        if let Ok(m) = e.outcome {
            if best.is_none_or(|(_, b)| m < b) {
                best = Some((i, m));
            }
        }
    }
    match best {
        Some((best, _)) => Ok(GridResult { best, table }),
        None => Err(Error::AllConfigsFailed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Width;
    use crate::pipeline::{ClusterChoice, RegressorChoice};
    use crate::synth::{synth_generate, SynthSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn months(n: usize) -> Vec<Month> {
        let start: Month = "2018-01".parse().unwrap();
        (0..n as i64).map(|i| start.plus(i)).collect()
    }

    fn report(label: &str, y: &[f64], f: &[f64]) -> EvalReport {
        EvalReport::from_points(label, &months(y.len()), y, f, "seed=1").unwrap()
    }

    #[test]
    fn report_fields_and_hits() {
        let (y, f) = metrics::tests::eight_of_eleven();
        let r = report("x", &y, &f);
        assert_eq!(r.n, 12);
        assert_eq!(r.points[0].hit, None);
        let ones = r.points.iter().filter(|p| p.hit == Some(1)).count();
        assert_eq!(ones, 8);
        assert_abs_diff_eq!(r.da, 100.0 * ones as f64 / 11.0, epsilon = 1e-12);
    }

    #[test]
    fn record_roundtrip() {
        let y = [61.25, 60.1, 63.0, 59.875];
        let f = [60.0, 61.123456789012345, 62.5, 60.2];
        let r = report("kelm H", &y, &f)
            .with_extra("method", "kelm")
            .with_extra("scale", "raw");
        let back = EvalReport::from_record(&r.to_record()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.extra("scale"), Some("raw"));
    }

    #[test]
    fn record_rejects_garbage() {
        assert!(EvalReport::from_record("label = a\n").is_err());
        let r = report("a", &[1.0, 2.0], &[1.0, 2.0]).to_record();
        assert!(EvalReport::from_record(&r.replace("n = 2", "n = 3")).is_err());
        assert!(EvalReport::from_record(&r.replace("mae = 0", "mae = zero")).is_err());
    }

    #[test]
    fn improvement_rate_examples() {
        let y = [10.0, 11.0, 12.0];
        let a = report("a", &y, &[10.5, 11.5, 11.0]);
        let ir = improvement_rate(&a, &a).unwrap();
        assert_eq!((ir.mape, ir.rmse, ir.da), (0.0, 0.0, 0.0));
        assert!((ir_lower_better(5.44, 8.09, "mape").unwrap() - 32.76).abs() < 0.01);
        assert!((ir_higher_better(90.91, 72.73, "da").unwrap() - 25.0).abs() < 0.01);

        let perfect = report("p", &y, &y);
        assert_eq!(improvement_rate(&a, &perfect), Err(Error::ZeroDenominator("mape")));
    }

    proptest! {
        #[test]
        fn ir_sign_flips(a in 0.1f64..50.0, b in 0.1f64..50.0) {
            prop_assume!(a != b);
            let ab = ir_lower_better(a, b, "mape").unwrap();
            let ba = ir_lower_better(b, a, "mape").unwrap();
            prop_assert_eq!(ab.signum(), -ba.signum());
            prop_assert_eq!(ab > 0.0, a < b);
        }
    }

    fn kelm(sigma: f64) -> PipelineConfig {
        PipelineConfig {
            clusters: ClusterChoice::Fixed(3),
            regressor: RegressorChoice::Kelm {
                sigma: Width::Fixed(sigma),
                c: 100.0,
            },
            ..Default::default()
        }
    }

    #[test]
    fn grid_search_picks_argmin() {
        let (p, _) = synth_generate(&SynthSpec::standard(11)).unwrap();
        let end: Month = "2017-12".parse().unwrap();
        let grid: Vec<PipelineConfig> = [0.05, 0.5, 2.0, 20.0].map(kelm).to_vec();
        let res = grid_search(&p, end, &grid, 0.2).unwrap();
        assert_eq!(res.table.len(), 4);
        for e in &res.table {
            assert!(res.best_mae() <= *e.outcome.as_ref().unwrap());
        }

        let one = grid_search(&p, end, &grid[2..3], 0.2).unwrap();
        assert_eq!(one.best_config(), &grid[2]);

        let tied = grid_search(&p, end, &[grid[1].clone(), grid[1].clone()], 0.2).unwrap();
        assert_eq!(tied.best, 0);
    }

    #[test]
    fn grid_search_failures_recorded() {
        let (p, _) = synth_generate(&SynthSpec::standard(12)).unwrap();
        let end: Month = "2017-12".parse().unwrap();
        let bad = PipelineConfig {
            clusters: ClusterChoice::Fixed(500),
            ..Default::default()
        };
        let res = grid_search(&p, end, &[bad.clone(), kelm(1.0)], 0.25).unwrap();
        assert_eq!(res.best, 1);
        assert!(res.table[0].outcome.is_err());
        assert_eq!(grid_search(&p, end, &[bad], 0.25), Err(Error::AllConfigsFailed));
        assert!(grid_search(&p, end, &[kelm(1.0)], 0.6).is_err());
        assert!(grid_search(&p, end, &[], 0.2).is_err());
    }
}
