use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hybridcast::baselines::{ar_fit, ar_forecast, naive_forecast, univariate_forecast};
use hybridcast::evaluation::{improvement_rate, EvalReport};
use hybridcast::pipeline::granger::granger_filter;
use hybridcast::pipeline::normalize::MinMax;
use hybridcast::pipeline::panel::{fuse, train_test_split};
use hybridcast::pipeline::{forecast_test_rows, pipeline_fit};
use hybridcast::synth::{synth_generate, SynthSpec};
use hybridcast::{FeaturePanel, Provenance};

use crate::config::{GrangerScope, Method, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{read_fragment, read_panel, tags_path_for, write_atomic, write_panel};

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub path: PathBuf,
    pub rows: usize,
    pub columns: usize,
    pub common_dates: usize,
    pub dropped_incomplete: usize,
}

pub fn cmd_ingest(
    economic: &[PathBuf],
    gsvi: &[PathBuf],
    target: &Path,
    out_dir: &Path,
) -> Result<IngestSummary> {
    let mut fragments = Vec::new();
    for p in economic {
        fragments.push(read_fragment(p, Provenance::Economic)?);
    }
    for p in gsvi {
        fragments.push(read_fragment(p, Provenance::Gsvi)?);
    }
    fragments.push(read_fragment(target, Provenance::Target)?);
    let (panel, summary) = fuse(&fragments)?;
    panel.target()?;
    let path = write_panel(out_dir, &panel)?;
    Ok(IngestSummary {
        path,
        rows: panel.n_rows(),
        columns: panel.columns().len(),
        common_dates: summary.common_dates,
        dropped_incomplete: summary.dropped_incomplete,
    })
}

/// Writes a synthetic `panel.csv`, its sidecar and `labels.csv`
/// (indicator name to planted factor index).
pub fn cmd_synth(spec: &SynthSpec, out_dir: &Path) -> Result<PathBuf> {
    let (panel, truth) = synth_generate(spec)?;
    let path = write_panel(out_dir, &panel)?;
    let mut labels = String::from("name,factor\n");
    for (c, f) in panel.indicators().zip(&truth.labels) {
        let _ = writeln!(labels, "{},{f}", c.name);
    }
    write_atomic(&out_dir.join("labels.csv"), labels.as_bytes())?;
    Ok(path)
}

pub fn synth_spec(cfg: &RunConfig, seed: u64) -> SynthSpec {
    SynthSpec {
        months: cfg.synth_months,
        factors: cfg.synth_factors,
        per_factor: cfg.synth_per_factor,
        noise: cfg.synth_noise,
        target_noise: cfg.synth_target_noise,
        ..SynthSpec::standard(seed)
    }
}

pub fn load_data(cfg: &RunConfig) -> Result<FeaturePanel> {
    let files = cfg.economic.is_some() || cfg.gsvi.is_some() || cfg.target.is_some();
    let sources = [cfg.panel.is_some(), files, cfg.synth_seed.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(CliError::Config(
            "set exactly one data source: `panel`, the `economic`/`gsvi`/`target` files, or `synth_seed`"
                .into(),
        ));
    }
    if let Some(panel) = &cfg.panel {
        let tags = cfg.tags.clone().unwrap_or_else(|| tags_path_for(panel));
        return read_panel(panel, &tags);
    }
    if let Some(seed) = cfg.synth_seed {
        return Ok(synth_generate(&synth_spec(cfg, seed))?.0);
    }
    let target = cfg
        .target
        .as_ref()
        .ok_or_else(|| CliError::Config("`target` file is required with economic/gsvi files".into()))?;
    let mut fragments = Vec::new();
    if let Some(p) = &cfg.economic {
        fragments.push(read_fragment(p, Provenance::Economic)?);
    }
    if let Some(p) = &cfg.gsvi {
        fragments.push(read_fragment(p, Provenance::Gsvi)?);
    }
    fragments.push(read_fragment(target, Provenance::Target)?);
    let (panel, summary) = fuse(&fragments)?;
    log::info!(
        "fused {} common months, dropped {} incomplete",
        summary.common_dates,
        summary.dropped_incomplete
    );
    Ok(panel)
}

/// Drops in-scope indicators that fail the Granger screen on training rows.
fn granger_screen(cfg: &RunConfig, panel: &FeaturePanel, n_train: usize) -> Result<(FeaturePanel, String)> {
    if cfg.granger_scope == GrangerScope::Off || cfg.granger_max_lag == 0 {
        return Ok((panel.clone(), "off".into()));
    }
    let in_scope = |tag: Provenance| cfg.granger_scope == GrangerScope::All || tag == Provenance::Gsvi;
    let candidates: Vec<String> = panel
        .indicators()
        .filter(|c| in_scope(c.tag))
        .map(|c| c.name.clone())
        .collect();
    if candidates.is_empty() {
        return Ok((panel.clone(), "0/0".into()));
    }
    let train = panel.slice_rows(0..n_train);
    let report = granger_filter(&train, &candidates, cfg.granger_max_lag, cfg.p_threshold)?;
    let retained = report.retained();
    let keep: Vec<String> = panel
        .indicators()
        .filter(|c| !in_scope(c.tag) || retained.contains(&c.name))
        .map(|c| c.name.clone())
        .collect();
    if keep.is_empty() {
        return Err(CliError::Config("the Granger screen removed every indicator".into()));
    }
    log::info!("Granger screen kept {} of {} candidates", retained.len(), candidates.len());
    Ok((
        panel.select_indicators(&keep),
        format!("{}/{}", retained.len(), candidates.len()),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub label: String,
    pub predictions: PathBuf,
    pub metrics_normalized: PathBuf,
    pub metrics_raw: PathBuf,
    pub report_normalized: EvalReport,
    pub report_raw: EvalReport,
}

pub fn cmd_run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    let panel = load_data(cfg)?.select_mode(cfg.mode);
    let (train, test) = train_test_split(&panel, cfg.split)?;
    let target = train.target()?;
    let history = &target.values;
    let scale = MinMax::fit(&target.name, history)?;
    let actual = &test.target()?.values;
    let dates = test.dates();
    let steps = test.n_rows();
    let mut extra: Vec<(&str, String)> = Vec::new();

    if !cfg.method.is_multivariate() {
        let last = *train.dates().last().expect("non-empty train");
        if dates.iter().enumerate().any(|(i, d)| *d != last.plus(i as i64 + 1)) {
            return Err(CliError::Config(
                "univariate methods need consecutive test months after the split".into(),
            ));
        }
    }

    let (raw, normalized): (Vec<f64>, Vec<f64>) = match cfg.method {
        Method::Naive => {
            let f = naive_forecast(history, steps)?;
            (f.clone(), scale.apply_all(&f))
        }
        Method::Ar => {
            let model = ar_fit(history, cfg.ar_max_p, cfg.ar_d, cfg.ar_criterion)?;
            extra.push(("ar_p", model.p.to_string()));
            let f = ar_forecast(&model, history, steps)?;
            (f.clone(), scale.apply_all(&f))
        }
        Method::Elm | Method::Kelm => {
            let choice = cfg.regressor(cfg.method == Method::Kelm);
            let f = univariate_forecast(history, steps, choice, cfg.uni_lags, cfg.seed)?;
            (f.clone(), scale.apply_all(&f))
        }
        _ => {
            let (screened, granger) = granger_screen(cfg, &panel, train.n_rows())?;
            extra.push(("granger_retained", granger));
            let pc = cfg.pipeline().expect("multivariate method");
            let model = pipeline_fit(&screened, cfg.split, &pc)?;
            extra.push(("k", model.clusters.k.to_string()));
            let comps: Vec<String> = model.n_components().iter().map(|n| n.to_string()).collect();
            extra.push(("n_components_per_cluster", comps.join(" ")));
            let fc = forecast_test_rows(&model, &screened, dates)?;
            (fc.iter().map(|f| f.raw).collect(), fc.iter().map(|f| f.normalized).collect())
        }
    };

    let label = cfg.label();
    let echo = cfg.echo();
    let annotate = |r: EvalReport, scale_name: &str| {
        let mut r = r
            .with_extra("method", cfg.method)
            .with_extra("dataset", cfg.mode)
            .with_extra("scale", scale_name)
            .with_extra("seed", cfg.seed)
            .with_extra("test_start", dates[0])
            .with_extra("test_end", dates[steps - 1]);
        for (k, v) in &extra {
            r = r.with_extra(*k, v);
        }
        r
    };
    let report_raw = annotate(EvalReport::from_points(&label, dates, actual, &raw, &echo)?, "raw");
    let actual_norm = scale.apply_all(actual);
    let report_normalized = annotate(
        EvalReport::from_points(&label, dates, &actual_norm, &normalized, &echo)?,
        "normalized",
    );

    let mut csv = String::new();
    for (k, v) in cfg.pairs() {
        let _ = writeln!(csv, "# {k} = {v}");
    }
    csv.push_str("date,actual,forecast_raw,forecast_normalized\n");
    for i in 0..steps {
        let _ = writeln!(csv, "{},{},{},{}", dates[i], actual[i], raw[i], normalized[i]);
    }
    let predictions = out_dir.join(format!("{label}.predictions.csv"));
    let metrics_normalized = out_dir.join(format!("{label}.metrics.normalized.txt"));
    let metrics_raw = out_dir.join(format!("{label}.metrics.raw.txt"));
    write_atomic(&predictions, csv.as_bytes())?;
    write_atomic(&metrics_normalized, report_normalized.to_record().as_bytes())?;
    write_atomic(&metrics_raw, report_raw.to_record().as_bytes())?;
    Ok(RunOutput {
        label,
        predictions,
        metrics_normalized,
        metrics_raw,
        report_normalized,
        report_raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Same method, different datasets.
    DatasetPairs,
    /// Same dataset, different methods.
    MethodPairs,
}

impl std::str::FromStr for Pairing {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataset-pairs" => Ok(Pairing::DatasetPairs),
            "method-pairs" => Ok(Pairing::MethodPairs),
            _ => Err(CliError::Usage(format!(
                "unknown pairing `{s}` (dataset-pairs or method-pairs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrRow {
    pub pair: String,
    pub ir_mape: f64,
    pub ir_rmse: f64,
    pub ir_da: f64,
}

/// Improvement rates for every ordered pair `(earlier, later)` of reports
/// sharing a group: the method for dataset pairs, the dataset for method
/// pairs, and always the metric scale.
pub fn compare_reports(reports: &[EvalReport], pairing: Pairing) -> Result<Vec<IrRow>> {
    if reports.len() < 2 {
        return Err(CliError::Usage("compare needs at least two reports".into()));
    }
    let group = |r: &EvalReport| {
        let key = match pairing {
            Pairing::DatasetPairs => "method",
            Pairing::MethodPairs => "dataset",
        };
        (r.extra(key).unwrap_or("").to_string(), r.extra("scale").unwrap_or("").to_string())
    };
    let mut rows = Vec::new();
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            if group(a) != group(b) {
                continue;
            }
            if !a.same_window(b) {
                return Err(CliError::Usage(format!(
                    "reports `{}` and `{}` cover different test windows",
                    a.label, b.label
                )));
            }
            let ir = improvement_rate(a, b)?;
            rows.push(IrRow {
                pair: format!("{} -> {}", a.label, b.label),
                ir_mape: ir.mape,
                ir_rmse: ir.rmse,
                ir_da: ir.da,
            });
        }
    }
    if rows.is_empty() {
        return Err(CliError::Usage("no comparable report pairs".into()));
    }
    Ok(rows)
}

pub fn ir_csv(rows: &[IrRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::csv("<ir table>", e);
    w.write_record(["pair", "ir_mape_pct", "ir_rmse_pct", "ir_da_pct"]).map_err(fail)?;
    for r in rows {
        w.write_record([
            r.pair.clone(),
            r.ir_mape.to_string(),
            r.ir_rmse.to_string(),
            r.ir_da.to_string(),
        ])
        .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn cmd_compare(paths: &[PathBuf], pairing: Pairing, out: &Path) -> Result<Vec<IrRow>> {
    let reports = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(EvalReport::from_record(&text)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = compare_reports(&reports, pairing)?;
    write_atomic(out, ir_csv(&rows)?.as_bytes())?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hybridcast::Month;

    fn report(label: &str, mape_shift: f64, dataset: &str) -> EvalReport {
        let start: Month = "2018-01".parse().unwrap();
        let dates: Vec<Month> = (0..4).map(|i| start.plus(i)).collect();
        let y = [100.0, 102.0, 101.0, 104.0];
        let f: Vec<f64> = y.iter().map(|v| v + mape_shift).collect();
        EvalReport::from_points(label, &dates, &y, &f, "")
            .unwrap()
            .with_extra("method", "kelm")
            .with_extra("dataset", dataset)
            .with_extra("scale", "raw")
    }

    #[test]
    fn identical_reports_give_zero_row() {
        let a = report("a", 1.0, "H");
        let rows = compare_reports(&[a.clone(), a], Pairing::DatasetPairs).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].ir_mape, rows[0].ir_rmse, rows[0].ir_da), (0.0, 0.0, 0.0));
    }

    #[test]
    fn sign_flips_with_order() {
        let a = report("a", 1.0, "H");
        let b = report("b", 3.0, "E");
        let ab = compare_reports(&[a.clone(), b.clone()], Pairing::DatasetPairs).unwrap();
        let ba = compare_reports(&[b, a], Pairing::DatasetPairs).unwrap();
        assert!(ab[0].ir_mape > 0.0);
        assert_eq!(ab[0].ir_mape.signum(), -ba[0].ir_mape.signum());
        assert_eq!(ab[0].pair, "a -> b");
    }

    #[test]
    fn rejections() {
        let a = report("a", 1.0, "H");
        assert!(compare_reports(std::slice::from_ref(&a), Pairing::DatasetPairs).is_err());
        let mut shifted = report("b", 2.0, "E");
        shifted.points[0].date = "2017-12".parse().unwrap();
        assert!(compare_reports(&[a.clone(), shifted], Pairing::DatasetPairs).is_err());
        // Different datasets never pair under method pairing.
        let e = report("e", 2.0, "E");
        assert!(compare_reports(&[a, e], Pairing::MethodPairs).is_err());
    }

    #[test]
    fn ir_csv_layout() {
        let rows = vec![IrRow {
            pair: "x -> y".into(),
            ir_mape: 32.5,
            ir_rmse: -1.0,
            ir_da: 25.0,
        }];
        assert_eq!(
            ir_csv(&rows).unwrap(),
            "pair,ir_mape_pct,ir_rmse_pct,ir_da_pct\nx -> y,32.5,-1,25\n"
        );
    }
}
