//! Panel CSV, provenance sidecar, and atomic file output.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use hybridcast::pipeline::panel::Column;
use hybridcast::{FeaturePanel, Month, Provenance};

use crate::error::{CliError, Result};

/// Dates plus named raw columns; empty and `NA` cells become `NaN`.
pub struct RawTable {
    pub dates: Vec<Month>,
    pub columns: Vec<(String, Vec<f64>)>,
}

pub fn read_table(path: &Path) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| CliError::csv(path, e))?.clone();
    if headers.get(0) != Some("date") {
        return Err(CliError::BadLine {
            path: path.into(),
            line: 1,
            message: "first header cell must be `date`".into(),
        });
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let date = rec.get(0).unwrap_or("");
        dates.push(date.parse::<Month>().map_err(|_| CliError::BadLine {
            path: path.into(),
            line,
            message: format!("malformed date `{date}`, expected YYYY-MM"),
        })?);
        for (j, name) in names.iter().enumerate() {
            let cell = rec.get(j + 1).unwrap_or("");
            let v = match cell {
                "" | "NA" => f64::NAN,
                s => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(CliError::BadCell {
                            path: path.into(),
                            line,
                            column: name.clone(),
                            value: s.to_string(),
                        })
                    }
                },
            };
            values[j].push(v);
        }
    }
    Ok(RawTable {
        dates,
        columns: names.into_iter().zip(values).collect(),
    })
}

/// Reads a CSV whose every value column carries `tag`.
pub fn read_fragment(path: &Path, tag: Provenance) -> Result<FeaturePanel> {
    let t = read_table(path)?;
    let columns = t
        .columns
        .into_iter()
        .map(|(n, v)| Column::new(n, tag, v))
        .collect();
    Ok(FeaturePanel::new(t.dates, columns)?)
}

/// `<dir>/<stem>.tags.csv` next to a panel file.
pub fn tags_path_for(panel: &Path) -> PathBuf {
    let stem = panel
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "panel".into());
    panel.with_file_name(format!("{stem}.tags.csv"))
}

pub fn read_tags(path: &Path) -> Result<HashMap<String, Provenance>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| CliError::csv(path, e))?;
    if headers.iter().collect::<Vec<_>>() != ["name", "tag"] {
        return Err(CliError::BadLine {
            path: path.into(),
            line: 1,
            message: "header must be `name,tag`".into(),
        });
    }
    let mut tags = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let tag = rec[1].parse::<Provenance>().map_err(|e| CliError::BadLine {
            path: path.into(),
            line,
            message: e.to_string(),
        })?;
        tags.insert(rec[0].to_string(), tag);
    }
    Ok(tags)
}

pub fn read_panel(path: &Path, tags: &Path) -> Result<FeaturePanel> {
    let t = read_table(path)?;
    let tags = read_tags(tags)?;
    let columns = t
        .columns
        .into_iter()
        .map(|(n, v)| {
            let tag = *tags
                .get(&n)
                .ok_or_else(|| CliError::Config(format!("column `{n}` has no provenance tag")))?;
            Ok(Column::new(n, tag, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeaturePanel::new(t.dates, columns)?)
}

pub fn panel_csv(panel: &FeaturePanel) -> String {
    let mut s = String::from("date");
    for c in panel.columns() {
        s.push(',');
        s.push_str(&c.name);
    }
    s.push('\n');
    for (i, d) in panel.dates().iter().enumerate() {
        let _ = write!(s, "{d}");
        for c in panel.columns() {
            let v = c.values[i];
            if v.is_nan() {
                s.push(',');
            } else {
                let _ = write!(s, ",{v}");
            }
        }
        s.push('\n');
    }
    s
}

pub fn tags_csv(panel: &FeaturePanel) -> String {
    let mut s = String::from("name,tag\n");
    for c in panel.columns() {
        let _ = writeln!(s, "{},{}", c.name, c.tag);
    }
    s
}

/// Writes `panel.csv` and its sidecar into `dir`.
pub fn write_panel(dir: &Path, panel: &FeaturePanel) -> Result<PathBuf> {
    let path = dir.join("panel.csv");
    write_atomic(&path, panel_csv(panel).as_bytes())?;
    write_atomic(&tags_path_for(&path), tags_csv(panel).as_bytes())?;
    Ok(path)
}

/// Writes to a temporary file in the target directory, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
