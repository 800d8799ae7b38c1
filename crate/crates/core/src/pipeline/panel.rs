//! Monthly feature panels: timestamps, tagged columns, fusion and splitting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A calendar month, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    year: i32,
    month: u8,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::invalid(format!("month {month} outside 1..=12")));
        }
        Ok(Month {
            year,
            month: month as u8,
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month as u32
    }

    /// Months since year 0.
    pub fn ordinal(&self) -> i64 {
        self.year as i64 * 12 + self.month as i64 - 1
    }

    pub fn from_ordinal(ord: i64) -> Self {
        Month {
            year: ord.div_euclid(12) as i32,
            month: (ord.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn plus(&self, months: i64) -> Self {
        Month::from_ordinal(self.ordinal() + months)
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Month {
    type Err = Error;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("malformed month `{s}`, expected YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        Month::new(year, month).map_err(|_| bad())
    }
}

/// Where a column came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Economic,
    Gsvi,
    Target,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Economic => "economic",
            Provenance::Gsvi => "gsvi",
            Provenance::Target => "target",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "economic" => Ok(Provenance::Economic),
            "gsvi" => Ok(Provenance::Gsvi),
            "target" => Ok(Provenance::Target),
            other => Err(Error::invalid(format!(
                "unknown provenance tag `{other}` (expected economic, gsvi or target)"
            ))),
        }
    }
}

/// Which indicator families feed a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetMode {
    /// Economic indicators only.
    E,
    /// Search-volume indicators only.
    G,
    /// Both.
    H,
}

impl DatasetMode {
    pub fn includes(&self, tag: Provenance) -> bool {
        matches!(
            (self, tag),
            (DatasetMode::E, Provenance::Economic)
                | (DatasetMode::G, Provenance::Gsvi)
                | (DatasetMode::H, Provenance::Economic | Provenance::Gsvi)
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetMode::E => "E",
            DatasetMode::G => "G",
            DatasetMode::H => "H",
        }
    }
}

impl fmt::Display for DatasetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "E" | "e" => Ok(DatasetMode::E),
            "G" | "g" => Ok(DatasetMode::G),
            "H" | "h" => Ok(DatasetMode::H),
            other => Err(Error::invalid(format!("unknown dataset mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub tag: Provenance,
    /// `NaN` marks a missing observation; fused panels contain none.
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, tag: Provenance, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            tag,
            values,
        }
    }
}

/// Date-aligned columns. A panel used for modelling carries exactly one
/// [`Provenance::Target`] column; fragments being fused may carry none.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePanel {
    dates: Vec<Month>,
    columns: Vec<Column>,
}

impl FeaturePanel {
    pub fn new(dates: Vec<Month>, columns: Vec<Column>) -> Result<Self> {
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "dates not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        for c in &columns {
            if c.values.len() != dates.len() {
                return Err(Error::DimensionMismatch {
                    context: "column length vs dates",
                    expected: dates.len(),
                    found: c.values.len(),
                });
            }
        }
        let dups = duplicates(columns.iter().map(|c| c.name.as_str()));
        if !dups.is_empty() {
            return Err(Error::DuplicateColumns(dups));
        }
        if columns.iter().filter(|c| c.tag == Provenance::Target).count() > 1 {
            return Err(Error::invalid("more than one target column"));
        }
        Ok(FeaturePanel { dates, columns })
    }

    pub fn dates(&self) -> &[Month] {
        &self.dates
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn target(&self) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.tag == Provenance::Target)
            .ok_or_else(|| Error::MissingColumn("<target>".into()))
    }

    /// Non-target columns, in panel order.
    pub fn indicators(&self) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(|c| c.tag != Provenance::Target)
    }

    pub fn row_of(&self, date: Month) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    pub fn is_complete(&self) -> bool {
        self.columns.iter().all(|c| c.values.iter().all(|v| v.is_finite()))
    }

    /// Rows `range` of every column.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> FeaturePanel {
        FeaturePanel {
            dates: self.dates[range.clone()].to_vec(),
            columns: self
                .columns
                .iter()
                .map(|c| Column::new(c.name.clone(), c.tag, c.values[range.clone()].to_vec()))
                .collect(),
        }
    }

    /// Target plus the indicator columns admitted by `mode`.
    pub fn select_mode(&self, mode: DatasetMode) -> FeaturePanel {
        self.retain(|c| c.tag == Provenance::Target || mode.includes(c.tag))
    }

    /// Target plus the named indicators (others dropped).
    pub fn select_indicators(&self, keep: &[String]) -> FeaturePanel {
        self.retain(|c| c.tag == Provenance::Target || keep.contains(&c.name))
    }

    fn retain(&self, f: impl Fn(&Column) -> bool) -> FeaturePanel {
        FeaturePanel {
            dates: self.dates.clone(),
            columns: self.columns.iter().filter(|c| f(c)).cloned().collect(),
        }
    }
}

fn duplicates<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            dups.insert(n.to_string());
        }
    }
    dups.into_iter().collect()
}

/// Counts reported by [`fuse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuseSummary {
    /// Dates shared by every fragment.
    pub common_dates: usize,
    /// Shared dates dropped for a missing value.
    pub dropped_incomplete: usize,
}

/// Inner-joins fragments on date and drops rows with any missing value.
pub fn fuse(fragments: &[FeaturePanel]) -> Result<(FeaturePanel, FuseSummary)> {
    if fragments.is_empty() {
        return Err(Error::invalid("nothing to fuse"));
    }
    let dups = duplicates(
        fragments
            .iter()
            .flat_map(|f| f.columns.iter().map(|c| c.name.as_str())),
    );
    if !dups.is_empty() {
        return Err(Error::DuplicateColumns(dups));
    }

    let mut shared: BTreeMap<Month, usize> = BTreeMap::new();
    for f in fragments {
        for d in &f.dates {
            *shared.entry(*d).or_default() += 1;
        }
    }
    let common: Vec<Month> = shared
        .into_iter()
        .filter(|&(_, n)| n == fragments.len())
        .map(|(d, _)| d)
        .collect();
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let lookup: Vec<Vec<usize>> = fragments
        .iter()
        .map(|f| common.iter().map(|d| f.row_of(*d).expect("shared date")).collect())
        .collect();
    let complete: Vec<usize> = (0..common.len())
        .filter(|&r| {
            fragments.iter().zip(&lookup).all(|(f, rows)| {
                f.columns.iter().all(|c| c.values[rows[r]].is_finite())
            })
        })
        .collect();
    if complete.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let dates = complete.iter().map(|&r| common[r]).collect();
    let mut columns = Vec::new();
    for (f, rows) in fragments.iter().zip(&lookup) {
        for c in &f.columns {
            let values = complete.iter().map(|&r| c.values[rows[r]]).collect();
            columns.push(Column::new(c.name.clone(), c.tag, values));
        }
    }
    let summary = FuseSummary {
        common_dates: common.len(),
        dropped_incomplete: common.len() - complete.len(),
    };
    Ok((FeaturePanel::new(dates, columns)?, summary))
}

/// Rows dated at or before `split` train; later rows test.
pub fn train_test_split(panel: &FeaturePanel, split: Month) -> Result<(FeaturePanel, FeaturePanel)> {
    let cut = panel.dates.partition_point(|d| *d <= split);
    if cut == 0 {
        return Err(Error::EmptySplit("train"));
    }
    if cut == panel.n_rows() {
        return Err(Error::EmptySplit("test"));
    }
    Ok((panel.slice_rows(0..cut), panel.slice_rows(cut..panel.n_rows())))
}
