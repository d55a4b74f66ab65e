//! Monthly series and panels, CSV ingestion, transforms and descriptive
//! statistics.
//!
//! Series are gap-free at monthly frequency, so a series is stored as a
//! start month plus a value vector; dates are derived on demand. Missing
//! cells are rejected on load rather than imputed.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::date::YearMonth;
use crate::error::{Error, Result};
use crate::stats::{self, fmt_sig};

/// Significant digits used by every CSV writer in the crate.
pub const CSV_SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    id: String,
    start: YearMonth,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, start: YearMonth, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if values.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(id));
        }
        Ok(Self { id, start, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    /// Last month covered.
    pub fn end(&self) -> YearMonth {
        self.start.add_months(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dates(&self) -> impl Iterator<Item = YearMonth> + '_ {
        (0..self.values.len()).map(|k| self.start.add_months(k as i64))
    }

    pub fn date_at(&self, k: usize) -> YearMonth {
        self.start.add_months(k as i64)
    }

    /// Value observed at `date`, if covered.
    pub fn at(&self, date: YearMonth) -> Option<f64> {
        let k = self.start.months_until(date);
        (k >= 0)
            .then(|| self.values.get(k as usize).copied())
            .flatten()
    }

    /// Re-date the series `k` months later, so the value stored for month `t`
    /// becomes the value for `t + k` (a lag of `k` when `k > 0`).
    pub fn shifted(&self, k: i64) -> Self {
        Self {
            id: self.id.clone(),
            start: self.start.add_months(k),
            values: self.values.clone(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Restrict to `[from, to]` (inclusive). Fails if the window is empty.
    pub fn window(&self, from: YearMonth, to: YearMonth) -> Result<Self> {
        let from = from.max(self.start);
        let to = to.min(self.end());
        if from > to {
            return Err(Error::AlignmentEmpty);
        }
        let a = self.start.months_until(from) as usize;
        let b = self.start.months_until(to) as usize;
        Self::new(self.id.clone(), from, self.values[a..=b].to_vec())
    }
}

/// Columns sharing one monthly date axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    start: YearMonth,
    len: usize,
    ids: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Panel {
    /// A panel with a date axis and no columns, used as an empty control set.
    pub fn empty(start: YearMonth, len: usize) -> Self {
        Self {
            start,
            len,
            ids: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn new(start: YearMonth, ids: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} ids for {} columns",
                ids.len(),
                columns.len()
            )));
        }
        let len = columns.first().map_or(0, Vec::len);
        let mut panel = Self::empty(start, len);
        for (id, col) in ids.into_iter().zip(columns) {
            panel.push(TimeSeries::new(id, start, col)?)?;
        }
        Ok(panel)
    }

    /// Build from series that already share a date axis.
    pub fn from_series(series: Vec<TimeSeries>) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::InvalidArgument("panel needs at least one series".into()))?;
        let mut panel = Self::empty(first.start(), first.len());
        for s in series {
            panel.push(s)?;
        }
        Ok(panel)
    }

    /// Intersect the date ranges of `series` and build a panel over the overlap.
    pub fn aligned(series: &[TimeSeries]) -> Result<Self> {
        let from = series
            .iter()
            .map(TimeSeries::start)
            .max()
            .ok_or(Error::AlignmentEmpty)?;
        let to = series
            .iter()
            .map(TimeSeries::end)
            .min()
            .ok_or(Error::AlignmentEmpty)?;
        if from > to {
            return Err(Error::AlignmentEmpty);
        }
        let cut = series
            .iter()
            .map(|s| s.window(from, to))
            .collect::<Result<Vec<_>>>()?;
        Self::from_series(cut)
    }

    pub fn push(&mut self, s: TimeSeries) -> Result<()> {
        if self.ids.is_empty() && self.columns.is_empty() && self.len == 0 {
            self.start = s.start();
            self.len = s.len();
        }
        if s.start() != self.start || s.len() != self.len {
            return Err(Error::DateMisalignment(format!(
                "series '{}' spans {}..{}, panel spans {}..{}",
                s.id(),
                s.start(),
                s.end(),
                self.start,
                self.end()
            )));
        }
        if self.ids.iter().any(|i| i == s.id()) {
            return Err(Error::DuplicateColumn(s.id().to_string()));
        }
        self.ids.push(s.id.clone());
        self.columns.push(s.values);
        Ok(())
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    pub fn end(&self) -> YearMonth {
        self.start.add_months(self.len as i64 - 1)
    }

    /// Number of rows (months).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column_values(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn dates(&self) -> impl Iterator<Item = YearMonth> + '_ {
        (0..self.len).map(|k| self.start.add_months(k as i64))
    }

    pub fn series(&self, j: usize) -> TimeSeries {
        TimeSeries {
            id: self.ids[j].clone(),
            start: self.start,
            values: self.columns[j].clone(),
        }
    }

    pub fn column(&self, id: &str) -> Option<TimeSeries> {
        self.ids
            .iter()
            .position(|i| i == id)
            .map(|j| self.series(j))
    }

    pub fn to_series(&self) -> Vec<TimeSeries> {
        (0..self.width()).map(|j| self.series(j)).collect()
    }

    /// Columns in the requested order.
    pub fn select(&self, ids: &[impl AsRef<str>]) -> Result<Self> {
        let mut out = Self::empty(self.start, self.len);
        for id in ids {
            let s = self
                .column(id.as_ref())
                .ok_or_else(|| Error::MissingColumn(id.as_ref().to_string()))?;
            out.push(s)?;
        }
        Ok(out)
    }

    /// Rows for months in `[from, to]`.
    pub fn window(&self, from: YearMonth, to: YearMonth) -> Result<Self> {
        let from = from.max(self.start);
        let to = to.min(self.end());
        if from > to {
            return Err(Error::AlignmentEmpty);
        }
        let a = self.start.months_until(from) as usize;
        let b = self.start.months_until(to) as usize;
        Ok(Self {
            start: from,
            len: b - a + 1,
            ids: self.ids.clone(),
            columns: self.columns.iter().map(|c| c[a..=b].to_vec()).collect(),
        })
    }

    /// Multiply every value by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for col in &mut out.columns {
            for v in col.iter_mut() {
                *v *= c;
            }
        }
        out
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.trim().to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null" | "." | "n/a"
    )
}

/// Load a monthly panel from a CSV file with a header row.
///
/// When `value_columns` is empty every non-date column is loaded. Rows are
/// sorted by date; duplicated months, gaps and empty cells are errors.
pub fn load_panel(path: &Path, date_column: &str, value_columns: &[String]) -> Result<Panel> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let date_idx = headers
        .iter()
        .position(|h| h == date_column)
        .ok_or_else(|| Error::MissingColumn(date_column.to_string()))?;
    let wanted: Vec<String> = if value_columns.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_idx)
            .map(|(_, h)| h.clone())
            .collect()
    } else {
        value_columns.to_vec()
    };
    let mut seen = HashSet::new();
    let mut col_idx = Vec::with_capacity(wanted.len());
    for w in &wanted {
        if !seen.insert(w.as_str()) {
            return Err(Error::DuplicateColumn(w.clone()));
        }
        let j = headers
            .iter()
            .position(|h| h == w)
            .ok_or_else(|| Error::MissingColumn(w.clone()))?;
        col_idx.push(j);
    }

    let mut rows: Vec<(YearMonth, Vec<f64>)> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec?;
        let cell = rec.get(date_idx).unwrap_or("");
        let date: YearMonth = cell
            .parse()
            .map_err(|e: crate::date::ParseYearMonthError| Error::Parse {
                row,
                column: date_column.to_string(),
                message: e.to_string(),
            })?;
        let mut vals = Vec::with_capacity(col_idx.len());
        for (name, &j) in wanted.iter().zip(&col_idx) {
            let cell = rec.get(j).unwrap_or("");
            if is_missing(cell) {
                return Err(Error::MissingValue {
                    row,
                    column: name.clone(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: name.clone(),
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: name.clone(),
                    message: format!("'{cell}' is not finite"),
                });
            }
            vals.push(v);
        }
        rows.push((date, vals));
    }
    if rows.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    rows.sort_by_key(|(d, _)| *d);
    for w in rows.windows(2) {
        let (a, b) = (w[0].0, w[1].0);
        if a == b {
            return Err(Error::UnorderedDates(b));
        }
        if b != a.succ() {
            return Err(Error::GapInDates {
                expected: a.succ(),
                found: b,
            });
        }
    }
    let start = rows[0].0;
    let mut columns = vec![Vec::with_capacity(rows.len()); wanted.len()];
    for (_, vals) in rows {
        for (c, v) in columns.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    Panel::new(start, wanted, columns)
}

/// Write a panel as CSV with a `date` column and 12 significant digits.
pub fn write_panel(path: &Path, panel: &Panel) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(panel.ids().iter().cloned());
    w.write_record(&header)?;
    for (k, d) in panel.dates().enumerate() {
        let mut rec = vec![d.to_string()];
        rec.extend(
            panel
                .columns()
                .iter()
                .map(|c| fmt_sig(c[k], CSV_SIG_DIGITS)),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series(path: &Path, s: &TimeSeries) -> Result<()> {
    write_panel(path, &Panel::from_series(vec![s.clone()])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Log,
    Diff,
    PctChange,
    Standardize,
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "log" => Ok(Self::Log),
            "diff" => Ok(Self::Diff),
            "pct_change" | "pct" => Ok(Self::PctChange),
            "standardize" | "zscore" => Ok(Self::Standardize),
            other => Err(Error::InvalidArgument(format!(
                "unknown transform '{other}'"
            ))),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Log => "log",
            Self::Diff => "diff",
            Self::PctChange => "pct_change",
            Self::Standardize => "standardize",
        };
        f.write_str(s)
    }
}

pub fn transform(s: &TimeSeries, kind: TransformKind) -> Result<TimeSeries> {
    let v = s.values();
    match kind {
        TransformKind::Log => {
            if v.iter().any(|&x| x <= 0.0) {
                return Err(Error::NonPositiveValue(s.id().to_string()));
            }
            TimeSeries::new(s.id(), s.start(), v.iter().map(|x| x.ln()).collect())
        }
        TransformKind::Diff | TransformKind::PctChange => {
            if v.len() < 2 {
                return Err(Error::TooShort {
                    needed: 2,
                    got: v.len(),
                });
            }
            let out: Vec<f64> = v
                .windows(2)
                .map(|w| match kind {
                    TransformKind::Diff => w[1] - w[0],
                    _ => (w[1] - w[0]) / w[0],
                })
                .collect();
            TimeSeries::new(s.id(), s.start().succ(), out)
        }
        TransformKind::Standardize => {
            if v.len() < 2 {
                return Err(Error::TooShort {
                    needed: 2,
                    got: v.len(),
                });
            }
            let m = stats::mean(v);
            let sd = stats::std_dev(v);
            if !(sd > 0.0) || sd < 1e-300 {
                return Err(Error::ZeroVariance(s.id().to_string()));
            }
            TimeSeries::new(s.id(), s.start(), v.iter().map(|x| (x - m) / sd).collect())
        }
    }
}

/// A test statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestStat {
    pub statistic: f64,
    pub p_value: f64,
}

/// Descriptive statistics in the layout of a summary-statistics table.
///
/// Skewness and excess kurtosis are the third and fourth central moments
/// scaled by the n−1 sample standard deviation. They are NaN for a constant
/// series. The Jarque-Bera and lag-1 Ljung-Box tests need n ≥ 8.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub jarque_bera: Option<TestStat>,
    pub ljung_box_q1: Option<TestStat>,
}

pub fn describe(s: &TimeSeries) -> Result<SummaryStats> {
    let x = s.values();
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = stats::mean(x);
    let sd = stats::std_dev(x);
    let (mut m3, mut m4) = (0.0, 0.0);
    for v in x {
        let d = v - mean;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m3 /= nf;
    m4 /= nf;
    let (skewness, excess_kurtosis) = if sd > 0.0 {
        (m3 / sd.powi(3), m4 / sd.powi(4) - 3.0)
    } else {
        (f64::NAN, f64::NAN)
    };
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (jarque_bera, ljung_box_q1) = if n >= 8 && sd > 0.0 {
        let jb = nf / 6.0 * (skewness * skewness + excess_kurtosis * excess_kurtosis / 4.0);
        let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
        let num: f64 = x.windows(2).map(|w| (w[1] - mean) * (w[0] - mean)).sum();
        let rho1 = num / denom;
        let q = nf * (nf + 2.0) * rho1 * rho1 / (nf - 1.0);
        (
            Some(TestStat {
                statistic: jb,
                p_value: stats::chi2_sf(jb, 2.0),
            }),
            Some(TestStat {
                statistic: q,
                p_value: stats::chi2_sf(q, 1.0),
            }),
        )
    } else {
        (None, None)
    };

    Ok(SummaryStats {
        n,
        mean,
        std_dev: sd,
        min,
        max,
        skewness,
        excess_kurtosis,
        jarque_bera,
        ljung_box_q1,
    })
}

/// Significance marker for correlation tables: `***` p<.001, `**` p<.01, `*` p<.05.
pub fn corr_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    pub ids: Vec<String>,
    pub rho: Vec<Vec<f64>>,
    pub pvals: Vec<Vec<f64>>,
    pub stars: Vec<Vec<&'static str>>,
    pub n: usize,
}

impl CorrMatrix {
    /// `r***`-style cell text.
    pub fn cell(&self, i: usize, j: usize) -> String {
        format!("{:.2}{}", self.rho[i][j], self.stars[i][j])
    }
}

/// Pearson correlations with two-sided t-test p-values.
pub fn corr_matrix(p: &Panel) -> Result<CorrMatrix> {
    let n = p.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    let k = p.width();
    let mut rho = vec![vec![1.0; k]; k];
    let mut pvals = vec![vec![0.0; k]; k];
    for (j, col) in p.columns().iter().enumerate() {
        if stats::variance(col) <= 0.0 {
            return Err(Error::ZeroVariance(p.ids()[j].clone()));
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let r = stats::pearson(p.column_values(i), p.column_values(j))
                .ok_or_else(|| Error::ZeroVariance(p.ids()[i].clone()))?;
            let pv = if r.abs() >= 1.0 {
                0.0
            } else {
                let t = r * ((n as f64 - 2.0) / (1.0 - r * r)).sqrt();
                stats::t_two_sided(t, n as f64 - 2.0)
            };
            rho[i][j] = r;
            rho[j][i] = r;
            pvals[i][j] = pv;
            pvals[j][i] = pv;
        }
    }
    let stars = pvals
        .iter()
        .map(|row| row.iter().map(|&pv| corr_stars(pv)).collect())
        .collect();
    Ok(CorrMatrix {
        ids: p.ids().to_vec(),
        rho,
        pvals,
        stars,
        n,
    })
}
