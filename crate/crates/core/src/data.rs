//! Price and risk-free-rate ingestion, and excess-return construction.
//!
//! Excess returns are in daily percentage points:
//! `y_j = 100 ln(x_j / x_{j−1}) − r*_j`, where `r*_j` is the annualized
//! money-market quote (percent per annum) divided by the day-count
//! denominator. The quote applied to return date `j` is the most recent one
//! at or before that date.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing column {column:?} (found {found:?})")]
    MissingColumn {
        path: String,
        column: String,
        found: Vec<String>,
    },
    #[error("{path}: malformed row {row}: {reason}")]
    MalformedRow { path: String, row: u64, reason: String },
    #[error("{path}: non-positive price {value} at row {row}")]
    NonPositivePrice { path: String, row: u64, value: f64 },
    #[error("{path}: dates not strictly increasing at row {row} ({date})")]
    NonMonotoneDates { path: String, row: u64, date: NaiveDate },
    #[error("series needs at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("no risk-free quote at or before {0}")]
    Alignment(NaiveDate),
    #[error("day-count convention {0} cannot convert an annualized rate")]
    UnsupportedConvention(DayCount),
    #[error("series lengths differ: {dates} dates, {values} values")]
    LengthMismatch { dates: usize, values: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
}

/// Day-count denominator used to turn an annualized percentage into a
/// per-day rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayCount {
    Act360,
    #[default]
    Act365,
    None,
}

impl DayCount {
    pub fn denominator(self) -> Option<f64> {
        match self {
            DayCount::Act360 => Some(360.0),
            DayCount::Act365 => Some(365.0),
            DayCount::None => None,
        }
    }
}

impl fmt::Display for DayCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DayCount::Act360 => "act360",
            DayCount::Act365 => "act365",
            DayCount::None => "none",
        })
    }
}

impl std::str::FromStr for DayCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "act360" | "act/360" => Ok(DayCount::Act360),
            "act365" | "act/365" => Ok(DayCount::Act365),
            "none" => Ok(DayCount::None),
            other => Err(format!("unknown day-count convention {other:?} (expected act360 or act365)")),
        }
    }
}

/// Which CSV columns hold the dates and the values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    #[serde(default = "default_date_column")]
    pub date_column: String,
    #[serde(default = "default_value_column")]
    pub value_column: String,
}

fn default_date_column() -> String {
    "date".to_string()
}

fn default_value_column() -> String {
    "value".to_string()
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            date_column: default_date_column(),
            value_column: default_value_column(),
        }
    }
}

impl ColumnMapping {
    pub fn new(date_column: impl Into<String>, value_column: impl Into<String>) -> Self {
        Self {
            date_column: date_column.into(),
            value_column: value_column.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    source: Option<String>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self, DataError> {
        check_lengths(&dates, &values)?;
        if values.len() < 2 {
            return Err(DataError::TooShort {
                needed: 2,
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(DataError::NonPositivePrice {
                    path: "<memory>".into(),
                    row: i as u64 + 1,
                    value: v,
                });
            }
        }
        check_increasing("<memory>", &dates, None)?;
        Ok(Self {
            dates,
            values,
            source: None,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskFreeSeries {
    dates: Vec<NaiveDate>,
    annualized_rates: Vec<f64>,
    day_count: DayCount,
    source: Option<String>,
}

impl RiskFreeSeries {
    pub fn new(dates: Vec<NaiveDate>, annualized_rates: Vec<f64>, day_count: DayCount) -> Result<Self, DataError> {
        check_lengths(&dates, &annualized_rates)?;
        if let Some(i) = annualized_rates.iter().position(|r| !r.is_finite()) {
            return Err(DataError::NonFinite(i));
        }
        check_increasing("<memory>", &dates, None)?;
        Ok(Self {
            dates,
            annualized_rates,
            day_count,
            source: None,
        })
    }

    /// Flat rate quoted on a single date.
    pub fn flat(date: NaiveDate, annualized_rate: f64, day_count: DayCount) -> Result<Self, DataError> {
        Self::new(vec![date], vec![annualized_rate], day_count)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn annualized_rates(&self) -> &[f64] {
        &self.annualized_rates
    }

    pub fn day_count(&self) -> DayCount {
        self.day_count
    }

    /// Most recent quote at or before `date`.
    pub fn rate_at(&self, date: NaiveDate) -> Option<f64> {
        let idx = self.dates.partition_point(|d| *d <= date);
        idx.checked_sub(1).map(|i| self.annualized_rates[i])
    }
}

/// How an [`ExcessReturnSeries`] was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionRecord {
    pub price_source: Option<String>,
    pub riskfree_source: Option<String>,
    pub day_count: DayCount,
    pub riskfree_alignment: String,
}

impl Default for ConstructionRecord {
    fn default() -> Self {
        Self {
            price_source: None,
            riskfree_source: None,
            day_count: DayCount::None,
            riskfree_alignment: "none".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    meta: ConstructionRecord,
}

impl ExcessReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>, meta: ConstructionRecord) -> Result<Self, DataError> {
        check_lengths(&dates, &values)?;
        if values.is_empty() {
            return Err(DataError::TooShort { needed: 1, got: 0 });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite(i));
        }
        check_increasing("<memory>", &dates, None)?;
        Ok(Self { dates, values, meta })
    }

    /// Values on a synthetic business-day calendar starting 2000-01-03.
    pub fn from_values(values: Vec<f64>) -> Result<Self, DataError> {
        let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"), values.len());
        Self::new(dates, values, ConstructionRecord::default())
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &ConstructionRecord {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with columns `date,excess_return`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(24 * self.len() + 32);
        out.push_str("date,excess_return\n");
        for (d, v) in self.dates.iter().zip(&self.values) {
            out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), v));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn check_lengths<T>(dates: &[NaiveDate], values: &[T]) -> Result<(), DataError> {
    if dates.len() != values.len() {
        return Err(DataError::LengthMismatch {
            dates: dates.len(),
            values: values.len(),
        });
    }
    Ok(())
}

fn check_increasing(path: &str, dates: &[NaiveDate], rows: Option<&[u64]>) -> Result<(), DataError> {
    for i in 1..dates.len() {
        if dates[i] <= dates[i - 1] {
            return Err(DataError::NonMonotoneDates {
                path: path.to_string(),
                row: rows.map_or(i as u64 + 1, |r| r[i]),
                date: dates[i],
            });
        }
    }
    Ok(())
}

struct RawSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    rows: Vec<u64>,
}

fn read_columns(path: &Path, schema: &ColumnMapping) -> Result<RawSeries, DataError> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_columns(&path.display().to_string(), &text, schema)
}

fn parse_columns(label: &str, text: &str, schema: &ColumnMapping) -> Result<RawSeries, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let malformed = |row: u64, reason: String| DataError::MalformedRow {
        path: label.to_string(),
        row,
        reason,
    };
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| DataError::MissingColumn {
            path: label.to_string(),
            column: name.to_string(),
            found: headers.iter().map(str::to_string).collect(),
        })
    };
    let date_idx = find(&schema.date_column)?;
    let value_idx = find(&schema.value_column)?;

    let mut out = RawSeries {
        dates: Vec::new(),
        values: Vec::new(),
        rows: Vec::new(),
    };
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            malformed(row, e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line());
        let date_text = record.get(date_idx).unwrap_or("");
        let value_text = record.get(value_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
            .map_err(|e| malformed(row, format!("date {date_text:?}: {e}")))?;
        let value: f64 = value_text
            .parse()
            .map_err(|e| malformed(row, format!("value {value_text:?}: {e}")))?;
        if !value.is_finite() {
            return Err(malformed(row, format!("value {value_text:?} is not finite")));
        }
        out.dates.push(date);
        out.values.push(value);
        out.rows.push(row);
    }
    check_increasing(label, &out.dates, Some(&out.rows))?;
    Ok(out)
}

/// Loads a price (or index level) series; every value must be positive.
pub fn load_prices(path: &Path, schema: &ColumnMapping) -> Result<PriceSeries, DataError> {
    let label = path.display().to_string();
    let raw = read_columns(path, schema)?;
    if let Some(i) = raw.values.iter().position(|v| *v <= 0.0) {
        return Err(DataError::NonPositivePrice {
            path: label,
            row: raw.rows[i],
            value: raw.values[i],
        });
    }
    if raw.values.len() < 2 {
        return Err(DataError::TooShort {
            needed: 2,
            got: raw.values.len(),
        });
    }
    Ok(PriceSeries {
        dates: raw.dates,
        values: raw.values,
        source: Some(label),
    })
}

/// Loads annualized risk-free quotes in percent per annum.
pub fn load_riskfree(path: &Path, schema: &ColumnMapping, day_count: DayCount) -> Result<RiskFreeSeries, DataError> {
    let raw = read_columns(path, schema)?;
    Ok(RiskFreeSeries {
        dates: raw.dates,
        annualized_rates: raw.values,
        day_count,
        source: Some(path.display().to_string()),
    })
}

/// Loads an excess-return CSV such as the one written by
/// [`ExcessReturnSeries::write_csv`].
pub fn load_excess_returns(path: &Path, schema: &ColumnMapping) -> Result<ExcessReturnSeries, DataError> {
    let raw = read_columns(path, schema)?;
    let meta = ConstructionRecord {
        price_source: Some(path.display().to_string()),
        ..ConstructionRecord::default()
    };
    ExcessReturnSeries::new(raw.dates, raw.values, meta)
}

/// `y_j = 100 ln(x_j / x_{j−1}) − r*_j` for `j = 1..n−1`.
///
/// With `riskfree = None` the per-day rate is zero and `convention` is
/// ignored.
pub fn compute_excess_returns(
    prices: &PriceSeries,
    riskfree: Option<&RiskFreeSeries>,
    convention: DayCount,
) -> Result<ExcessReturnSeries, DataError> {
    if prices.len() < 2 {
        return Err(DataError::TooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    let denom = match riskfree {
        Some(_) => Some(
            convention
                .denominator()
                .ok_or(DataError::UnsupportedConvention(convention))?,
        ),
        None => None,
    };
    let mut dates = Vec::with_capacity(prices.len() - 1);
    let mut values = Vec::with_capacity(prices.len() - 1);
    for j in 1..prices.len() {
        let date = prices.dates[j];
        let r = 100.0 * (prices.values[j] / prices.values[j - 1]).ln();
        let daily = match (riskfree, denom) {
            (Some(rf), Some(denom)) => rf.rate_at(date).ok_or(DataError::Alignment(date))? / denom,
            _ => 0.0,
        };
        dates.push(date);
        values.push(r - daily);
    }
    let meta = ConstructionRecord {
        price_source: prices.source.clone(),
        riskfree_source: riskfree.and_then(|r| r.source.clone()),
        day_count: if riskfree.is_some() { convention } else { DayCount::None },
        riskfree_alignment: if riskfree.is_some() {
            "last quote at or before the return date".into()
        } else {
            "none".into()
        },
    };
    ExcessReturnSeries::new(dates, values, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn write_tmp(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_two_row_price_file() {
        let f = write_tmp("date,close\n2020-01-02,100.0\n2020-01-03,101.0\n");
        let p = load_prices(f.path(), &ColumnMapping::new("date", "close")).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.values(), &[100.0, 101.0]);
    }

    #[test]
    fn zero_price_names_row() {
        let f = write_tmp("date,close\n2020-01-02,100.0\n2020-01-03,0.0\n");
        let e = load_prices(f.path(), &ColumnMapping::new("date", "close")).unwrap_err();
        match e {
            DataError::NonPositivePrice { row, value, .. } => {
                assert_eq!(row, 3);
                assert_eq!(value, 0.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn out_of_order_dates_rejected() {
        let f = write_tmp("date,close\n2020-01-03,100.0\n2020-01-02,101.0\n");
        let e = load_prices(f.path(), &ColumnMapping::new("date", "close")).unwrap_err();
        assert!(matches!(e, DataError::NonMonotoneDates { row: 3, .. }), "{e}");
    }

    #[test]
    fn malformed_row_reported() {
        let f = write_tmp("date,close\n2020-01-02,100.0\n2020-01-03,abc\n");
        let e = load_prices(f.path(), &ColumnMapping::new("date", "close")).unwrap_err();
        assert!(matches!(e, DataError::MalformedRow { row: 3, .. }), "{e}");
        let f = write_tmp("date,close\n02/01/2020,100.0\n");
        let e = load_prices(f.path(), &ColumnMapping::new("date", "close")).unwrap_err();
        assert!(matches!(e, DataError::MalformedRow { row: 2, .. }), "{e}");
    }

    #[test]
    fn missing_file_and_column() {
        let e = load_prices(Path::new("/nonexistent/prices.csv"), &ColumnMapping::default()).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/prices.csv"));
        let f = write_tmp("day,close\n2020-01-02,100.0\n");
        let e = load_prices(f.path(), &ColumnMapping::new("date", "close")).unwrap_err();
        assert!(matches!(e, DataError::MissingColumn { .. }));
    }

    #[test]
    fn flat_prices_give_zero() {
        let p = PriceSeries::new(vec![d(2020, 1, 2), d(2020, 1, 3)], vec![100.0, 100.0]).unwrap();
        let y = compute_excess_returns(&p, None, DayCount::Act365).unwrap();
        assert_eq!(y.values(), &[0.0]);
    }

    #[test]
    fn two_percent_log_return() {
        // 100 ln(1.02) = 1.98026272961797304... (mpmath, 30 digits)
        let p = PriceSeries::new(vec![d(2020, 1, 2), d(2020, 1, 3)], vec![100.0, 102.0]).unwrap();
        let y = compute_excess_returns(&p, None, DayCount::Act365).unwrap();
        assert!((y.values()[0] - 1.980_262_729_617_973).abs() < 1e-13);
    }

    #[test]
    fn flat_rate_act365() {
        let p = PriceSeries::new(vec![d(2020, 1, 2), d(2020, 1, 3)], vec![100.0, 100.0]).unwrap();
        let rf = RiskFreeSeries::flat(d(2020, 1, 1), 3.65, DayCount::Act365).unwrap();
        let y = compute_excess_returns(&p, Some(&rf), DayCount::Act365).unwrap();
        assert!((y.values()[0] + 0.01).abs() < 1e-15);
        let y = compute_excess_returns(&p, Some(&rf), DayCount::Act360).unwrap();
        assert!((y.values()[0] + 3.65 / 360.0).abs() < 1e-15);
    }

    #[test]
    fn riskfree_alignment_is_last_quote() {
        let p = PriceSeries::new(
            vec![d(2020, 1, 2), d(2020, 1, 3), d(2020, 1, 6), d(2020, 1, 7)],
            vec![100.0; 4],
        )
        .unwrap();
        // quotes on the 3rd and 7th only; the 6th reuses the 3rd
        let rf = RiskFreeSeries::new(vec![d(2020, 1, 3), d(2020, 1, 7)], vec![3.6, 7.2], DayCount::Act360).unwrap();
        let y = compute_excess_returns(&p, Some(&rf), DayCount::Act360).unwrap();
        let want = [-3.6 / 360.0, -3.6 / 360.0, -7.2 / 360.0];
        for (got, want) in y.values().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn alignment_failure_and_unsupported_convention() {
        let p = PriceSeries::new(vec![d(2020, 1, 2), d(2020, 1, 3)], vec![100.0, 101.0]).unwrap();
        let late = RiskFreeSeries::flat(d(2020, 2, 1), 1.0, DayCount::Act365).unwrap();
        assert!(matches!(
            compute_excess_returns(&p, Some(&late), DayCount::Act365),
            Err(DataError::Alignment(_))
        ));
        let rf = RiskFreeSeries::flat(d(2020, 1, 1), 1.0, DayCount::Act365).unwrap();
        assert!(matches!(
            compute_excess_returns(&p, Some(&rf), DayCount::None),
            Err(DataError::UnsupportedConvention(DayCount::None))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let y = ExcessReturnSeries::from_values(vec![0.5, -1.25, 3.0]).unwrap();
        let f = write_tmp(&y.to_csv_string());
        let back = load_excess_returns(f.path(), &ColumnMapping::new("date", "excess_return")).unwrap();
        assert_eq!(back.values(), y.values());
        assert_eq!(back.dates(), y.dates());
    }

    fn price_path() -> impl Strategy<Value = Vec<f64>> {
        (1.0f64..1e4, prop::collection::vec(-0.2f64..0.2, 1..60)).prop_map(|(start, steps)| {
            let mut v = vec![start];
            for s in steps {
                let last = *v.last().unwrap();
                v.push(last * s.exp());
            }
            v
        })
    }

    proptest! {
        #[test]
        fn cumulative_returns_rebuild_prices(values in price_path()) {
            let dates = business_days(d(2001, 1, 1), values.len());
            let p = PriceSeries::new(dates.clone(), values.clone()).unwrap();
            let y = compute_excess_returns(&p, None, DayCount::Act365).unwrap();
            prop_assert_eq!(y.len(), values.len() - 1);
            let mut cum = 0.0;
            for (j, r) in y.values().iter().enumerate() {
                cum += r / 100.0;
                let rebuilt = values[0] * cum.exp();
                prop_assert!(((rebuilt - values[j + 1]) / values[j + 1]).abs() < 1e-12);
            }
            let zero = RiskFreeSeries::new(dates.clone(), vec![0.0; dates.len()], DayCount::Act365).unwrap();
            let y0 = compute_excess_returns(&p, Some(&zero), DayCount::Act365).unwrap();
            prop_assert_eq!(y0.values(), y.values());
        }
    }
}
