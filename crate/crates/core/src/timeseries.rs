//! Weekly series: CSV ingestion, segment stitching, step correction and
//! max-to-100 normalization.
//!
//! A [`WeeklySeries`] is stored as a start stamp plus a dense vector of
//! values, so the 7-day spacing invariant holds by construction once a
//! series has been built.

use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use thiserror::Error;

/// Value every normalized series peaks at.
pub const NORMALIZED_MAX: f64 = 100.0;

/// Last day of a 7-day bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeekStamp(NaiveDate);

impl WeekStamp {
    pub fn new(week_ending: NaiveDate) -> Self {
        WeekStamp(week_ending)
    }

    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day).map(WeekStamp)
    }

    pub fn date(self) -> NaiveDate {
        self.0
    }

    /// Stamp `weeks` whole weeks later (earlier when negative).
    pub fn add_weeks(self, weeks: i64) -> Self {
        WeekStamp(self.0 + Duration::weeks(weeks))
    }

    /// Signed number of days from `self` to `other`.
    pub fn days_until(self, other: WeekStamp) -> i64 {
        (other.0 - self.0).num_days()
    }

    /// `MM/YYYY`, the month granularity used in human-facing reports.
    pub fn month_label(self) -> String {
        self.0.format("%m/%Y").to_string()
    }
}

impl fmt::Display for WeekStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

impl FromStr for WeekStamp {
    type Err = chrono::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map(WeekStamp)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series is empty")]
    Empty,
    #[error("value {value} at {stamp} is negative or not finite")]
    InvalidValue { stamp: WeekStamp, value: f64 },
    #[error("stamps {prev} and {next} are {days} days apart, expected 7")]
    Spacing { prev: WeekStamp, next: WeekStamp, days: i64 },
    #[error("series maximum is zero; cannot normalize")]
    AllZero,
    #[error("reference series maximum is zero; cannot normalize")]
    ReferenceAllZero,
    #[error("cut {cut} lies outside the series span {first}..={last}")]
    CutOutsideSpan { cut: WeekStamp, first: WeekStamp, last: WeekStamp },
    #[error("correction factor must be positive and finite, got {0}")]
    InvalidFactor(f64),
    #[error("no segments to stitch")]
    NoSegments,
    #[error("segment {index} shares no week with the segments before it")]
    NoOverlap { index: usize },
    #[error("segment {index} is zero at the overlap week {stamp}")]
    ZeroAtOverlap { index: usize, stamp: WeekStamp },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty series")]
    Empty,
    #[error("expected `date,value`, found {0:?}")]
    Shape(String),
    #[error("malformed date {0:?}")]
    Date(String),
    #[error("malformed value {0:?}")]
    Value(String),
    #[error("negative or non-finite value {0}")]
    Negative(String),
    #[error("duplicate stamp {0}")]
    Duplicate(String),
    #[error("gap of {days} days before {stamp}, expected 7")]
    Gap { stamp: String, days: i64 },
}

/// Ordered, uniformly spaced (7-day) nonnegative weekly values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklySeries {
    start: WeekStamp,
    values: Vec<f64>,
}

impl WeeklySeries {
    pub fn new(start: WeekStamp, values: Vec<f64>) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        for (k, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(SeriesError::InvalidValue { stamp: start.add_weeks(k as i64), value });
            }
        }
        Ok(WeeklySeries { start, values })
    }

    /// Build from explicit points, which must already be in order and
    /// spaced exactly 7 days apart.
    pub fn from_points(points: &[(WeekStamp, f64)]) -> Result<Self, SeriesError> {
        let (&(start, _), rest) = points.split_first().ok_or(SeriesError::Empty)?;
        let mut prev = start;
        for &(stamp, _) in rest {
            let days = prev.days_until(stamp);
            if days != 7 {
                return Err(SeriesError::Spacing { prev, next: stamp, days });
            }
            prev = stamp;
        }
        WeeklySeries::new(start, points.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start(&self) -> WeekStamp {
        self.start
    }

    pub fn end(&self) -> WeekStamp {
        self.stamp_at(self.values.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stamp_at(&self, index: usize) -> WeekStamp {
        self.start.add_weeks(index as i64)
    }

    pub fn stamps(&self) -> impl Iterator<Item = WeekStamp> + '_ {
        (0..self.values.len()).map(move |k| self.stamp_at(k))
    }

    pub fn points(&self) -> impl Iterator<Item = (WeekStamp, f64)> + '_ {
        self.values.iter().enumerate().map(move |(k, &v)| (self.stamp_at(k), v))
    }

    /// Week offset of `stamp` from the series start if it falls on the grid,
    /// whether or not it lies inside the span.
    pub fn week_offset(&self, stamp: WeekStamp) -> Option<i64> {
        let days = self.start.days_until(stamp);
        (days % 7 == 0).then_some(days / 7)
    }

    /// Index of `stamp` when it is one of the series' own stamps.
    pub fn index_of(&self, stamp: WeekStamp) -> Option<usize> {
        let offset = self.week_offset(stamp)?;
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    pub fn value_at(&self, stamp: WeekStamp) -> Option<f64> {
        self.index_of(stamp).map(|k| self.values[k])
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Week offsets `0, 1, ..., len-1` measured from the first stamp.
    pub fn week_grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64).collect()
    }

    /// Multiply every value by `factor` (which must be nonnegative).
    pub fn scaled(&self, factor: f64) -> Result<Self, SeriesError> {
        WeeklySeries::new(self.start, self.values.iter().map(|v| v * factor).collect())
    }
}

/// Parse `YYYY-MM-DD,value` lines. A first line whose date field does not
/// start with a digit is treated as a header. Blank lines are skipped and
/// rows may arrive in any order; they are sorted before the spacing check.
pub fn parse_csv(text: &str) -> Result<WeeklySeries, ParseError> {
    let mut rows: Vec<(usize, WeekStamp, f64)> = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let is_first = !seen_content;
        seen_content = true;
        let mut fields = line.split(',');
        let (date_field, value_field) = match (fields.next(), fields.next(), fields.next()) {
            (Some(d), Some(v), None) => (d.trim(), v.trim()),
            _ => {
                if is_first && !line.starts_with(|c: char| c.is_ascii_digit()) {
                    continue;
                }
                return Err(ParseError { line: line_no, kind: ParseErrorKind::Shape(line.to_string()) });
            }
        };
        if is_first && !date_field.starts_with(|c: char| c.is_ascii_digit()) {
            continue;
        }
        let stamp: WeekStamp = date_field
            .parse()
            .map_err(|_| ParseError { line: line_no, kind: ParseErrorKind::Date(date_field.to_string()) })?;
        let value: f64 = value_field
            .parse()
            .map_err(|_| ParseError { line: line_no, kind: ParseErrorKind::Value(value_field.to_string()) })?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(ParseError { line: line_no, kind: ParseErrorKind::Negative(value_field.to_string()) });
        }
        rows.push((line_no, stamp, value));
    }

    if rows.is_empty() {
        let line = text.lines().count().max(1);
        return Err(ParseError { line, kind: ParseErrorKind::Empty });
    }
    rows.sort_by_key(|r| r.1);
    for pair in rows.windows(2) {
        let (_, prev, _) = pair[0];
        let (line, next, _) = pair[1];
        let days = prev.days_until(next);
        if days == 0 {
            return Err(ParseError { line, kind: ParseErrorKind::Duplicate(next.to_string()) });
        }
        if days != 7 {
            return Err(ParseError { line, kind: ParseErrorKind::Gap { stamp: next.to_string(), days } });
        }
    }
    let start = rows[0].1;
    Ok(WeeklySeries { start, values: rows.into_iter().map(|r| r.2).collect() })
}

/// Render as `date,value` CSV with a header row. Values use the shortest
/// representation that parses back to the identical `f64`.
pub fn to_csv(series: &WeeklySeries) -> String {
    points_to_csv(series.points())
}

/// Same format as [`to_csv`] for arbitrary points, such as model curves
/// that may dip a hair below zero.
pub fn points_to_csv(points: impl IntoIterator<Item = (WeekStamp, f64)>) -> String {
    let mut out = String::from("date,value\n");
    for (stamp, value) in points {
        out.push_str(&format!("{stamp},{value}\n"));
    }
    out
}

/// Stitch overlapping segments onto a common scale.
///
/// Each later segment is rescaled by the ratio (already-stitched value /
/// segment value) at the first week the two share, then its weeks not yet
/// covered are appended. Factors therefore compose along the chain.
pub fn stitch(segments: &[WeeklySeries]) -> Result<WeeklySeries, SeriesError> {
    let (first, rest) = segments.split_first().ok_or(SeriesError::NoSegments)?;
    let mut start = first.start;
    let mut values = first.values.clone();

    for (offset, segment) in rest.iter().enumerate() {
        let index = offset + 1;
        let merged = WeeklySeries { start, values };
        let anchor = merged
            .week_offset(segment.start)
            .and_then(|_| segment.stamps().find(|&s| merged.index_of(s).is_some()))
            .ok_or(SeriesError::NoOverlap { index })?;
        let later = segment.value_at(anchor).unwrap_or(0.0);
        if later == 0.0 {
            return Err(SeriesError::ZeroAtOverlap { index, stamp: anchor });
        }
        let factor = merged.value_at(anchor).unwrap_or(0.0) / later;

        let new_start = merged.start.min(segment.start);
        let new_end = merged.end().max(segment.end());
        let len = (new_start.days_until(new_end) / 7 + 1) as usize;
        let mut out = Vec::with_capacity(len);
        for k in 0..len {
            let stamp = new_start.add_weeks(k as i64);
            let v = match merged.value_at(stamp) {
                Some(v) => v,
                // Union of two overlapping uniform grids is contiguous, so any
                // week missing from `merged` is covered by `segment`.
                None => segment.value_at(stamp).unwrap_or(0.0) * factor,
            };
            out.push(v);
        }
        start = new_start;
        values = out;
    }
    WeeklySeries::new(start, values)
}

/// Multiply every value strictly after the week ending at `cut` by `factor`.
pub fn apply_step_correction(
    series: &WeeklySeries,
    cut: WeekStamp,
    factor: f64,
) -> Result<WeeklySeries, SeriesError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(SeriesError::InvalidFactor(factor));
    }
    if cut < series.start() || cut > series.end() {
        return Err(SeriesError::CutOutsideSpan { cut, first: series.start(), last: series.end() });
    }
    let values = series
        .points()
        .map(|(stamp, v)| if stamp > cut { v * factor } else { v })
        .collect();
    Ok(WeeklySeries { start: series.start, values })
}

/// Scale so the maximum of `reference` (or of `series` itself when no
/// reference is given) maps to 100.
pub fn normalize(
    series: &WeeklySeries,
    reference: Option<&WeeklySeries>,
) -> Result<WeeklySeries, SeriesError> {
    let peak = match reference {
        Some(r) => {
            let m = r.max_value();
            if m <= 0.0 {
                return Err(SeriesError::ReferenceAllZero);
            }
            m
        }
        None => {
            let m = series.max_value();
            if m <= 0.0 {
                return Err(SeriesError::AllZero);
            }
            m
        }
    };
    // v / peak is exactly 1 at the peak, so the maximum lands on 100 exactly.
    let values = series.values.iter().map(|v| v / peak * NORMALIZED_MAX).collect();
    Ok(WeeklySeries { start: series.start, values })
}
