//! MetricCsv reading and writing: `timestamp,<dim_1>,…,<dim_p>`, ISO-8601
//! timestamps, decimal cells.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use dayahead::MultiSeries;
use thiserror::Error;

/// Significant digits written for every numeric cell.
pub const CSV_SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("i/o error on {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header must start with 'timestamp' and name at least one metric")]
    BadHeader,
    #[error("row {row}, column '{column}': missing value")]
    MissingCell { row: usize, column: String },
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    BadNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: cannot parse timestamp '{value}'")]
    BadTimestamp { row: usize, value: String },
    #[error("row {row}: timestamps are not strictly increasing")]
    NonMonotone { row: usize },
    #[error("row {row}: sampling interval {found}s deviates more than 1% from {expected}s")]
    Irregular { row: usize, found: i64, expected: i64 },
    #[error("file has no data rows")]
    Empty,
    #[error(transparent)]
    Series(#[from] dayahead::Error),
}

pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc().timestamp())
}

pub fn format_timestamp(secs: i64) -> String {
    DateTime::<Utc>::from_timestamp(secs, 0)
        .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| secs.to_string())
}

/// Decimal notation rounded to `digits` significant digits, trailing zeros trimmed.
pub fn format_decimal(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i64 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits_str: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let point = exp + 1;
    let mut out = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits_str)
    } else if point as usize >= digits_str.len() {
        format!("{}{}", digits_str, "0".repeat(point as usize - digits_str.len()))
    } else {
        let (int, frac) = digits_str.split_at(point as usize);
        format!("{int}.{frac}")
    };
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if negative {
        out.insert(0, '-');
    }
    out
}

pub fn read_csv<R: Read>(reader: R) -> Result<MultiSeries<f64>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("timestamp") {
        return Err(CsvError::BadHeader);
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let p = names.len();
    let mut values = Vec::new();
    let mut stamps: Vec<i64> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row number
        let row = i + 1;
        let ts = record.get(0).unwrap_or("");
        let ts = parse_timestamp(ts).ok_or_else(|| CsvError::BadTimestamp {
            row,
            value: ts.to_string(),
        })?;
        if let Some(&prev) = stamps.last() {
            if ts <= prev {
                return Err(CsvError::NonMonotone { row });
            }
            if stamps.len() >= 2 {
                let expected = stamps[1] - stamps[0];
                let found = ts - prev;
                if ((found - expected) as f64 / expected as f64).abs() > dayahead::series::MAX_TIMESTAMP_JITTER {
                    return Err(CsvError::Irregular { row, found, expected });
                }
            }
        }
        stamps.push(ts);
        for (j, name) in names.iter().enumerate() {
            let cell = record.get(j + 1).unwrap_or("");
            if cell.is_empty() {
                return Err(CsvError::MissingCell {
                    row,
                    column: name.clone(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| CsvError::BadNumber {
                row,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(CsvError::BadNumber {
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
    }
    if stamps.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(MultiSeries::from_flat(values, p)?
        .with_timestamps(stamps)?
        .with_dim_names(names)?)
}

pub fn ingest_csv(path: &Path) -> Result<MultiSeries<f64>, CsvError> {
    let file = File::open(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file)
}

/// Writes MetricCsv. Series without timestamps get a one-minute grid from the epoch.
pub fn write_csv_to<W: Write>(writer: W, series: &MultiSeries<f64>) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_string()];
    header.extend(series.dim_names().iter().cloned());
    w.write_record(&header)?;
    for t in 0..series.len() {
        let ts = series.timestamps().map_or(60 * t as i64, |ts| ts[t]);
        let mut record = vec![format_timestamp(ts)];
        record.extend(series.row(t).iter().map(|&v| format_decimal(v, CSV_SIGNIFICANT_DIGITS)));
        w.write_record(&record)?;
    }
    w.flush().map_err(|source| CsvError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}

pub fn write_csv(path: &Path, series: &MultiSeries<f64>) -> Result<(), CsvError> {
    let file = File::create(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv_to(file, series)
}
