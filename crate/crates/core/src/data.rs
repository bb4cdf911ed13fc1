//! CSV plumbing: count ingestion, shift-grid input, and ARL table output.
//!
//! Count files are one observation per row, either a bare column of integers
//! or a delimited table with a header naming the column to monitor. The
//! header is auto-detected: a first row that does not parse as a count is
//! treated as one.

use crate::error::{Error, Result};
use crate::monitor::ArlTableRow;
use csv::{ReaderBuilder, Trim};
use std::io::Write;
use std::path::Path;

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_count(field: &str, path: &Path, line: u64) -> Result<u64> {
    if let Ok(v) = field.parse::<i64>() {
        if v < 0 {
            return Err(Error::NegativeCount {
                path: path.display().to_string(),
                line,
                value: v,
            });
        }
        return Ok(v as u64);
    }
    Err(Error::Parse {
        path: path.display().to_string(),
        line,
        reason: format!("'{field}' is not a nonnegative integer"),
    })
}

/// Read a column of counts from a CSV or plain text file.
///
/// With `column = Some(name)` the file must carry a header containing that
/// name; without it, single-column files are read directly and multi-column
/// files are rejected as ambiguous.
pub fn ingest_counts(path: &Path, column: Option<&str>) -> Result<Vec<u64>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_path(path)?;

    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r?,
        None => {
            return Err(Error::Data(format!(
                "{} contains no rows",
                path.display()
            )))
        }
    };

    let first_is_header = first.iter().any(|f| !f.is_empty() && f.parse::<i64>().is_err());
    let col = match (column, first_is_header) {
        (Some(name), true) => first
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::ColumnNotFound {
                path: path.display().to_string(),
                name: name.to_string(),
                header: first.iter().map(str::to_string).collect(),
            })?,
        (Some(name), false) => {
            return Err(Error::ColumnNotFound {
                path: path.display().to_string(),
                name: name.to_string(),
                header: Vec::new(),
            })
        }
        (None, _) => {
            let width = first.iter().filter(|f| !f.is_empty()).count();
            if width > 1 {
                return Err(Error::AmbiguousColumns {
                    path: path.display().to_string(),
                    ncols: width,
                });
            }
            0
        }
    };

    let mut counts = Vec::new();
    if !first_is_header {
        let f = first.get(col).unwrap_or("");
        if !f.is_empty() {
            counts.push(parse_count(f, path, line_of(&first))?);
        }
    }
    for record in records {
        let record = record?;
        let line = line_of(&record);
        match record.get(col) {
            Some("") | None => continue,
            Some(f) => counts.push(parse_count(f, path, line)?),
        }
    }
    if counts.is_empty() {
        return Err(Error::Data(format!(
            "{} contains no counts in the selected column",
            path.display()
        )));
    }
    Ok(counts)
}

/// Fixed ARL table header, also the accepted order when reading one back.
pub const ARL_TABLE_HEADER: &str = "lambda,L,ucl,p1,theta1,k1,arl,sdrl,se";

/// Write rows as CSV with four-decimal floats.
pub fn write_arl_table<W: Write>(rows: &[ArlTableRow], mut out: W) -> Result<()> {
    writeln!(out, "{ARL_TABLE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.lambda, r.l, r.ucl, r.p1, r.theta1, r.k1, r.arl, r.sdrl, r.se
        )?;
    }
    Ok(())
}

fn parse_f64(field: &str, path: &Path, line: u64) -> Result<f64> {
    field.parse().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        line,
        reason: format!("'{field}' is not a number"),
    })
}

/// Read back a table produced by [`write_arl_table`].
pub fn read_arl_table(path: &Path) -> Result<Vec<ArlTableRow>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_path(path)?;
    let expected: Vec<&str> = ARL_TABLE_HEADER.split(',').collect();
    let got = reader.headers()?;
    if got.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Data(format!(
            "{} does not look like an ARL table: header is '{}'",
            path.display(),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let f = |i: usize| -> Result<f64> {
            parse_f64(record.get(i).unwrap_or(""), path, line)
        };
        rows.push(ArlTableRow {
            lambda: f(0)?,
            l: f(1)?,
            ucl: f(2)?,
            p1: f(3)?,
            theta1: f(4)?,
            k1: f(5)?,
            arl: f(6)?,
            sdrl: f(7)?,
            se: f(8)?,
        });
    }
    Ok(rows)
}

/// One requested cell of an ARL table: chart settings plus the true process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub lambda: f64,
    pub l: f64,
    pub p1: f64,
    pub theta1: f64,
    pub k1: f64,
}

/// Read a shift grid: header `lambda,L,p1,theta1,k1` (any casing), one cell
/// per row.
pub fn read_grid(path: &Path) -> Result<Vec<GridRow>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::ColumnNotFound {
                path: path.display().to_string(),
                name: name.to_string(),
                header: header.iter().map(str::to_string).collect(),
            })
    };
    let (i_lambda, i_l, i_p1, i_theta1, i_k1) =
        (find("lambda")?, find("l")?, find("p1")?, find("theta1")?, find("k1")?);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let f = |i: usize| -> Result<f64> {
            parse_f64(record.get(i).unwrap_or(""), path, line)
        };
        rows.push(GridRow {
            lambda: f(i_lambda)?,
            l: f(i_l)?,
            p1: f(i_p1)?,
            theta1: f(i_theta1)?,
            k1: f(i_k1)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{} has no grid rows", path.display())));
    }
    Ok(rows)
}
