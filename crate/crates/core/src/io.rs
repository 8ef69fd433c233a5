//! CSV ingestion and CSV/JSON serialization.
//!
//! Floats are written with 17 significant digits so a write/read cycle
//! reproduces every value bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::bench::Table;
use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::smoother::SmoothEstimate;

/// Formats `x` with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|e| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("{:?}: {e}", cell.trim()),
    })
}

/// Reads a `t,y` series. The header row is optional; when present the
/// columns are located by name. Unsorted rows are sorted with a warning.
///
/// Row numbers in errors are 1-based line numbers of the input.
pub fn read_series<R: Read>(reader: R) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r?,
        None => return Err(Error::TooShort { found: 0, required: crate::series::MIN_SAMPLES }),
    };
    let numeric = first.iter().take(2).all(|c| c.parse::<f64>().is_ok()) && first.len() >= 2;
    let (ti, yi, mut pending) = if numeric {
        (0, 1, Some(first))
    } else {
        let find = |name: &str| first.iter().position(|c| c.eq_ignore_ascii_case(name));
        match (find("t"), find("y")) {
            (Some(t), Some(y)) => (t, y, None),
            _ => {
                return Err(Error::Parse {
                    row: 1,
                    column: "header".into(),
                    message: format!("expected columns t and y, found {:?}", first.iter().collect::<Vec<_>>()),
                })
            }
        }
    };
    let mut rows: Vec<(f64, f64, usize)> = Vec::new();
    let mut line = if numeric { 0 } else { 1 };
    loop {
        let rec = match pending.take() {
            Some(r) => r,
            None => match records.next() {
                Some(r) => r?,
                None => break,
            },
        };
        line += 1;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let get = |k: usize, name: &str| -> Result<f64> {
            let cell = rec.get(k).ok_or_else(|| Error::Parse {
                row: line,
                column: name.to_string(),
                message: "missing cell".into(),
            })?;
            parse_cell(cell, line, name)
        };
        rows.push((get(ti, "t")?, get(yi, "y")?, line));
    }
    if rows.windows(2).any(|w| w[1].0 < w[0].0) {
        log::warn!("input rows are not sorted by time; sorting");
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if let Some(w) = rows.windows(2).find(|w| w[1].0 == w[0].0) {
        return Err(Error::DuplicateTime {
            time: w[1].0,
            row: w[1].2,
        });
    }
    TimeSeries::new(
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
    )
}

pub fn read_series_file(path: &Path) -> Result<TimeSeries> {
    read_series(std::fs::File::open(path)?)
}

/// Writes `t,y` with a header row.
pub fn write_series<W: Write>(writer: W, series: &TimeSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "y"])?;
    for (t, y) in series.times().iter().zip(series.values()) {
        w.write_record([format_float(*t), format_float(*y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t,y,ghat,stderr,halfwidth`; `stderr` cells are empty when no
/// error bars were computed.
pub fn write_estimate_csv<W: Write>(writer: W, series: &TimeSeries, est: &SmoothEstimate) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "y", "ghat", "stderr", "halfwidth"])?;
    for i in 0..series.len() {
        let se = est.stderr.as_ref().map_or(String::new(), |s| format_float(s[i]));
        w.write_record([
            format_float(series.times()[i]),
            format_float(series.values()[i]),
            format_float(est.ghat[i]),
            se,
            format_float(est.halfwidths[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EstimateJson<'a> {
    t: &'a [f64],
    y: &'a [f64],
    ghat: &'a [f64],
    stderr: Option<&'a [f64]>,
    halfwidth: &'a [f64],
}

pub fn write_estimate_json<W: Write>(writer: W, series: &TimeSeries, est: &SmoothEstimate) -> Result<()> {
    let doc = EstimateJson {
        t: series.times(),
        y: series.values(),
        ghat: &est.ghat,
        stderr: est.stderr.as_deref(),
        halfwidth: &est.halfwidths,
    };
    write_json(writer, &doc)
}

pub fn write_table_csv<W: Write>(writer: W, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(table.names())?;
    for i in 0..table.rows() {
        w.write_record(table.columns.iter().map(|(_, v)| format_float(v[i])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(mut writer: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writeln!(writer)?;
    Ok(())
}
