//! CSV ingestion and emission for point clouds.
//!
//! The expected shape is a header row followed by purely numeric rows, one
//! observation per line. Parsing is locale-independent (decimal point only)
//! and rejects NaN and infinite fields with row-numbered errors.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Reads a headered numeric CSV file into a point cloud.
pub fn load_csv(path: &Path) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| {
        Error::Data(format!("cannot open {}: {e}", path.display()))
    })?;
    parse_csv(BufReader::new(file))
}

/// Parses CSV text (header row first) into a point cloud.
pub fn parse_csv(reader: impl Read) -> Result<PointCloud> {
    let mut lines = BufReader::new(reader).lines();
    let _header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::data("empty file: expected a header row")),
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut d = 0usize;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        // CSV line numbers are 1-based and include the header.
        let row_no = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if d == 0 {
            d = fields.len();
        } else if fields.len() != d {
            return Err(Error::data(format!(
                "row {row_no}: expected {d} fields, got {}",
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(d);
        for (col, f) in fields.iter().enumerate() {
            let value: f64 = f.trim().parse().map_err(|_| {
                Error::data(format!(
                    "row {row_no}, column {}: {:?} is not a number",
                    col + 1,
                    f.trim()
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::data(format!(
                    "row {row_no}, column {}: non-finite value {value}",
                    col + 1
                )));
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data("no data rows"));
    }
    if rows.len() < 2 {
        return Err(Error::data("need at least 2 data rows, got 1"));
    }
    PointCloud::from_rows(&rows)
}

/// Writes a point cloud as CSV with the given column names (defaults to
/// `x0,x1,...`).
pub fn write_csv(path: &Path, cloud: &PointCloud, header: Option<&[String]>) -> Result<()> {
    let mut out = File::create(path)?;
    write_csv_to(&mut out, cloud, header)
}

pub fn write_csv_to(
    out: &mut impl Write,
    cloud: &PointCloud,
    header: Option<&[String]>,
) -> Result<()> {
    let names: Vec<String> = match header {
        Some(h) => {
            if h.len() != cloud.dim() {
                return Err(Error::parameter("header length does not match dimension"));
            }
            h.to_vec()
        }
        None => (0..cloud.dim()).map(|k| format!("x{k}")).collect(),
    };
    writeln!(out, "{}", names.join(","))?;
    for row in cloud.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
