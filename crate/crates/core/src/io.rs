//! CSV and JSON helpers shared by every exporter.
//!
//! Numbers are written with 17 significant digits, `,` delimiters and LF line
//! endings. Lines starting with `#` are provenance comments and are skipped on
//! read.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits; missing values become empty cells.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// A header plus rows of numeric (possibly missing) cells.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { comments: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(Some).collect());
    }

    pub fn push_partial(&mut self, row: Vec<Option<f64>>) {
        self.rows.push(row);
    }

    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        for c in &self.comments {
            for line in c.lines() {
                writeln!(out, "# {line}")?;
            }
        }
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.map(fmt_num).unwrap_or_default()).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Reads `(x, value)` pairs; a non-numeric first row is treated as a header.
/// The `x` column must be strictly increasing.
pub fn read_two_column_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Table(format!("row {} has fewer than two columns", i + 1)));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(v)) => out.push((x, v)),
            _ if i == 0 => continue,
            _ => return Err(Error::Table(format!("row {} is not numeric", i + 1))),
        }
    }
    if out.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Table("x column must be strictly increasing".into()));
    }
    Ok(out)
}
