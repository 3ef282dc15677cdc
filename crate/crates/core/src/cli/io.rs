//! CSV ingest and export of data matrices.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::mahalanobis::{DataError, DataMatrix};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: cannot parse `{value}` as a number")]
    Parse { line: u64, column: usize, value: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("input contains no data rows")]
    Empty,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Parsed table plus the header row, if one was found.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub data: DataMatrix,
}

pub fn ingest_csv(path: &Path) -> Result<DataMatrix, IngestError> {
    read_table(path).map(|t| t.data)
}

pub fn read_table(path: &Path) -> Result<Table, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file)
}

/// Comma-separated numbers, one observation per line. The first line is a
/// header when none of its cells is numeric.
pub fn parse_csv<R: Read>(reader: R) -> Result<Table, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header = None;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| IngestError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if idx == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            header = Some(record.iter().map(str::to_owned).collect());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(IngestError::Ragged {
                line,
                expected,
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| IngestError::Parse {
                line,
                column: col + 1,
                value: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(IngestError::Parse {
                    line,
                    column: col + 1,
                    value: cell.to_owned(),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(IngestError::Empty);
    }
    let data = DataMatrix::new(rows, width.unwrap_or(0), values)?;
    Ok(Table { header, data })
}

/// Writes the matrix with shortest round-trip formatting, so that reading
/// the file back reproduces every value exactly.
pub fn write_csv<W: Write>(writer: W, data: &DataMatrix, header: Option<&[String]>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(h) = header {
        w.write_record(h)?;
    }
    let mut buf = Vec::with_capacity(data.ncols());
    for row in data.rows() {
        buf.clear();
        buf.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&buf)?;
    }
    w.flush()?;
    Ok(())
}
