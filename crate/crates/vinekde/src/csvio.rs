//! Comma-separated numeric tables with a mandatory header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use vinekde_core::DataMatrix;

use crate::error::{AppError, AppResult};

/// A parsed numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub data: DataMatrix,
}

pub(crate) fn open_reader(path: &Path) -> AppResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

pub(crate) fn read_header(path: &Path, reader: &mut csv::Reader<File>) -> AppResult<Vec<String>> {
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(AppError::schema(path, "missing header row"));
    }
    if header.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(AppError::schema(path, "header row looks numeric; a header naming every column is required"));
    }
    Ok(header)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> AppError {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => AppError::io(path, source),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => AppError::Parse {
            path: path.to_owned(),
            row,
            column: "-".into(),
            message: format!("expected {expected_len} fields, found {len}"),
        },
        other => AppError::Parse { path: path.to_owned(), row, column: "-".into(), message: format!("{other:?}") },
    }
}

pub(crate) fn parse_cell(path: &Path, row: usize, column: &str, cell: &str) -> AppResult<f64> {
    let parse_err = |message: String| AppError::Parse { path: path.to_owned(), row, column: column.to_owned(), message };
    let v: f64 = cell.parse().map_err(|_| parse_err(format!("not a number: {cell:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(format!("non-finite value: {cell:?}")));
    }
    Ok(v)
}

/// Reads a numeric CSV file. Row numbers in errors are file line numbers.
pub fn read_table(path: &Path) -> AppResult<Table> {
    let mut reader = open_reader(path)?;
    let header = read_header(path, &mut reader)?;
    let d = header.len();
    let mut values = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map_or(n + 2, |p| p.line() as usize);
        for (cell, name) in record.iter().zip(&header) {
            values.push(parse_cell(path, row, name, cell)?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(AppError::schema(path, "no data rows"));
    }
    let data = DataMatrix::from_row_major(n, d, values).map_err(|e| AppError::schema(path, e.to_string()))?;
    Ok(Table { header, data })
}

/// Writes rows under `header`, formatting every value with its shortest
/// round-trip representation.
pub fn write_table<'a, I>(path: &Path, header: &[String], rows: I) -> AppResult<()>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| AppError::io(path, e);
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// `x1, ..., xd`.
pub fn default_header(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}
