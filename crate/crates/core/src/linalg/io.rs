//! Plain-text matrix CSV: one row per line, comma-separated decimal
//! literals, no header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Parses rows of comma-separated numbers. `origin` names the source in
/// error messages.
pub fn read_rows<R: Read>(reader: R, origin: &str) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut width = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                let x: f64 = field.parse().map_err(|_| {
                    Error::parse(origin, format!("line {}, column {}: `{field}` is not a number", line + 1, col + 1))
                })?;
                if !x.is_finite() {
                    return Err(Error::parse(
                        origin,
                        format!("line {}, column {}: non-finite value", line + 1, col + 1),
                    ));
                }
                Ok(x)
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::parse(
                    origin,
                    format!("line {} has {} fields, expected {w}", line + 1, row.len()),
                ))
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_matrix<R: Read>(reader: R, origin: &str) -> Result<DenseMatrix> {
    let rows = read_rows(reader, origin)?;
    if rows.is_empty() {
        return Err(Error::parse(origin, "no rows"));
    }
    DenseMatrix::from_rows(&rows)
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(file, &path.display().to_string())
}

/// Writes one row per line. Values use Rust's shortest round-trip
/// formatting, so reading the output back reproduces the matrix exactly.
pub fn write_rows<'a, W: Write>(
    mut writer: W,
    rows: impl IntoIterator<Item = &'a [f64]>,
) -> std::io::Result<()> {
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{x:?}"));
        }
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_matrix<W: Write>(writer: W, m: &DenseMatrix) -> std::io::Result<()> {
    let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i)).collect();
    write_rows(writer, rows.iter().map(Vec::as_slice))
}

pub fn write_matrix_file(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_matrix(&mut w, m).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
