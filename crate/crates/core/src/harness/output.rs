//! CSV and JSON artifact writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Int(i64),
    /// Written with 17 significant digits, which round-trips any `f64`.
    Real(f64),
    Empty,
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Real(v) => format!("{v:.16e}"),
            Field::Empty => String::new(),
        }
    }
}

/// Row-at-a-time CSV writer that enforces the header's column count.
pub struct CsvSink {
    path: PathBuf,
    columns: usize,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: impl AsRef<Path>, header: &[&str]) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut writer = csv::Writer::from_writer(BufWriter::with_capacity(1 << 20, file));
        writer.write_record(header).map_err(|e| Error::csv(&path, e))?;
        Ok(Self { path, columns: header.len(), writer })
    }

    pub fn row(&mut self, fields: &[Field]) -> Result<()> {
        if fields.len() != self.columns {
            return Err(Error::Schema { expected: self.columns, found: fields.len() });
        }
        self.writer
            .write_record(fields.iter().map(Field::render))
            .map_err(|e| Error::csv(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

/// Writes a header and one record per row.
pub fn emit_csv<I, R>(path: impl AsRef<Path>, header: &[&str], rows: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[Field]>,
{
    let mut sink = CsvSink::create(path, header)?;
    for row in rows {
        sink.row(row.as_ref())?;
    }
    sink.finish()
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<PathBuf> {
    let path = path.as_ref().to_path_buf();
    let mut file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads one numeric column from a CSV file with a header row. With no
/// column name, a single-column file or a `log_return` column is used.
pub fn read_column(path: impl AsRef<Path>, column: Option<&str>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let wanted = column.unwrap_or("log_return");
    let idx = match headers.iter().position(|h| h.trim() == wanted) {
        Some(i) => i,
        None if column.is_none() && headers.len() == 1 => 0,
        None => {
            return Err(Error::Precondition(format!(
                "{}: no column `{wanted}` (have: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            )))
        }
    };
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let cell = record.get(idx).unwrap_or("").trim();
        let v: f64 = cell.parse().map_err(|_| {
            Error::Precondition(format!("{}: row {}: `{cell}` is not a number", path.display(), row + 2))
        })?;
        values.push(v);
    }
    Ok(values)
}
