//! CSV plumbing shared by the trajectory, schedule, event and report files.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unexpected csv header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
}

/// A row type with a fixed column order.
pub trait CsvSchema: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
}

pub fn write_csv<W: Write, T: CsvSchema>(writer: W, rows: &[T]) -> Result<(), IoError> {
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    out.write_record(T::HEADER)?;
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads rows, rejecting files whose header differs from the schema.
pub fn read_csv<R: Read, T: CsvSchema>(reader: R) -> Result<Vec<T>, IoError> {
    let mut input = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let found = input.headers()?.clone();
    if found.iter().ne(T::HEADER.iter().copied()) {
        return Err(IoError::Header {
            expected: T::HEADER.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    input
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(IoError::from)
}

/// Writes a header and pre-formatted rows (for report tables whose rows are
/// not a single struct).
pub fn write_table<W: Write>(
    writer: W,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), IoError> {
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}
