use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::io::{write_csv, CsvSchema, IoError};

use super::mode::Mode;

/// One row of the controller event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(rename = "time_s")]
    pub time: f64,
    pub mode: Mode,
    pub event: String,
    pub value: f64,
}

impl CsvSchema for Event {
    const HEADER: &'static [&'static str] = &["time_s", "mode", "event", "value"];
}

pub fn write_events<W: Write>(writer: W, events: &[Event]) -> Result<(), IoError> {
    write_csv(writer, events)
}
