//! Run-directory files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use ilarl_core::eval::MetricTrace;

use crate::CliError;

/// Header of every `traces.csv`.
pub const TRACE_HEADER: [&str; 4] = ["round", "metric", "value", "stderr"];

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::io(path, e.into()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

/// Long-format CSV; an absent standard error is an empty field.
pub fn write_trace_csv(path: &Path, trace: &MetricTrace) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let err = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(TRACE_HEADER).map_err(err)?;
    for row in trace.rows() {
        let stderr = row.stderr.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([row.round.to_string(), row.metric.clone(), row.value.to_string(), stderr])
            .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
