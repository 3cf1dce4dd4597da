//! CSV and JSON persistence for experiment reports.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{ExperimentRecord, ExperimentReport};
use crate::error::Result;

pub const CSV_HEADER: [&str; 6] = ["rep", "err_total", "err_disc", "err_nonstat", "err_var", "wall_ms"];

/// One row per record. Missing terms are written as empty cells.
pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Writes the CSV and/or summary JSON, creating parent directories as needed.
pub fn write_report(report: &ExperimentReport, csv_path: Option<&Path>, summary_path: Option<&Path>) -> Result<()> {
    if let Some(path) = csv_path {
        ensure_parent(path)?;
        write_records_csv(&report.records, BufWriter::new(File::create(path)?))?;
    }
    if let Some(path) = summary_path {
        ensure_parent(path)?;
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &report.summary)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => Ok(fs::create_dir_all(dir)?),
        _ => Ok(()),
    }
}
