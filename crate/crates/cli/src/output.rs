//! Artifact writers: CSV tables and pretty JSON, both deterministic so
//! replayed runs produce identical bytes.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Writes an RFC-4180 CSV with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Shortest round-trip decimal for a float; infinities print as `inf`.
pub fn fmt_f64(v: f64) -> String {
    v.to_string()
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
