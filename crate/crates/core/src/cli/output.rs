//! Deterministic file output: CSV with fixed 17-significant-digit float
//! formatting and pretty-printed JSON. Identical inputs produce byte-identical
//! files.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Format a float with 17 significant digits, '.' decimal separator, no
/// locale dependence.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return String::new();
    }
    format!("{v:.16e}")
}

/// Column-oriented CSV table; NaN cells are written empty.
pub struct CsvTable {
    columns: Vec<(String, Vec<f64>)>,
}

impl CsvTable {
    pub fn new() -> Self {
        CsvTable { columns: Vec::new() }
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> &mut Self {
        self.columns.push((name.into(), values));
        self
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let rows = self.columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        let mut out = String::new();
        let header: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..rows {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|(_, v)| v.get(r).map(|&x| format_float(x)).unwrap_or_default())
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
        Ok(())
    }
}

impl Default for CsvTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
