//! CSV and manifest writers.
//!
//! CSV files start with `#` comment lines naming the producing command, the
//! config fingerprint, and the manifest file; then a header row; then data
//! rows. Floats use 17 significant digits in scientific notation.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Locale-independent float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct CsvTable {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            comments: Vec::new(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.comments.push(format!("{key}: {value}"));
        self
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.push_row(row.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Reads the data rows of a CSV written by [`CsvTable`].
pub fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Run metadata; not byte-stable (it records timings).
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_name: String,
    pub config_fingerprint: String,
    pub tool_version: String,
    pub rng_algorithm: String,
    pub normal_transform: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}
