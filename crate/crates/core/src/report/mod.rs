//! Report artifacts: run manifests, flat CSV tables and JSON envelopes.
//!
//! CSV files start with `# key: value` comment lines describing the run.
//! The wall-clock timestamp is left out of them so identical inputs give
//! byte-identical files; JSON envelopes carry the full manifest.

mod svg;

pub use svg::{BarChart, LineChart, Series};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Formats a value with four decimals; NaN prints as `nan`.
pub fn fmt4(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.4}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub dataset_sha256: String,
    pub seeds: Vec<u64>,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, dataset_sha256: impl Into<String>, seeds: Vec<u64>) -> Self {
        Self {
            command: command.into(),
            config,
            dataset_sha256: dataset_sha256.into(),
            seeds,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    /// Comment block for CSV files, without the timestamp.
    pub fn csv_preamble(&self) -> String {
        let seeds = self
            .seeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "# command: {}\n# version: {}\n# dataset_sha256: {}\n# seeds: {}\n# config: {}\n",
            self.command, self.version, self.dataset_sha256, seeds, self.config
        )
    }
}

/// A flat table destined for CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    pub fn to_csv(&self, manifest: &RunManifest) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        let body = writer
            .into_inner()
            .map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(manifest.csv_preamble() + &String::from_utf8_lossy(&body))
    }
}

/// `{"manifest": ..., "report": ...}` as pretty JSON.
pub fn json_envelope<T: Serialize>(manifest: &RunManifest, report: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        manifest: &'a RunManifest,
        report: &'a T,
    }
    Ok(serde_json::to_string_pretty(&Envelope { manifest, report })?)
}

/// Parses a CSV emitted by [`Table::to_csv`], skipping comment lines.
pub fn read_csv(text: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers()?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok(Table { header, rows })
}
