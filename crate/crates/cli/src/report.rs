use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Overrides the wall-clock timestamp, for reproducible report files.
pub const TIMESTAMP_ENV: &str = "SOURCE_DATE_EPOCH";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// SHA-256 of the canonical JSON payload.
    pub payload_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub kind: String,
    pub payload: Value,
    pub config: ExperimentConfig,
    pub provenance: Provenance,
}

pub fn payload_digest(payload: &Value) -> String {
    let canonical = serde_json::to_string(payload).expect("JSON values always serialize");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn now() -> u64 {
    if let Some(t) = std::env::var(TIMESTAMP_ENV).ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

impl ReportRecord {
    pub fn new<P: Serialize>(kind: &str, payload: &P, config: &ExperimentConfig) -> Result<Self, CliError> {
        let payload = serde_json::to_value(payload).map_err(|e| CliError::Output(e.to_string()))?;
        Ok(Self {
            kind: kind.to_string(),
            provenance: Provenance {
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: config.seed,
                timestamp: now(),
                payload_sha256: payload_digest(&payload),
            },
            payload,
            config: config.clone(),
        })
    }
}

/// One JSON object per line.
pub fn write_records<W: Write>(mut out: W, records: &[ReportRecord]) -> Result<(), CliError> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| CliError::Output(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| CliError::Output(e.to_string()))?;
    }
    Ok(())
}

pub fn parse_records(text: &str) -> Result<Vec<ReportRecord>, CliError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Input(format!("record {}: {e}", i + 1))))
        .collect()
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, inner, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Plot-ready table: a `kind` column followed by every payload field,
/// flattened with dotted names, in order of first appearance.
pub fn write_csv<W: Write>(out: W, records: &[ReportRecord]) -> Result<(), CliError> {
    let rows: Vec<Vec<(String, String)>> = records
        .iter()
        .map(|r| {
            let mut cells = Vec::new();
            flatten("", &r.payload, &mut cells);
            cells
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for row in &rows {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(std::iter::once("kind").chain(header.iter().map(String::as_str)))
        .map_err(err)?;
    for (r, row) in records.iter().zip(&rows) {
        let lookup: Map<String, Value> = row.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let cells = header
            .iter()
            .map(|h| lookup.get(h).and_then(Value::as_str).unwrap_or("").to_string());
        w.write_record(std::iter::once(r.kind.clone()).chain(cells)).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}
