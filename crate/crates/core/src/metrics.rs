// SPDX-License-Identifier: Apache-2.0

//! Throughput aggregation, host-vs-isolated comparison and report files.
//!
//! Every report carries schema version 1: a `# schema=1` first line in
//! CSV, a `"schema": 1` field in JSON. Real numbers are written with six
//! decimals in both formats so a report renders to the same bytes every
//! time and survives a JSON round trip unchanged.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::boundary::Domain;
use crate::error::{Error, Result};
use crate::runner::{RunLimit, RunRecord, TransitionRecord};

pub const SCHEMA: u32 = 1;

pub const COMPARISON_COLUMNS: [&str; 8] = [
    "kernel_id",
    "mode",
    "host_bogo_per_s",
    "isolated_bogo_per_s",
    "ratio",
    "workers",
    "duration_s",
    "content_hash",
];

pub const TRANSITION_COLUMNS: [&str; 4] = ["mode", "workers", "transitions", "wall_seconds"];

pub const RECORD_COLUMNS: [&str; 11] = [
    "worker",
    "core",
    "kernel_id",
    "domain",
    "bogo_ops",
    "wall_seconds",
    "bogo_per_s",
    "transitions",
    "verified",
    "stop_cause",
    "content_hash",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    SingleCore,
    AllCores,
}

impl Mode {
    pub fn for_workers(workers: usize) -> Mode {
        if workers == 1 {
            Mode::SingleCore
        } else {
            Mode::AllCores
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SingleCore => "SINGLE_CORE",
            Mode::AllCores => "ALL_CORES",
        })
    }
}

pub fn fixed6(v: f64) -> String {
    format!("{v:.6}")
}

fn ser_fixed6<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::Error as _;
    let n = serde_json::Number::from_str(&fixed6(*v))
        .map_err(|_| S::Error::custom(format!("non-finite number {v}")))?;
    n.serialize(s)
}

fn ser_fixed6_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_fixed6(v, s),
        None => s.serialize_none(),
    }
}

fn de_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    f64::deserialize(d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub kernel_id: String,
    pub domain: Domain,
    pub limit: RunLimit,
    pub content_hash: String,
    pub workers: usize,
    pub total_bogo_ops: u64,
    /// Sum of the worker wall times.
    pub total_wall: f64,
    /// Sum of per-worker rates, the canonical throughput figure.
    pub bogo_per_s_sum: f64,
    pub per_worker: Vec<RunRecord>,
}

pub fn aggregate(records: &[RunRecord]) -> Result<Aggregate> {
    let first = records.first().ok_or(Error::EmptyInput)?;
    if records.iter().any(|r| {
        r.kernel_id != first.kernel_id
            || r.domain != first.domain
            || r.limit != first.limit
            || r.content_hash != first.content_hash
    }) {
        return Err(Error::MixedRuns);
    }
    Ok(Aggregate {
        kernel_id: first.kernel_id.clone(),
        domain: first.domain,
        limit: first.limit,
        content_hash: first.content_hash.clone(),
        workers: records.len(),
        total_bogo_ops: records.iter().map(|r| r.bogo_ops).sum(),
        total_wall: records.iter().map(|r| r.wall_seconds).sum(),
        bogo_per_s_sum: records.iter().map(RunRecord::bogo_per_s).sum(),
        per_worker: records.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub kernel_id: String,
    pub mode: Mode,
    #[serde(serialize_with = "ser_fixed6", deserialize_with = "de_f64")]
    pub host_bogo_per_s: f64,
    #[serde(serialize_with = "ser_fixed6", deserialize_with = "de_f64")]
    pub isolated_bogo_per_s: f64,
    /// isolated / host; 1.0 is parity, below 1.0 a slowdown.
    #[serde(serialize_with = "ser_fixed6", deserialize_with = "de_f64")]
    pub ratio: f64,
    pub workers: usize,
    #[serde(serialize_with = "ser_fixed6_opt")]
    pub duration_s: Option<f64>,
    pub bogo_budget: Option<u64>,
    pub content_hash: String,
    /// Set when the isolated domain came out faster than the host.
    pub anomalous: bool,
}

pub fn compare(host: &Aggregate, isolated: &Aggregate) -> Result<ComparisonRow> {
    let shape = |m: String| Err(Error::ShapeMismatch(m));
    if host.domain != Domain::Host || isolated.domain != Domain::Isolated {
        return shape(format!(
            "expected host and isolated runs, got {} and {}",
            host.domain, isolated.domain
        ));
    }
    if host.kernel_id != isolated.kernel_id {
        return shape(format!(
            "kernels differ: {} vs {}",
            host.kernel_id, isolated.kernel_id
        ));
    }
    if host.workers != isolated.workers {
        return shape(format!(
            "worker counts differ: {} vs {}",
            host.workers, isolated.workers
        ));
    }
    if host.limit != isolated.limit {
        return shape("run limits differ".into());
    }
    if host.content_hash != isolated.content_hash {
        return Err(Error::HashMismatch {
            host: host.content_hash.clone(),
            isolated: isolated.content_hash.clone(),
        });
    }
    let (h, i) = (host.bogo_per_s_sum, isolated.bogo_per_s_sum);
    if !(h.is_finite() && h > 0.0 && i.is_finite() && i > 0.0) {
        return shape(format!("throughput must be positive, got {h} and {i}"));
    }
    let ratio = i / h;
    Ok(ComparisonRow {
        kernel_id: host.kernel_id.clone(),
        mode: Mode::for_workers(host.workers),
        host_bogo_per_s: h,
        isolated_bogo_per_s: i,
        ratio,
        workers: host.workers,
        duration_s: host.limit.duration_secs(),
        bogo_budget: host.limit.budget(),
        content_hash: host.content_hash.clone(),
        anomalous: ratio > 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub cpu_model: String,
    pub cores: usize,
    pub content_hash: String,
    pub version: String,
    pub timestamp: String,
}

impl Environment {
    pub fn capture(content_hash: &str) -> Self {
        Environment {
            cpu_model: cpu_model(),
            cores: crate::runner::logical_cores(),
            content_hash: content_hash.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

fn cpu_model() -> String {
    fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|info| {
            info.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema: u32,
    pub mode: Mode,
    pub environment: Environment,
    pub rows: Vec<ComparisonRow>,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn new(rows: Vec<ComparisonRow>, environment: Environment) -> Result<Self> {
        let mode = rows.first().map_or(Mode::SingleCore, |r| r.mode);
        if rows.iter().any(|r| r.mode != mode) {
            return Err(Error::ShapeMismatch("rows mix single- and all-core runs".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.content_hash != environment.content_hash) {
            return Err(Error::HashMismatch {
                host: environment.content_hash.clone(),
                isolated: r.content_hash.clone(),
            });
        }
        let notes = rows
            .iter()
            .filter(|r| r.anomalous)
            .map(|r| {
                format!(
                    "anomalous: {} ran faster isolated than on the host (ratio {})",
                    r.kernel_id,
                    fixed6(r.ratio)
                )
            })
            .collect();
        Ok(ComparisonReport {
            schema: SCHEMA,
            mode,
            environment,
            rows,
            notes,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: ComparisonReport = serde_json::from_str(text)?;
        if report.schema != SCHEMA {
            return Err(Error::Serialize(format!("unsupported schema {}", report.schema)));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub mode: Mode,
    pub workers: usize,
    /// Transition pairs performed by each worker.
    pub transitions: u64,
    /// Slowest worker.
    #[serde(serialize_with = "ser_fixed6", deserialize_with = "de_f64")]
    pub wall_seconds: f64,
}

impl TransitionRow {
    /// `mode` is explicit because on a one-core machine both benchmark
    /// modes run a single worker.
    pub fn from_records(mode: Mode, records: &[TransitionRecord]) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyInput)?;
        if records.iter().any(|r| r.transitions != first.transitions) {
            return Err(Error::MixedRuns);
        }
        Ok(TransitionRow {
            mode,
            workers: records.len(),
            transitions: first.transitions,
            wall_seconds: records.iter().map(|r| r.wall_seconds).fold(0.0, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub schema: u32,
    pub environment: Environment,
    pub rows: Vec<TransitionRow>,
}

impl TransitionReport {
    pub fn new(rows: Vec<TransitionRow>, environment: Environment) -> Self {
        TransitionReport {
            schema: SCHEMA,
            environment,
            rows,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub worker: usize,
    pub core: Option<usize>,
    pub kernel_id: String,
    pub domain: Domain,
    pub bogo_ops: u64,
    #[serde(serialize_with = "ser_fixed6", deserialize_with = "de_f64")]
    pub wall_seconds: f64,
    #[serde(serialize_with = "ser_fixed6", deserialize_with = "de_f64")]
    pub bogo_per_s: f64,
    pub transitions: u64,
    pub verified: bool,
    pub stop_cause: String,
    pub content_hash: String,
}

impl From<&RunRecord> for RecordRow {
    fn from(r: &RunRecord) -> Self {
        RecordRow {
            worker: r.worker_index,
            core: r.core,
            kernel_id: r.kernel_id.clone(),
            domain: r.domain,
            bogo_ops: r.bogo_ops,
            wall_seconds: r.wall_seconds,
            bogo_per_s: r.bogo_per_s(),
            transitions: r.transitions,
            verified: r.verified,
            stop_cause: r.stop_cause.to_string(),
            content_hash: r.content_hash.clone(),
        }
    }
}

/// Per-worker records of one or more `stress` campaigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressReport {
    pub schema: u32,
    pub environment: Environment,
    pub records: Vec<RecordRow>,
}

impl StressReport {
    pub fn new(records: &[RunRecord], environment: Environment) -> Self {
        StressReport {
            schema: SCHEMA,
            environment,
            records: records.iter().map(RecordRow::from).collect(),
        }
    }
}

/// Something that renders to both report formats.
pub trait Report: Serialize {
    fn csv_rows(&self) -> (&'static [&'static str], Vec<Vec<String>>);

    fn to_csv(&self) -> Result<String> {
        let (header, rows) = self.csv_rows();
        let mut out = format!("# schema={SCHEMA}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            w.write_record(header)?;
            for row in rows {
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        String::from_utf8(out).map_err(|e| Error::Serialize(e.to_string()))
    }

    fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

impl Report for ComparisonReport {
    fn csv_rows(&self) -> (&'static [&'static str], Vec<Vec<String>>) {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.kernel_id.clone(),
                    r.mode.to_string(),
                    fixed6(r.host_bogo_per_s),
                    fixed6(r.isolated_bogo_per_s),
                    fixed6(r.ratio),
                    r.workers.to_string(),
                    r.duration_s.map(fixed6).unwrap_or_default(),
                    r.content_hash.clone(),
                ]
            })
            .collect();
        (&COMPARISON_COLUMNS, rows)
    }
}

impl Report for TransitionReport {
    fn csv_rows(&self) -> (&'static [&'static str], Vec<Vec<String>>) {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.mode.to_string(),
                    r.workers.to_string(),
                    r.transitions.to_string(),
                    fixed6(r.wall_seconds),
                ]
            })
            .collect();
        (&TRANSITION_COLUMNS, rows)
    }
}

impl Report for StressReport {
    fn csv_rows(&self) -> (&'static [&'static str], Vec<Vec<String>>) {
        let rows = self
            .records
            .iter()
            .map(|r| {
                vec![
                    r.worker.to_string(),
                    r.core.map(|c| c.to_string()).unwrap_or_default(),
                    r.kernel_id.clone(),
                    r.domain.to_string(),
                    r.bogo_ops.to_string(),
                    fixed6(r.wall_seconds),
                    fixed6(r.bogo_per_s),
                    r.transitions.to_string(),
                    r.verified.to_string(),
                    r.stop_cause.clone(),
                    r.content_hash.clone(),
                ]
            })
            .collect();
        (&RECORD_COLUMNS, rows)
    }
}

/// Render `report` and write it to `path`.
pub fn emit<R: Report>(report: &R, format: Format, path: &Path) -> Result<()> {
    let text = report.render(format)?;
    fs::write(path, text)?;
    Ok(())
}
