//! CSV writers for curves and traces, plus the JSON run summary.

use std::io::Write;

use serde::Serialize;

use crate::config::{ExperimentConfig, RawConfig};
use crate::error::{Error, Result};
use crate::harness::{PowerCurve, RocCurve};
use crate::signal::SampledTrace;

/// Counts bytes on their way to the inner sink.
struct Counting<W> {
    inner: W,
    bytes: usize,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.bytes += n;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// `pf,pd` header then one `%.6f,%.6f` row per point. Returns bytes written.
pub fn write_roc_csv<W: Write>(curve: &RocCurve, sink: W) -> Result<usize> {
    curve.validate()?;
    let mut out = Counting { inner: sink, bytes: 0 };
    writeln!(out, "pf,pd")?;
    for p in &curve.points {
        writeln!(out, "{:.6},{:.6}", p.pf, p.pd)?;
    }
    out.flush()?;
    Ok(out.bytes)
}

/// `snr_db,pd` rows in SNR order.
pub fn write_power_csv<W: Write>(curve: &PowerCurve, sink: W) -> Result<usize> {
    let mut out = Counting { inner: sink, bytes: 0 };
    writeln!(out, "snr_db,pd")?;
    for e in &curve.entries {
        writeln!(out, "{:.6},{:.6}", e.snr_db, e.pd)?;
    }
    out.flush()?;
    Ok(out.bytes)
}

/// `t,s,y` rows: sample time, clean telegraph, observation.
pub fn write_trace_csv<W: Write>(clean: &SampledTrace, observed: &SampledTrace, sink: W) -> Result<usize> {
    if clean.grid() != observed.grid() {
        return Err(Error::Dimension {
            expected: clean.len(),
            got: observed.len(),
        });
    }
    let grid = clean.grid();
    let mut out = Counting {
        inner: std::io::BufWriter::new(sink),
        bytes: 0,
    };
    writeln!(out, "t,s,y")?;
    for (n, (s, y)) in clean.values().iter().zip(observed.values()).enumerate() {
        writeln!(out, "{:.6},{:.9},{:.9}", grid.time(n), s, y)?;
    }
    out.flush()?;
    Ok(out.bytes)
}

/// Provenance and headline numbers for one CLI run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Option<RawConfig>,
    pub config_hash: Option<String>,
    pub master_seed: Option<u64>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub metrics: serde_json::Value,
}

impl RunSummary {
    pub fn new(command: &str, config: Option<&ExperimentConfig>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: config.map(ExperimentConfig::to_raw),
            config_hash: config.map(ExperimentConfig::hash),
            master_seed: config.map(|c| c.master_seed),
            wall_time_s: 0.0,
            outputs: Vec::new(),
            metrics: serde_json::Value::Null,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}
