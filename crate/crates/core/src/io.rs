//! File ingestion and result emission.
//!
//! Every artifact starts with `#` header lines carrying the tool version and
//! the fully resolved run configuration as one line of JSON, so a file alone
//! is enough to reproduce it. Nothing time- or host-dependent is written.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::detector::DetectorConfig;
use crate::device::Detector;
use crate::error::{Error, Result};
use crate::pulse_train::{SweepRow, TraceResult};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

fn in_file(path: &Path, e: Error) -> Error {
    Error::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    }
}

/// Reads and validates a detector JSON file. A relative `curve_file` inside
/// it is resolved against the file's directory.
pub fn load_detector(path: &Path) -> Result<Detector> {
    load_detector_with_curve(path, None)
}

/// As [`load_detector`], with an optional curve CSV replacing whatever the
/// file specifies.
pub fn load_detector_with_curve(path: &Path, curve: Option<&Path>) -> Result<Detector> {
    let text = fs::read_to_string(path).map_err(|e| in_file(path, e.into()))?;
    let mut config: DetectorConfig = serde_json::from_str(&text).map_err(|e| in_file(path, e.into()))?;
    if let Some(c) = curve {
        config.curve_file = Some(c.to_path_buf());
    }
    Detector::from_config(&config, path.parent()).map_err(|e| in_file(path, e))
}

/// A path to a detector file, or else the name of a bundled preset.
pub fn resolve_detector(spec: &str, curve: Option<&Path>) -> Result<Detector> {
    let path = Path::new(spec);
    if path.is_file() {
        return load_detector_with_curve(path, curve);
    }
    let preset = Detector::preset(spec)?;
    match curve {
        None => Ok(preset),
        Some(c) => {
            let mut config = preset.params.to_config();
            config.curve_file = Some(c.to_path_buf());
            Detector::from_config(&config, None)
        }
    }
}

/// Inclusive dBm range written `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PowerRange {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: &str| Error::config("power range", text, reason);
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(bad("expected start:stop:step"));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let range = Self {
            start: num(a)?,
            stop: num(b)?,
            step: num(c)?,
        };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<()> {
        let text = format!("{}:{}:{}", self.start, self.stop, self.step);
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::config("power range", text, "values must be finite"));
        }
        if !(self.step > 0.0) {
            return Err(Error::config("power range", text, "step must be > 0"));
        }
        if self.start > self.stop {
            return Err(Error::config("power range", text, "start must not exceed stop"));
        }
        Ok(())
    }

    /// Grid points start, start+step, … up to stop (inclusive within 1e-9
    /// of a step). Each point is computed from its index.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| {
                let p = self.start + i as f64 * self.step;
                (p * 1e9).round() / 1e9
            })
            .collect()
    }
}

/// Writes the provenance header: version, then the resolved config.
pub fn write_header<W: Write + ?Sized, C: Serialize>(out: &mut W, command: &str, config: &C) -> Result<()> {
    writeln!(out, "# {VERSION}")?;
    writeln!(out, "# command: {command}")?;
    writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
    Ok(())
}

/// Flat `key = value` report lines.
pub struct Report<'a, W: Write + ?Sized> {
    out: &'a mut W,
}

impl<'a, W: Write + ?Sized> Report<'a, W> {
    pub fn new(out: &'a mut W) -> Self {
        Self { out }
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> Result<&mut Self> {
        writeln!(self.out, "{key} = {value}")?;
        Ok(self)
    }
}

pub const SWEEP_HEADER: [&str; 4] = ["power_dbm", "photons_per_pulse", "model_rate_hz", "observed_rate_hz"];
pub const TRACE_HEADER: [&str; 5] = ["slot", "s_off", "s_on", "g", "p_on"];
pub const VALIDATE_HEADER: [&str; 6] = ["slot", "recursion", "exact", "mc", "mc_stderr", "z"];

/// Shortest round-trip scientific form.
fn sci(x: f64) -> String {
    format!("{x:e}")
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.power_dbm.to_string(),
            sci(r.photons_per_pulse),
            sci(r.model_rate_hz),
            sci(r.observed_rate_hz),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(out: W, trace: &TraceResult) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(TRACE_HEADER)?;
    for i in 0..trace.len() {
        w.write_record([
            (i + 1).to_string(),
            sci(trace.s_off[i]),
            sci(trace.s_on[i]),
            sci(trace.g[i]),
            sci(trace.p_on[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the oracle comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateRow {
    pub recursion: f64,
    pub exact: f64,
    pub mc: f64,
    pub mc_stderr: f64,
    pub z: f64,
}

pub fn write_validate_csv<W: Write>(out: W, rows: &[ValidateRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(VALIDATE_HEADER)?;
    for (i, r) in rows.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            sci(r.recursion),
            sci(r.exact),
            sci(r.mc),
            sci(r.mc_stderr),
            sci(r.z),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a header plus a CSV body to `path`.
pub fn write_csv_file<C: Serialize>(
    path: &Path,
    command: &str,
    config: &C,
    body: impl FnOnce(&mut Vec<u8>) -> Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    write_header(&mut buf, command, config)?;
    body(&mut buf)?;
    fs::write(path, buf).map_err(|e| in_file(path, e.into()))
}

/// Resolved detector description for headers.
#[derive(Debug, Clone, Serialize)]
pub struct DetectorEcho {
    #[serde(flatten)]
    pub config: DetectorConfig,
    pub curve_source: String,
}

impl From<&Detector> for DetectorEcho {
    fn from(d: &Detector) -> Self {
        let mut config = d.params.to_config();
        config.curve_file = None;
        Self {
            config,
            curve_source: d.curve_source.clone(),
        }
    }
}
