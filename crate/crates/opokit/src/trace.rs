//! Frequency-indexed noise traces as recorded by a spectrum analyzer,
//! plus the CSV carrier format and shot-noise normalization.
//!
//! The CSV format is one header line `frequency_hz,power_db` followed by
//! data rows; metadata rides in `# key=value` comment lines anywhere in
//! the file. Frequencies must be strictly increasing.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// What the dB column is referenced to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerReference {
    /// Absolute electrical power in dBm.
    AbsoluteDbm,
    /// dB relative to the shot-noise level.
    RelativeToShot,
}

/// Acquisition metadata carried along with a trace.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceMetadata {
    pub rbw_hz: Option<f64>,
    pub vbw_hz: Option<f64>,
    pub pump_power_w: Option<f64>,
    pub lo_power_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrace {
    pub label: String,
    /// `(frequency_hz, power_db)` pairs, frequencies strictly increasing.
    pub points: Vec<(f64, f64)>,
    pub reference: PowerReference,
    pub metadata: TraceMetadata,
}

impl NoiseTrace {
    pub fn new(
        label: impl Into<String>,
        points: Vec<(f64, f64)>,
        reference: PowerReference,
        metadata: TraceMetadata,
    ) -> Result<Self> {
        let trace = NoiseTrace {
            label: label.into(),
            points,
            reference,
            metadata,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        for pair in self.points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::validation(format!(
                    "trace '{}': frequencies not strictly increasing at {} Hz",
                    self.label, pair[1].0
                )));
            }
        }
        for (name, v) in [("rbw_hz", self.metadata.rbw_hz), ("vbw_hz", self.metadata.vbw_hz)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::validation(format!(
                        "trace '{}': {name} must be > 0 (got {v})",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    /// Serialize to the trace CSV format. Floats use the shortest
    /// round-trip representation, so values survive a write/parse cycle.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# label={}", self.label);
        let _ = writeln!(
            out,
            "# reference={}",
            match self.reference {
                PowerReference::AbsoluteDbm => "absolute_dbm",
                PowerReference::RelativeToShot => "relative_to_shot",
            }
        );
        for (key, v) in [
            ("rbw_hz", self.metadata.rbw_hz),
            ("vbw_hz", self.metadata.vbw_hz),
            ("pump_power_w", self.metadata.pump_power_w),
            ("lo_power_w", self.metadata.lo_power_w),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "# {key}={v:?}");
            }
        }
        out.push_str("frequency_hz,power_db\n");
        for (f, p) in &self.points {
            let _ = writeln!(out, "{f:?},{p:?}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Parse a trace CSV file from disk.
pub fn parse_trace_csv(path: impl AsRef<Path>) -> Result<NoiseTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_trace_str(&text, &path.display().to_string())
}

/// Parse trace CSV text; `origin` names the source in error messages.
pub fn parse_trace_str(text: &str, origin: &str) -> Result<NoiseTrace> {
    let mut label = String::from("trace");
    let mut reference = PowerReference::RelativeToShot;
    let mut metadata = TraceMetadata::default();
    let mut points = Vec::new();
    let mut saw_header = false;

    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some((key, value)) = comment.split_once('=') {
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "label" => label = value.to_string(),
                    "reference" => {
                        reference = match value {
                            "absolute_dbm" => PowerReference::AbsoluteDbm,
                            "relative_to_shot" => PowerReference::RelativeToShot,
                            other => {
                                return Err(perr(
                                    lineno,
                                    format!("unknown reference '{other}'"),
                                ))
                            }
                        }
                    }
                    "rbw_hz" | "vbw_hz" | "pump_power_w" | "lo_power_w" => {
                        let v: f64 = value.parse().map_err(|_| {
                            perr(lineno, format!("bad numeric value '{value}' for {key}"))
                        })?;
                        match key {
                            "rbw_hz" => metadata.rbw_hz = Some(v),
                            "vbw_hz" => metadata.vbw_hz = Some(v),
                            "pump_power_w" => metadata.pump_power_w = Some(v),
                            _ => metadata.lo_power_w = Some(v),
                        }
                    }
                    _ => {} // unknown metadata is carried in comments only; ignore
                }
            }
            continue;
        }
        if !saw_header {
            if line != "frequency_hz,power_db" {
                return Err(perr(
                    lineno,
                    format!("expected header 'frequency_hz,power_db', found '{line}'"),
                ));
            }
            saw_header = true;
            continue;
        }
        let (fs, ps) = line
            .split_once(',')
            .ok_or_else(|| perr(lineno, format!("expected 'frequency,power', found '{line}'")))?;
        let f: f64 = fs
            .trim()
            .parse()
            .map_err(|_| perr(lineno, format!("bad frequency '{}'", fs.trim())))?;
        let p: f64 = ps
            .trim()
            .parse()
            .map_err(|_| perr(lineno, format!("bad power '{}'", ps.trim())))?;
        points.push((f, p));
    }
    if !saw_header {
        return Err(perr(1, "missing 'frequency_hz,power_db' header".to_string()));
    }
    NoiseTrace::new(label, points, reference, metadata)
}

/// Subtract the shot-noise trace from a signal trace point by point.
///
/// The two traces must share the frequency grid exactly; no
/// interpolation is performed.
pub fn normalize_to_shot(signal: &NoiseTrace, shot: &NoiseTrace) -> Result<NoiseTrace> {
    signal.validate()?;
    shot.validate()?;
    if signal.points.len() != shot.points.len() {
        return Err(Error::validation(format!(
            "grid mismatch: signal has {} points, shot has {}",
            signal.points.len(),
            shot.points.len()
        )));
    }
    for ((fs, _), (fh, _)) in signal.points.iter().zip(&shot.points) {
        if fs != fh {
            return Err(Error::validation(format!(
                "grid mismatch at {fs} Hz (shot trace has {fh} Hz)"
            )));
        }
    }
    let points = signal
        .points
        .iter()
        .zip(&shot.points)
        .map(|(&(f, p), &(_, q))| (f, p - q))
        .collect();
    NoiseTrace::new(
        format!("{} (rel. shot)", signal.label),
        points,
        PowerReference::RelativeToShot,
        signal.metadata,
    )
}
