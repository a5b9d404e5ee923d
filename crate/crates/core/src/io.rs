//! On-disk R-D sample files and the result document printed by the CLI.
//!
//! An R-D file is plain text:
//!
//! ```text
//! # metric: psnr
//! rate,quality
//! 0.125,30.1
//! 2.5e-1,32.9
//! ```
//!
//! Blank lines and lines starting with `#` are ignored, except that a
//! `# metric: <name>` comment names the quality metric (default `quality`).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bdci::BdciResult;
use crate::error::{Error, Result};
use crate::nn::bundle::sha256_hex;
use crate::rd::{validate_samples, BdValue, IntegrationInterval, Method, Mode, RdCurveSamples};

pub const RD_HEADER: &str = "rate,quality";
pub const DEFAULT_METRIC: &str = "quality";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_number(field: &str, line: usize, what: &str) -> Result<f64> {
    let t = field.trim();
    t.parse::<f64>().map_err(|_| parse_err(line, format!("{what} '{t}' is not a number")))
}

/// Parses R-D text into validated samples labelled `label`.
///
/// Syntax errors carry the 1-based line number; value errors (non-positive
/// rate, non-monotone quality, ...) come from [`validate_samples`].
pub fn parse_rd_text(text: &str, label: &str) -> Result<RdCurveSamples> {
    let mut metric: Option<String> = None;
    let mut header_seen = false;
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(comment) = t.strip_prefix('#') {
            if let Some(name) = comment.trim().strip_prefix("metric:") {
                let name = name.trim();
                if name.is_empty() {
                    return Err(parse_err(lineno, "empty metric name"));
                }
                metric = Some(name.to_string());
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<String> = t.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
            if cols != ["rate", "quality"] {
                return Err(parse_err(lineno, format!("expected header '{RD_HEADER}', found '{t}'")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_err(lineno, format!("expected 2 fields, found {}", fields.len())));
        }
        raw.push((parse_number(fields[0], lineno, "rate")?, parse_number(fields[1], lineno, "quality")?));
    }
    if !header_seen {
        return Err(parse_err(text.lines().count().max(1), format!("missing header '{RD_HEADER}'")));
    }
    validate_samples(&raw, metric.as_deref().unwrap_or(DEFAULT_METRIC), label)
}

/// Renders samples in the R-D file format. Numbers use the shortest
/// round-trip representation, so parsing the output gives the same points.
pub fn format_rd_text(samples: &RdCurveSamples) -> String {
    let mut s = String::new();
    if samples.metric_name() != DEFAULT_METRIC {
        let _ = writeln!(s, "# metric: {}", samples.metric_name());
    }
    s.push_str(RD_HEADER);
    s.push('\n');
    for p in samples.points() {
        let _ = writeln!(s, "{:?},{:?}", p.rate, p.quality);
    }
    s
}

/// A loaded R-D file and the digest of its bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct RdFile {
    pub samples: RdCurveSamples,
    pub digest: InputDigest,
}

/// Identifies one input file in a [`ResultDocument`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub points: usize,
}

/// Reads and validates an R-D file. The source label is the path.
pub fn read_rd_file(path: &Path, role: &str) -> Result<RdFile> {
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| parse_err(1, format!("not UTF-8: {e}")))?;
    let label = path.display().to_string();
    let samples = parse_rd_text(text, &label)?;
    let digest = InputDigest { role: role.to_string(), path: label, sha256: sha256_hex(&bytes), points: samples.len() };
    Ok(RdFile { samples, digest })
}

/// Flags for results that did not come from the plain estimator path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DegenerateFlags {
    /// A segment fell back to the PCHIP integral because both bounds lay in one knot interval.
    pub fallback: bool,
    /// The anchor was integrated exactly (dense or flat curve).
    pub anchor_exact: bool,
    pub target_exact: bool,
}

/// Machine-readable output of `bd` and `bdci`.
///
/// Numbers carry full precision; `summary` is the human line with percents
/// fixed at 4 decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub tool_version: String,
    pub command: String,
    pub mode: Mode,
    pub method: Method,
    pub bundle_hash: Option<String>,
    /// Δr (BD-BR) or ΔD (BD-quality).
    pub delta: f64,
    pub delta_rate_percent: Option<f64>,
    pub sigma_delta: Option<f64>,
    pub interval_delta: Option<[f64; 2]>,
    pub interval_rate_percent: Option<[f64; 2]>,
    pub degenerate: DegenerateFlags,
    pub interval_used: IntegrationInterval,
    pub inputs: Vec<InputDigest>,
    pub summary: String,
}

/// Formats with 4 decimals, never printing `-0.0000`.
pub fn fixed4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::Rate => "BD-BR",
        Mode::Quality => "BD-quality",
    }
}

impl ResultDocument {
    pub fn from_bd(bd: &BdValue, inputs: Vec<InputDigest>) -> Self {
        let summary = match bd.delta_rate_percent {
            Some(p) => format!("{} ({}) {}%", mode_label(bd.mode), bd.method, fixed4(p)),
            None => format!("{} ({}) {}", mode_label(bd.mode), bd.method, fixed4(bd.delta)),
        };
        Self {
            tool_version: crate::VERSION.to_string(),
            command: "bd".to_string(),
            mode: bd.mode,
            method: bd.method,
            bundle_hash: None,
            delta: bd.delta,
            delta_rate_percent: bd.delta_rate_percent,
            sigma_delta: None,
            interval_delta: None,
            interval_rate_percent: None,
            degenerate: DegenerateFlags::default(),
            interval_used: bd.interval,
            inputs,
            summary,
        }
    }

    pub fn from_bdci(r: &BdciResult, bundle_hash: &str, inputs: Vec<InputDigest>) -> Self {
        let degenerate = DegenerateFlags { fallback: r.degenerate_fallback, anchor_exact: r.anchor.exact, target_exact: r.target.exact };
        let mut summary = match (r.mean_rate_percent, r.interval_rate_percent) {
            (Some(m), Some([lo, hi])) => format!(
                "BDCI-BR {}% [{}%, {}%] (delta-r {} sigma {} [{}, {}])",
                fixed4(m),
                fixed4(lo),
                fixed4(hi),
                fixed4(r.mean_delta),
                fixed4(r.sigma_delta),
                fixed4(r.interval_delta[0]),
                fixed4(r.interval_delta[1])
            ),
            _ => format!(
                "BDCI-quality {} [{}, {}] (sigma {})",
                fixed4(r.mean_delta),
                fixed4(r.interval_delta[0]),
                fixed4(r.interval_delta[1]),
                fixed4(r.sigma_delta)
            ),
        };
        if degenerate.fallback {
            summary.push_str(" [degenerate segment: PCHIP fallback]");
        }
        Self {
            tool_version: crate::VERSION.to_string(),
            command: "bdci".to_string(),
            mode: r.mode,
            method: r.method,
            bundle_hash: Some(bundle_hash.to_string()),
            delta: r.mean_delta,
            delta_rate_percent: r.mean_rate_percent,
            sigma_delta: Some(r.sigma_delta),
            interval_delta: Some(r.interval_delta),
            interval_rate_percent: r.interval_rate_percent,
            degenerate,
            interval_used: r.interval,
            inputs,
            summary,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))
    }
}
