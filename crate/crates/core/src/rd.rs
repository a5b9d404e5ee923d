//! Rate-distortion domain types and the preprocessing steps shared by every
//! BD estimator: validation, log-rate transform, axis projection, interval
//! intersection, and conversion of integrals into BD values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance under which two abscissae count as the same value.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// Which BD quantity is being computed.
///
/// `Rate` is BD-BR (X = quality, Y = log-rate); `Quality` is BD-quality
/// (X = log-rate, Y = quality).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[serde(rename = "bd-br")]
    Rate,
    #[serde(rename = "bd-quality")]
    Quality,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Rate, Mode::Quality];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Rate => "bd-br",
            Mode::Quality => "bd-quality",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "br" | "bd-br" | "rate" => Ok(Mode::Rate),
            "quality" | "bd-quality" | "q" => Ok(Mode::Quality),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

/// The estimator that produced a [`BdValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cubic,
    Csi,
    Pchip,
    Akima,
    BdciMean,
    Oracle,
}

impl Method {
    pub const CLASSICAL: [Method; 4] = [Method::Cubic, Method::Csi, Method::Pchip, Method::Akima];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cubic => "cubic",
            Method::Csi => "csi",
            Method::Pchip => "pchip",
            Method::Akima => "akima",
            Method::BdciMean => "bdci-mean",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cubic" => Ok(Method::Cubic),
            "csi" => Ok(Method::Csi),
            "pchip" => Ok(Method::Pchip),
            "akima" => Ok(Method::Akima),
            "bdci-mean" | "bdci" => Ok(Method::BdciMean),
            "oracle" => Ok(Method::Oracle),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// Direction of quality as rate grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub rate: f64,
    pub quality: f64,
}

impl RdPoint {
    pub fn new(rate: f64, quality: f64) -> Self {
        Self { rate, quality }
    }
}

/// Validated R-D samples for one codec on one content item.
///
/// Points are sorted by strictly increasing rate and quality is strictly
/// monotone. After [`to_log_rate`] the `rate` field holds natural log-rates,
/// which may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdCurveSamples {
    points: Vec<RdPoint>,
    metric_name: String,
    source_label: String,
    direction: Direction,
    log_rate: bool,
}

impl RdCurveSamples {
    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Whether `rate` already holds log-rates.
    pub fn is_log_rate(&self) -> bool {
        self.log_rate
    }

    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }

    pub fn qualities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.quality).collect()
    }

    /// Returns a copy with every (linear) rate multiplied by `factor`.
    pub fn scale_rates(&self, factor: f64) -> Result<Self> {
        let raw: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| (p.rate * factor, p.quality))
            .collect();
        validate_samples(&raw, &self.metric_name, &self.source_label)
    }

    /// Returns a copy with `offset` added to every quality value.
    pub fn shift_quality(&self, offset: f64) -> Result<Self> {
        let raw: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| (p.rate, p.quality + offset))
            .collect();
        validate_samples(&raw, &self.metric_name, &self.source_label)
    }
}

fn near(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= DUPLICATE_TOL * scale
}

/// Validates raw `(rate, quality)` pairs and sorts them by rate.
pub fn validate_samples(
    raw_points: &[(f64, f64)],
    metric_name: &str,
    source_label: &str,
) -> Result<RdCurveSamples> {
    if raw_points.len() < 2 {
        return Err(Error::TooFewPoints { required: 2, got: raw_points.len() });
    }
    for (index, &(rate, quality)) in raw_points.iter().enumerate() {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::NonPositiveRate { index, rate });
        }
        if !quality.is_finite() {
            return Err(Error::NonFiniteQuality { index, quality });
        }
    }
    let mut points: Vec<RdPoint> = raw_points.iter().map(|&(r, q)| RdPoint::new(r, q)).collect();
    points.sort_by(|a, b| a.rate.total_cmp(&b.rate));

    for w in points.windows(2) {
        if near(w[0].rate, w[1].rate, w[0].rate.abs().max(w[1].rate.abs())) {
            return Err(Error::DuplicateRate { rate: w[1].rate });
        }
    }

    let direction = if points[1].quality > points[0].quality {
        Direction::Increasing
    } else if points[1].quality < points[0].quality {
        Direction::Decreasing
    } else {
        return Err(Error::NonMonotoneQuality { rate: points[1].rate });
    };
    for w in points.windows(2) {
        let ok = match direction {
            Direction::Increasing => w[1].quality > w[0].quality,
            Direction::Decreasing => w[1].quality < w[0].quality,
        };
        if !ok {
            return Err(Error::NonMonotoneQuality { rate: w[1].rate });
        }
    }

    Ok(RdCurveSamples {
        points,
        metric_name: metric_name.to_string(),
        source_label: source_label.to_string(),
        direction,
        log_rate: false,
    })
}

/// Replaces every rate by its natural logarithm. Already-transformed samples
/// are returned unchanged.
pub fn to_log_rate(samples: &RdCurveSamples) -> RdCurveSamples {
    if samples.log_rate {
        return samples.clone();
    }
    let points = samples
        .points
        .iter()
        .map(|p| RdPoint::new(p.rate.ln(), p.quality))
        .collect();
    RdCurveSamples { points, log_rate: true, ..samples.clone() }
}

/// Ordered `(x, y)` points ready for interpolation or integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XySeries {
    xs: Vec<f64>,
    ys: Vec<f64>,
    mode: Mode,
}

impl XySeries {
    /// Builds a series, checking that `xs` is strictly increasing with no
    /// near-duplicates and that all values are finite.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, mode: Mode) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch { xs: xs.len(), ys: ys.len() });
        }
        if xs.len() < 2 {
            return Err(Error::TooFewPoints { required: 2, got: xs.len() });
        }
        if let Some(&bad) = xs.iter().chain(ys.iter()).find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteQuality { index: 0, quality: bad });
        }
        let span = xs[xs.len() - 1] - xs[0];
        for w in xs.windows(2) {
            if w[1] < w[0] {
                return Err(Error::UnsortedX);
            }
            if near(w[0], w[1], span.abs()) {
                return Err(Error::DuplicateX { x: w[1] });
            }
        }
        Ok(Self { xs, ys, mode })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// The full X range covered by the samples.
    pub fn span(&self) -> IntegrationInterval {
        IntegrationInterval { lo: self.x_min(), hi: self.x_max() }
    }
}

/// Projects log-rate samples onto the (X, Y) plane used by `mode`.
///
/// BD-BR swaps the axes so that log-rate becomes a function of quality; the
/// result is re-sorted so X increases, which reverses the point order for
/// decreasing-quality metrics.
pub fn project_axes(log_samples: &RdCurveSamples, mode: Mode) -> Result<XySeries> {
    let mut pairs: Vec<(f64, f64)> = match mode {
        Mode::Quality => log_samples.points.iter().map(|p| (p.rate, p.quality)).collect(),
        Mode::Rate => log_samples.points.iter().map(|p| (p.quality, p.rate)).collect(),
    };
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (xs, ys) = pairs.into_iter().unzip();
    XySeries::new(xs, ys, mode)
}

/// A non-degenerate closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationInterval {
    pub lo: f64,
    pub hi: f64,
}

impl IntegrationInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let scale = lo.abs().max(hi.abs()).max(1.0);
        if !(lo.is_finite() && hi.is_finite()) || hi - lo <= DUPLICATE_TOL * scale {
            return Err(Error::DegenerateInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Intersection of the X ranges of two series.
pub fn intersect_intervals(a: &XySeries, b: &XySeries) -> Result<IntegrationInterval> {
    let lo = a.x_min().max(b.x_min());
    let hi = a.x_max().min(b.x_max());
    if lo >= hi {
        return Err(Error::EmptyIntersection { lo, hi });
    }
    IntegrationInterval::new(lo, hi).map_err(|_| Error::EmptyIntersection { lo, hi })
}

/// A BD result: the mean log-rate or quality difference over `interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdValue {
    /// Δr in BD-BR mode, ΔD in BD-quality mode.
    pub delta: f64,
    /// ΔR in percent; BD-BR mode only.
    pub delta_rate_percent: Option<f64>,
    pub interval: IntegrationInterval,
    pub mode: Mode,
    pub method: Method,
}

/// Maps a log-rate difference to a percent rate change.
pub fn log_delta_to_percent(delta_r: f64) -> f64 {
    delta_r.exp_m1() * 100.0
}

/// Turns two integrals over the same interval into a BD value.
pub fn delta_from_integrals(
    integral_target: f64,
    integral_anchor: f64,
    interval: IntegrationInterval,
    mode: Mode,
    method: Method,
) -> BdValue {
    let delta = (integral_target - integral_anchor) / interval.width();
    let delta_rate_percent = match mode {
        Mode::Rate => Some(log_delta_to_percent(delta)),
        Mode::Quality => None,
    };
    BdValue { delta, delta_rate_percent, interval, mode, method }
}
