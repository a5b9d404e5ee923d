use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{fit_pchip, PiecewiseCubic};
use crate::rd::{Mode, XySeries};
use crate::synth::quad::adaptive_simpson;

/// Absolute tolerance for the adaptive Simpson oracle.
pub const ORACLE_TOL: f64 = 1e-10;
const ORACLE_MAX_DEPTH: u32 = 48;
const DOMAIN_SLACK: f64 = 1e-9;
const MONOTONE_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LogRd,
    PowerRd,
    RationalRd,
    SplineRd,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::LogRd, Family::PowerRd, Family::RationalRd, Family::SplineRd];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::LogRd => "log_rd",
            Family::PowerRd => "power_rd",
            Family::RationalRd => "rational_rd",
            Family::SplineRd => "spline_rd",
        }
    }
}

/// Quality-metric flavour: value ranges and direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    PsnrLike,
    SsimLike,
    LpipsLike,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::PsnrLike, Profile::SsimLike, Profile::LpipsLike];

    pub fn metric(self) -> &'static str {
        match self {
            Profile::PsnrLike => "psnr",
            Profile::SsimLike => "ssim",
            Profile::LpipsLike => "lpips",
        }
    }

    /// Quality at the low and high ends of the log-rate domain.
    fn draw_qualities<R: Rng + ?Sized>(self, rng: &mut R) -> (f64, f64) {
        match self {
            Profile::PsnrLike => {
                let lo = rng.random_range(24.0..34.0);
                (lo, lo + rng.random_range(6.0..16.0))
            }
            Profile::SsimLike => {
                let lo = rng.random_range(0.55..0.85);
                (lo, lo + rng.random_range(0.04..(0.995 - lo)))
            }
            Profile::LpipsLike => {
                let hi = rng.random_range(0.25..0.65);
                (hi, hi * rng.random_range(0.05..0.5))
            }
        }
    }
}

/// Parameters of a curve `y = f(x)` with `x` the natural log-rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CurveParams {
    /// `y = a·ln(x + c) + b`
    LogRd { a: f64, b: f64, c: f64 },
    /// `y = a − b·(x + c)^(−p)`
    PowerRd { a: f64, b: f64, c: f64, p: f64 },
    /// `y = a − b/(x + c)`
    RationalRd { a: f64, b: f64, c: f64 },
    /// Monotone PCHIP through the control points.
    SplineRd { xs: Vec<f64>, ys: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CurveSpec {
    params: CurveParams,
    domain: [f64; 2],
    metric: String,
}

/// A strictly monotone synthetic R-D curve with an exact integral oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveSpec", into = "CurveSpec")]
pub struct AnalyticCurve {
    params: CurveParams,
    x_lo: f64,
    x_hi: f64,
    metric: String,
    spline: Option<PiecewiseCubic>,
}

impl TryFrom<CurveSpec> for AnalyticCurve {
    type Error = Error;

    fn try_from(s: CurveSpec) -> Result<Self> {
        AnalyticCurve::new(s.params, s.domain[0], s.domain[1], &s.metric)
    }
}

impl From<AnalyticCurve> for CurveSpec {
    fn from(c: AnalyticCurve) -> Self {
        CurveSpec { params: c.params, domain: [c.x_lo, c.x_hi], metric: c.metric }
    }
}

impl AnalyticCurve {
    /// Builds a curve and checks it is finite and strictly monotone on a
    /// 10³-point grid of its domain.
    pub fn new(params: CurveParams, x_lo: f64, x_hi: f64, metric: &str) -> Result<Self> {
        if !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::DegenerateInterval { lo: x_lo, hi: x_hi });
        }
        let spline = match &params {
            CurveParams::SplineRd { xs, ys } => {
                let s = fit_pchip(&XySeries::new(xs.clone(), ys.clone(), Mode::Quality)?)?;
                let (lo, hi) = s.domain();
                if x_lo < lo || x_hi > hi {
                    return Err(Error::OutOfDomain { x: x_lo, lo, hi });
                }
                Some(s)
            }
            _ => None,
        };
        let curve = Self { params, x_lo, x_hi, metric: metric.to_string(), spline };
        curve.check_monotone()?;
        Ok(curve)
    }

    fn check_monotone(&self) -> Result<()> {
        let step = (self.x_hi - self.x_lo) / MONOTONE_GRID as f64;
        let ys: Vec<f64> = (0..=MONOTONE_GRID)
            .map(|i| self.eval(if i == MONOTONE_GRID { self.x_hi } else { self.x_lo + step * i as f64 }))
            .collect();
        if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
            return Err(Error::NonFiniteQuality { index: i, quality: ys[i] });
        }
        let increasing = ys[MONOTONE_GRID] > ys[0];
        for (i, w) in ys.windows(2).enumerate() {
            if (w[1] > w[0]) != increasing || w[1] == w[0] {
                return Err(Error::NonMonotoneQuality { rate: self.x_lo + step * (i + 1) as f64 });
            }
        }
        Ok(())
    }

    /// Rejects curves whose last quarter of the domain is a near-plateau
    /// (under 2% of the quality range).
    pub fn has_plateau(&self) -> bool {
        let x75 = self.x_lo + 0.75 * (self.x_hi - self.x_lo);
        let total = self.eval(self.x_hi) - self.eval(self.x_lo);
        (self.eval(self.x_hi) - self.eval(x75)).abs() < 0.02 * total.abs()
    }

    pub fn params(&self) -> &CurveParams {
        &self.params
    }

    pub fn family(&self) -> Family {
        match self.params {
            CurveParams::LogRd { .. } => Family::LogRd,
            CurveParams::PowerRd { .. } => Family::PowerRd,
            CurveParams::RationalRd { .. } => Family::RationalRd,
            CurveParams::SplineRd { .. } => Family::SplineRd,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x_lo, self.x_hi)
    }

    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn has_closed_form(&self) -> bool {
        self.spline.is_none()
    }

    pub fn is_increasing(&self) -> bool {
        self.eval(self.x_hi) > self.eval(self.x_lo)
    }

    /// Quality at the two domain ends, sorted ascending.
    pub fn quality_range(&self) -> (f64, f64) {
        let (a, b) = (self.eval(self.x_lo), self.eval(self.x_hi));
        (a.min(b), a.max(b))
    }

    /// `f(x)`; no domain check.
    pub fn eval(&self, x: f64) -> f64 {
        match self.params {
            CurveParams::LogRd { a, b, c } => a * (x + c).ln() + b,
            CurveParams::PowerRd { a, b, c, p } => a - b * (x + c).powf(-p),
            CurveParams::RationalRd { a, b, c } => a - b / (x + c),
            CurveParams::SplineRd { .. } => {
                let s = self.spline.as_ref().expect("spline built in constructor");
                let (lo, hi) = s.domain();
                s.eval(x.clamp(lo, hi)).expect("clamped into domain")
            }
        }
    }

    fn antiderivative(&self, x: f64) -> Option<f64> {
        match self.params {
            CurveParams::LogRd { a, b, c } => {
                let u = x + c;
                Some(a * (u * u.ln() - u) + b * x)
            }
            CurveParams::PowerRd { a, b, c, p } => {
                let u = x + c;
                let g = if p == 1.0 { u.ln() } else { u.powf(1.0 - p) / (1.0 - p) };
                Some(a * x - b * g)
            }
            CurveParams::RationalRd { a, b, c } => Some(a * x - b * (x + c).ln()),
            CurveParams::SplineRd { .. } => None,
        }
    }

    fn clamp_to_domain(&self, x: f64) -> Result<f64> {
        let slack = DOMAIN_SLACK * (self.x_hi - self.x_lo).max(1.0);
        if !(x >= self.x_lo - slack && x <= self.x_hi + slack) {
            return Err(Error::OutOfDomain { x, lo: self.x_lo, hi: self.x_hi });
        }
        Ok(x.clamp(self.x_lo, self.x_hi))
    }

    /// `f⁻¹(y)` for `y` in the quality range.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let (q_lo, q_hi) = self.quality_range();
        let slack = DOMAIN_SLACK * (q_hi - q_lo).max(1e-3);
        if !(y >= q_lo - slack && y <= q_hi + slack) {
            return Err(Error::OutOfDomain { x: y, lo: q_lo, hi: q_hi });
        }
        let y = y.clamp(q_lo, q_hi);
        let x = match self.params {
            CurveParams::LogRd { a, b, c } => ((y - b) / a).exp() - c,
            CurveParams::PowerRd { a, b, c, p } => ((a - y) / b).powf(-1.0 / p) - c,
            CurveParams::RationalRd { a, b, c } => b / (a - y) - c,
            CurveParams::SplineRd { .. } => self.bisect(y),
        };
        Ok(x.clamp(self.x_lo, self.x_hi))
    }

    fn bisect(&self, y: f64) -> f64 {
        let inc = self.is_increasing();
        let (mut lo, mut hi) = (self.x_lo, self.x_hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (self.eval(mid) < y) == inc {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `∫_a^b f(x) dx` in closed form where available, otherwise by adaptive
/// Simpson to an absolute tolerance of 1e-10.
pub fn oracle_integral(curve: &AnalyticCurve, a: f64, b: f64) -> Result<f64> {
    let a = curve.clamp_to_domain(a)?;
    let b = curve.clamp_to_domain(b)?;
    match (curve.antiderivative(b), curve.antiderivative(a)) {
        (Some(fb), Some(fa)) => Ok(fb - fa),
        _ => oracle_integral_simpson(curve, a, b),
    }
}

/// The adaptive Simpson path of [`oracle_integral`], for every family.
pub fn oracle_integral_simpson(curve: &AnalyticCurve, a: f64, b: f64) -> Result<f64> {
    let a = curve.clamp_to_domain(a)?;
    let b = curve.clamp_to_domain(b)?;
    match &curve.spline {
        // Splitting at knots keeps each panel smooth.
        Some(s) => {
            let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
            let mut cuts = vec![lo];
            cuts.extend(s.breakpoints().iter().copied().filter(|&k| k > lo && k < hi));
            cuts.push(hi);
            let tol = ORACLE_TOL / (cuts.len() - 1) as f64;
            let mut total = 0.0;
            for w in cuts.windows(2) {
                total += adaptive_simpson(|x| curve.eval(x), w[0], w[1], tol, ORACLE_MAX_DEPTH)?;
            }
            Ok(sign * total)
        }
        None => adaptive_simpson(|x| curve.eval(x), a, b, ORACLE_TOL, ORACLE_MAX_DEPTH),
    }
}

/// The curve seen in the `(X, Y)` plane of a BD mode.
///
/// BD-quality integrates quality over log-rate; BD-BR integrates log-rate
/// over quality via `∫ f⁻¹ = [q·f⁻¹(q)] − ∫ f`.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedCurve<'a> {
    pub curve: &'a AnalyticCurve,
    pub mode: Mode,
}

impl<'a> ProjectedCurve<'a> {
    pub fn new(curve: &'a AnalyticCurve, mode: Mode) -> Self {
        Self { curve, mode }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self.mode {
            Mode::Quality => self.curve.domain(),
            Mode::Rate => self.curve.quality_range(),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self.mode {
            Mode::Quality => Ok(self.curve.eval(self.curve.clamp_to_domain(x)?)),
            Mode::Rate => self.curve.inverse(x),
        }
    }

    /// `∫_lo^hi Y dX`.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        match self.mode {
            Mode::Quality => oracle_integral(self.curve, lo, hi),
            Mode::Rate => {
                let (x1, x2) = (self.curve.inverse(lo)?, self.curve.inverse(hi)?);
                Ok(hi * x2 - lo * x1 - oracle_integral(self.curve, x1, x2)?)
            }
        }
    }
}

/// Draws log-rate domain parameters: `(x_lo, x_hi)`.
fn draw_domain<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let lo = rng.random_range(-3.0..-0.5);
    (lo, lo + rng.random_range(2.0..4.5))
}

/// Log-uniform offset from the domain start to the basis singularity,
/// relative to the domain width; small values give sharp knees.
fn draw_shape<R: Rng + ?Sized>(rng: &mut R, width: f64) -> f64 {
    width * (rng.random_range((0.03f64).ln()..(3.0f64).ln())).exp()
}

/// A curve of `family` through `(x_lo, q_start)` and `(x_hi, q_end)`.
pub fn curve_through<R: Rng + ?Sized>(
    family: Family,
    domain: (f64, f64),
    qualities: (f64, f64),
    metric: &str,
    rng: &mut R,
) -> Result<AnalyticCurve> {
    let (x_lo, x_hi) = domain;
    let (q0, q1) = qualities;
    let width = x_hi - x_lo;
    // y = A·g(x) + B, g increasing; A < 0 gives a decreasing curve.
    let fit_ab = |g: &dyn Fn(f64) -> f64| {
        let a = (q1 - q0) / (g(x_hi) - g(x_lo));
        (a, q0 - a * g(x_lo))
    };
    let params = match family {
        Family::LogRd => {
            let c = draw_shape(rng, width) - x_lo;
            let (a, b) = fit_ab(&|x| (x + c).ln());
            CurveParams::LogRd { a, b, c }
        }
        Family::PowerRd => {
            let c = draw_shape(rng, width) - x_lo;
            let p = rng.random_range(0.3..2.0);
            let (a_, b_) = fit_ab(&|x| -(x + c).powf(-p));
            CurveParams::PowerRd { a: b_, b: a_, c, p }
        }
        Family::RationalRd => {
            let c = draw_shape(rng, width) - x_lo;
            let (a_, b_) = fit_ab(&|x| -1.0 / (x + c));
            CurveParams::RationalRd { a: b_, b: a_, c }
        }
        Family::SplineRd => {
            let k = rng.random_range(4..=7usize);
            let h = width / (k - 1) as f64;
            let xs: Vec<f64> = (0..k)
                .map(|i| match i {
                    0 => x_lo,
                    _ if i == k - 1 => x_hi,
                    _ => x_lo + h * (i as f64 + rng.random_range(-0.3..0.3)),
                })
                .collect();
            // Decaying increments give a concave, knee-shaped profile.
            let decay = rng.random_range(0.0..3.0);
            let mut acc = 0.0;
            let mut cum = vec![0.0];
            for i in 1..k {
                acc += (-decay * i as f64 / k as f64).exp() * rng.random_range(0.3..1.0);
                cum.push(acc);
            }
            let ys = cum.iter().map(|c| q0 + (q1 - q0) * c / acc).collect();
            CurveParams::SplineRd { xs, ys }
        }
    };
    AnalyticCurve::new(params, x_lo, x_hi, metric)
}

/// A random curve of `family` with a randomly drawn domain and profile.
///
/// Rejection-samples until the curve is monotone and free of end plateaus.
pub fn gen_curve(family: Family, rng_seed: u64) -> AnalyticCurve {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let profile = Profile::ALL[rng.random_range(0..Profile::ALL.len())];
    gen_curve_with(family, profile, &mut rng)
}

pub fn gen_curve_with<R: Rng + ?Sized>(family: Family, profile: Profile, rng: &mut R) -> AnalyticCurve {
    loop {
        let domain = draw_domain(rng);
        let q = profile.draw_qualities(rng);
        match curve_through(family, domain, q, profile.metric(), rng) {
            Ok(c) if !c.has_plateau() => return c,
            _ => {}
        }
    }
}
