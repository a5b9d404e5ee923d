use serde::{Deserialize, Serialize};

use crate::bdci::norm::{normalize_series, NormParams};
use crate::bdci::segment::{build_input, segment_interval, support_start, SegmentCategory, SegmentInstance};
use crate::classic::{check_len, check_metrics, prepare_pair, BD_MIN_POINTS, DENSE_ANCHOR_MIN};
use crate::error::{Error, Result};
use crate::interp::fit_pchip;
use crate::nn::ModelBundle;
use crate::rd::{intersect_intervals, log_delta_to_percent, IntegrationInterval, Method, Mode, RdCurveSamples, XySeries};

/// Half-width of the confidence interval in standard deviations.
pub const CI_SIGMAS: f64 = 3.0;

/// A Gaussian belief `N(mu, sigma^2)` over a definite integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEstimate {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianEstimate {
    pub fn exact(mu: f64) -> Self {
        Self { mu, sigma: 0.0 }
    }

    /// Sum of independent Gaussians.
    pub fn aggregate<I: IntoIterator<Item = GaussianEstimate>>(parts: I) -> Self {
        let (mu, var) = parts.into_iter().fold((0.0, 0.0), |(m, v), g| (m + g.mu, v + g.sigma * g.sigma));
        Self { mu, sigma: var.sqrt() }
    }
}

/// Network output for one segment, in normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPrediction {
    pub segment: SegmentInstance,
    pub mu_norm: f64,
    pub sigma_norm: f64,
}

/// Estimated integral of one curve, with its per-segment breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveIntegral {
    pub estimate: GaussianEstimate,
    pub segments: Vec<SegmentPrediction>,
    pub degenerate_fallback: bool,
    /// True when the integral came from a closed-form path (flat or dense curve).
    pub exact: bool,
}

fn predict_segment(bundle: &ModelBundle, seg: &SegmentInstance, series_norm: &XySeries) -> Result<SegmentPrediction> {
    let input = build_input(seg, series_norm);
    let (mu, log_sigma) = bundle.model(seg.category).forward(&input)?;
    let (offset, scale) = bundle.head().offset_scale(seg.category, &input);
    let mu_norm = offset + scale * mu;
    let sigma_norm = scale * bundle.log_sigma_clamp().apply(log_sigma).exp();
    Ok(SegmentPrediction { segment: *seg, mu_norm, sigma_norm })
}

/// Both bounds fall inside one knot interval: μ from the PCHIP fit, σ from
/// the interior-full network for that knot interval, scaled by the covered
/// fraction of the interval.
fn degenerate_fallback(
    bundle: &ModelBundle,
    series_norm: &XySeries,
    x_lo: f64,
    x_hi: f64,
) -> Result<SegmentPrediction> {
    let xs = series_norm.xs();
    let n = xs.len();
    let k = xs.partition_point(|&x| x <= x_lo).saturating_sub(1).min(n - 2);
    let seg = SegmentInstance {
        category: SegmentCategory::InteriorFull,
        knot: k,
        support_start: support_start(k, n),
        a: xs[k],
        b: xs[k + 1],
        boundary: None,
    };
    let full = predict_segment(bundle, &seg, series_norm)?;
    let mu_norm = fit_pchip(series_norm)?.integrate(x_lo, x_hi)?;
    let fraction = (x_hi - x_lo) / (xs[k + 1] - xs[k]);
    Ok(SegmentPrediction {
        segment: SegmentInstance { a: x_lo, b: x_hi, ..seg },
        mu_norm,
        sigma_norm: full.sigma_norm * fraction,
    })
}

/// Gaussian estimate of `∫ Y dX` over `interval` from the samples alone.
pub fn predict_curve_integral(series: &XySeries, interval: IntegrationInterval, bundle: &ModelBundle) -> Result<CurveIntegral> {
    if series.len() < BD_MIN_POINTS {
        return Err(Error::TooFewPoints { required: BD_MIN_POINTS, got: series.len() });
    }
    let (series_norm, p) = match normalize_series(series) {
        Ok(v) => v,
        Err(Error::FlatY) => {
            let y = series.ys()[0];
            return Ok(CurveIntegral {
                estimate: GaussianEstimate::exact(y * interval.width()),
                segments: Vec::new(),
                degenerate_fallback: false,
                exact: true,
            });
        }
        Err(e) => return Err(e),
    };
    let (x_lo, x_hi) = (p.norm_x(interval.lo), p.norm_x(interval.hi));
    let (preds, degenerate) = match segment_interval(series_norm.xs(), x_lo, x_hi) {
        Ok(segs) => (
            segs.iter().map(|s| predict_segment(bundle, s, &series_norm)).collect::<Result<Vec<_>>>()?,
            false,
        ),
        Err(Error::DegenerateSpan) => {
            let lo = x_lo.max(0.0);
            let hi = x_hi.min(1.0);
            (vec![degenerate_fallback(bundle, &series_norm, lo, hi)?], true)
        }
        Err(e) => return Err(e),
    };
    let norm = GaussianEstimate::aggregate(preds.iter().map(|s| GaussianEstimate { mu: s.mu_norm, sigma: s.sigma_norm }));
    Ok(CurveIntegral {
        estimate: denormalize(&p, norm, interval),
        segments: preds,
        degenerate_fallback: degenerate,
        exact: false,
    })
}

fn denormalize(p: &NormParams, norm: GaussianEstimate, interval: IntegrationInterval) -> GaussianEstimate {
    GaussianEstimate { mu: p.denorm_integral(norm.mu, interval.width()), sigma: p.denorm_sigma(norm.sigma) }
}

/// Exact closed-form integral of a dense curve's PCHIP fit.
pub fn dense_curve_integral(series: &XySeries, interval: IntegrationInterval) -> Result<CurveIntegral> {
    let mu = fit_pchip(series)?.integrate(interval.lo, interval.hi)?;
    Ok(CurveIntegral { estimate: GaussianEstimate::exact(mu), segments: Vec::new(), degenerate_fallback: false, exact: true })
}

/// BD estimate with its `[μ − 3σ, μ + 3σ]` confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdciResult {
    pub mode: Mode,
    pub method: Method,
    pub interval: IntegrationInterval,
    /// Δr (BD-BR) or ΔD (BD-quality) point estimate.
    pub mean_delta: f64,
    pub sigma_delta: f64,
    pub interval_delta: [f64; 2],
    /// BD-BR only: ΔR in percent and its interval.
    pub mean_rate_percent: Option<f64>,
    pub interval_rate_percent: Option<[f64; 2]>,
    pub anchor: CurveIntegral,
    pub target: CurveIntegral,
    pub degenerate_fallback: bool,
}

impl BdciResult {
    pub fn width_delta(&self) -> f64 {
        self.interval_delta[1] - self.interval_delta[0]
    }

    pub fn contains_delta(&self, delta: f64) -> bool {
        delta >= self.interval_delta[0] && delta <= self.interval_delta[1]
    }
}

fn curve_integral(series: &XySeries, n_points: usize, interval: IntegrationInterval, bundle: &ModelBundle, dense_threshold: usize) -> Result<CurveIntegral> {
    if n_points >= dense_threshold {
        dense_curve_integral(series, interval)
    } else {
        predict_curve_integral(series, interval, bundle)
    }
}

/// BDCI of `target` against `anchor`.
///
/// Curves with at least `dense_threshold` points are integrated exactly with
/// PCHIP (σ = 0); sparser curves go through the category networks.
pub fn compute_bdci(
    anchor: &RdCurveSamples,
    target: &RdCurveSamples,
    mode: Mode,
    bundle: &ModelBundle,
    dense_threshold: usize,
) -> Result<BdciResult> {
    check_len(anchor, BD_MIN_POINTS)?;
    check_len(target, BD_MIN_POINTS)?;
    check_metrics(anchor, target)?;
    let (a, b) = prepare_pair(anchor, target, mode)?;
    compute_bdci_series(&a, &b, mode, bundle, dense_threshold)
}

/// [`compute_bdci`] on already-projected series.
pub fn compute_bdci_series(
    a: &XySeries,
    b: &XySeries,
    mode: Mode,
    bundle: &ModelBundle,
    dense_threshold: usize,
) -> Result<BdciResult> {
    let interval = intersect_intervals(a, b)?;
    let anchor = curve_integral(a, a.len(), interval, bundle, dense_threshold)?;
    let target = curve_integral(b, b.len(), interval, bundle, dense_threshold)?;
    Ok(assemble(mode, interval, anchor, target))
}

fn assemble(mode: Mode, interval: IntegrationInterval, anchor: CurveIntegral, target: CurveIntegral) -> BdciResult {
    let w = interval.width();
    let mean_delta = (target.estimate.mu - anchor.estimate.mu) / w;
    let sigma_delta = anchor.estimate.sigma.hypot(target.estimate.sigma) / w;
    let interval_delta = [mean_delta - CI_SIGMAS * sigma_delta, mean_delta + CI_SIGMAS * sigma_delta];
    let (mean_rate_percent, interval_rate_percent) = match mode {
        Mode::Rate => (
            Some(log_delta_to_percent(mean_delta)),
            Some([log_delta_to_percent(interval_delta[0]), log_delta_to_percent(interval_delta[1])]),
        ),
        Mode::Quality => (None, None),
    };
    let degenerate_fallback = anchor.degenerate_fallback || target.degenerate_fallback;
    BdciResult {
        mode,
        method: Method::BdciMean,
        interval,
        mean_delta,
        sigma_delta,
        interval_delta,
        mean_rate_percent,
        interval_rate_percent,
        anchor,
        target,
        degenerate_fallback,
    }
}

/// Default point count at which a curve counts as dense.
pub const DEFAULT_DENSE_THRESHOLD: usize = DENSE_ANCHOR_MIN;
