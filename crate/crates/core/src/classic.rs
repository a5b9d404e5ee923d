//! The classical BD pipeline: log-rate, projection, fitting, intersection,
//! closed-form integration.

use crate::error::{Error, Result};
use crate::interp::{fit_pchip, fit_with, integrate_fit, min_points, Fit};
use crate::rd::{
    delta_from_integrals, intersect_intervals, project_axes, to_log_rate, BdValue, Method, Mode,
    RdCurveSamples, XySeries,
};

/// Anchor curves with at least this many points count as dense.
pub const DENSE_ANCHOR_MIN: usize = 20;

/// Minimum samples for any BD computation.
pub const BD_MIN_POINTS: usize = 4;

pub(crate) fn check_metrics(anchor: &RdCurveSamples, target: &RdCurveSamples) -> Result<()> {
    if anchor.metric_name() != target.metric_name() {
        return Err(Error::MetricMismatch {
            anchor: anchor.metric_name().to_string(),
            target: target.metric_name().to_string(),
        });
    }
    Ok(())
}

pub(crate) fn check_len(samples: &RdCurveSamples, required: usize) -> Result<()> {
    if samples.len() < required {
        return Err(Error::TooFewPoints { required, got: samples.len() });
    }
    Ok(())
}

/// Log-transforms and projects both curves.
pub fn prepare_pair(
    anchor: &RdCurveSamples,
    target: &RdCurveSamples,
    mode: Mode,
) -> Result<(XySeries, XySeries)> {
    check_metrics(anchor, target)?;
    let a = project_axes(&to_log_rate(anchor), mode)?;
    let b = project_axes(&to_log_rate(target), mode)?;
    Ok((a, b))
}

fn bd_from_fits(a: &XySeries, b: &XySeries, fa: &Fit, fb: &Fit, mode: Mode, method: Method) -> Result<BdValue> {
    let interval = intersect_intervals(a, b)?;
    let ia = integrate_fit(fa, interval)?;
    let ib = integrate_fit(fb, interval)?;
    Ok(delta_from_integrals(ib, ia, interval, mode, method))
}

/// BD-BR (`Mode::Rate`) or BD-quality of `target` relative to `anchor`.
pub fn compute_bd(
    anchor: &RdCurveSamples,
    target: &RdCurveSamples,
    mode: Mode,
    method: Method,
) -> Result<BdValue> {
    let required = min_points(method).max(BD_MIN_POINTS);
    check_len(anchor, required)?;
    check_len(target, required)?;
    let (a, b) = prepare_pair(anchor, target, mode)?;
    let fa = fit_with(method, &a)?;
    let fb = fit_with(method, &b)?;
    bd_from_fits(&a, &b, &fa, &fb, mode, method)
}

/// As [`compute_bd`], but the anchor is a dense curve fitted with PCHIP
/// whatever `method` says; `method` applies to the sparse target only.
pub fn compute_bd_dense_anchor(
    anchor_dense: &RdCurveSamples,
    target: &RdCurveSamples,
    mode: Mode,
    method: Method,
) -> Result<BdValue> {
    check_len(anchor_dense, DENSE_ANCHOR_MIN)?;
    check_len(target, min_points(method).max(BD_MIN_POINTS))?;
    let (a, b) = prepare_pair(anchor_dense, target, mode)?;
    let fa = Fit::from(fit_pchip(&a)?);
    let fb = fit_with(method, &b)?;
    bd_from_fits(&a, &b, &fa, &fb, mode, method)
}
