use crate::error::{Error, Result};
use crate::interp::PiecewiseCubic;
use crate::rd::XySeries;

/// Fritsch-Carlson node slopes for a monotone Hermite interpolant.
///
/// Interior slopes use the weighted harmonic mean of adjacent secants and are
/// zero wherever the secants change sign or vanish. End slopes use the
/// one-sided three-point formula, clamped to keep monotonicity.
pub fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::TooFewPoints { required: 2, got: n });
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    if n == 2 {
        return Ok(vec![delta[0], delta[0]]);
    }

    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b <= 0.0 {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / a + w2 / b);
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    Ok(d)
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Monotone piecewise cubic Hermite interpolant (PCHIP).
pub fn fit_pchip(series: &XySeries) -> Result<PiecewiseCubic> {
    let slopes = pchip_slopes(series.xs(), series.ys())?;
    PiecewiseCubic::from_hermite(series.xs(), series.ys(), &slopes)
}
