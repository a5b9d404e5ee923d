use crate::error::{Error, Result};
use crate::interp::PiecewiseCubic;
use crate::rd::XySeries;

/// Classic Akima (1970) spline.
///
/// Two extra secants are extrapolated quadratically on each side. When both
/// weights vanish the slope is the mean of the two central secants.
pub fn fit_akima(series: &XySeries) -> Result<PiecewiseCubic> {
    let n = series.len();
    if n < 5 {
        return Err(Error::TooFewPoints { required: 5, got: n });
    }
    let (xs, ys) = (series.xs(), series.ys());

    // m[k + 2] is the secant of interval k; two ghost secants on each end.
    let mut m = vec![0.0; n + 3];
    for k in 0..n - 1 {
        m[k + 2] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    }
    m[1] = 2.0 * m[2] - m[3];
    m[0] = 2.0 * m[1] - m[2];
    m[n + 1] = 2.0 * m[n] - m[n - 1];
    m[n + 2] = 2.0 * m[n + 1] - m[n];

    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let slopes: Vec<f64> = (0..n)
        .map(|i| {
            // Secants around node i: m[i], m[i+1] | m[i+2], m[i+3].
            let w1 = (m[i + 3] - m[i + 2]).abs();
            let w2 = (m[i + 1] - m[i]).abs();
            if w1 + w2 <= f64::EPSILON * scale {
                0.5 * (m[i + 1] + m[i + 2])
            } else {
                (w1 * m[i + 1] + w2 * m[i + 2]) / (w1 + w2)
            }
        })
        .collect();
    PiecewiseCubic::from_hermite(xs, ys, &slopes)
}
