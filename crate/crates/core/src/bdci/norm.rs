use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rd::XySeries;

/// Min/max of a whole sample series, used to map it into the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl NormParams {
    pub fn of(series: &XySeries) -> Self {
        let (y_min, y_max) = series
            .ys()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
        Self { x_min: series.x_min(), x_max: series.x_max(), y_min, y_max }
    }

    pub fn x_span(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn y_span(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn norm_x(&self, x: f64) -> f64 {
        (x - self.x_min) / self.x_span()
    }

    pub fn norm_y(&self, y: f64) -> f64 {
        (y - self.y_min) / self.y_span()
    }

    /// Maps an integral of `y′ dx′` over a normalized sub-range back to the
    /// integral of `y dx` over an original range of width `width`.
    pub fn denorm_integral(&self, normalized: f64, width: f64) -> f64 {
        self.y_min * width + self.x_span() * self.y_span() * normalized
    }

    /// Inverse of [`NormParams::denorm_integral`].
    pub fn norm_integral(&self, integral: f64, width: f64) -> f64 {
        (integral - self.y_min * width) / (self.x_span() * self.y_span())
    }

    /// Scale factor for standard deviations of integrals.
    pub fn denorm_sigma(&self, sigma_norm: f64) -> f64 {
        self.x_span() * self.y_span() * sigma_norm
    }
}

/// Affinely maps both axes of `series` onto `[0, 1]`.
pub fn normalize_series(series: &XySeries) -> Result<(XySeries, NormParams)> {
    let p = NormParams::of(series);
    if !(p.x_span() > 0.0) {
        return Err(Error::DuplicateX { x: p.x_min });
    }
    if !(p.y_span() > 0.0) {
        return Err(Error::FlatY);
    }
    let xs: Vec<f64> = series.xs().iter().map(|&x| p.norm_x(x)).collect();
    let ys: Vec<f64> = series.ys().iter().map(|&y| p.norm_y(y)).collect();
    Ok((XySeries::new(xs, ys, series.mode())?, p))
}
