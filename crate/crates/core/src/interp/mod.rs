//! Classical R-D interpolators and exact integration of their outputs.
//!
//! Every spline method returns a [`PiecewiseCubic`]; the least-squares cubic
//! returns a [`Polynomial3`]. Both are integrated in closed form.

mod akima;
mod csi;
mod cubic;
mod pchip;

pub use akima::fit_akima;
pub use csi::fit_csi;
pub use cubic::fit_cubic_ls;
pub use pchip::{fit_pchip, pchip_slopes};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rd::{IntegrationInterval, Method, XySeries};

/// Relative slack allowed when a query sits a hair outside the breakpoints.
const DOMAIN_SLACK: f64 = 1e-12;

/// Cubic `a0 + a1 x + a2 x^2 + a3 x^3` in the monomial basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polynomial3 {
    pub coeffs: [f64; 4],
}

impl Polynomial3 {
    pub fn new(coeffs: [f64; 4]) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok(Self { coeffs })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [a0, a1, a2, a3] = self.coeffs;
        a0 + x * (a1 + x * (a2 + x * a3))
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let [a0, a1, a2, a3] = self.coeffs;
        x * (a0 + x * (a1 / 2.0 + x * (a2 / 3.0 + x * a3 / 4.0)))
    }

    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        self.antiderivative(hi) - self.antiderivative(lo)
    }
}

/// Piecewise cubic: on `[t_k, t_{k+1}]`,
/// `f(x) = c0 + c1 u + c2 u^2 + c3 u^3` with `u = x - t_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCubic {
    breakpoints: Vec<f64>,
    coeffs: Vec<[f64; 4]>,
    end_value: f64,
}

impl PiecewiseCubic {
    /// Builds a piecewise cubic, checking the shape and C0 continuity.
    ///
    /// `end_value` is the value at the last breakpoint, kept so evaluation
    /// there returns the knot value exactly.
    pub fn new(breakpoints: Vec<f64>, coeffs: Vec<[f64; 4]>, end_value: f64) -> Result<Self> {
        let m = breakpoints.len();
        if m < 2 {
            return Err(Error::TooFewPoints { required: 2, got: m });
        }
        if coeffs.len() != m - 1 {
            return Err(Error::LengthMismatch { xs: m - 1, ys: coeffs.len() });
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::UnsortedX);
        }
        let pc = Self { breakpoints, coeffs, end_value };
        let scale = pc
            .coeffs
            .iter()
            .map(|c| c[0].abs())
            .fold(end_value.abs(), f64::max)
            + 1.0;
        for k in 0..m - 1 {
            let right = if k + 1 < m - 1 { pc.coeffs[k + 1][0] } else { end_value };
            let left = pc.eval_piece(k, pc.breakpoints[k + 1] - pc.breakpoints[k]);
            if !left.is_finite() || (left - right).abs() > 1e-9 * scale {
                return Err(Error::Discontinuous { index: k + 1 });
            }
        }
        Ok(pc)
    }

    /// Builds the Hermite cubic through `(xs, ys)` with node slopes `slopes`.
    pub fn from_hermite(xs: &[f64], ys: &[f64], slopes: &[f64]) -> Result<Self> {
        let coeffs = xs
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let h = w[1] - w[0];
                let delta = (ys[k + 1] - ys[k]) / h;
                let (s0, s1) = (slopes[k], slopes[k + 1]);
                [
                    ys[k],
                    s0,
                    (3.0 * delta - 2.0 * s0 - s1) / h,
                    (s0 + s1 - 2.0 * delta) / (h * h),
                ]
            })
            .collect();
        Self::new(xs.to_vec(), coeffs, ys[ys.len() - 1])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn coeffs(&self) -> &[[f64; 4]] {
        &self.coeffs
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    fn eval_piece(&self, k: usize, u: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs[k];
        c0 + u * (c1 + u * (c2 + u * c3))
    }

    fn integral_piece(&self, k: usize, u: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs[k];
        u * (c0 + u * (c1 / 2.0 + u * (c2 / 3.0 + u * c3 / 4.0)))
    }

    /// Index of the interval owning `x` (the last interval owns the end).
    fn locate(&self, x: f64) -> usize {
        let last = self.coeffs.len() - 1;
        match self.breakpoints.partition_point(|&t| t <= x) {
            0 => 0,
            p => (p - 1).min(last),
        }
    }

    fn check_domain(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let slack = DOMAIN_SLACK * (hi - lo).max(lo.abs().max(hi.abs()));
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        Ok(x.clamp(lo, hi))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let x = self.check_domain(x)?;
        if x == self.domain().1 {
            return Ok(self.end_value);
        }
        let k = self.locate(x);
        Ok(self.eval_piece(k, x - self.breakpoints[k]))
    }

    /// First derivative, taken from the owning interval.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        let x = self.check_domain(x)?;
        let k = self.locate(x);
        let u = x - self.breakpoints[k];
        let [_, c1, c2, c3] = self.coeffs[k];
        Ok(c1 + u * (2.0 * c2 + 3.0 * c3 * u))
    }

    /// Second derivative at the left (`k-1`) and right (`k`) of breakpoint `k`.
    pub fn second_derivative_jump(&self, k: usize) -> (f64, f64) {
        let h = self.breakpoints[k] - self.breakpoints[k - 1];
        let [_, _, c2l, c3l] = self.coeffs[k - 1];
        let [_, _, c2r, _] = self.coeffs[k];
        (2.0 * c2l + 6.0 * c3l * h, 2.0 * c2r)
    }

    /// Exact integral over `[lo, hi]`, which must lie inside the domain.
    pub fn integrate(&self, lo: f64, hi: f64) -> Result<f64> {
        let lo = self.check_domain(lo)?;
        let hi = self.check_domain(hi)?;
        if hi < lo {
            return Ok(-self.integrate(hi, lo)?);
        }
        let (k_lo, k_hi) = (self.locate(lo), self.locate(hi));
        let mut total = 0.0;
        for k in k_lo..=k_hi {
            let t = self.breakpoints[k];
            let a = if k == k_lo { lo - t } else { 0.0 };
            let b = if k == k_hi { hi - t } else { self.breakpoints[k + 1] - t };
            total += self.integral_piece(k, b) - self.integral_piece(k, a);
        }
        Ok(total)
    }
}

/// Output of any of the four classical interpolators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fit {
    Polynomial(Polynomial3),
    Piecewise(PiecewiseCubic),
}

impl Fit {
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        match self {
            Fit::Polynomial(p) => Ok(p.eval(x)),
            Fit::Piecewise(pc) => pc.eval(x),
        }
    }
}

impl From<Polynomial3> for Fit {
    fn from(p: Polynomial3) -> Self {
        Fit::Polynomial(p)
    }
}

impl From<PiecewiseCubic> for Fit {
    fn from(pc: PiecewiseCubic) -> Self {
        Fit::Piecewise(pc)
    }
}

/// Evaluates a fit at `x`; piecewise fits never extrapolate.
pub fn evaluate(fit: &Fit, x: f64) -> Result<f64> {
    fit.evaluate(x)
}

/// Closed-form definite integral of a fit over `interval`.
pub fn integrate_fit(fit: &Fit, interval: IntegrationInterval) -> Result<f64> {
    match fit {
        Fit::Polynomial(p) => Ok(p.integrate(interval.lo, interval.hi)),
        Fit::Piecewise(pc) => pc.integrate(interval.lo, interval.hi),
    }
}

/// Fits `series` with one of the classical methods.
pub fn fit_with(method: Method, series: &XySeries) -> Result<Fit> {
    match method {
        Method::Cubic => fit_cubic_ls(series).map(Fit::from),
        Method::Csi => fit_csi(series).map(Fit::from),
        Method::Pchip => fit_pchip(series).map(Fit::from),
        Method::Akima => fit_akima(series).map(Fit::from),
        other => Err(Error::InvalidConfig(format!("{other} is not an interpolation method"))),
    }
}

/// Minimum number of samples each classical method accepts.
pub fn min_points(method: Method) -> usize {
    match method {
        Method::Akima => 5,
        Method::Pchip => 2,
        _ => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_pc() -> PiecewiseCubic {
        PiecewiseCubic::from_hermite(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0], &[1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn integrate_line() {
        let f = Fit::from(line_pc());
        let v = integrate_fit(&f, IntegrationInterval::new(0.0, 1.0).unwrap()).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn integrate_cube_poly() {
        let p = Fit::from(Polynomial3::new([0.0, 0.0, 0.0, 1.0]).unwrap());
        let v = integrate_fit(&p, IntegrationInterval::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(v, 0.25);
    }

    #[test]
    fn evaluate_poly() {
        let p = Fit::from(Polynomial3::new([2.0, 3.0, 0.0, 0.0]).unwrap());
        assert_eq!(evaluate(&p, 4.0).unwrap(), 14.0);
    }

    #[test]
    fn out_of_domain() {
        let pc = line_pc();
        assert_eq!(pc.eval(1.5).unwrap_err().kind(), "OutOfDomain");
        assert_eq!(pc.eval(-0.1).unwrap_err().kind(), "OutOfDomain");
        assert_eq!(pc.integrate(0.2, 1.1).unwrap_err().kind(), "OutOfDomain");
        assert!(pc.eval(1.0 + 1e-15).is_ok());
    }

    #[test]
    fn rejects_discontinuity() {
        let r = PiecewiseCubic::new(vec![0.0, 1.0, 2.0], vec![[0.0, 1.0, 0.0, 0.0], [5.0, 0.0, 0.0, 0.0]], 5.0);
        assert!(r.is_err());
    }

    #[test]
    fn reversed_bounds_negate() {
        let pc = line_pc();
        let a = pc.integrate(0.1, 0.9).unwrap();
        let b = pc.integrate(0.9, 0.1).unwrap();
        assert_eq!(a, -b);
    }
}
