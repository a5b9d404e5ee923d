use crate::error::{Error, Result};
use crate::interp::PiecewiseCubic;
use crate::rd::XySeries;

/// C2 cubic spline with not-a-knot end conditions.
pub fn fit_csi(series: &XySeries) -> Result<PiecewiseCubic> {
    let n = series.len();
    if n < 4 {
        return Err(Error::TooFewPoints { required: 4, got: n });
    }
    let (xs, ys) = (series.xs(), series.ys());
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();

    // Tridiagonal system in the node slopes.
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    let d0 = xs[2] - xs[0];
    diag[0] = h[1];
    sup[0] = d0;
    rhs[0] = ((h[0] + 2.0 * d0) * h[1] * delta[0] + h[0] * h[0] * delta[1]) / d0;

    for i in 1..n - 1 {
        sub[i] = h[i];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i - 1];
        rhs[i] = 3.0 * (h[i] * delta[i - 1] + h[i - 1] * delta[i]);
    }

    let dn = xs[n - 1] - xs[n - 3];
    sub[n - 1] = dn;
    diag[n - 1] = h[n - 3];
    rhs[n - 1] =
        (h[n - 2] * h[n - 2] * delta[n - 3] + (2.0 * dn + h[n - 2]) * h[n - 3] * delta[n - 2]) / dn;

    let slopes = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    PiecewiseCubic::from_hermite(xs, ys, &slopes)
}

/// Gaussian elimination with partial pivoting on a tridiagonal matrix.
///
/// `sub[i]` is A[i][i-1], `diag[i]` is A[i][i], `sup[i]` is A[i][i+1].
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    // Rows hold (A[i][i], A[i][i+1], A[i][i+2]) after elimination.
    let mut d = diag.to_vec();
    let mut u1 = sup.to_vec();
    let mut u2 = vec![0.0; n];
    let mut b = rhs.to_vec();
    let mut l = sub.to_vec();

    for i in 0..n - 1 {
        if l[i + 1].abs() > d[i].abs() {
            // Swap rows i and i+1. Row i+1 is (l, d, u1) at columns (i, i+1, i+2).
            let (a0, a1, a2) = (l[i + 1], d[i + 1], if i + 1 < n - 1 { u1[i + 1] } else { 0.0 });
            let (b0, b1, b2) = (d[i], u1[i], u2[i]);
            d[i] = a0;
            u1[i] = a1;
            u2[i] = a2;
            l[i + 1] = b0;
            d[i + 1] = b1;
            if i + 1 < n - 1 {
                u1[i + 1] = b2;
            }
            b.swap(i, i + 1);
        }
        if d[i] == 0.0 {
            return Err(Error::SingularSystem);
        }
        let f = l[i + 1] / d[i];
        d[i + 1] -= f * u1[i];
        if i + 1 < n - 1 {
            u1[i + 1] -= f * u2[i];
        }
        b[i + 1] -= f * b[i];
        l[i + 1] = 0.0;
    }
    if d[n - 1] == 0.0 {
        return Err(Error::SingularSystem);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::Mode;

    fn series(xs: &[f64], f: impl Fn(f64) -> f64) -> XySeries {
        XySeries::new(xs.to_vec(), xs.iter().map(|&x| f(x)).collect(), Mode::Quality).unwrap()
    }

    #[test]
    fn line_has_no_curvature() {
        let s = fit_csi(&series(&[0.0, 0.7, 1.1, 2.5, 3.0, 4.2], |x| 1.5 - 0.3 * x)).unwrap();
        for c in s.coeffs() {
            assert!(c[2].abs() < 1e-9 && c[3].abs() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn reproduces_cubic() {
        let cube = |x: f64| x * x * x;
        for xs in [&[0.0, 1.0, 2.0, 3.0][..], &[0.0, 0.4, 1.3, 2.1, 3.0][..]] {
            let s = fit_csi(&series(xs, cube)).unwrap();
            for i in 0..=300 {
                let x = 3.0 * i as f64 / 300.0;
                assert!((s.eval(x).unwrap() - cube(x)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn interpolates_knots_and_is_c2() {
        let xs = [0.0, 0.3, 0.9, 1.4, 2.2, 2.5, 3.7];
        let s = fit_csi(&series(&xs, |x| (1.0 + x).ln() * 3.0)).unwrap();
        for &x in &xs {
            assert!((s.eval(x).unwrap() - (1.0 + x).ln() * 3.0).abs() < 1e-12);
        }
        for k in 1..xs.len() - 1 {
            let (l, r) = s.second_derivative_jump(k);
            assert!((l - r).abs() < 1e-6, "k={k}: {l} vs {r}");
        }
    }

    #[test]
    fn tridiagonal_with_pivoting() {
        // Zero leading diagonal forces a row swap.
        let x = solve_tridiagonal(&[0.0, 1.0, 1.0], &[0.0, 1.0, 2.0], &[1.0, 1.0, 0.0], &[2.0, 4.0, 7.0]).unwrap();
        // A = [[0,1,0],[1,1,1],[0,1,2]]
        let r = [x[1], x[0] + x[1] + x[2], x[1] + 2.0 * x[2]];
        for (ri, bi) in r.iter().zip([2.0, 4.0, 7.0]) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn needs_four_points() {
        let e = fit_csi(&series(&[0.0, 1.0, 2.0], |x| x)).unwrap_err();
        assert_eq!(e.kind(), "TooFewPoints");
    }
}
