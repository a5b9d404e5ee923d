use crate::error::{Error, Result};
use crate::interp::Polynomial3;
use crate::rd::XySeries;

/// Least-squares cubic through the samples (Bjøntegaard's original fit).
///
/// X is centered and scaled before a Householder QR solve; the returned
/// coefficients are expanded back into the raw monomial basis.
pub fn fit_cubic_ls(series: &XySeries) -> Result<Polynomial3> {
    let n = series.len();
    if n < 4 {
        return Err(Error::TooFewPoints { required: 4, got: n });
    }
    let xs = series.xs();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let scale = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::SingularSystem);
    }

    // Column-major n x 4 Vandermonde in t = (x - mean) / scale.
    let mut a = vec![[0.0f64; 4]; n];
    for (row, &x) in a.iter_mut().zip(xs) {
        let t = (x - mean) / scale;
        *row = [1.0, t, t * t, t * t * t];
    }
    let mut b = series.ys().to_vec();
    let shifted = householder_solve(&mut a, &mut b)?;

    // p(x) = sum_k s_k ((x - m)/d)^k, expanded with binomial coefficients.
    let binom = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];
    let mut coeffs = [0.0f64; 4];
    for (k, &sk) in shifted.iter().enumerate() {
        let ck = sk / scale.powi(k as i32);
        for j in 0..=k {
            coeffs[j] += ck * binom[k][j] * (-mean).powi((k - j) as i32);
        }
    }
    Polynomial3::new(coeffs)
}

/// Solves the n x 4 least-squares problem `min |A c - b|` in place.
fn householder_solve(a: &mut [[f64; 4]], b: &mut [f64]) -> Result<[f64; 4]> {
    let n = a.len();
    let mut diag_max = 0.0f64;
    let mut r_diag = [0.0f64; 4];
    for k in 0..4 {
        let norm = (k..n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::SingularSystem);
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        // v = a[k..][k] - alpha e_k, stored back into column k.
        a[k][k] -= alpha;
        let vnorm2 = (k..n).map(|i| a[i][k] * a[i][k]).sum::<f64>();
        if vnorm2 > 0.0 {
            for j in k + 1..4 {
                let dot = (k..n).map(|i| a[i][k] * a[i][j]).sum::<f64>();
                let f = 2.0 * dot / vnorm2;
                for i in k..n {
                    a[i][j] -= f * a[i][k];
                }
            }
            let dot = (k..n).map(|i| a[i][k] * b[i]).sum::<f64>();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                b[i] -= f * a[i][k];
            }
        }
        r_diag[k] = alpha;
        diag_max = diag_max.max(alpha.abs());
    }
    if r_diag.iter().any(|d| d.abs() < 1e-12 * diag_max) {
        return Err(Error::SingularSystem);
    }
    let mut c = [0.0f64; 4];
    for k in (0..4).rev() {
        let s: f64 = (k + 1..4).map(|j| a[k][j] * c[j]).sum();
        c[k] = (b[k] - s) / r_diag[k];
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::Mode;

    fn series(xs: &[f64], f: impl Fn(f64) -> f64) -> XySeries {
        XySeries::new(xs.to_vec(), xs.iter().map(|&x| f(x)).collect(), Mode::Quality).unwrap()
    }

    #[test]
    fn interpolates_cube_at_four_points() {
        let p = fit_cubic_ls(&series(&[0.0, 1.0, 2.0, 3.0], |x| x * x * x)).unwrap();
        for (c, e) in p.coeffs.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert!((c - e).abs() < 1e-9, "{:?}", p.coeffs);
        }
    }

    #[test]
    fn recovers_line() {
        let p = fit_cubic_ls(&series(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], |x| 2.0 + 3.0 * x)).unwrap();
        for (c, e) in p.coeffs.iter().zip([2.0, 3.0, 0.0, 0.0]) {
            assert!((c - e).abs() < 1e-9, "{:?}", p.coeffs);
        }
    }

    /// Normal equations solved with Gaussian elimination on compensated
    /// (double-double) accumulations, independent of the QR path.
    fn normal_equation_reference(xs: &[f64], ys: &[f64], at: f64) -> f64 {
        #[derive(Clone, Copy)]
        struct Dd(f64, f64);
        fn two_sum(a: f64, b: f64) -> Dd {
            let s = a + b;
            let bb = s - a;
            Dd(s, (a - (s - bb)) + (b - bb))
        }
        fn add(a: Dd, b: Dd) -> Dd {
            let s = two_sum(a.0, b.0);
            let t = a.1 + b.1 + s.1;
            two_sum(s.0, t)
        }
        fn mul(a: Dd, b: Dd) -> Dd {
            let p = a.0 * b.0;
            let e = a.0.mul_add(b.0, -p);
            two_sum(p, e + a.0 * b.1 + a.1 * b.0)
        }
        fn div(a: Dd, b: Dd) -> Dd {
            let q = a.0 / b.0;
            let r = add(a, mul(Dd(-q, 0.0), b));
            two_sum(q, r.0 / b.0)
        }
        let mut m = [[Dd(0.0, 0.0); 5]; 4];
        for (&x, &y) in xs.iter().zip(ys) {
            let mut pw = [Dd(1.0, 0.0); 7];
            for k in 1..7 {
                pw[k] = mul(pw[k - 1], Dd(x, 0.0));
            }
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] = add(m[i][j], pw[i + j]);
                }
                m[i][4] = add(m[i][4], mul(pw[i], Dd(y, 0.0)));
            }
        }
        for col in 0..4 {
            for row in col + 1..4 {
                let f = div(m[row][col], m[col][col]);
                for j in col..5 {
                    let t = mul(f, m[col][j]);
                    m[row][j] = add(m[row][j], Dd(-t.0, -t.1));
                }
            }
        }
        let mut c = [Dd(0.0, 0.0); 4];
        for k in (0..4).rev() {
            let mut s = m[k][4];
            for j in k + 1..4 {
                let t = mul(m[k][j], c[j]);
                s = add(s, Dd(-t.0, -t.1));
            }
            c[k] = div(s, m[k][k]);
        }
        let mut v = Dd(0.0, 0.0);
        for k in (0..4).rev() {
            v = add(mul(v, Dd(at, 0.0)), c[k]);
        }
        v.0 + v.1
    }

    #[test]
    fn sine_matches_extended_precision_normal_equations() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let s = series(&xs, f64::sin);
        let p = fit_cubic_ls(&s).unwrap();
        let reference = normal_equation_reference(&xs, s.ys(), 2.5);
        assert!((p.eval(2.5) - reference).abs() < 1e-9, "{} vs {}", p.eval(2.5), reference);
    }

    #[test]
    fn high_psnr_abscissae_are_conditioned() {
        let xs = [30.1, 33.4, 36.2, 39.9, 42.3];
        let s = series(&xs, |x| 0.05 * x - 1.0);
        let p = fit_cubic_ls(&s).unwrap();
        for &x in &xs {
            assert!((p.eval(x) - (0.05 * x - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_points() {
        let s = series(&[0.0, 1.0, 2.0], |x| x);
        assert_eq!(fit_cubic_ls(&s).unwrap_err().kind(), "TooFewPoints");
    }
}
