use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rd::{validate_samples, RdCurveSamples};
use crate::synth::curve::AnalyticCurve;

/// Maximum jitter as a fraction of the nominal spacing.
pub const JITTER_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingPolicy {
    UniformX,
    UniformY,
    /// Uniform log-rate spacing with per-point jitter, like a QP sweep.
    Jittered,
}

/// Log-rates of `n ≥ 2` samples; the domain ends are always included.
pub fn sample_log_rates<R: Rng + ?Sized>(curve: &AnalyticCurve, n: usize, policy: SamplingPolicy, rng: &mut R) -> Result<Vec<f64>> {
    let (lo, hi) = curve.domain();
    let h = (hi - lo) / (n - 1) as f64;
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let x = if i == 0 {
            lo
        } else if i == n - 1 {
            hi
        } else {
            match policy {
                SamplingPolicy::UniformX => lo + h * i as f64,
                SamplingPolicy::Jittered => lo + h * (i as f64 + rng.random_range(-JITTER_FRACTION..JITTER_FRACTION)),
                SamplingPolicy::UniformY => {
                    let (q0, q1) = (curve.eval(lo), curve.eval(hi));
                    curve.inverse(q0 + (q1 - q0) * i as f64 / (n - 1) as f64)?
                }
            }
        };
        xs.push(x);
    }
    Ok(xs)
}

/// `n` points of `curve` as `(rate, quality)` samples, `rate = e^x`.
pub fn sample_points(curve: &AnalyticCurve, n: usize, policy: SamplingPolicy, rng_seed: u64) -> Result<RdCurveSamples> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample_points_with(curve, n, policy, &mut rng, "synthetic")
}

pub fn sample_points_with<R: Rng + ?Sized>(
    curve: &AnalyticCurve,
    n: usize,
    policy: SamplingPolicy,
    rng: &mut R,
    label: &str,
) -> Result<RdCurveSamples> {
    let xs = sample_log_rates(curve, n, policy, rng)?;
    let raw: Vec<(f64, f64)> = xs.iter().map(|&x| (x.exp(), curve.eval(x))).collect();
    validate_samples(&raw, curve.metric(), label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::curve::{gen_curve, CurveParams, Family};

    #[test]
    fn uniform_x_grid() {
        let c = AnalyticCurve::new(CurveParams::LogRd { a: 2.0, b: 1.0, c: 1.0 }, 0.0, 3.0, "psnr").unwrap();
        let xs = sample_log_rates(&c, 4, SamplingPolicy::UniformX, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn points_lie_on_curve() {
        for seed in 0..50u64 {
            let c = gen_curve(Family::ALL[(seed % 4) as usize], seed);
            for policy in [SamplingPolicy::UniformX, SamplingPolicy::UniformY, SamplingPolicy::Jittered] {
                let s = sample_points(&c, 4 + (seed % 13) as usize, policy, seed).unwrap();
                let (lo, hi) = c.domain();
                assert!((s.points()[0].rate.ln() - lo).abs() < 1e-12);
                assert!((s.points()[s.len() - 1].rate.ln() - hi).abs() < 1e-12);
                for p in s.points() {
                    assert!((c.eval(p.rate.ln()) - p.quality).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn jitter_is_seeded_and_bounded() {
        let c = gen_curve(Family::PowerRd, 4);
        let a = sample_points(&c, 8, SamplingPolicy::Jittered, 11).unwrap();
        assert_eq!(a, sample_points(&c, 8, SamplingPolicy::Jittered, 11).unwrap());
        assert_ne!(a, sample_points(&c, 8, SamplingPolicy::Jittered, 12).unwrap());
        let (lo, hi) = c.domain();
        let h = (hi - lo) / 7.0;
        for (i, p) in a.points().iter().enumerate() {
            assert!((p.rate.ln() - (lo + h * i as f64)).abs() <= JITTER_FRACTION * h + 1e-12);
        }
    }

    #[test]
    fn uniform_y_spacing() {
        let c = gen_curve(Family::RationalRd, 2);
        let s = sample_points(&c, 5, SamplingPolicy::UniformY, 0).unwrap();
        let q: Vec<f64> = s.qualities();
        let step = q[1] - q[0];
        for w in q.windows(2) {
            assert!(((w[1] - w[0]) - step).abs() < 1e-9 * step.abs().max(1.0));
        }
    }
}
