//! Randomized property checks shared by the property suite and the
//! acceptance target.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use bdci_core::bdci::{build_input, normalize_series, predict_curve_integral, segment_interval, SegmentCategory, SegmentHead};
use bdci_core::classic::{compute_bd, prepare_pair};
use bdci_core::nn::{category_dims, BundleMetadata, Mlp, ModelBundle, TrainConfig};
use bdci_core::rd::{intersect_intervals, project_axes, to_log_rate, validate_samples};
use bdci_core::{Error, IntegrationInterval, Method, Mode, RdCurveSamples, XySeries};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TRIALS: u32 = 1000;

pub fn config() -> ProptestConfig {
    ProptestConfig { cases: TRIALS, failure_persistence: None, ..ProptestConfig::default() }
}

/// Raw parameters of a strictly increasing R-D curve.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub n: usize,
    pub r0: f64,
    pub log_steps: Vec<f64>,
    pub q0: f64,
    pub q_steps: Vec<f64>,
}

impl CurveSpec {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let (mut r, mut q) = (self.r0, self.q0);
        let mut out = vec![(r, q)];
        for i in 0..self.n - 1 {
            r *= self.log_steps[i].exp();
            q += self.q_steps[i];
            out.push((r, q));
        }
        out
    }

    pub fn samples(&self) -> RdCurveSamples {
        validate_samples(&self.points(), "psnr", "a").unwrap()
    }
}

pub fn curve() -> impl Strategy<Value = CurveSpec> {
    curve_with(4)
}

/// Curves of `min_n..=8` points.
pub fn curve_with(min_n: usize) -> impl Strategy<Value = CurveSpec> {
    (
        min_n..=8,
        10.0..1e4f64,
        prop::collection::vec(0.1..1.0f64, 7),
        20.0..40.0f64,
        prop::collection::vec(0.2..3.0f64, 7),
    )
        .prop_map(|(n, r0, log_steps, q0, q_steps)| CurveSpec { n, r0, log_steps, q0, q_steps })
}

/// Anchor plus a target that roughly follows it: rates scaled, quality
/// shifted, both jittered per point.
#[derive(Debug, Clone)]
pub struct PairSpec {
    pub anchor: CurveSpec,
    pub factor: f64,
    pub shift: f64,
    pub jitter: Vec<(f64, f64)>,
    pub target_n: usize,
    pub mode: Mode,
    pub method: Method,
}

impl PairSpec {
    pub fn target(&self) -> RdCurveSamples {
        let pts = self.anchor.points();
        let m = self.target_n.min(pts.len());
        let raw: Vec<(f64, f64)> = pts[pts.len() - m..]
            .iter()
            .zip(&self.jitter)
            .map(|(&(r, q), &(jr, jq))| (r * self.factor * jr, q + self.shift + jq))
            .collect();
        validate_samples(&raw, "psnr", "b").unwrap()
    }
}

pub fn pair() -> impl Strategy<Value = PairSpec> {
    // Five points so that every classical method applies.
    (
        curve_with(5),
        0.6..1.6f64,
        -2.0..2.0f64,
        prop::collection::vec((0.97..1.03f64, -0.05..0.05f64), 8),
        5usize..=8,
        prop::bool::ANY,
        0usize..4,
    )
        .prop_map(|(anchor, factor, shift, jitter, target_n, quality, m)| PairSpec {
            anchor,
            factor,
            shift,
            jitter,
            target_n,
            mode: if quality { Mode::Quality } else { Mode::Rate },
            method: Method::CLASSICAL[m],
        })
}

/// Swapping anchor and target negates Δ exactly over the same interval.
pub fn check_antisymmetry(p: &PairSpec) -> Result<(), TestCaseError> {
    let (a, b) = (p.anchor.samples(), p.target());
    let ab = compute_bd(&a, &b, p.mode, p.method);
    let ba = compute_bd(&b, &a, p.mode, p.method);
    match (ab, ba) {
        (Ok(ab), Ok(ba)) => {
            prop_assert_eq!(ab.interval, ba.interval);
            prop_assert_eq!(ab.delta.to_bits(), (-ba.delta).to_bits(), "{} vs {}", ab.delta, ba.delta);
            if p.mode == Mode::Rate {
                let (rab, rba) = (ab.delta_rate_percent.unwrap() / 100.0, ba.delta_rate_percent.unwrap() / 100.0);
                prop_assert!(((1.0 + rab) * (1.0 + rba) - 1.0).abs() <= 1e-12);
            }
        }
        (Err(Error::EmptyIntersection { .. }), Err(Error::EmptyIntersection { .. })) => {}
        (x, y) => return Err(TestCaseError::fail(format!("asymmetric outcome: {x:?} / {y:?}"))),
    }
    Ok(())
}

/// `intersect(a, b) == intersect(b, a)` and `intersect(a, a) == span(a)`.
pub fn check_intersect(p: &PairSpec) -> Result<(), TestCaseError> {
    let (a, b) = prepare_pair(&p.anchor.samples(), &p.target(), p.mode).unwrap();
    match (intersect_intervals(&a, &b), intersect_intervals(&b, &a)) {
        (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
        (Err(_), Err(_)) => {}
        (x, y) => return Err(TestCaseError::fail(format!("{x:?} / {y:?}"))),
    }
    prop_assert_eq!(intersect_intervals(&a, &a).unwrap(), a.span());
    prop_assert_eq!(intersect_intervals(&b, &b).unwrap(), b.span());
    Ok(())
}

/// Positive affine map of both axes plus a sub-interval to integrate over.
#[derive(Debug, Clone)]
pub struct AffineSpec {
    pub curve: CurveSpec,
    pub mode: Mode,
    pub ax: f64,
    pub bx: f64,
    pub ay: f64,
    pub by: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn affine() -> impl Strategy<Value = AffineSpec> {
    (
        curve(),
        prop::bool::ANY,
        (-2.0..2.0f64, -100.0..100.0f64, -2.0..2.0f64, -100.0..100.0f64),
        (0.0..1.0f64, 0.0..1.0f64),
    )
        .prop_filter("interval too short", |(_, _, _, (u, v))| (u - v).abs() > 0.05)
        .prop_map(|(curve, quality, (lax, bx, lay, by), (u, v))| AffineSpec {
            curve,
            mode: if quality { Mode::Quality } else { Mode::Rate },
            ax: 10f64.powf(lax),
            bx,
            ay: 10f64.powf(lay),
            by,
            lo: u.min(v),
            hi: u.max(v),
        })
}

fn random_bundle(seed: u64) -> ModelBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models: BTreeMap<SegmentCategory, Mlp> =
        SegmentCategory::ALL.into_iter().map(|c| (c, Mlp::init(&category_dims(c.input_dim()), &mut rng))).collect();
    let config = TrainConfig { head: SegmentHead::PchipLocal, ..Default::default() };
    ModelBundle::new(models, BundleMetadata::new(seed, "random", config)).unwrap()
}

fn shared_bundle() -> &'static ModelBundle {
    static B: OnceLock<ModelBundle> = OnceLock::new();
    B.get_or_init(|| random_bundle(17))
}

/// Network inputs depend on normalized coordinates only, so the estimate
/// transforms exactly as the true integral does.
pub fn check_affine_invariance(s: &AffineSpec) -> Result<(), TestCaseError> {
    let series = project_axes(&to_log_rate(&s.curve.samples()), s.mode).unwrap();
    let mapped = XySeries::new(
        series.xs().iter().map(|&x| s.ax * x + s.bx).collect(),
        series.ys().iter().map(|&y| s.ay * y + s.by).collect(),
        s.mode,
    )
    .unwrap();
    let span = series.span();
    let lo = span.lo + s.lo * span.width();
    let hi = span.lo + s.hi * span.width();
    let interval = IntegrationInterval::new(lo, hi).unwrap();
    let mapped_interval = IntegrationInterval::new(s.ax * lo + s.bx, s.ax * hi + s.bx).unwrap();

    let (na, pa) = normalize_series(&series).unwrap();
    let (nb, pb) = normalize_series(&mapped).unwrap();
    let sa = segment_interval(na.xs(), pa.norm_x(lo), pa.norm_x(hi));
    let sb = segment_interval(nb.xs(), pb.norm_x(mapped_interval.lo), pb.norm_x(mapped_interval.hi));
    match (sa, sb) {
        (Ok(sa), Ok(sb)) => {
            prop_assert_eq!(sa.len(), sb.len());
            for (x, y) in sa.iter().zip(&sb) {
                prop_assert_eq!(x.category, y.category);
                let (ix, iy) = (build_input(x, &na), build_input(y, &nb));
                for (u, v) in ix.iter().zip(&iy) {
                    prop_assert!((u - v).abs() <= 1e-9, "inputs {ix:?} vs {iy:?}");
                }
            }
        }
        (Err(Error::DegenerateSpan), Err(Error::DegenerateSpan)) => {}
        (x, y) => return Err(TestCaseError::fail(format!("{x:?} / {y:?}"))),
    }

    let bundle = shared_bundle();
    let e = predict_curve_integral(&series, interval, bundle).unwrap().estimate;
    let m = predict_curve_integral(&mapped, mapped_interval, bundle).unwrap().estimate;
    let expected_mu = s.ax * (s.ay * e.mu + s.by * interval.width());
    let scale = s.ax * (s.ay * e.mu.abs() + s.by.abs() * interval.width()) + s.ax * s.ay * e.sigma;
    prop_assert!((m.mu - expected_mu).abs() <= 1e-8 * scale, "mu {} expected {expected_mu}", m.mu);
    prop_assert!((m.sigma - s.ax * s.ay * e.sigma).abs() <= 1e-8 * s.ax * s.ay * e.sigma.max(1e-300));
    Ok(())
}

/// Arbitrary finite weights written at random positions of a base bundle.
#[derive(Debug, Clone)]
pub struct BundleEdit {
    pub seed: u64,
    pub corpus_hash: String,
    pub edits: Vec<(usize, usize, u64)>,
}

pub fn bundle_edit() -> impl Strategy<Value = BundleEdit> {
    (any::<u64>(), "[0-9a-f]{0,64}", prop::collection::vec((0usize..7, any::<usize>(), any::<u64>()), 1..24))
        .prop_map(|(seed, corpus_hash, edits)| BundleEdit { seed, corpus_hash, edits })
}

/// save → load reproduces every weight bit and the exact byte stream.
pub fn check_bundle_round_trip(e: &BundleEdit) -> Result<(), TestCaseError> {
    let base = shared_bundle();
    let mut models: BTreeMap<SegmentCategory, Mlp> =
        SegmentCategory::ALL.into_iter().map(|c| (c, base.model(c).clone())).collect();
    for &(c, i, bits) in &e.edits {
        let m = models.get_mut(&SegmentCategory::ALL[c]).unwrap();
        let n = m.params().len();
        let v = f64::from_bits(bits);
        m.params_mut()[i % n] = if v.is_finite() { v } else { f64::from_bits(bits >> 12) };
    }
    let config = TrainConfig { head: SegmentHead::PchipLocal, ..Default::default() };
    let bundle = ModelBundle::new(models, BundleMetadata::new(e.seed, e.corpus_hash.clone(), config)).unwrap();
    let bytes = bundle.to_bytes();
    let back = ModelBundle::from_bytes(&bytes).unwrap();
    prop_assert!(back.to_bytes() == bytes);
    prop_assert_eq!(back.metadata(), bundle.metadata());
    let mut rng = ChaCha8Rng::seed_from_u64(e.seed);
    for c in SegmentCategory::ALL {
        let (x, y) = (bundle.model(c), back.model(c));
        prop_assert!(x.params().iter().zip(y.params()).all(|(p, q)| p.to_bits() == q.to_bits()));
        let input: Vec<f64> = (0..c.input_dim()).map(|_| rng.random::<f64>()).collect();
        let (fx, fy) = (x.forward(&input).unwrap(), y.forward(&input).unwrap());
        prop_assert!(fx.0.to_bits() == fy.0.to_bits() && fx.1.to_bits() == fy.1.to_bits());
    }
    Ok(())
}
