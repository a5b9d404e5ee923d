//! Evaluation on the synthetic test split: estimation bias (MSE per
//! estimator and mode), BDCI calibration and width, and runtime.
//!
//! Every case pairs a densely sampled anchor with a sparsely sampled target;
//! ground truth comes from the analytic curves over the same interval the
//! estimators use.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bdci::{compute_bdci, DEFAULT_DENSE_THRESHOLD};
use crate::classic::compute_bd_dense_anchor;
use crate::error::{Error, Result};
use crate::interp::min_points;
use crate::nn::ModelBundle;
use crate::rd::{IntegrationInterval, Method, Mode, RdCurveSamples};
use crate::synth::{derive_seed, sample_points_with, Corpus, CurvePair, ProjectedCurve, SamplingPolicy};

/// Points on each dense anchor curve.
pub const DENSE_ANCHOR_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n_values: Vec<usize>,
    pub modes: Vec<Mode>,
    pub estimators: Vec<Method>,
    pub dense_anchor_points: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_values: vec![4, 5, 6, 7, 8],
            modes: Mode::ALL.to_vec(),
            estimators: vec![Method::Cubic, Method::Csi, Method::Pchip, Method::Akima, Method::BdciMean],
            dense_anchor_points: DENSE_ANCHOR_POINTS,
        }
    }
}

/// Sum with pairwise (cascade) reduction; the result does not depend on how
/// the inputs were produced, only on their order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// One evaluation case: a pair, a target sample count, and its samples.
#[derive(Debug, Clone)]
pub struct BenchCase<'a> {
    pub pair: &'a CurvePair,
    pub n: usize,
    pub anchor: RdCurveSamples,
    pub target: RdCurveSamples,
}

/// Dense uniform anchor and jittered sparse target for `(pair, n)`.
pub fn make_case(pair: &CurvePair, n: usize, dense_points: usize) -> Result<BenchCase<'_>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(pair.seed, 0x5eed_0000 + n as u64));
    let anchor = sample_points_with(&pair.anchor, dense_points, SamplingPolicy::UniformX, &mut rng, "anchor")?;
    let target = sample_points_with(&pair.target, n, SamplingPolicy::Jittered, &mut rng, "target")?;
    Ok(BenchCase { pair, n, anchor, target })
}

/// Exact BD over `interval`, in Δr or ΔD.
pub fn true_delta(pair: &CurvePair, mode: Mode, interval: IntegrationInterval) -> Result<f64> {
    let a = ProjectedCurve::new(&pair.anchor, mode).integral(interval.lo, interval.hi)?;
    let b = ProjectedCurve::new(&pair.target, mode).integral(interval.lo, interval.hi)?;
    Ok((b - a) / interval.width())
}

/// Error scale used for bias: ΔR as a fraction for BD-BR, ΔD for quality.
fn report_value(mode: Mode, delta: f64) -> f64 {
    match mode {
        Mode::Rate => delta.exp_m1(),
        Mode::Quality => delta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Estimate { estimate: f64, truth: f64 },
    NotApplicable,
    Failed,
}

fn estimate_case(case: &BenchCase, mode: Mode, method: Method, bundle: Option<&ModelBundle>) -> Result<Outcome> {
    if min_points(method) > case.n {
        return Ok(Outcome::NotApplicable);
    }
    let res = match method {
        Method::BdciMean => {
            let bundle = bundle.ok_or_else(|| Error::InvalidConfig("bdci-mean needs a model bundle".into()))?;
            compute_bdci(&case.anchor, &case.target, mode, bundle, DEFAULT_DENSE_THRESHOLD).map(|r| (r.mean_delta, r.interval))
        }
        Method::Oracle => {
            compute_bd_dense_anchor(&case.anchor, &case.target, mode, Method::Pchip).map(|v| (f64::NAN, v.interval))
        }
        m => compute_bd_dense_anchor(&case.anchor, &case.target, mode, m).map(|v| (v.delta, v.interval)),
    };
    let (delta, interval) = match res {
        Ok(v) => v,
        Err(_) => return Ok(Outcome::Failed),
    };
    let truth = true_delta(case.pair, mode, interval)?;
    let delta = if method == Method::Oracle { truth } else { delta };
    Ok(Outcome::Estimate { estimate: report_value(mode, delta), truth: report_value(mode, truth) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCell {
    pub mse: f64,
    pub cases: usize,
    pub failures: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub estimator: Method,
    pub mode: Mode,
    pub overall: BiasCell,
    pub per_n: BTreeMap<usize, BiasCell>,
}

/// MSE between estimated and true BD (ΔR as a fraction, or ΔD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub rows: Vec<BiasRow>,
}

impl BiasReport {
    pub fn row(&self, estimator: Method, mode: Mode) -> Option<&BiasRow> {
        self.rows.iter().find(|r| r.estimator == estimator && r.mode == mode)
    }

    /// Text table: one line per estimator and mode, MSE per n.
    pub fn to_table(&self) -> String {
        let ns: Vec<usize> = self.rows.first().map(|r| r.per_n.keys().copied().collect()).unwrap_or_default();
        let mut out = format!("{:<10} {:<10} {:>12}", "estimator", "mode", "mse");
        for n in &ns {
            out.push_str(&format!(" {:>12}", format!("n={n}")));
        }
        out.push_str(&format!(" {:>7} {:>7}\n", "cases", "failed"));
        for r in &self.rows {
            out.push_str(&format!("{:<10} {:<10} {:>12.4e}", r.estimator.as_str(), r.mode.as_str(), r.overall.mse));
            for n in &ns {
                match r.per_n.get(n) {
                    Some(c) if c.cases > 0 => out.push_str(&format!(" {:>12.4e}", c.mse)),
                    _ => out.push_str(&format!(" {:>12}", "-")),
                }
            }
            out.push_str(&format!(" {:>7} {:>7}\n", r.overall.cases, r.overall.failures));
        }
        out
    }
}

fn cell(outcomes: &[Outcome]) -> BiasCell {
    let sq: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| match o {
            Outcome::Estimate { estimate, truth } => Some((estimate - truth) * (estimate - truth)),
            _ => None,
        })
        .collect();
    BiasCell {
        mse: mean(&sq),
        cases: sq.len(),
        failures: outcomes.iter().filter(|o| matches!(o, Outcome::Failed)).count(),
        not_applicable: outcomes.iter().filter(|o| matches!(o, Outcome::NotApplicable)).count(),
    }
}

/// Builds every `(pair, n)` case.
pub fn make_cases<'a>(pairs: &'a [CurvePair], cfg: &BenchConfig) -> Result<Vec<BenchCase<'a>>> {
    pairs
        .par_iter()
        .flat_map_iter(|p| cfg.n_values.iter().map(move |&n| make_case(p, n, cfg.dense_anchor_points)))
        .collect()
}

pub fn eval_bias(pairs: &[CurvePair], bundle: Option<&ModelBundle>, cfg: &BenchConfig) -> Result<BiasReport> {
    let cases = make_cases(pairs, cfg)?;
    let mut rows = Vec::new();
    for &estimator in &cfg.estimators {
        for &mode in &cfg.modes {
            let outcomes = cases
                .par_iter()
                .map(|c| estimate_case(c, mode, estimator, bundle).map(|o| (c.n, o)))
                .collect::<Result<Vec<_>>>()?;
            let all: Vec<Outcome> = outcomes.iter().map(|o| o.1).collect();
            let per_n = cfg
                .n_values
                .iter()
                .map(|&n| {
                    let sub: Vec<Outcome> = outcomes.iter().filter(|o| o.0 == n).map(|o| o.1).collect();
                    (n, cell(&sub))
                })
                .collect();
            rows.push(BiasRow { estimator, mode, overall: cell(&all), per_n });
        }
    }
    Ok(BiasReport { rows })
}

/// Ground truth against one BDCI, in Δr/ΔD units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub n: usize,
    pub mode: Mode,
    pub truth: f64,
    pub mean: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

impl CalibrationOutcome {
    pub fn outside(&self) -> bool {
        !(self.truth >= self.lo && self.truth <= self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub n: usize,
    pub mode: Mode,
    pub cases: usize,
    pub outside: usize,
    pub mean_width: f64,
    pub median_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub cases: usize,
    pub outside: usize,
    pub outside_fraction: f64,
    pub failures: usize,
    pub widths: Vec<WidthRow>,
}

impl CalibrationReport {
    pub fn mean_width(&self, n: usize, mode: Mode) -> Option<f64> {
        self.widths.iter().find(|w| w.n == n && w.mode == mode).map(|w| w.mean_width)
    }

    /// Plot data: `n` against mean BDCI width, one column per mode.
    pub fn width_csv(&self) -> String {
        let mut ns: Vec<usize> = self.widths.iter().map(|w| w.n).collect();
        ns.dedup();
        let mut out = String::from("n,mean_width_bd_br,mean_width_bd_quality\n");
        for n in ns {
            let f = |m| self.mean_width(n, m).map_or(String::new(), |v| format!("{v:e}"));
            out.push_str(&format!("{n},{},{}\n", f(Mode::Rate), f(Mode::Quality)));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "outside 3-sigma: {} / {} = {:.4}% (failures {})\n",
            self.outside,
            self.cases,
            100.0 * self.outside_fraction,
            self.failures
        );
        out.push_str(&format!("{:>3} {:<10} {:>7} {:>8} {:>12} {:>12}\n", "n", "mode", "cases", "outside", "mean_width", "median_width"));
        for w in &self.widths {
            out.push_str(&format!(
                "{:>3} {:<10} {:>7} {:>8} {:>12.4e} {:>12.4e}\n",
                w.n,
                w.mode.as_str(),
                w.cases,
                w.outside,
                w.mean_width,
                w.median_width
            ));
        }
        out
    }
}

/// Per-case BDCI outcomes; cases where the estimator fails are returned as
/// a count.
pub fn calibration_outcomes(pairs: &[CurvePair], bundle: &ModelBundle, cfg: &BenchConfig) -> Result<(Vec<CalibrationOutcome>, usize)> {
    let cases = make_cases(pairs, cfg)?;
    let results = cases
        .par_iter()
        .flat_map_iter(|c| cfg.modes.iter().map(move |&m| (c, m)))
        .map(|(c, mode)| -> Result<Option<CalibrationOutcome>> {
            let r = match compute_bdci(&c.anchor, &c.target, mode, bundle, DEFAULT_DENSE_THRESHOLD) {
                Ok(r) => r,
                Err(_) => return Ok(None),
            };
            let truth = true_delta(c.pair, mode, r.interval)?;
            Ok(Some(CalibrationOutcome {
                n: c.n,
                mode,
                truth,
                mean: r.mean_delta,
                sigma: r.sigma_delta,
                lo: r.interval_delta[0],
                hi: r.interval_delta[1],
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = results.iter().filter(|r| r.is_none()).count();
    Ok((results.into_iter().flatten().collect(), failures))
}

pub fn summarize_calibration(outcomes: &[CalibrationOutcome], failures: usize) -> CalibrationReport {
    let outside = outcomes.iter().filter(|o| o.outside()).count();
    let mut groups: BTreeMap<(usize, Mode), Vec<&CalibrationOutcome>> = BTreeMap::new();
    for o in outcomes {
        groups.entry((o.n, o.mode)).or_default().push(o);
    }
    let widths = groups
        .into_iter()
        .map(|((n, mode), v)| {
            let w: Vec<f64> = v.iter().map(|o| o.width()).collect();
            WidthRow {
                n,
                mode,
                cases: v.len(),
                outside: v.iter().filter(|o| o.outside()).count(),
                mean_width: mean(&w),
                median_width: median(&w),
            }
        })
        .collect();
    CalibrationReport {
        cases: outcomes.len(),
        outside,
        outside_fraction: if outcomes.is_empty() { 0.0 } else { outside as f64 / outcomes.len() as f64 },
        failures,
        widths,
    }
}

pub fn eval_calibration(pairs: &[CurvePair], bundle: &ModelBundle, cfg: &BenchConfig) -> Result<CalibrationReport> {
    let (o, f) = calibration_outcomes(pairs, bundle, cfg)?;
    Ok(summarize_calibration(&o, f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub n: usize,
    pub repetitions: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
}

/// Median wall time of one BD-BR BDCI computation with both curves sparse
/// (every segment goes through a network), on the calling thread.
pub fn eval_runtime(pair: &CurvePair, bundle: &ModelBundle, n_values: &[usize], repetitions: usize) -> Result<Vec<RuntimeRow>> {
    let mut rows = Vec::new();
    for &n in n_values {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(pair.seed, 0x7133 + n as u64));
        let anchor = sample_points_with(&pair.anchor, n, SamplingPolicy::Jittered, &mut rng, "anchor")?;
        let target = sample_points_with(&pair.target, n, SamplingPolicy::Jittered, &mut rng, "target")?;
        for _ in 0..repetitions.min(20) {
            std::hint::black_box(compute_bdci(&anchor, &target, Mode::Rate, bundle, DEFAULT_DENSE_THRESHOLD)?);
        }
        let mut times = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let t = Instant::now();
            std::hint::black_box(compute_bdci(
                std::hint::black_box(&anchor),
                std::hint::black_box(&target),
                Mode::Rate,
                bundle,
                DEFAULT_DENSE_THRESHOLD,
            )?);
            times.push(t.elapsed().as_secs_f64() * 1e3);
        }
        rows.push(RuntimeRow { n, repetitions, median_ms: median(&times), mean_ms: mean(&times) });
    }
    Ok(rows)
}

/// Deterministic part of a bench run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub tool_version: String,
    pub bundle_digest: Option<String>,
    pub corpus_hash: String,
    pub split: String,
    pub pairs: usize,
    pub config: BenchConfig,
    pub bias: BiasReport,
    pub calibration: Option<CalibrationReport>,
}

impl BenchReport {
    /// Pretty JSON with a trailing newline; byte-identical across runs.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut json = serde_json::to_vec_pretty(self).expect("bench report serializes");
        json.push(b'\n');
        json
    }
}

/// Bias and calibration of `bundle` on every pair of `corpus`.
pub fn run_bench(corpus: &Corpus, bundle: &ModelBundle, cfg: &BenchConfig) -> Result<BenchReport> {
    let bias = eval_bias(&corpus.pairs, Some(bundle), cfg)?;
    let calibration = eval_calibration(&corpus.pairs, bundle, cfg)?;
    Ok(BenchReport {
        tool_version: crate::VERSION.to_string(),
        bundle_digest: Some(bundle.digest()),
        corpus_hash: corpus.hash(),
        split: corpus.manifest.split.as_str().to_string(),
        pairs: corpus.pairs.len(),
        config: cfg.clone(),
        bias,
        calibration: Some(calibration),
    })
}
