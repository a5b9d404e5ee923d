//! Training/test corpus of segment records built from synthetic curve pairs.
//!
//! On disk a corpus is a directory holding
//!
//! - `records.ndjson`: a header line, then one [`SegmentSampleRecord`] per line,
//! - `curves.ndjson`: one [`CurvePair`] per line,
//! - `manifest.json`: seeds, counts and the SHA-256 of both data files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bdci::{build_input, normalize_series, segment_interval, SegmentCategory};
use crate::error::{Error, Result};
use crate::nn::bundle::sha256_hex;
use crate::rd::{project_axes, to_log_rate, IntegrationInterval, Mode, RdCurveSamples};
use crate::synth::curve::{curve_through, AnalyticCurve, Family, Profile, ProjectedCurve};
use crate::synth::sample::{sample_points_with, SamplingPolicy};

pub const CORPUS_VERSION: u32 = 1;
pub const RECORDS_FILE: &str = "records.ndjson";
pub const CURVES_FILE: &str = "curves.ndjson";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Probability that an interval bound snaps to the sampled extreme.
const SNAP_PROBABILITY: f64 = 0.2;
/// Interior bounds are drawn uniformly from this central band of the span.
const BOUND_BAND: (f64, f64) = (0.05, 0.95);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Split::Train => 0x7472_6169_6e00_0000,
            Split::Test => 0x7465_7374_0000_0000,
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of item `index` under `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    /// Number of anchor/target curve pairs.
    pub pairs: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
    pub split: Split,
    /// Independent samplings of each curve.
    pub samplings_per_curve: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { pairs: 1000, n_min: 4, n_max: 8, seed: 0, split: Split::Train, samplings_per_curve: 4 }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pairs == 0 || self.samplings_per_curve == 0 {
            return Err(Error::InvalidConfig("pairs and samplings_per_curve must be positive".into()));
        }
        if self.n_min < 4 || self.n_max < self.n_min || self.n_max > 16 {
            return Err(Error::InvalidConfig(format!(
                "sample counts must satisfy 4 <= n_min <= n_max <= 16, got {}..{}",
                self.n_min, self.n_max
            )));
        }
        Ok(())
    }
}

/// An anchor and a target curve with the same metric whose ranges overlap in
/// both BD projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePair {
    pub id: String,
    pub seed: u64,
    pub profile: Profile,
    pub anchor: AnalyticCurve,
    pub target: AnalyticCurve,
}

impl CurvePair {
    pub fn curves(&self) -> [(&'static str, &AnalyticCurve); 2] {
        [("anchor", &self.anchor), ("target", &self.target)]
    }

    /// Exact BD of target against anchor over the intersection of the two
    /// curves' ranges in `mode`.
    pub fn true_bd(&self, mode: Mode) -> Result<(f64, IntegrationInterval)> {
        let a = ProjectedCurve::new(&self.anchor, mode);
        let b = ProjectedCurve::new(&self.target, mode);
        let (alo, ahi) = a.domain();
        let (blo, bhi) = b.domain();
        let (lo, hi) = (alo.max(blo), ahi.min(bhi));
        if lo >= hi {
            return Err(Error::EmptyIntersection { lo, hi });
        }
        let iv = IntegrationInterval::new(lo, hi)?;
        Ok(((b.integral(lo, hi)? - a.integral(lo, hi)?) / iv.width(), iv))
    }
}

fn overlap_fraction(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = a.1.min(b.1) - a.0.max(b.0);
    inter / (a.1 - a.0).min(b.1 - b.0)
}

/// Draws a curve pair from `seed`.
pub fn gen_pair(id: String, seed: u64) -> CurvePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profile = Profile::ALL[rng.random_range(0..Profile::ALL.len())];
    let anchor = crate::synth::curve::gen_curve_with(Family::ALL[rng.random_range(0..4)], profile, &mut rng);
    let (x_lo, x_hi) = anchor.domain();
    let w = x_hi - x_lo;
    let (q0, q1) = (anchor.eval(x_lo), anchor.eval(x_hi));
    let r = (q1 - q0).abs();
    let target = loop {
        let lo = x_lo + w * rng.random_range(-0.25..0.25);
        let hi = lo + w * rng.random_range(0.8..1.25);
        let mut t0 = q0 + r * rng.random_range(-0.15..0.15);
        let mut t1 = q1 + r * rng.random_range(-0.15..0.15);
        if profile == Profile::SsimLike {
            t0 = t0.min(0.999);
            t1 = t1.min(0.999);
        }
        if profile == Profile::LpipsLike {
            t0 = t0.max(0.005);
            t1 = t1.max(0.005);
        }
        if (t1 - t0) * (q1 - q0) <= 0.0 {
            continue;
        }
        let family = Family::ALL[rng.random_range(0..4)];
        let Ok(t) = curve_through(family, (lo, hi), (t0, t1), profile.metric(), &mut rng) else { continue };
        if !t.has_plateau()
            && overlap_fraction(anchor.domain(), t.domain()) >= 0.3
            && overlap_fraction(anchor.quality_range(), t.quality_range()) >= 0.3
        {
            break t;
        }
    };
    CurvePair { id, seed, profile, anchor, target }
}

/// Training pair `(ψ, I′)` for one segment, with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSampleRecord {
    pub category: SegmentCategory,
    pub input: Vec<f64>,
    pub target_norm: f64,
    pub curve_id: String,
    pub sampling_seed: u64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub split: Split,
    pub seed: u64,
    pub pairs: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub samplings_per_curve: usize,
    pub records: usize,
    pub category_counts: BTreeMap<SegmentCategory, usize>,
    pub skipped_degenerate: usize,
    /// Every curve id in the corpus starts with this prefix.
    pub curve_id_prefix: String,
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub manifest: Manifest,
    pub pairs: Vec<CurvePair>,
    pub records: Vec<SegmentSampleRecord>,
}

#[derive(Serialize, Deserialize)]
struct RecordsHeader {
    format: String,
    version: u32,
    seed: u64,
    split: Split,
}

/// A random integration interval inside `[x_min, x_max]`.
fn draw_interval<R: Rng + ?Sized>(rng: &mut R, x_min: f64, x_max: f64) -> (f64, f64) {
    let span = x_max - x_min;
    loop {
        let mut u = x_min + span * rng.random_range(BOUND_BAND.0..BOUND_BAND.1);
        let mut v = x_min + span * rng.random_range(BOUND_BAND.0..BOUND_BAND.1);
        if u > v {
            std::mem::swap(&mut u, &mut v);
        }
        if rng.random_bool(SNAP_PROBABILITY) {
            u = x_min;
        }
        if rng.random_bool(SNAP_PROBABILITY) {
            v = x_max;
        }
        if v - u > 1e-6 * span {
            return (u, v);
        }
    }
}

/// Segment records of one sampled curve in one projection; `None` when the
/// interval fell inside a single knot interval.
pub fn segment_records(
    curve: &AnalyticCurve,
    samples: &RdCurveSamples,
    mode: Mode,
    interval: (f64, f64),
    curve_id: &str,
    sampling_seed: u64,
) -> Result<Option<Vec<SegmentSampleRecord>>> {
    let series = project_axes(&to_log_rate(samples), mode)?;
    let (series_norm, p) = normalize_series(&series)?;
    let (lo, hi) = interval;
    let segs = match segment_interval(series_norm.xs(), p.norm_x(lo), p.norm_x(hi)) {
        Ok(s) => s,
        Err(Error::DegenerateSpan) => return Ok(None),
        Err(e) => return Err(e),
    };
    let truth = ProjectedCurve::new(curve, mode);
    let (xs, xs_norm) = (series.xs(), series_norm.xs());
    let mut out = Vec::with_capacity(segs.len());
    for seg in segs {
        let k = seg.knot;
        let a = if seg.a == xs_norm[k] { xs[k] } else { lo };
        let b = if seg.b == xs_norm[k + 1] { xs[k + 1] } else { hi };
        let integral = truth.integral(a, b)?;
        let target_norm = (integral - p.y_min * (b - a)) / (p.x_span() * p.y_span());
        out.push(SegmentSampleRecord {
            category: seg.category,
            input: build_input(&seg, &series_norm),
            target_norm,
            curve_id: curve_id.to_string(),
            sampling_seed,
            mode,
        });
    }
    Ok(Some(out))
}

fn pair_records(pair: &CurvePair, cfg: &CorpusConfig) -> Result<(Vec<SegmentSampleRecord>, usize)> {
    let mut records = Vec::new();
    let mut skipped = 0;
    for (ci, (role, curve)) in pair.curves().into_iter().enumerate() {
        let curve_id = format!("{}/{}", pair.id, role);
        for s in 0..cfg.samplings_per_curve {
            let sampling_seed = derive_seed(pair.seed, (ci * cfg.samplings_per_curve + s) as u64 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(sampling_seed);
            let n = rng.random_range(cfg.n_min..=cfg.n_max);
            let samples = sample_points_with(curve, n, SamplingPolicy::Jittered, &mut rng, &curve_id)?;
            let log = to_log_rate(&samples);
            for mode in Mode::ALL {
                let series = project_axes(&log, mode)?;
                let interval = draw_interval(&mut rng, series.x_min(), series.x_max());
                match segment_records(curve, &samples, mode, interval, &curve_id, sampling_seed)? {
                    Some(r) => records.extend(r),
                    None => skipped += 1,
                }
            }
        }
    }
    Ok((records, skipped))
}

/// The curve pairs of a split, in order.
pub fn gen_pairs(cfg: &CorpusConfig) -> Vec<CurvePair> {
    let base = cfg.seed ^ cfg.split.salt();
    (0..cfg.pairs)
        .into_par_iter()
        .map(|i| gen_pair(format!("{}-{i:06}", cfg.split.as_str()), derive_seed(base, i as u64)))
        .collect()
}

/// Builds a corpus deterministically from `cfg`.
///
/// Curve ids carry the split name, so train and test corpora never share a
/// curve; their seeds are derived from split-specific streams as well.
pub fn build_corpus(cfg: &CorpusConfig) -> Result<Corpus> {
    cfg.validate()?;
    let pairs = gen_pairs(cfg);
    let per_pair = pairs.par_iter().map(|p| pair_records(p, cfg)).collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut skipped = 0;
    for (r, s) in per_pair {
        records.extend(r);
        skipped += s;
    }
    let mut category_counts: BTreeMap<SegmentCategory, usize> = SegmentCategory::ALL.iter().map(|&c| (c, 0)).collect();
    for r in &records {
        *category_counts.get_mut(&r.category).expect("all categories present") += 1;
    }
    let manifest = Manifest {
        format: "bdci-corpus".into(),
        version: CORPUS_VERSION,
        tool_version: crate::VERSION.into(),
        split: cfg.split,
        seed: cfg.seed,
        pairs: cfg.pairs,
        n_min: cfg.n_min,
        n_max: cfg.n_max,
        samplings_per_curve: cfg.samplings_per_curve,
        records: records.len(),
        category_counts,
        skipped_degenerate: skipped,
        curve_id_prefix: format!("{}-", cfg.split.as_str()),
        files: BTreeMap::new(),
    };
    let mut corpus = Corpus { manifest, pairs, records };
    let (rec, cur) = corpus.encode_files();
    corpus.manifest.files.insert(RECORDS_FILE.into(), sha256_hex(&rec));
    corpus.manifest.files.insert(CURVES_FILE.into(), sha256_hex(&cur));
    Ok(corpus)
}

fn json_line<T: Serialize>(out: &mut Vec<u8>, v: &T) {
    serde_json::to_writer(&mut *out, v).expect("serializable");
    out.push(b'\n');
}

impl Corpus {
    fn encode_files(&self) -> (Vec<u8>, Vec<u8>) {
        let mut rec = Vec::new();
        let header = RecordsHeader {
            format: "bdci-corpus-records".into(),
            version: CORPUS_VERSION,
            seed: self.manifest.seed,
            split: self.manifest.split,
        };
        json_line(&mut rec, &header);
        for r in &self.records {
            json_line(&mut rec, r);
        }
        let mut cur = Vec::new();
        for p in &self.pairs {
            json_line(&mut cur, p);
        }
        (rec, cur)
    }

    /// Hash identifying the record set, stored in trained bundles.
    pub fn hash(&self) -> String {
        self.manifest.files.get(RECORDS_FILE).cloned().unwrap_or_default()
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let (rec, cur) = self.encode_files();
        fs::write(dir.join(RECORDS_FILE), rec)?;
        fs::write(dir.join(CURVES_FILE), cur)?;
        let mut manifest = serde_json::to_vec_pretty(&self.manifest).expect("serializable");
        manifest.push(b'\n');
        fs::write(dir.join(MANIFEST_FILE), manifest)?;
        Ok(())
    }

    /// Reads a corpus directory, rejecting it unless both data files match
    /// the manifest's hashes and counts.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let manifest = read_manifest(dir)?;
        let load = |name: &str| -> Result<Vec<u8>> {
            let bytes = fs::read(dir.join(name)).map_err(|e| Error::Corpus(format!("{name}: {e}")))?;
            match manifest.files.get(name) {
                Some(h) if *h == sha256_hex(&bytes) => Ok(bytes),
                Some(_) => Err(Error::Corpus(format!("{name}: hash does not match manifest (partial or modified corpus)"))),
                None => Err(Error::Corpus(format!("manifest lists no hash for {name}"))),
            }
        };
        let rec = load(RECORDS_FILE)?;
        let cur = load(CURVES_FILE)?;
        let parse_err = |name: &str, line: usize, e: serde_json::Error| Error::Corpus(format!("{name} line {line}: {e}"));

        let text = std::str::from_utf8(&rec).map_err(|e| Error::Corpus(format!("{RECORDS_FILE}: {e}")))?;
        let mut lines = text.lines();
        let header: RecordsHeader = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| parse_err(RECORDS_FILE, 1, e))?;
        if header.version != CORPUS_VERSION {
            return Err(Error::Corpus(format!("unsupported records version {}", header.version)));
        }
        let records = lines
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(RECORDS_FILE, i + 2, e)))
            .collect::<Result<Vec<SegmentSampleRecord>>>()?;
        let text = std::str::from_utf8(&cur).map_err(|e| Error::Corpus(format!("{CURVES_FILE}: {e}")))?;
        let pairs = text
            .lines()
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(CURVES_FILE, i + 1, e)))
            .collect::<Result<Vec<CurvePair>>>()?;
        if records.len() != manifest.records || pairs.len() != manifest.pairs {
            return Err(Error::Corpus("record or pair count differs from manifest".into()));
        }
        Ok(Self { manifest, pairs, records })
    }

    /// Records grouped by category as `(inputs, targets)`.
    pub fn by_category(&self) -> BTreeMap<SegmentCategory, (Vec<Vec<f64>>, Vec<f64>)> {
        let mut out: BTreeMap<SegmentCategory, (Vec<Vec<f64>>, Vec<f64>)> = BTreeMap::new();
        for r in &self.records {
            let e = out.entry(r.category).or_default();
            e.0.push(r.input.clone());
            e.1.push(r.target_norm);
        }
        out
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let bytes = fs::read(dir.join(MANIFEST_FILE)).map_err(|e| Error::Corpus(format!("{MANIFEST_FILE}: {e}")))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Corpus(format!("{MANIFEST_FILE}: {e}")))
}
