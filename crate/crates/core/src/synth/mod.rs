//! Synthetic R-D curves with exact integrals, sparse sampling, and the
//! segment-record corpus used to train and test the estimator.

pub mod corpus;
pub mod curve;
pub mod quad;
pub mod sample;

pub use corpus::{
    build_corpus, derive_seed, gen_pair, gen_pairs, read_manifest, splitmix64, Corpus, CorpusConfig, CurvePair, Manifest,
    SegmentSampleRecord, Split,
};
pub use curve::{gen_curve, gen_curve_with, oracle_integral, oracle_integral_simpson, AnalyticCurve, CurveParams, Family, Profile, ProjectedCurve};
pub use quad::{adaptive_simpson, composite_simpson};
pub use sample::{sample_points, sample_points_with, SamplingPolicy};
