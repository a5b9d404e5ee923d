use thiserror::Error;

/// Every failure the library can report.
///
/// Variants carry enough context to print a one-line diagnostic; the CLI maps
/// them onto exit codes via [`Error::kind`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate must be positive, got {rate} at point {index}")]
    NonPositiveRate { index: usize, rate: f64 },
    #[error("quality must be finite, got {quality} at point {index}")]
    NonFiniteQuality { index: usize, quality: f64 },
    #[error("duplicate rate {rate}")]
    DuplicateRate { rate: f64 },
    #[error("quality is not monotone in rate (direction reverses near rate {rate})")]
    NonMonotoneQuality { rate: f64 },
    #[error("need at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("duplicate x value {x}; the projected curve is not a function")]
    DuplicateX { x: f64 },
    #[error("x values must be strictly increasing")]
    UnsortedX,
    #[error("xs and ys have different lengths ({xs} vs {ys})")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("curve ranges do not overlap: [{lo}, {hi}] is empty")]
    EmptyIntersection { lo: f64, hi: f64 },
    #[error("metric mismatch: {anchor} vs {target}")]
    MetricMismatch { anchor: String, target: String },
    #[error("least-squares system is singular or ill-conditioned")]
    SingularSystem,
    #[error("piecewise cubic is discontinuous at breakpoint {index}")]
    Discontinuous { index: usize },
    #[error("{x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("series has constant y; its integral is analytic")]
    FlatY,
    #[error("integration bounds fall inside a single knot interval")]
    DegenerateSpan,
    #[error("integration interval [{lo}, {hi}] extends past the samples")]
    ExtrapolationRequired { lo: f64, hi: f64 },
    #[error("input has {got} values, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {required} training samples, got {got}")]
    TooFewSamples { required: usize, got: usize },
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("bad magic bytes; not a model bundle")]
    BadMagic,
    #[error("unsupported bundle version {0}")]
    VersionUnsupported(u32),
    #[error("checksum mismatch")]
    ChecksumMismatch,
    #[error("bundle has no model for category {0}")]
    MissingCategory(String),
    #[error("malformed bundle: {0}")]
    MalformedBundle(String),
    #[error("adaptive quadrature did not reach tolerance on [{a}, {b}]")]
    ToleranceNotMet { a: f64, b: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("corpus: {0}")]
    Corpus(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name, used in machine-parsable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveRate { .. } => "NonPositiveRate",
            Error::NonFiniteQuality { .. } => "NonFiniteQuality",
            Error::DuplicateRate { .. } => "DuplicateRate",
            Error::NonMonotoneQuality { .. } => "NonMonotoneQuality",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::DuplicateX { .. } => "DuplicateX",
            Error::UnsortedX => "UnsortedX",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::DegenerateInterval { .. } => "DegenerateInterval",
            Error::EmptyIntersection { .. } => "EmptyIntersection",
            Error::MetricMismatch { .. } => "MetricMismatch",
            Error::SingularSystem => "SingularSystem",
            Error::Discontinuous { .. } => "Discontinuous",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::FlatY => "FlatY",
            Error::DegenerateSpan => "DegenerateSpan",
            Error::ExtrapolationRequired { .. } => "ExtrapolationRequired",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::DivergedLoss { .. } => "DivergedLoss",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::BadMagic => "BadMagic",
            Error::VersionUnsupported(_) => "VersionUnsupported",
            Error::ChecksumMismatch => "ChecksumMismatch",
            Error::MissingCategory(_) => "MissingCategory",
            Error::MalformedBundle(_) => "MalformedBundle",
            Error::ToleranceNotMet { .. } => "ToleranceNotMet",
            Error::Parse { .. } => "Parse",
            Error::Corpus(_) => "Corpus",
            Error::Io(_) => "Io",
        }
    }

    /// True for errors caused by the R-D input data itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveRate { .. }
                | Error::NonFiniteQuality { .. }
                | Error::DuplicateRate { .. }
                | Error::NonMonotoneQuality { .. }
                | Error::TooFewPoints { .. }
                | Error::DuplicateX { .. }
                | Error::UnsortedX
                | Error::LengthMismatch { .. }
                | Error::DegenerateInterval { .. }
                | Error::MetricMismatch { .. }
                | Error::SingularSystem
                | Error::Parse { .. }
        )
    }

    /// True for errors raised while decoding a model bundle.
    pub fn is_bundle(&self) -> bool {
        matches!(
            self,
            Error::BadMagic
                | Error::VersionUnsupported(_)
                | Error::ChecksumMismatch
                | Error::MissingCategory(_)
                | Error::MalformedBundle(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
