use std::fmt;
use std::path::Path;

use bdci_core::Error;

pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_EMPTY_INTERSECTION: u8 = 3;
pub const EXIT_BUNDLE: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

/// A failure rendered as one machine-parsable stderr line:
/// `error: kind=<Kind> file=<path or -> detail=<message>`.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub file: Option<String>,
    pub detail: String,
    pub code: u8,
}

pub type CliResult<T> = Result<T, CliError>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::EmptyIntersection { .. } => EXIT_EMPTY_INTERSECTION,
        e if e.is_bundle() => EXIT_BUNDLE,
        e if e.is_validation() => EXIT_VALIDATION,
        Error::Corpus(_) | Error::InvalidConfig(_) | Error::TooFewSamples { .. } => EXIT_VALIDATION,
        _ => EXIT_IO,
    }
}

impl CliError {
    pub fn from_core(e: Error, file: Option<&Path>) -> Self {
        Self { kind: e.kind(), file: file.map(|p| p.display().to_string()), code: exit_code(&e), detail: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = self.detail.replace(['\n', '\r'], " ");
        write!(f, "error: kind={} file={} detail={}", self.kind, self.file.as_deref().unwrap_or("-"), detail)
    }
}
