//! Bjøntegaard Delta (BD) metrics for rate-distortion curves.
//!
//! Two families of estimators live here:
//!
//! * the classical pipeline ([`classic`]) fitting each curve with a least
//!   squares cubic, a not-a-knot cubic spline, PCHIP or an Akima spline and
//!   integrating the fits in closed form;
//! * a neural estimator ([`bdci`]) that predicts per-segment integrals as
//!   Gaussians with one small MLP per segment category, producing a point
//!   estimate together with a `[μ − 3σ, μ + 3σ]` confidence interval (BDCI).
//!
//! [`synth`] generates analytic R-D curves and training corpora, [`nn`] holds
//! the network, its training loop and bundle format, and [`bench`] measures
//! bias, calibration and runtime.

pub mod bdci;
pub mod bench;
pub mod classic;
pub mod error;
pub mod interp;
pub mod io;
pub mod nn;
pub mod rd;
pub mod synth;

pub use error::{Error, Result};
pub use rd::{BdValue, IntegrationInterval, Method, Mode, RdCurveSamples, RdPoint, XySeries};

/// Version string stamped into bundles and result documents.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
