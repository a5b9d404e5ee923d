//! Neural segment-integral estimator and BD confidence intervals (BDCI).
//!
//! A curve's integral over the BD interval is split at the sample X values.
//! Each piece is predicted as an independent Gaussian by the network of its
//! [`SegmentCategory`], from the four nearest samples in normalized
//! coordinates. The pieces are summed, mapped back to the original units, and
//! the anchor/target difference yields the BD estimate with a 3σ interval.

mod estimate;
mod norm;
mod segment;
mod train;

pub use estimate::{
    compute_bdci, compute_bdci_series, dense_curve_integral, predict_curve_integral, BdciResult, CurveIntegral,
    GaussianEstimate, SegmentPrediction, CI_SIGMAS, DEFAULT_DENSE_THRESHOLD,
};
pub use norm::{normalize_series, NormParams};
pub use train::train_bundle;
pub use segment::{build_input, input_segment, pchip_baseline, SegmentHead, segment_interval, support_start, Position, SegmentCategory, SegmentInstance, SNAP_TOL};
