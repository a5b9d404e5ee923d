use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rd::XySeries;

/// Boundaries this close to a knot (in normalized X) snap onto it.
pub const SNAP_TOL: f64 = 1e-9;

/// Where a segment sits along the sample series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    First,
    Interior,
    Last,
}

/// The seven segment classes, each served by its own network.
///
/// `*Full` segments span a whole knot interval and take 8 inputs; `*With*`
/// segments contain one integration bound strictly inside and take 9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentCategory {
    FirstFull,
    InteriorFull,
    LastFull,
    FirstWithXmin,
    InteriorWithXmin,
    InteriorWithXmax,
    LastWithXmax,
}

impl SegmentCategory {
    pub const ALL: [SegmentCategory; 7] = [
        SegmentCategory::FirstFull,
        SegmentCategory::InteriorFull,
        SegmentCategory::LastFull,
        SegmentCategory::FirstWithXmin,
        SegmentCategory::InteriorWithXmin,
        SegmentCategory::InteriorWithXmax,
        SegmentCategory::LastWithXmax,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentCategory::FirstFull => "first-full",
            SegmentCategory::InteriorFull => "interior-full",
            SegmentCategory::LastFull => "last-full",
            SegmentCategory::FirstWithXmin => "first-with-xmin",
            SegmentCategory::InteriorWithXmin => "interior-with-xmin",
            SegmentCategory::InteriorWithXmax => "interior-with-xmax",
            SegmentCategory::LastWithXmax => "last-with-xmax",
        }
    }

    /// True for the categories that carry an integration bound as 9th input.
    pub fn has_boundary(self) -> bool {
        !matches!(self, SegmentCategory::FirstFull | SegmentCategory::InteriorFull | SegmentCategory::LastFull)
    }

    pub fn input_dim(self) -> usize {
        if self.has_boundary() {
            9
        } else {
            8
        }
    }

    pub fn position(self) -> Position {
        match self {
            SegmentCategory::FirstFull | SegmentCategory::FirstWithXmin => Position::First,
            SegmentCategory::LastFull | SegmentCategory::LastWithXmax => Position::Last,
            _ => Position::Interior,
        }
    }
}

impl fmt::Display for SegmentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SegmentCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown segment category '{s}'"))
    }
}

/// One knot interval of the integration range, ready for prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentInstance {
    pub category: SegmentCategory,
    /// Index of the knot interval `[x_k, x_{k+1}]`.
    pub knot: usize,
    /// First of the four adjacent support sample indices.
    pub support_start: usize,
    /// Integration sub-interval in normalized X.
    pub a: f64,
    pub b: f64,
    pub boundary: Option<f64>,
}

impl SegmentInstance {
    pub fn support_indices(&self) -> [usize; 4] {
        let s = self.support_start;
        [s, s + 1, s + 2, s + 3]
    }
}

/// First support index for knot interval `k` of an `n`-point series.
pub fn support_start(k: usize, n: usize) -> usize {
    if k == 0 {
        0
    } else if k >= n - 2 {
        n - 4
    } else {
        k - 1
    }
}

fn snap(x: f64, xs: &[f64]) -> f64 {
    xs.iter().copied().find(|&k| (k - x).abs() <= SNAP_TOL).unwrap_or(x)
}

/// Splits `[x_lo, x_hi]` into categorized segments along the knots `xs_norm`.
pub fn segment_interval(xs_norm: &[f64], x_lo: f64, x_hi: f64) -> Result<Vec<SegmentInstance>> {
    let n = xs_norm.len();
    if n < 4 {
        return Err(Error::TooFewPoints { required: 4, got: n });
    }
    if !(x_lo < x_hi) {
        return Err(Error::DegenerateInterval { lo: x_lo, hi: x_hi });
    }
    let (first, last) = (xs_norm[0], xs_norm[n - 1]);
    if x_lo < first - SNAP_TOL || x_hi > last + SNAP_TOL {
        return Err(Error::ExtrapolationRequired { lo: x_lo, hi: x_hi });
    }
    let x_lo = snap(x_lo.max(first), xs_norm);
    let x_hi = snap(x_hi.min(last), xs_norm);
    if !(x_lo < x_hi) {
        return Err(Error::DegenerateSpan);
    }

    let mut segments = Vec::new();
    for k in 0..n - 1 {
        let (left, right) = (xs_norm[k], xs_norm[k + 1]);
        if right <= x_lo || left >= x_hi {
            continue;
        }
        let lo_inside = x_lo > left && x_lo < right;
        let hi_inside = x_hi > left && x_hi < right;
        let position = if k == 0 {
            Position::First
        } else if k == n - 2 {
            Position::Last
        } else {
            Position::Interior
        };
        use SegmentCategory::*;
        let category = match (position, lo_inside, hi_inside) {
            (_, true, true) => return Err(Error::DegenerateSpan),
            (Position::First, false, false) => FirstFull,
            (Position::First, true, false) => FirstWithXmin,
            (Position::Interior, false, false) => InteriorFull,
            (Position::Interior, true, false) => InteriorWithXmin,
            (Position::Interior, false, true) => InteriorWithXmax,
            (Position::Last, false, false) => LastFull,
            (Position::Last, false, true) => LastWithXmax,
            // A bound inside the first/last interval on the "wrong" side means
            // the whole span sits inside that one interval.
            (Position::First, false, true) | (Position::Last, true, false) => {
                return Err(Error::DegenerateSpan)
            }
        };
        let boundary = match category {
            FirstWithXmin | InteriorWithXmin => Some(x_lo),
            InteriorWithXmax | LastWithXmax => Some(x_hi),
            _ => None,
        };
        segments.push(SegmentInstance {
            category,
            knot: k,
            support_start: support_start(k, n),
            a: left.max(x_lo),
            b: right.min(x_hi),
            boundary,
        });
    }
    Ok(segments)
}

/// Network input for a segment: the four support points `(x′, y′)` in
/// ascending X, followed by the boundary for `*With*` categories.
pub fn build_input(seg: &SegmentInstance, series_norm: &XySeries) -> Vec<f64> {
    let (xs, ys) = (series_norm.xs(), series_norm.ys());
    let mut input = Vec::with_capacity(9);
    for i in seg.support_indices() {
        input.push(xs[i]);
        input.push(ys[i]);
    }
    if let Some(b) = seg.boundary {
        input.push(b);
    }
    input
}

/// How raw network outputs `(μ′, log σ′)` map to a segment's Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentHead {
    /// `μ = μ′`, `σ = σ′`: the normalized segment integral directly.
    Direct,
    /// `μ = P + s·μ′`, `σ = s·σ′`, with `P` the PCHIP integral of the four
    /// support points over the segment and `s` the segment width times the
    /// support points' Y range.
    #[default]
    PchipLocal,
}

/// Smallest Y range used for the local scale.
const MIN_LOCAL_Y_SPAN: f64 = 1e-9;

/// Normalized X range `[a, b]` a network input covers, and the index of its
/// knot interval within the four support points.
pub fn input_segment(category: SegmentCategory, input: &[f64]) -> (f64, f64, usize) {
    use SegmentCategory::*;
    let knot = |i: usize| input[2 * i];
    match category {
        FirstFull => (knot(0), knot(1), 0),
        InteriorFull => (knot(1), knot(2), 1),
        LastFull => (knot(2), knot(3), 2),
        FirstWithXmin => (input[8], knot(1), 0),
        InteriorWithXmin => (input[8], knot(2), 1),
        InteriorWithXmax => (knot(1), input[8], 1),
        LastWithXmax => (knot(2), input[8], 2),
    }
}

/// PCHIP integral of the four support points over the segment of `input`.
///
/// Fritsch-Carlson slopes at a segment's knots depend only on its support
/// points, so this equals the whole-series PCHIP integral of that segment.
pub fn pchip_baseline(category: SegmentCategory, input: &[f64]) -> f64 {
    let xs = [input[0], input[2], input[4], input[6]];
    let ys = [input[1], input[3], input[5], input[7]];
    let (a, b, j) = input_segment(category, input);
    let d = crate::interp::pchip_slopes(&xs, &ys).expect("four points");
    let h = xs[j + 1] - xs[j];
    let delta = (ys[j + 1] - ys[j]) / h;
    let c = [ys[j], d[j], (3.0 * delta - 2.0 * d[j] - d[j + 1]) / h, (d[j] + d[j + 1] - 2.0 * delta) / (h * h)];
    let anti = |x: f64| {
        let t = x - xs[j];
        t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0)))
    };
    anti(b) - anti(a)
}

impl SegmentHead {
    /// `(offset, scale)` such that `μ = offset + scale·μ′`, `σ = scale·σ′`.
    pub fn offset_scale(self, category: SegmentCategory, input: &[f64]) -> (f64, f64) {
        match self {
            SegmentHead::Direct => (0.0, 1.0),
            SegmentHead::PchipLocal => {
                let (a, b, _) = input_segment(category, input);
                let ys = [input[1], input[3], input[5], input[7]];
                let span = ys.iter().fold(f64::NEG_INFINITY, |m, &y| m.max(y)) - ys.iter().fold(f64::INFINITY, |m, &y| m.min(y));
                (pchip_baseline(category, input), (b - a) * span.max(MIN_LOCAL_Y_SPAN))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::Mode;
    use SegmentCategory::*;

    const XS5: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

    #[test]
    fn five_point_example() {
        let segs = segment_interval(&XS5, 0.1, 0.8).unwrap();
        let got: Vec<_> = segs.iter().map(|s| (s.category, s.a, s.b, s.support_start)).collect();
        assert_eq!(
            got,
            vec![
                (FirstWithXmin, 0.1, 0.25, 0),
                (InteriorFull, 0.25, 0.5, 0),
                (InteriorFull, 0.5, 0.75, 1),
                (LastWithXmax, 0.75, 0.8, 1),
            ]
        );
        assert_eq!(segs[0].boundary, Some(0.1));
        assert_eq!(segs[3].boundary, Some(0.8));
        assert_eq!(segs[1].boundary, None);
    }

    #[test]
    fn minimum_point_count() {
        let xs = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let segs = segment_interval(&xs, 0.0, 1.0).unwrap();
        let cats: Vec<_> = segs.iter().map(|s| s.category).collect();
        assert_eq!(cats, vec![FirstFull, InteriorFull, LastFull]);
        assert!(segs.iter().all(|s| s.support_indices() == [0, 1, 2, 3]));
    }

    #[test]
    fn interior_bounds() {
        let segs = segment_interval(&XS5, 0.3, 0.6).unwrap();
        let cats: Vec<_> = segs.iter().map(|s| s.category).collect();
        assert_eq!(cats, vec![InteriorWithXmin, InteriorWithXmax]);
    }

    #[test]
    fn degenerate_span() {
        assert_eq!(segment_interval(&XS5, 0.3, 0.4).unwrap_err().kind(), "DegenerateSpan");
        assert_eq!(segment_interval(&XS5, 0.0, 0.1).unwrap_err().kind(), "DegenerateSpan");
        assert_eq!(segment_interval(&XS5, 0.9, 1.0).unwrap_err().kind(), "DegenerateSpan");
    }

    #[test]
    fn snapping_to_knots() {
        let segs = segment_interval(&XS5, 0.25 + 5e-10, 1.0 - 1e-10).unwrap();
        let cats: Vec<_> = segs.iter().map(|s| s.category).collect();
        assert_eq!(cats, vec![InteriorFull, InteriorFull, LastFull]);
        assert_eq!(segs[0].a, 0.25);
        // a single full knot interval is fine
        let segs = segment_interval(&XS5, 0.25, 0.5).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].category, InteriorFull);
    }

    #[test]
    fn extrapolation_rejected() {
        assert_eq!(segment_interval(&XS5, -0.1, 0.5).unwrap_err().kind(), "ExtrapolationRequired");
        assert_eq!(segment_interval(&XS5, 0.2, 1.2).unwrap_err().kind(), "ExtrapolationRequired");
        assert_eq!(segment_interval(&XS5[..3], 0.0, 0.5).unwrap_err().kind(), "TooFewPoints");
    }

    #[test]
    fn inputs() {
        let xs = vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let s = XySeries::new(xs.clone(), xs.clone(), Mode::Quality).unwrap();
        let segs = segment_interval(&xs, 0.0, 1.0).unwrap();
        let input = build_input(&segs[0], &s);
        assert_eq!(input, vec![0.0, 0.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0, 1.0]);
        for seg in &segs {
            assert_eq!(build_input(seg, &s).len(), 8);
        }
        let segs = segment_interval(&xs, 0.1, 1.0).unwrap();
        assert_eq!(segs[0].category, FirstWithXmin);
        let input = build_input(&segs[0], &s);
        assert_eq!(input.len(), 9);
        assert_eq!(input[8], 0.1);
    }

    #[test]
    fn baseline_matches_whole_series_pchip() {
        let xs = vec![0.0, 0.1, 0.35, 0.5, 0.8, 1.0];
        let ys = vec![0.0, 0.4, 0.7, 0.8, 0.95, 1.0];
        let s = XySeries::new(xs.clone(), ys, Mode::Quality).unwrap();
        let fit = crate::interp::fit_pchip(&s).unwrap();
        for (lo, hi) in [(0.0, 1.0), (0.05, 0.9), (0.2, 1.0), (0.0, 0.6), (0.4, 0.45 + 0.3)] {
            for seg in segment_interval(&xs, lo, hi).unwrap() {
                let input = build_input(&seg, &s);
                let (a, b, _) = input_segment(seg.category, &input);
                assert_eq!((a, b), (seg.a, seg.b));
                let want = fit.integrate(seg.a, seg.b).unwrap();
                assert!((pchip_baseline(seg.category, &input) - want).abs() < 1e-14, "{seg:?}");
            }
        }
    }

    #[test]
    fn category_metadata() {
        assert_eq!(SegmentCategory::ALL.len(), 7);
        let with: Vec<_> = SegmentCategory::ALL.iter().filter(|c| c.has_boundary()).collect();
        assert_eq!(with.len(), 4);
        for c in SegmentCategory::ALL {
            assert_eq!(c.as_str().parse::<SegmentCategory>().unwrap(), c);
            assert_eq!(SegmentCategory::from_index(c.index()), Some(c));
        }
    }
}
