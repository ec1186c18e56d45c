//! Critical scale search and continuation schedules.

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{geometric_scales, scan_zeros, AnalysisError};
use crate::funcmodel::{Domain, ScalarField};
use crate::homog::{HomogenizationOperator, QuadraturePolicy};
use crate::scalar::Scalar;

/// Relative tolerance of the `h0` bisection.
pub const H0_RELATIVE_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_RHO: f64 = 0.5;
/// Default smallest scale, as a fraction of the shortest box edge.
pub const DEFAULT_H_MIN_FRACTION: f64 = 1e-3;
const PRESWEEP_POINTS: usize = 16;
const LINEAR_SWEEP_POINTS: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error("scale bounds ({lo}, {hi}) must satisfy 0 < lo < hi < {length}")]
    InvalidBounds { lo: f64, hi: f64, length: f64 },
    #[error("target count {target} not reached: {count} zeros remain at h = {h}")]
    Unachievable { target: usize, count: usize, h: f64 },
    #[error("schedule needs 0 < h_min < h_start (got h_min = {h_min}, h_start = {h_start})")]
    InvalidRange { h_start: f64, h_min: f64 },
    #[error("decay factor must lie strictly between 0 and 1, got {0}")]
    InvalidRho(f64),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum H0Method {
    /// The target is already met at the lower bound.
    LowerBound,
    Bisection,
    /// Counts were not monotone across probes; first qualifying sweep point.
    LinearSweep,
    /// No count-based search exists (dimension above one).
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H0Finding<S> {
    pub h0: S,
    pub target: usize,
    pub count_at_h0: Option<usize>,
    /// Count at `h0 * (1 - 2e-3)`, recorded when bisection was used.
    pub count_below: Option<usize>,
    pub method: H0Method,
    /// Every `(h, count)` probe in evaluation order.
    pub probes: Vec<(S, usize)>,
    pub notes: Vec<String>,
}

fn count_at<S: Scalar>(f: &ScalarField<S>, policy: QuadraturePolicy, h: S, grid: usize) -> Result<usize, ScaleError> {
    let op = HomogenizationOperator::new(h, policy).map_err(AnalysisError::from)?;
    Ok(scan_zeros(f, &op, grid)?.count)
}

/// Smallest scale in `[lo, hi]` whose zero count is at most `target`, to
/// relative tolerance [`H0_RELATIVE_TOLERANCE`].
///
/// A geometric pre-sweep brackets the transition. If the pre-sweep counts
/// are not monotone the search falls back to a linear sweep and returns its
/// first qualifying scale, with a note.
pub fn find_h0<S: Scalar>(
    f: &ScalarField<S>,
    policy: QuadraturePolicy,
    target: usize,
    bounds: (S, S),
    grid: usize,
) -> Result<H0Finding<S>, ScaleError> {
    if f.dim() != 1 {
        return Err(AnalysisError::WrongDimension { expected: 1, got: f.dim() }.into());
    }
    let (lo, hi) = bounds;
    let length = f.domain().edge(0);
    if !(lo > S::zero() && lo < hi && hi < length) {
        return Err(ScaleError::InvalidBounds {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            length: length.as_f64(),
        });
    }
    let mut probes = Vec::new();
    let probe = |h: S, probes: &mut Vec<(S, usize)>| -> Result<usize, ScaleError> {
        let c = count_at(f, policy, h, grid)?;
        probes.push((h, c));
        Ok(c)
    };
    let top = probe(hi, &mut probes)?;
    if top > target {
        return Err(ScaleError::Unachievable {
            target,
            count: top,
            h: hi.as_f64(),
        });
    }
    let bottom = probe(lo, &mut probes)?;
    if bottom <= target {
        return Ok(H0Finding {
            h0: lo,
            target,
            count_at_h0: Some(bottom),
            count_below: None,
            method: H0Method::LowerBound,
            probes,
            notes: vec![],
        });
    }

    let sweep = geometric_scales(lo, hi, PRESWEEP_POINTS);
    let mut counts = vec![bottom];
    for &h in &sweep[1..PRESWEEP_POINTS - 1] {
        counts.push(probe(h, &mut probes)?);
    }
    counts.push(top);
    if counts.windows(2).any(|w| w[1] > w[0]) {
        let step = (hi - lo) / S::from_usize_lossy(LINEAR_SWEEP_POINTS);
        for i in 1..=LINEAR_SWEEP_POINTS {
            let h = if i == LINEAR_SWEEP_POINTS { hi } else { lo + step * S::from_usize_lossy(i) };
            let c = probe(h, &mut probes)?;
            if c <= target {
                return Ok(H0Finding {
                    h0: h,
                    target,
                    count_at_h0: Some(c),
                    count_below: None,
                    method: H0Method::LinearSweep,
                    probes,
                    notes: vec![format!(
                        "zero counts not monotone across the geometric pre-sweep ({counts:?}); linear sweep used"
                    )],
                });
            }
        }
        unreachable!("upper bound qualifies");
    }

    let k = counts.iter().position(|&c| c <= target).expect("upper bound qualifies");
    let (mut a, mut b, mut cb) = (sweep[k - 1], sweep[k], counts[k]);
    let tol = S::lit(H0_RELATIVE_TOLERANCE);
    while b - a > tol * b {
        let m = (a + b) / S::lit(2.0);
        let c = probe(m, &mut probes)?;
        if c <= target {
            b = m;
            cb = c;
        } else {
            a = m;
        }
    }
    let below = b * (S::one() - S::lit(2.0 * H0_RELATIVE_TOLERANCE));
    let count_below = if below >= lo { Some(probe(below, &mut probes)?) } else { None };
    Ok(H0Finding {
        h0: b,
        target,
        count_at_h0: Some(cb),
        count_below,
        method: H0Method::Bisection,
        probes,
        notes: vec![],
    })
}

/// Default critical scale for fields of any dimension: half the shortest
/// box edge. A heuristic; there is no count curve to bisect beyond 1-D.
pub fn heuristic_h0<S: Scalar>(domain: &Domain<S>) -> H0Finding<S> {
    H0Finding {
        h0: domain.shortest_edge() / S::lit(2.0),
        target: 0,
        count_at_h0: None,
        count_below: None,
        method: H0Method::Heuristic,
        probes: vec![],
        notes: vec!["heuristic: half the shortest box edge".into()],
    }
}

/// Strictly decreasing scales for continuation, optionally followed by a
/// polish stage on the raw objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationSchedule<S> {
    scales: Vec<S>,
    rho: S,
    polish: bool,
}

impl<S: Scalar> ContinuationSchedule<S> {
    pub fn scales(&self) -> &[S] {
        &self.scales
    }

    pub fn rho(&self) -> S {
        self.rho
    }

    pub fn polish(&self) -> bool {
        self.polish
    }

    pub fn with_polish(mut self, polish: bool) -> Self {
        self.polish = polish;
        self
    }

    pub fn first(&self) -> S {
        self.scales[0]
    }

    /// True when the first scale leaves a non-empty inset domain.
    pub fn fits(&self, domain: &Domain<S>) -> bool {
        self.first() <= domain.shortest_edge()
    }
}

/// `h_start * rho^i` for every `i` with the term at least `h_min`, plus polish.
pub fn make_schedule<S: Scalar>(h_start: S, rho: S, h_min: S) -> Result<ContinuationSchedule<S>, ScaleError> {
    if !(rho > S::zero() && rho < S::one()) {
        return Err(ScaleError::InvalidRho(rho.as_f64()));
    }
    if !(h_min > S::zero() && h_min < h_start && h_start.is_finite()) {
        return Err(ScaleError::InvalidRange {
            h_start: h_start.as_f64(),
            h_min: h_min.as_f64(),
        });
    }
    let mut scales = vec![h_start];
    loop {
        let next = *scales.last().expect("non-empty") * rho;
        if next < h_min {
            break;
        }
        scales.push(next);
    }
    Ok(ContinuationSchedule {
        scales,
        rho,
        polish: true,
    })
}

/// Half the shortest edge, halving down to a thousandth of it.
pub fn default_schedule<S: Scalar>(domain: &Domain<S>) -> ContinuationSchedule<S> {
    let edge = domain.shortest_edge();
    make_schedule(
        edge / S::lit(2.0),
        S::lit(DEFAULT_RHO),
        edge * S::lit(DEFAULT_H_MIN_FRACTION),
    )
    .expect("default parameters are valid")
}
