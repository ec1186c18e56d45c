//! Zero-crossing analysis of `T(h, .)`, sign profiles, containment of the
//! global minimizer, the 2-D extreme-point census of `F(h, .)`, and the
//! theorem-verification suite built on them.

mod verify;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::funcmodel::{FieldError, Oracle, ScalarField};
use crate::homog::{HomogError, HomogenizationOperator, QuadraturePolicy};
use crate::scalar::Scalar;
use crate::scale::ScaleError;
use crate::search::bisect;
use crate::solver::SolverError;

pub use verify::{verify_theorems, CheckId, CheckRecord, CheckStatus, TheoremReport, VerifyConfig};

pub const MIN_SCAN_GRID: usize = 128;
pub const DEFAULT_SCAN_GRID: usize = 1024;
pub const DEFAULT_CENSUS_GRID: usize = 256;
/// Dead band on `T` relative to `1 + max |T|`.
pub const DEAD_BAND: f64 = 1e-12;
/// Bisection stops once the bracket is this fraction of the scan interval.
pub const ZERO_WIDTH: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("scan grid must have at least {MIN_SCAN_GRID} cells, got {0}")]
    GridTooCoarse(usize),
    #[error("operation needs a {expected}-dimensional field, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("h values must be positive and strictly increasing")]
    InvalidScales,
    #[error("no zero of T to test containment against")]
    NoZeros,
    #[error("unknown corpus entry `{0}` in configuration")]
    UnknownEntry(String),
    #[error(transparent)]
    Homog(#[from] HomogError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Scale(Box<ScaleError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
            Sign::Zero => '0',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignRun {
    pub sign: Sign,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinedZero<S> {
    pub x: S,
    /// Grid points on either side with strictly opposite signs of `T`.
    pub bracket: (S, S),
    /// `|T(h, x)|` at the refined zero.
    pub residual: S,
}

/// Sign-changing zeros of `T(h, .)` over the inset interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCrossingReport<S> {
    pub h: S,
    pub interval: (S, S),
    pub grid: usize,
    /// Dead band: grid values with `|T|` at most this are classed as zero.
    pub dead_band: S,
    pub max_abs: S,
    pub zeros: Vec<RefinedZero<S>>,
    pub profile: Vec<SignRun>,
    /// Number of sign-changing zeros (alternations in the profile).
    pub count: usize,
    /// Zero runs flanked by equal signs or by the interval ends.
    pub touching: usize,
}

impl<S: Scalar> ZeroCrossingReport<S> {
    /// Compact profile such as `+120 0 3 -898`.
    pub fn profile_string(&self) -> String {
        self.profile
            .iter()
            .map(|r| format!("{}{}", r.sign.symbol(), r.length))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn zero_points(&self) -> Vec<S> {
        self.zeros.iter().map(|z| z.x).collect()
    }

    pub fn identically_zero(&self) -> bool {
        self.profile.len() == 1 && self.profile[0].sign == Sign::Zero
    }
}

fn require_1d<S: Scalar>(f: &ScalarField<S>) -> Result<(), AnalysisError> {
    if f.dim() == 1 {
        Ok(())
    } else {
        Err(AnalysisError::WrongDimension {
            expected: 1,
            got: f.dim(),
        })
    }
}

/// Scans `T(h, .)` on `grid` uniform cells over the inset interval and
/// refines every sign change by bisection.
pub fn scan_zeros<S: Scalar>(
    f: &ScalarField<S>,
    op: &HomogenizationOperator<S>,
    grid: usize,
) -> Result<ZeroCrossingReport<S>, AnalysisError> {
    require_1d(f)?;
    if grid < MIN_SCAN_GRID {
        return Err(AnalysisError::GridTooCoarse(grid));
    }
    let inset = op.inset_domain(f)?;
    let (lo, hi) = inset.bounds(0);
    let step = (hi - lo) / S::from_usize_lossy(grid);
    let xs: Vec<S> = (0..=grid)
        .map(|i| if i == grid { hi } else { lo + step * S::from_usize_lossy(i) })
        .collect();
    let t: Vec<S> = xs.iter().map(|&x| op.difference_quotient(f, x)).collect();
    let max_abs = t.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    let dead_band = S::lit(DEAD_BAND) * (S::one() + max_abs);
    let signs: Vec<Sign> = t
        .iter()
        .map(|&v| {
            if v.abs() <= dead_band {
                Sign::Zero
            } else if v > S::zero() {
                Sign::Positive
            } else {
                Sign::Negative
            }
        })
        .collect();

    let mut profile: Vec<SignRun> = Vec::new();
    for &s in &signs {
        match profile.last_mut() {
            Some(run) if run.sign == s => run.length += 1,
            _ => profile.push(SignRun { sign: s, length: 1 }),
        }
    }

    let width = S::lit(ZERO_WIDTH) * (hi - lo);
    let mut zeros = Vec::new();
    let mut last: Option<(usize, Sign)> = None;
    for (i, &s) in signs.iter().enumerate() {
        if s == Sign::Zero {
            continue;
        }
        if let Some((j, prev)) = last {
            if prev != s {
                let (a, b) = (xs[j], xs[i]);
                let (x, _, _) = bisect(|x| op.difference_quotient(f, x), a, b, width)
                    .expect("bracket has opposite signs");
                zeros.push(RefinedZero {
                    x,
                    bracket: (a, b),
                    residual: op.difference_quotient(f, x).abs(),
                });
            }
        }
        last = Some((i, s));
    }

    let mut touching = 0;
    for (k, run) in profile.iter().enumerate() {
        if run.sign != Sign::Zero {
            continue;
        }
        let before = k.checked_sub(1).map(|p| profile[p].sign);
        let after = profile.get(k + 1).map(|r| r.sign);
        match (before, after) {
            (Some(a), Some(b)) if a != b => {}
            _ => touching += 1,
        }
    }

    Ok(ZeroCrossingReport {
        h: op.scale(),
        interval: (lo, hi),
        grid,
        dead_band,
        max_abs,
        count: zeros.len(),
        zeros,
        profile,
        touching,
    })
}

fn check_scales<S: Scalar>(h_values: &[S]) -> Result<(), AnalysisError> {
    let positive = h_values.iter().all(|h| *h > S::zero());
    let increasing = h_values.windows(2).all(|w| w[0] < w[1]);
    if positive && increasing {
        Ok(())
    } else {
        Err(AnalysisError::InvalidScales)
    }
}

/// `scan_zeros` at every scale, in order. Scales are scanned in parallel.
pub fn scan_sweep<S: Scalar>(
    f: &ScalarField<S>,
    policy: QuadraturePolicy,
    h_values: &[S],
    grid: usize,
) -> Result<Vec<ZeroCrossingReport<S>>, AnalysisError> {
    check_scales(h_values)?;
    h_values
        .par_iter()
        .map(|&h| scan_zeros(f, &HomogenizationOperator::new(h, policy)?, grid))
        .collect()
}

/// Sign-changing zero count of `T(h, .)` for each `h`.
pub fn zero_count_curve<S: Scalar>(
    f: &ScalarField<S>,
    policy: QuadraturePolicy,
    h_values: &[S],
    grid: usize,
) -> Result<Vec<(S, usize)>, AnalysisError> {
    Ok(scan_sweep(f, policy, h_values, grid)?
        .into_iter()
        .map(|r| (r.h, r.count))
        .collect())
}

pub fn is_non_increasing(counts: &[usize]) -> bool {
    counts.windows(2).all(|w| w[1] <= w[0])
}

/// Geometric grid of `points` scales from `lo` to `hi` inclusive.
pub fn geometric_scales<S: Scalar>(lo: S, hi: S, points: usize) -> Vec<S> {
    if points <= 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / S::from_usize_lossy(points - 1);
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo * (ratio * S::from_usize_lossy(i)).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Containment<S> {
    pub passed: bool,
    /// Smallest, over the oracle minimizers, distance to the nearest edge of
    /// the best zero interval; negative when outside.
    pub margin: S,
    pub slack: S,
    /// Zero whose interval holds each minimizer (best margin).
    pub zeros: Vec<S>,
}

/// Passes iff every oracle global minimizer lies in `[x_T - h/2, x_T + h/2]`
/// for some zero `x_T`, allowing `slack` outside the interval.
pub fn containment_check<S: Scalar>(
    report: &ZeroCrossingReport<S>,
    oracle: &Oracle<S>,
    slack: S,
) -> Result<Containment<S>, AnalysisError> {
    containment_of(report, &oracle.minimizers, slack)
}

pub(crate) fn containment_of<S: Scalar>(
    report: &ZeroCrossingReport<S>,
    minimizers: &[Vec<S>],
    slack: S,
) -> Result<Containment<S>, AnalysisError> {
    if report.zeros.is_empty() {
        return Err(AnalysisError::NoZeros);
    }
    let half = report.h / S::lit(2.0);
    let mut margin = S::infinity();
    let mut zeros = Vec::new();
    for m in minimizers {
        let (z, best) = report
            .zeros
            .iter()
            .map(|z| (z.x, half - (m[0] - z.x).abs()))
            .fold((S::nan(), S::neg_infinity()), |acc, c| if c.1 > acc.1 { c } else { acc });
        zeros.push(z);
        margin = margin.min(best);
    }
    Ok(Containment {
        passed: margin >= -slack,
        margin,
        slack,
        zeros,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignProfileCheck<S> {
    pub passed: bool,
    pub alternations: usize,
    pub report: ZeroCrossingReport<S>,
}

/// Passes iff `T(h, .)` never changes sign on the inset interval.
pub fn sign_profile_check<S: Scalar>(
    f: &ScalarField<S>,
    op: &HomogenizationOperator<S>,
    grid: usize,
) -> Result<SignProfileCheck<S>, AnalysisError> {
    let report = scan_zeros(f, op, grid)?;
    Ok(SignProfileCheck {
        passed: report.count == 0,
        alternations: report.count,
        report,
    })
}

/// Strict local extrema of `F(h, .)` on a grid over the inset square.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census<S> {
    pub h: S,
    pub grid: usize,
    pub minima: usize,
    pub maxima: usize,
    /// Grid location of the smallest sampled value of `F`.
    pub argmin: Vec<S>,
}

impl<S> Census<S> {
    pub fn total(&self) -> usize {
        self.minima + self.maxima
    }
}

/// Samples `F(h, .)` on `(grid + 1)^2` points of the inset square and
/// counts interior points strictly below (above) all eight neighbours.
pub fn extreme_point_census<S: Scalar>(
    f: &ScalarField<S>,
    op: &HomogenizationOperator<S>,
    grid: usize,
) -> Result<Census<S>, AnalysisError> {
    if f.dim() != 2 {
        return Err(AnalysisError::WrongDimension {
            expected: 2,
            got: f.dim(),
        });
    }
    let inset = op.inset_domain(f)?;
    let n = grid + 1;
    let coord = |axis: usize, i: usize| {
        let (a, b) = inset.bounds(axis);
        if i == grid {
            b
        } else {
            a + (b - a) * S::from_usize_lossy(i) / S::from_usize_lossy(grid)
        }
    };
    let rows: Vec<Vec<S>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let y = coord(1, j);
            (0..n)
                .map(|i| op.value(f, &[coord(0, i), y]).map(|v| v.value))
                .collect::<Result<Vec<S>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let (mut minima, mut maxima) = (0, 0);
    let mut best = (S::infinity(), 0, 0);
    for j in 0..n {
        for i in 0..n {
            let v = rows[j][i];
            if v < best.0 {
                best = (v, i, j);
            }
            if i == 0 || j == 0 || i == grid || j == grid {
                continue;
            }
            let (mut lower, mut higher) = (true, true);
            for dj in [j - 1, j, j + 1] {
                for di in [i - 1, i, i + 1] {
                    if (di, dj) == (i, j) {
                        continue;
                    }
                    let w = rows[dj][di];
                    lower &= v < w;
                    higher &= v > w;
                }
            }
            minima += lower as usize;
            maxima += higher as usize;
        }
    }
    Ok(Census {
        h: op.scale(),
        grid,
        minima,
        maxima,
        argmin: vec![coord(0, best.1), coord(1, best.2)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(text: &str, lo: f64, hi: f64) -> ScalarField<f64> {
        ScalarField::parse(text, text, &["x"], &[(lo, hi)]).unwrap()
    }

    fn op(h: f64) -> HomogenizationOperator<f64> {
        HomogenizationOperator::new(h, QuadraturePolicy::default()).unwrap()
    }

    #[test]
    fn double_well_zero_examples() {
        let f = field("x^4 - x^2", -2.0, 2.0);
        let r = scan_zeros(&f, &op(1.0), 1024).unwrap();
        assert_eq!(r.count, 3);
        let expected = [-0.5, 0.0, 0.5];
        for (z, e) in r.zeros.iter().zip(expected) {
            assert!((z.x - e).abs() < 1e-9, "{z:?}");
            assert!(z.residual <= 1e-8 * (1.0 + r.max_abs));
        }
        let r = scan_zeros(&f, &op(2.0), 1024).unwrap();
        assert_eq!(r.count, 1);
        assert!(r.zeros[0].x.abs() < 1e-9);
    }

    #[test]
    fn cubic_has_no_zero() {
        let f = field("x^3", -1.0, 1.0);
        let r = scan_zeros(&f, &op(0.5), 256).unwrap();
        assert_eq!(r.count, 0);
        assert_eq!(r.profile_string(), "+257");
    }

    #[test]
    fn touching_zero_not_counted() {
        // T = 3x^2 at h = 1: zero at the origin without a sign change
        let f = field("x^3 - 0.25*x", -1.0, 1.0);
        let r = scan_zeros(&f, &op(1.0), 256).unwrap();
        assert_eq!(r.count, 0);
        assert_eq!(r.touching, 1);
        assert_eq!(r.profile_string(), "+128 01 +128");
    }

    #[test]
    fn constant_profile_is_all_zero() {
        let f = field("1.5", -1.0, 1.0);
        let r = scan_zeros(&f, &op(0.3), 200).unwrap();
        assert!(r.identically_zero());
        assert_eq!((r.count, r.touching), (0, 1));
    }

    #[test]
    fn scan_errors() {
        let f = field("x^2", -1.0, 1.0);
        assert_eq!(scan_zeros(&f, &op(0.5), 64), Err(AnalysisError::GridTooCoarse(64)));
        assert!(matches!(
            scan_zeros(&f, &op(3.0), 256),
            Err(AnalysisError::Homog(HomogError::EmptyInsetDomain { .. }))
        ));
    }

    #[test]
    fn count_curve_example() {
        let f = field("x^4 - x^2", -2.0, 2.0);
        let curve = zero_count_curve(&f, QuadraturePolicy::default(), &[0.5, 1.0, 1.5, 2.0], 1024).unwrap();
        let counts: Vec<usize> = curve.iter().map(|c| c.1).collect();
        assert_eq!(counts, vec![3, 3, 1, 1]);
        assert_eq!(
            zero_count_curve(&f, QuadraturePolicy::default(), &[1.0, 0.5], 1024),
            Err(AnalysisError::InvalidScales)
        );
    }

    #[test]
    fn containment_examples() {
        let bowl = field("x^2", -2.0, 2.0);
        let r = scan_zeros(&bowl, &op(1.0), 512).unwrap();
        let c = containment_of(&r, &[vec![0.0]], 0.0).unwrap();
        assert!(c.passed);
        assert!((c.margin - 0.5).abs() < 1e-9);
        let c = containment_of(&r, &[vec![1.0]], 0.0).unwrap();
        assert!(!c.passed);
    }

    #[test]
    fn sign_profile_examples() {
        assert!(sign_profile_check(&field("x^3", -1.0, 1.0), &op(0.5), 512).unwrap().passed);
        assert!(sign_profile_check(&field("-x", 0.0, 1.0), &op(0.5), 512).unwrap().passed);
        assert!(!sign_profile_check(&field("x^4 - x^2", -2.0, 2.0), &op(0.5), 512).unwrap().passed);
    }

    #[test]
    fn geometric_scales_hit_endpoints() {
        let h = geometric_scales(0.1, 3.0, 16);
        assert_eq!(h.len(), 16);
        assert_eq!((h[0], h[15]), (0.1, 3.0));
        assert!(h.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn census_of_bowl() {
        let f = ScalarField::parse("bowl", "x^2 + y^2", &["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)]).unwrap();
        let c = extreme_point_census(&f, &op(1.0), 64).unwrap();
        assert_eq!((c.minima, c.maxima), (1, 0));
        assert_eq!(c.argmin, vec![0.0, 0.0]);
    }
}
