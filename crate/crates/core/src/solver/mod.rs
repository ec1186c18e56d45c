//! Minimization drivers: continuation descent on `F(h, .)` with shrinking
//! `h`, the line-decomposition procedure, and plain projected descent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funcmodel::{Domain, FieldError, ScalarField};
use crate::homog::{HomogError, HomogenizationOperator, QuadraturePolicy};
use crate::scalar::{distance, norm, to_f64_vec, Scalar};
use crate::scale::ContinuationSchedule;
use crate::search::bracketed_minimum;

/// Gauss order used by the solver for smoothed stages. Early stages run at
/// scales of half the box edge, where an oscillatory objective puts several
/// periods inside the kernel; order 8 aliases there.
pub const SOLVER_GAUSS_ORDER: usize = 24;
pub const SOLVER_MONTE_CARLO_SAMPLES: usize = 2048;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("start point {point:?} lies outside the feasible region {region:?}")]
    StartOutside { point: Vec<f64>, region: Vec<(f64, f64)> },
    #[error("objective is not finite at {point:?} (stage {stage})")]
    NonFinite { point: Vec<f64>, stage: usize },
    #[error("start point has {got} coordinates, field has dimension {expected}")]
    WrongDimension { expected: usize, got: usize },
    #[error(transparent)]
    Homog(#[from] HomogError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Continuation,
    LineDecomposition,
    Plain,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::Continuation => "continuation",
            Method::LineDecomposition => "line-decomposition",
            Method::Plain => "plain",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "continuation" => Ok(Method::Continuation),
            "line" | "line-decomposition" => Ok(Method::LineDecomposition),
            "plain" => Ok(Method::Plain),
            other => Err(format!("unknown method `{other}` (continuation | line | plain)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIters,
    /// Stationary only relative to the feasible box: the projected gradient
    /// vanished but the gradient itself did not.
    InsetClipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord<S> {
    pub stage: usize,
    /// Active scale; `None` for the raw objective.
    pub h: Option<S>,
    pub point: Vec<S>,
    pub value: S,
    pub grad_norm: S,
    /// Accepted step length (line search parameter, or move distance for
    /// line decomposition). Zero for the first record of a stage.
    pub step: S,
    /// The step was projected back onto the feasible box.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary<S> {
    pub h: Option<S>,
    pub start: Vec<S>,
    pub end: Vec<S>,
    pub value: S,
    pub iterations: usize,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Evaluations {
    /// Evaluations of the raw objective, including those inside quadrature.
    pub f: usize,
    /// Analytic gradient evaluations of the raw objective.
    pub gradient: usize,
    /// Quadrature calls (values of `F` and average gradient fields).
    pub quadrature: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace<S> {
    pub method: Method,
    pub initial_point: Vec<S>,
    pub records: Vec<IterationRecord<S>>,
    pub stages: Vec<StageSummary<S>>,
    pub status: Status,
    pub final_point: Vec<S>,
    /// Raw objective at the final point.
    pub final_value: S,
    pub evaluations: Evaluations,
    /// Lines drawn by line decomposition.
    pub lines: Option<usize>,
}

impl<S: Scalar> SolverTrace<S> {
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["stage".to_string(), "h".to_string()];
        h.extend((1..=self.initial_point.len()).map(|i| format!("x{i}")));
        h.extend(["f", "grad_norm", "step", "clipped"].map(String::from));
        h
    }

    /// One row per record: stage, h (`raw` for the objective itself),
    /// coordinates, value, gradient norm, step, clip flag.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.records
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.stage.to_string(),
                    r.h.map_or_else(|| "raw".to_string(), |h| h.to_string()),
                ];
                row.extend(r.point.iter().map(|x| x.to_string()));
                row.extend([r.value.to_string(), r.grad_norm.to_string(), r.step.to_string()]);
                row.push(r.clipped.to_string());
                row
            })
            .collect()
    }

    /// Distance from the final point to the nearest of `targets`.
    pub fn distance_to(&self, targets: &[Vec<S>]) -> S {
        targets
            .iter()
            .map(|t| distance(&self.final_point, t))
            .fold(S::infinity(), S::min)
    }
}

/// Projected gradient descent with Armijo backtracking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentParams {
    pub max_iters: usize,
    /// Stationarity threshold on the projected gradient, scaled by `1 + |F|`.
    pub grad_tol: f64,
    pub armijo: f64,
    /// Backtracking factor.
    pub shrink: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_backtracks: usize,
    /// Longest trial move, as a fraction of the shortest edge of the stage
    /// region. Keeps an early large step from hopping over a barrier.
    pub max_move: f64,
    /// Quadrature for smoothed stages; `None` picks Gauss (order 24) up to
    /// three dimensions and Monte Carlo above.
    pub policy: Option<QuadraturePolicy>,
}

impl Default for DescentParams {
    fn default() -> Self {
        DescentParams {
            max_iters: 500,
            grad_tol: 1e-8,
            armijo: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
            max_step: 1e3,
            max_backtracks: 60,
            max_move: 0.1,
            policy: None,
        }
    }
}

impl DescentParams {
    pub fn policy_for(&self, dim: usize) -> QuadraturePolicy {
        self.policy.unwrap_or(if dim <= 3 {
            QuadraturePolicy::Gauss {
                order: SOLVER_GAUSS_ORDER,
            }
        } else {
            QuadraturePolicy::MonteCarlo {
                samples: SOLVER_MONTE_CARLO_SAMPLES,
                seed: 0,
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineParams {
    pub max_lines: usize,
    pub move_tol: f64,
    /// Consecutive small moves required to stop.
    pub patience: usize,
    /// Coarse scan points per line before golden-section refinement.
    pub samples: usize,
}

impl Default for LineParams {
    fn default() -> Self {
        LineParams {
            max_lines: 1000,
            move_tol: 1e-9,
            patience: 3,
            samples: 64,
        }
    }
}

enum Objective<'a, S: Scalar> {
    Raw(&'a ScalarField<S>),
    Smoothed(&'a ScalarField<S>, HomogenizationOperator<S>),
}

impl<S: Scalar> Objective<'_, S> {
    fn h(&self) -> Option<S> {
        match self {
            Objective::Raw(_) => None,
            Objective::Smoothed(_, op) => Some(op.scale()),
        }
    }

    fn value(&self, x: &[S], ev: &mut Evaluations) -> Result<S, SolverError> {
        match self {
            Objective::Raw(f) => {
                ev.f += 1;
                Ok(f.value(x))
            }
            Objective::Smoothed(f, op) => {
                let v = op.value(f, x)?;
                ev.f += v.evaluations;
                ev.quadrature += 1;
                Ok(v.value)
            }
        }
    }

    fn gradient(&self, x: &[S], ev: &mut Evaluations) -> Result<Vec<S>, SolverError> {
        match self {
            Objective::Raw(f) => {
                if f.has_gradient() {
                    ev.gradient += 1;
                } else {
                    ev.f += 2 * f.dim();
                }
                Ok(f.gradient_or_fd(x))
            }
            Objective::Smoothed(f, op) => {
                let g = op.gradient(f, x)?;
                ev.f += g.evaluations;
                ev.quadrature += 1;
                Ok(g.components)
            }
        }
    }
}

fn check_finite<S: Scalar>(v: S, x: &[S], stage: usize) -> Result<(), SolverError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(SolverError::NonFinite {
            point: to_f64_vec(x),
            stage,
        })
    }
}

fn projected<S: Scalar>(region: &Domain<S>, x: &[S], dir: &[S], alpha: S) -> (Vec<S>, bool) {
    let mut y: Vec<S> = x.iter().zip(dir).map(|(a, d)| *a - alpha * *d).collect();
    let clipped = region.project(&mut y);
    (y, clipped)
}

/// One descent stage on `obj` over `region`, appending to `trace`.
fn descend<S: Scalar>(
    obj: &Objective<'_, S>,
    region: &Domain<S>,
    start: Vec<S>,
    params: &DescentParams,
    stage: usize,
    trace: &mut SolverTrace<S>,
) -> Result<StageSummary<S>, SolverError> {
    let ev = &mut trace.evaluations;
    let mut x = start.clone();
    let mut fx = obj.value(&x, ev)?;
    check_finite(fx, &x, stage)?;
    let mut g = obj.gradient(&x, ev)?;
    check_finite(norm(&g), &x, stage)?;
    trace.records.push(IterationRecord {
        stage,
        h: obj.h(),
        point: x.clone(),
        value: fx,
        grad_norm: norm(&g),
        step: S::zero(),
        clipped: false,
    });
    let (c, shrink) = (S::lit(params.armijo), S::lit(params.shrink));
    let max_step = S::lit(params.max_step);
    let max_move = S::lit(params.max_move) * region.shortest_edge();
    let mut alpha = S::lit(params.initial_step);
    let mut status = Status::MaxIters;
    let mut iterations = 0;
    while iterations < params.max_iters {
        let tol = S::lit(params.grad_tol) * (S::one() + fx.abs());
        let (probe, _) = projected(region, &x, &g, S::one());
        let pg: Vec<S> = x.iter().zip(&probe).map(|(a, b)| *a - *b).collect();
        if norm(&pg) <= tol {
            status = if norm(&g) <= tol { Status::Converged } else { Status::InsetClipped };
            break;
        }
        let mut accepted = None;
        alpha = alpha.min(max_move / norm(&g));
        for _ in 0..params.max_backtracks {
            let (y, clipped) = projected(region, &x, &g, alpha);
            let decrease: S = g.iter().zip(x.iter().zip(&y)).map(|(gi, (a, b))| *gi * (*a - *b)).sum();
            let fy = obj.value(&y, ev)?;
            if fy.is_finite() && fy <= fx - c * decrease && decrease > S::zero() {
                accepted = Some((y, fy, clipped));
                break;
            }
            alpha = alpha * shrink;
        }
        let Some((y, fy, clipped)) = accepted else {
            // no decrease is representable any more
            status = stalled_status(region, &x, &g);
            break;
        };
        iterations += 1;
        x = y;
        fx = fy;
        g = obj.gradient(&x, ev)?;
        check_finite(norm(&g), &x, stage)?;
        trace.records.push(IterationRecord {
            stage,
            h: obj.h(),
            point: x.clone(),
            value: fx,
            grad_norm: norm(&g),
            step: alpha,
            clipped,
        });
        alpha = (alpha * S::lit(2.0)).min(max_step);
    }
    Ok(StageSummary {
        h: obj.h(),
        start,
        end: x,
        value: fx,
        iterations,
        status,
    })
}

/// A stalled line search counts as converged unless the iterate sits on
/// the box boundary with the gradient pushing outward.
fn stalled_status<S: Scalar>(region: &Domain<S>, x: &[S], g: &[S]) -> Status {
    let on_edge = x.iter().enumerate().any(|(i, xi)| {
        let (a, b) = region.bounds(i);
        (*xi <= a && g[i] > S::zero()) || (*xi >= b && g[i] < S::zero())
    });
    if on_edge {
        Status::InsetClipped
    } else {
        Status::Converged
    }
}

fn check_start<S: Scalar>(region: &Domain<S>, x0: &[S]) -> Result<(), SolverError> {
    if x0.len() != region.dim() {
        return Err(SolverError::WrongDimension {
            expected: region.dim(),
            got: x0.len(),
        });
    }
    if region.contains(x0) {
        Ok(())
    } else {
        Err(SolverError::StartOutside {
            point: to_f64_vec(x0),
            region: region.to_f64(),
        })
    }
}

fn empty_trace<S: Scalar>(method: Method, x0: &[S]) -> SolverTrace<S> {
    SolverTrace {
        method,
        initial_point: x0.to_vec(),
        records: Vec::new(),
        stages: Vec::new(),
        status: Status::MaxIters,
        final_point: x0.to_vec(),
        final_value: S::nan(),
        evaluations: Evaluations::default(),
        lines: None,
    }
}

fn finish<S: Scalar>(f: &ScalarField<S>, mut trace: SolverTrace<S>) -> SolverTrace<S> {
    if let Some(last) = trace.stages.last() {
        trace.status = last.status;
        trace.final_point = last.end.clone();
    }
    trace.final_value = f.value(&trace.final_point);
    trace.evaluations.f += 1;
    trace
}

/// Descends on `F(h, .)` for each scale of `schedule`, warm-starting each
/// stage from the previous result, then (when the schedule asks for it)
/// polishes on the raw objective over the full box.
pub fn smoothed_descent<S: Scalar>(
    f: &ScalarField<S>,
    schedule: &ContinuationSchedule<S>,
    x0: &[S],
    params: &DescentParams,
) -> Result<SolverTrace<S>, SolverError> {
    let op = HomogenizationOperator::new(schedule.first(), params.policy_for(f.dim()))?;
    check_start(&op.inset_domain(f)?, x0)?;
    let mut trace = empty_trace(Method::Continuation, x0);
    let mut x = x0.to_vec();
    for (stage, &h) in schedule.scales().iter().enumerate() {
        let op = op.with_scale(h)?;
        let region = op.inset_domain(f)?;
        region.project(&mut x);
        let summary = descend(&Objective::Smoothed(f, op), &region, x, params, stage, &mut trace)?;
        x = summary.end.clone();
        trace.stages.push(summary);
    }
    if schedule.polish() {
        let stage = schedule.scales().len();
        let summary = descend(&Objective::Raw(f), f.domain(), x, params, stage, &mut trace)?;
        trace.stages.push(summary);
    }
    Ok(finish(f, trace))
}

/// Projected descent on the raw objective over its box.
pub fn plain_descent<S: Scalar>(
    f: &ScalarField<S>,
    x0: &[S],
    params: &DescentParams,
) -> Result<SolverTrace<S>, SolverError> {
    check_start(f.domain(), x0)?;
    let mut trace = empty_trace(Method::Plain, x0);
    let summary = descend(&Objective::Raw(f), f.domain(), x0.to_vec(), params, 0, &mut trace)?;
    trace.stages.push(summary);
    Ok(finish(f, trace))
}

/// Minimizes a 2-D field by repeated global minimization along lines
/// through the current point, with directions drawn uniformly from a
/// seeded generator. Lines steeper than 45 degrees are parametrized by `y`.
pub fn line_decomposition_solve<S: Scalar>(
    f: &ScalarField<S>,
    x0: &[S],
    seed: u64,
    params: &LineParams,
) -> Result<SolverTrace<S>, SolverError> {
    if f.dim() != 2 {
        return Err(FieldError::WrongDimension {
            expected: 2,
            got: f.dim(),
        }
        .into());
    }
    check_start(f.domain(), x0)?;
    let swapped = f.swapped_axes()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = empty_trace(Method::LineDecomposition, x0);
    let mut x = x0.to_vec();
    let mut fx = f.value(&x);
    check_finite(fx, &x, 0)?;
    trace.evaluations.f += 1;
    let grad_norm = |p: &[S], ev: &mut Evaluations| {
        if f.has_gradient() {
            ev.gradient += 1;
        } else {
            ev.f += 4;
        }
        norm(&f.gradient_or_fd(p))
    };
    let gn = grad_norm(&x, &mut trace.evaluations);
    trace.records.push(IterationRecord {
        stage: 0,
        h: None,
        point: x.clone(),
        value: fx,
        grad_norm: gn,
        step: S::zero(),
        clipped: false,
    });
    let move_tol = S::lit(params.move_tol);
    let mut quiet = 0;
    let mut lines = 0;
    let mut status = Status::MaxIters;
    while lines < params.max_lines {
        lines += 1;
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let slope = theta.tan();
        let steep = slope.abs() > 1.0;
        // parametrize by the shallow axis: u is the free coordinate
        let (field, a, u0, v0) = if steep {
            (&swapped, S::lit(1.0 / slope), x[1], x[0])
        } else {
            (f, S::lit(slope), x[0], x[1])
        };
        let b = v0 - a * u0;
        let candidate = match field.restrict_to_line(a, b) {
            Ok(g) => {
                let (lo, hi) = g.domain().bounds(0);
                let value = |t: S| g.value(&[t]);
                let (t, _, evals) = if g.has_gradient() {
                    let d = |t: S| g.gradient(&[t]).expect("gradient present")[0];
                    bracketed_minimum(&value, Some(&d), lo, hi, params.samples)
                } else {
                    bracketed_minimum(&value, None, lo, hi, params.samples)
                };
                trace.evaluations.f += evals;
                let mut p = if steep { vec![a * t + b, t] } else { vec![t, a * t + b] };
                f.domain().project(&mut p);
                Some(p)
            }
            // a line through an interior point always meets the box; this
            // only triggers for points on a corner with degenerate slope
            Err(_) => None,
        };
        let mut moved = S::zero();
        if let Some(p) = candidate {
            let fp = f.value(&p);
            trace.evaluations.f += 1;
            if fp.is_finite() && fp <= fx {
                moved = distance(&x, &p);
                x = p;
                fx = fp;
                let gn = grad_norm(&x, &mut trace.evaluations);
                trace.records.push(IterationRecord {
                    stage: 0,
                    h: None,
                    point: x.clone(),
                    value: fx,
                    grad_norm: gn,
                    step: moved,
                    clipped: false,
                });
            }
        }
        quiet = if moved < move_tol { quiet + 1 } else { 0 };
        if quiet >= params.patience {
            status = Status::Converged;
            break;
        }
    }
    trace.stages.push(StageSummary {
        h: None,
        start: x0.to_vec(),
        end: x.clone(),
        value: fx,
        iterations: lines,
        status,
    });
    trace.lines = Some(lines);
    Ok(finish(f, trace))
}
