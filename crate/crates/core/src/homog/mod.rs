//! Box-kernel homogenization: the average gradient `T(h, x)`, the average
//! gradient field, and the homogenization function `F(h, x)`, the mean of
//! `f` over the cube of side `h` centred at `x`.
//!
//! All operators are only defined where the whole cube lies inside the
//! field's box (the *inset domain*); nothing is extrapolated.

pub mod quadrature;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funcmodel::{Domain, ScalarField};
use crate::scalar::{to_f64_vec, Scalar};
use quadrature::{adaptive_average, monte_carlo_average, GaussRule, NodeValue};

pub const DEFAULT_GAUSS_ORDER: usize = 8;
pub const DEFAULT_ADAPTIVE_TOLERANCE: f64 = 1e-10;
pub const MIN_MONTE_CARLO_SAMPLES: usize = 100;
/// Largest dimension for which deterministic quadrature is mandatory.
pub const MONTE_CARLO_MIN_DIM: usize = 4;
const MAX_PANELS: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomogError {
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("invalid quadrature policy: {0}")]
    InvalidPolicy(String),
    #[error("monte-carlo quadrature is reserved for dimension > 3 (got {0}); set force_monte_carlo to override")]
    PolicyNotPermitted(usize),
    #[error("empty inset domain: scale {scale} exceeds the shortest box edge {shortest_edge}")]
    EmptyInsetDomain { scale: f64, shortest_edge: f64 },
    #[error("point {point:?} is closer than {required_inset} to the box boundary")]
    InsetViolation { point: Vec<f64>, required_inset: f64 },
    #[error("quadrature reached error {achieved:e}, above the tolerance {requested:e}")]
    QuadratureTolerance { achieved: f64, requested: f64 },
    #[error("operation needs a {expected}-dimensional field, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("field has no analytic derivative")]
    MissingDerivative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum QuadraturePolicy {
    /// Tensor-product Gauss-Legendre with `order` nodes per axis.
    Gauss { order: usize },
    /// Nested globally adaptive Gauss-Kronrod with an absolute tolerance on
    /// the cube average.
    Adaptive { tolerance: f64 },
    /// Uniform sampling with a fixed seed.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        QuadraturePolicy::Gauss {
            order: DEFAULT_GAUSS_ORDER,
        }
    }
}

impl QuadraturePolicy {
    pub fn validate(&self) -> Result<(), HomogError> {
        match *self {
            QuadraturePolicy::Gauss { order } if order < 2 => {
                Err(HomogError::InvalidPolicy(format!("gauss order must be >= 2, got {order}")))
            }
            QuadraturePolicy::Adaptive { tolerance } if !(tolerance > 0.0) => Err(
                HomogError::InvalidPolicy(format!("adaptive tolerance must be > 0, got {tolerance}")),
            ),
            QuadraturePolicy::MonteCarlo { samples, .. } if samples < MIN_MONTE_CARLO_SAMPLES => {
                Err(HomogError::InvalidPolicy(format!(
                    "monte-carlo needs >= {MIN_MONTE_CARLO_SAMPLES} samples, got {samples}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Monte Carlo for dimension above three, Gauss otherwise.
    pub fn default_for_dim(dim: usize, seed: u64) -> Self {
        if dim >= MONTE_CARLO_MIN_DIM {
            QuadraturePolicy::MonteCarlo { samples: 4096, seed }
        } else {
            QuadraturePolicy::default()
        }
    }
}

/// A cube average together with its error estimate and cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogValue<S> {
    pub value: S,
    /// Quadrature error estimate; the standard error for Monte Carlo and
    /// exactly zero for Gauss rules on polynomials they integrate exactly.
    pub error: S,
    /// Number of evaluations of the underlying field.
    pub evaluations: usize,
}

/// The average gradient field at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldGradient<S> {
    pub components: Vec<S>,
    /// Largest per-component error estimate.
    pub error: S,
    pub evaluations: usize,
}

/// Both sides of the difference-quotient identity: the two-point average
/// gradient and the quadrature box average of `f'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelCheck<S> {
    pub difference_quotient: S,
    pub derivative_average: S,
    pub error: S,
}

/// Scale `h` plus quadrature policy.
#[derive(Debug, Clone)]
pub struct HomogenizationOperator<S> {
    scale: S,
    policy: QuadraturePolicy,
    force_monte_carlo: bool,
    rule: Option<Arc<GaussRule<S>>>,
    coarse_rule: Option<Arc<GaussRule<S>>>,
}

impl<S: Scalar> HomogenizationOperator<S> {
    pub fn new(scale: S, policy: QuadraturePolicy) -> Result<Self, HomogError> {
        if !(scale > S::zero() && scale.is_finite()) {
            return Err(HomogError::InvalidScale(scale.as_f64()));
        }
        policy.validate()?;
        let (rule, coarse_rule) = match policy {
            QuadraturePolicy::Gauss { order } => (
                Some(Arc::new(GaussRule::new(order))),
                Some(Arc::new(GaussRule::new(order - 1))),
            ),
            _ => (None, None),
        };
        Ok(HomogenizationOperator {
            scale,
            policy,
            force_monte_carlo: false,
            rule,
            coarse_rule,
        })
    }

    pub fn with_force_monte_carlo(mut self, force: bool) -> Self {
        self.force_monte_carlo = force;
        self
    }

    /// Same policy at a different scale.
    pub fn with_scale(&self, scale: S) -> Result<Self, HomogError> {
        if !(scale > S::zero() && scale.is_finite()) {
            return Err(HomogError::InvalidScale(scale.as_f64()));
        }
        let mut op = self.clone();
        op.scale = scale;
        Ok(op)
    }

    pub fn scale(&self) -> S {
        self.scale
    }

    pub fn policy(&self) -> QuadraturePolicy {
        self.policy
    }

    fn half(&self) -> S {
        self.scale / S::lit(2.0)
    }

    /// Inset domain of `f` at this scale.
    pub fn inset_domain(&self, f: &ScalarField<S>) -> Result<Domain<S>, HomogError> {
        f.domain().inset(self.scale).ok_or_else(|| HomogError::EmptyInsetDomain {
            scale: self.scale.as_f64(),
            shortest_edge: f.domain().shortest_edge().as_f64(),
        })
    }

    fn check_point(&self, f: &ScalarField<S>, x: &[S]) -> Result<(), HomogError> {
        if x.len() != f.dim() {
            return Err(HomogError::WrongDimension {
                expected: f.dim(),
                got: x.len(),
            });
        }
        let inset = self.inset_domain(f)?;
        if inset.contains(x) {
            Ok(())
        } else {
            Err(HomogError::InsetViolation {
                point: to_f64_vec(x),
                required_inset: self.half().as_f64(),
            })
        }
    }

    fn check_policy(&self, dim: usize) -> Result<(), HomogError> {
        match self.policy {
            QuadraturePolicy::MonteCarlo { .. } if dim < MONTE_CARLO_MIN_DIM && !self.force_monte_carlo => {
                Err(HomogError::PolicyNotPermitted(dim))
            }
            _ => Ok(()),
        }
    }

    /// Average of `g` over the cube of half-width `h/2` around `center`.
    fn cube_average(
        &self,
        g: &mut dyn FnMut(&[S]) -> S,
        center: &[S],
        degree: Option<u32>,
        want_error: bool,
    ) -> Result<HomogValue<S>, HomogError> {
        let half = self.half();
        match self.policy {
            QuadraturePolicy::Gauss { order } => {
                let rule = self.rule.as_ref().expect("gauss rule built with operator");
                let (value, evaluations) = rule.cube_average(g, center, half);
                let exact = center.is_empty() || degree.is_some_and(|d| (d as usize) < 2 * order);
                let (error, extra) = if !want_error || exact {
                    (S::zero(), 0)
                } else {
                    let coarse = self.coarse_rule.as_ref().expect("coarse rule built with operator");
                    let (v, n) = coarse.cube_average(g, center, half);
                    ((value - v).abs(), n)
                };
                Ok(HomogValue {
                    value,
                    error,
                    evaluations: evaluations + extra,
                })
            }
            QuadraturePolicy::Adaptive { tolerance } => {
                let tol = S::lit(tolerance);
                let mut point = center.to_vec();
                let (value, error, evaluations, converged) =
                    nested_adaptive(g, center, half, 0, &mut point, tol);
                if !converged {
                    return Err(HomogError::QuadratureTolerance {
                        achieved: error.as_f64(),
                        requested: tolerance,
                    });
                }
                Ok(HomogValue {
                    value,
                    error,
                    evaluations,
                })
            }
            QuadraturePolicy::MonteCarlo { samples, seed } => {
                let out = monte_carlo_average(g, center, half, samples, seed);
                Ok(HomogValue {
                    value: out.average,
                    error: out.standard_error,
                    evaluations: out.evaluations,
                })
            }
        }
    }

    /// `T(h, x) = (f(x + h/2) - f(x - h/2)) / h` for a 1-D field.
    pub fn avg_gradient_1d(&self, f: &ScalarField<S>, x: S) -> Result<S, HomogError> {
        if f.dim() != 1 {
            return Err(HomogError::WrongDimension {
                expected: 1,
                got: f.dim(),
            });
        }
        self.check_point(f, &[x])?;
        Ok(self.difference_quotient(f, x))
    }

    /// Unchecked two-point quotient; callers guarantee the inset rule.
    pub(crate) fn difference_quotient(&self, f: &ScalarField<S>, x: S) -> S {
        let half = self.half();
        (f.value(&[x + half]) - f.value(&[x - half])) / self.scale
    }

    fn gradient_impl(&self, f: &ScalarField<S>, x: &[S], want_error: bool) -> Result<FieldGradient<S>, HomogError> {
        self.check_point(f, x)?;
        let n = f.dim();
        self.check_policy(n)?;
        let half = self.half();
        let mut components = Vec::with_capacity(n);
        let mut error = S::zero();
        let mut evaluations = 0;
        let mut full = x.to_vec();
        for axis in 0..n {
            let others: Vec<S> = (0..n).filter(|&k| k != axis).map(|k| x[k]).collect();
            let mut g = |u: &[S]| {
                let mut j = 0;
                for (k, p) in full.iter_mut().enumerate() {
                    if k != axis {
                        *p = u[j];
                        j += 1;
                    }
                }
                full[axis] = x[axis] + half;
                let hi = f.value(&full);
                full[axis] = x[axis] - half;
                let lo = f.value(&full);
                hi - lo
            };
            let avg = self.cube_average(&mut g, &others, f.polynomial_degree(), want_error)?;
            components.push(avg.value / self.scale);
            error = error.max(avg.error / self.scale);
            evaluations += 2 * avg.evaluations;
        }
        Ok(FieldGradient {
            components,
            error,
            evaluations,
        })
    }

    /// Per-axis box averages of the partial derivatives, computed by
    /// collapsing each axis with the fundamental theorem of calculus: an
    /// (n-1)-dimensional quadrature of `f(.., x_i + h/2, ..) - f(.., x_i - h/2, ..)`.
    pub fn avg_gradient_field(&self, f: &ScalarField<S>, x: &[S]) -> Result<FieldGradient<S>, HomogError> {
        self.gradient_impl(f, x, true)
    }

    /// [`Self::avg_gradient_field`] without the Gauss error estimate, which
    /// would double the cost. Adaptive and Monte Carlo estimates are kept.
    pub fn gradient(&self, f: &ScalarField<S>, x: &[S]) -> Result<FieldGradient<S>, HomogError> {
        self.gradient_impl(f, x, false)
    }

    /// `F(h, x)`: mean of `f` over the cube of side `h` centred at `x`.
    pub fn homogenize(&self, f: &ScalarField<S>, x: &[S]) -> Result<HomogValue<S>, HomogError> {
        self.check_point(f, x)?;
        self.check_policy(f.dim())?;
        self.cube_average(&mut |p| f.value(p), x, f.polynomial_degree(), true)
    }

    /// `F(h, x)` without error estimation; the cost of one rule application.
    pub fn value(&self, f: &ScalarField<S>, x: &[S]) -> Result<HomogValue<S>, HomogError> {
        self.check_point(f, x)?;
        self.check_policy(f.dim())?;
        self.cube_average(&mut |p| f.value(p), x, f.polynomial_degree(), false)
    }

    /// Returns the two-point average gradient alongside the quadrature box
    /// average of the analytic derivative over `[x - h/2, x + h/2]`.
    pub fn kernel_convolution_check(&self, f: &ScalarField<S>, x: S) -> Result<KernelCheck<S>, HomogError> {
        let difference_quotient = self.avg_gradient_1d(f, x)?;
        if !f.has_gradient() {
            return Err(HomogError::MissingDerivative);
        }
        let degree = f.polynomial_degree().map(|d| d.saturating_sub(1));
        let mut g = |p: &[S]| f.gradient(p).expect("gradient present")[0];
        let avg = match self.policy {
            // one axis: Monte Carlo is never needed here
            QuadraturePolicy::MonteCarlo { .. } => {
                let op = HomogenizationOperator::new(self.scale, QuadraturePolicy::default())?;
                op.cube_average(&mut g, &[x], degree, true)?
            }
            _ => self.cube_average(&mut g, &[x], degree, true)?,
        };
        Ok(KernelCheck {
            difference_quotient,
            derivative_average: avg.value,
            error: avg.error,
        })
    }

    /// `F(h, .)` as a field on the inset domain, with the average gradient
    /// field as its gradient. Points where quadrature fails evaluate to NaN.
    pub fn homogenized_field(&self, f: &ScalarField<S>) -> Result<ScalarField<S>, HomogError> {
        self.counting_homogenized_field(f, Arc::new(AtomicUsize::new(0)))
    }

    /// As [`Self::homogenized_field`], adding every evaluation of `f` made by
    /// the wrapped field to `counter`.
    pub fn counting_homogenized_field(
        &self,
        f: &ScalarField<S>,
        counter: Arc<AtomicUsize>,
    ) -> Result<ScalarField<S>, HomogError> {
        self.check_policy(f.dim())?;
        let inset = self.inset_domain(f)?;
        let (op_v, f_v, c_v) = (self.clone(), f.clone(), counter.clone());
        let (op_g, f_g, c_g) = (self.clone(), f.clone(), counter);
        let name = format!("F({}, {})", self.scale, f.name());
        let field = ScalarField::from_fn(name, inset, move |p: &[S]| match op_v.value(&f_v, p) {
            Ok(v) => {
                c_v.fetch_add(v.evaluations, Ordering::Relaxed);
                v.value
            }
            Err(_) => S::nan(),
        })
        .with_gradient(move |p: &[S], out: &mut [S]| match op_g.gradient(&f_g, p) {
            Ok(g) => {
                c_g.fetch_add(g.evaluations, Ordering::Relaxed);
                out.copy_from_slice(&g.components);
            }
            Err(_) => out.iter_mut().for_each(|o| *o = S::nan()),
        });
        Ok(field)
    }
}

/// Iterated adaptive quadrature over the cube, one axis per level. Level
/// `k` works to `tol / 2^k` so inner errors never dominate the outer budget.
fn nested_adaptive<S: Scalar>(
    g: &mut dyn FnMut(&[S]) -> S,
    center: &[S],
    half: S,
    axis: usize,
    point: &mut Vec<S>,
    tol: S,
) -> (S, S, usize, bool) {
    let d = center.len();
    if d == 0 {
        return (g(&[]), S::zero(), 1, true);
    }
    let mut inner_ok = true;
    let out = {
        let mut node = |t: S| -> NodeValue<S> {
            point[axis] = t;
            if axis + 1 == d {
                (g(point), S::zero(), 1)
            } else {
                let (v, e, n, ok) = nested_adaptive(g, center, half, axis + 1, point, tol / S::lit(2.0));
                inner_ok &= ok;
                (v, e, n)
            }
        };
        adaptive_average(&mut node, center[axis] - half, center[axis] + half, tol, MAX_PANELS)
    };
    (out.average, out.error, out.evaluations, out.converged && inner_ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn field(text: &str, vars: &[&str], lo: f64, hi: f64) -> ScalarField<f64> {
        ScalarField::parse(text, text, vars, &vec![(lo, hi); vars.len()]).unwrap()
    }

    fn gauss(h: f64) -> HomogenizationOperator<f64> {
        HomogenizationOperator::new(h, QuadraturePolicy::default()).unwrap()
    }

    fn adaptive(h: f64) -> HomogenizationOperator<f64> {
        HomogenizationOperator::new(h, QuadraturePolicy::Adaptive { tolerance: 1e-10 }).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(matches!(
            HomogenizationOperator::<f64>::new(0.0, QuadraturePolicy::default()),
            Err(HomogError::InvalidScale(_))
        ));
        assert!(HomogenizationOperator::<f64>::new(1.0, QuadraturePolicy::Gauss { order: 1 }).is_err());
        assert!(HomogenizationOperator::<f64>::new(1.0, QuadraturePolicy::Adaptive { tolerance: 0.0 }).is_err());
        assert!(HomogenizationOperator::<f64>::new(1.0, QuadraturePolicy::MonteCarlo { samples: 99, seed: 0 }).is_err());
    }

    #[test]
    fn average_gradient_examples() {
        let sq = field("x^2", &["x"], -10.0, 10.0);
        assert_eq!(gauss(1.0).avg_gradient_1d(&sq, 3.0).unwrap(), 6.0);
        let k = field("4.25", &["x"], -10.0, 10.0);
        assert_eq!(gauss(0.7).avg_gradient_1d(&k, 1.3).unwrap(), 0.0);
        let cube = field("x^3", &["x"], -10.0, 10.0);
        assert_eq!(gauss(2.0).avg_gradient_1d(&cube, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn inset_violation_and_empty_inset() {
        let f = field("x^2", &["x"], -1.0, 1.0);
        assert!(matches!(
            gauss(1.0).avg_gradient_1d(&f, 0.75),
            Err(HomogError::InsetViolation { .. })
        ));
        assert!(matches!(
            gauss(2.5).homogenize(&f, &[0.0]),
            Err(HomogError::EmptyInsetDomain { .. })
        ));
    }

    #[test]
    fn gradient_field_examples() {
        let bowl = field("x^2 + y^2", &["x", "y"], -5.0, 5.0);
        for h in [0.3, 1.0, 2.5] {
            let g = gauss(h).avg_gradient_field(&bowl, &[1.0, 2.0]).unwrap();
            assert!((g.components[0] - 2.0).abs() < 1e-12);
            assert!((g.components[1] - 4.0).abs() < 1e-12);
            assert_eq!(g.error, 0.0);
        }
        let k = field("3", &["x", "y"], -5.0, 5.0);
        assert_eq!(gauss(1.0).avg_gradient_field(&k, &[0.5, 0.5]).unwrap().components, vec![0.0, 0.0]);
        let x2y = field("x^2*y", &["x", "y"], -3.0, 3.0);
        let g = gauss(2.0).avg_gradient_field(&x2y, &[1.0, 1.0]).unwrap();
        assert!((g.components[0] - 2.0).abs() < 1e-13);
        assert!((g.components[1] - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn homogenize_examples() {
        let sq = field("x^2", &["x"], -2.0, 2.0);
        let v = gauss(1.0).homogenize(&sq, &[0.0]).unwrap();
        assert!((v.value - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(v.error, 0.0);
        let affine = field("5*x + 2", &["x"], -3.0, 3.0);
        for op in [gauss(1.7), adaptive(1.7)] {
            assert!((op.homogenize(&affine, &[1.0]).unwrap().value - 7.0).abs() < 1e-12);
        }
        let s = field("sin(x)", &["x"], -4.0, 4.0);
        let v = adaptive(PI).homogenize(&s, &[PI / 2.0]).unwrap();
        assert!((v.value - 2.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn monte_carlo_gating() {
        let bowl = field("x^2 + y^2", &["x", "y"], -2.0, 2.0);
        let mc = HomogenizationOperator::new(1.0, QuadraturePolicy::MonteCarlo { samples: 1000, seed: 3 }).unwrap();
        assert!(matches!(mc.homogenize(&bowl, &[0.0, 0.0]), Err(HomogError::PolicyNotPermitted(2))));
        let forced = mc.with_force_monte_carlo(true);
        let v = forced.homogenize(&bowl, &[0.0, 0.0]).unwrap();
        assert!((v.value - 1.0 / 6.0).abs() < 4.0 * v.error);
    }

    #[test]
    fn kernel_check_examples() {
        let cube = field("x^3", &["x"], -3.0, 3.0);
        let k = gauss(2.0).kernel_convolution_check(&cube, 1.0).unwrap();
        assert_eq!(k.difference_quotient, 4.0);
        assert!((k.derivative_average - 4.0).abs() < 1e-13);
        assert_eq!(k.error, 0.0);
        let s = field("sin(x)", &["x"], -4.0, 4.0);
        let k = adaptive(PI).kernel_convolution_check(&s, 0.0).unwrap();
        assert!((k.difference_quotient - 2.0 / PI).abs() < 1e-15);
        assert!((k.derivative_average - 2.0 / PI).abs() < 1e-10);
        let c = field("2", &["x"], -1.0, 1.0);
        let k = gauss(0.5).kernel_convolution_check(&c, 0.0).unwrap();
        assert_eq!((k.difference_quotient, k.derivative_average), (0.0, 0.0));
    }

    #[test]
    fn adaptive_tolerance_failure_is_reported() {
        let f = field("sin(200*x)", &["x"], -10.0, 12.0);
        let op = HomogenizationOperator::new(10.0, QuadraturePolicy::Adaptive { tolerance: 1e-300 }).unwrap();
        assert!(matches!(op.homogenize(&f, &[1.0]), Err(HomogError::QuadratureTolerance { .. })));
    }

    #[test]
    fn homogenized_field_wraps_value_and_gradient() {
        let bowl = field("x^2 + y^2", &["x", "y"], -2.0, 2.0);
        let op = gauss(1.0);
        let hf = op.homogenized_field(&bowl).unwrap();
        assert_eq!(hf.domain().bounds(0), (-1.5, 1.5));
        assert!((hf.value(&[0.5, 0.5]) - (0.5 + 1.0 / 6.0)).abs() < 1e-14);
        let g = hf.gradient(&[0.5, -0.25]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-13 && (g[1] + 0.5).abs() < 1e-13);
    }
}
