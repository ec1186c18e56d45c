//! Objective functions over axis-aligned boxes, the built-in corpus, and the
//! dense-grid extrema oracle.

mod corpus;
mod extrema;

pub use corpus::{corpus, corpus_manifest, corpus_with_controls, find_entry, CorpusEntry, Oracle, Tag};
pub use extrema::{brute_force_extrema, Extremum, ExtremaReport, EQUAL_EXTREMA_TOLERANCE};

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, Expression};
use crate::scalar::{to_f64_vec, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("expression has {expr} variables but the domain has {domain} axes")]
    DimensionMismatch { expr: usize, domain: usize },
    #[error("evaluator is not finite at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("operation needs a {expected}-dimensional field, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("line y = {a}*x + {b} does not meet the domain")]
    EmptyRestriction { a: f64, b: f64 },
    #[error("grid resolution {0} is below the minimum of 64 per axis")]
    GridTooCoarse(usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Closed axis-aligned box `[A_1, B_1] x ... x [A_n, B_n]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Domain<S> {
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Scalar> Domain<S> {
    pub fn new(bounds: &[(S, S)]) -> Result<Self, FieldError> {
        if bounds.is_empty() {
            return Err(FieldError::InvalidDomain("no axes".into()));
        }
        for (i, (a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(FieldError::InvalidDomain(format!(
                    "axis {i}: need finite A < B, got [{a}, {b}]"
                )));
            }
        }
        Ok(Domain {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
        })
    }

    pub fn cube(dim: usize, lo: S, hi: S) -> Result<Self, FieldError> {
        Self::new(&vec![(lo, hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    pub fn bounds(&self, axis: usize) -> (S, S) {
        (self.lower[axis], self.upper[axis])
    }

    pub fn edge(&self, axis: usize) -> S {
        self.upper[axis] - self.lower[axis]
    }

    pub fn shortest_edge(&self) -> S {
        (0..self.dim()).map(|i| self.edge(i)).fold(S::infinity(), S::min)
    }

    pub fn center(&self) -> Vec<S> {
        let two = S::lit(2.0);
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (*a + *b) / two)
            .collect()
    }

    fn slack(&self, axis: usize) -> S {
        S::lit(1e-12) * (S::one() + self.lower[axis].abs().max(self.upper[axis].abs()))
    }

    /// Membership test with a relative slack of 1e-12 per axis.
    pub fn contains(&self, point: &[S]) -> bool {
        point.len() == self.dim()
            && point.iter().enumerate().all(|(i, x)| {
                let s = self.slack(i);
                *x >= self.lower[i] - s && *x <= self.upper[i] + s
            })
    }

    /// The sub-box where a cube of side `h` centered at the point fits.
    /// `None` when `h` exceeds some edge.
    pub fn inset(&self, h: S) -> Option<Domain<S>> {
        let half = h / S::lit(2.0);
        let lower: Vec<S> = self.lower.iter().map(|a| *a + half).collect();
        let upper: Vec<S> = self.upper.iter().map(|b| *b - half).collect();
        if lower.iter().zip(&upper).all(|(a, b)| a <= b) {
            Some(Domain { lower, upper })
        } else {
            None
        }
    }

    /// Clamps `point` into the box; returns whether any coordinate moved.
    pub fn project(&self, point: &mut [S]) -> bool {
        let mut moved = false;
        for (i, x) in point.iter_mut().enumerate() {
            let c = x.max(self.lower[i]).min(self.upper[i]);
            if c != *x {
                *x = c;
                moved = true;
            }
        }
        moved
    }

    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (a.as_f64(), b.as_f64()))
            .collect()
    }
}

pub type ValueFn<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;
pub type GradientFn<S> = Arc<dyn Fn(&[S], &mut [S]) + Send + Sync>;

/// An n-variate objective on a box, with an optional analytic gradient.
///
/// Evaluators are pure. Values outside the box are not guaranteed to be
/// meaningful; evaluators built from expressions return NaN where the
/// expression has a domain error.
#[derive(Clone)]
pub struct ScalarField<S> {
    name: String,
    domain: Domain<S>,
    value: ValueFn<S>,
    gradient: Option<GradientFn<S>>,
    expression: Option<Arc<Expression>>,
    polynomial_degree: Option<u32>,
}

impl<S: fmt::Debug> fmt::Debug for ScalarField<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("has_gradient", &self.gradient.is_some())
            .field("expression", &self.expression.as_ref().map(|e| e.to_string()))
            .finish()
    }
}

impl<S: Scalar> ScalarField<S> {
    pub fn from_fn(
        name: impl Into<String>,
        domain: Domain<S>,
        value: impl Fn(&[S]) -> S + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            name: name.into(),
            domain,
            value: Arc::new(value),
            gradient: None,
            expression: None,
            polynomial_degree: None,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&[S], &mut [S]) + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// Declares the field a polynomial of the given total degree, which lets
    /// Gauss quadrature report a zero error estimate when it is exact.
    pub fn with_polynomial_degree(mut self, degree: Option<u32>) -> Self {
        self.polynomial_degree = degree;
        self
    }

    /// Wraps an expression. Partial derivatives are derived symbolically when
    /// the expression is differentiable; otherwise the field has no analytic
    /// gradient. The evaluator is probed on a grid over the box and rejected
    /// if it is not finite there.
    pub fn from_expression(
        name: impl Into<String>,
        expression: Expression,
        domain: Domain<S>,
    ) -> Result<Self, FieldError> {
        if expression.arity() != domain.dim() {
            return Err(FieldError::DimensionMismatch {
                expr: expression.arity(),
                domain: domain.dim(),
            });
        }
        let expression = Arc::new(expression);
        let partials = expression.gradient().ok();
        let e = expression.clone();
        let mut field = ScalarField {
            name: name.into(),
            polynomial_degree: expression.polynomial_degree(),
            domain,
            value: Arc::new(move |p: &[S]| e.evaluate(p).unwrap_or_else(|_| S::nan())),
            gradient: None,
            expression: Some(expression),
        };
        if let Some(partials) = partials {
            field.gradient = Some(Arc::new(move |p: &[S], out: &mut [S]| {
                for (o, d) in out.iter_mut().zip(&partials) {
                    *o = d.evaluate(p).unwrap_or_else(|_| S::nan());
                }
            }));
        }
        field.check_finite()?;
        Ok(field)
    }

    /// Parses `text` over `variables` and wraps it on the box `bounds`.
    pub fn parse(
        name: impl Into<String>,
        text: &str,
        variables: &[impl AsRef<str>],
        bounds: &[(S, S)],
    ) -> Result<Self, FieldError> {
        let expression = Expression::parse(text, variables)?;
        Self::from_expression(name, expression, Domain::new(bounds)?)
    }

    fn check_finite(&self) -> Result<(), FieldError> {
        let n = self.dim();
        let per_axis: usize = match n {
            1 => 257,
            2 => 33,
            3 => 9,
            _ => 4,
        };
        let total = per_axis.pow(n as u32);
        let mut point = vec![S::zero(); n];
        for k in 0..total {
            let mut rem = k;
            for (i, p) in point.iter_mut().enumerate() {
                let j = rem % per_axis;
                rem /= per_axis;
                let (a, b) = self.domain.bounds(i);
                *p = a + (b - a) * S::from_usize_lossy(j) / S::from_usize_lossy(per_axis - 1);
            }
            if !self.value(&point).is_finite() {
                return Err(FieldError::NonFinite(to_f64_vec(&point)));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain<S> {
        &self.domain
    }

    pub fn expression(&self) -> Option<&Expression> {
        self.expression.as_deref()
    }

    pub fn polynomial_degree(&self) -> Option<u32> {
        self.polynomial_degree
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    #[inline]
    pub fn value(&self, point: &[S]) -> S {
        (self.value)(point)
    }

    /// Analytic gradient, when available.
    pub fn gradient(&self, point: &[S]) -> Option<Vec<S>> {
        self.gradient.as_ref().map(|g| {
            let mut out = vec![S::zero(); self.dim()];
            g(point, &mut out);
            out
        })
    }

    /// Central finite-difference gradient with per-axis step `step`.
    pub fn fd_gradient(&self, point: &[S], step: S) -> Vec<S> {
        let mut p = point.to_vec();
        let two = S::lit(2.0);
        (0..self.dim())
            .map(|i| {
                let x = p[i];
                p[i] = x + step;
                let fp = self.value(&p);
                p[i] = x - step;
                let fm = self.value(&p);
                p[i] = x;
                (fp - fm) / (two * step)
            })
            .collect()
    }

    /// Analytic gradient if present, otherwise central differences with a
    /// step scaled to the box.
    pub fn gradient_or_fd(&self, point: &[S]) -> Vec<S> {
        self.gradient(point).unwrap_or_else(|| {
            let step = S::lit(1e-6) * self.domain.shortest_edge();
            self.fd_gradient(point, step)
        })
    }

    /// Same evaluator on a different box.
    pub fn on_domain(&self, domain: Domain<S>) -> Result<Self, FieldError> {
        if domain.dim() != self.dim() {
            return Err(FieldError::WrongDimension {
                expected: self.dim(),
                got: domain.dim(),
            });
        }
        let mut f = self.clone();
        f.domain = domain;
        Ok(f)
    }

    /// `x -> -f(x)`: turns minima into maxima.
    pub fn negated(&self) -> Self {
        let v = self.value.clone();
        let mut out = ScalarField {
            name: format!("neg({})", self.name),
            domain: self.domain.clone(),
            value: Arc::new(move |p: &[S]| -v(p)),
            gradient: None,
            expression: None,
            polynomial_degree: self.polynomial_degree,
        };
        if let Some(g) = self.gradient.clone() {
            out.gradient = Some(Arc::new(move |p: &[S], o: &mut [S]| {
                g(p, o);
                o.iter_mut().for_each(|v| *v = -*v);
            }));
        }
        out
    }

    /// `x -> f(x) + c . x`, a linear tilt.
    pub fn tilted(&self, c: &[S]) -> Result<Self, FieldError> {
        if c.len() != self.dim() {
            return Err(FieldError::WrongDimension {
                expected: self.dim(),
                got: c.len(),
            });
        }
        let v = self.value.clone();
        let cv: Vec<S> = c.to_vec();
        let cg = cv.clone();
        let mut out = ScalarField {
            name: format!("tilt({})", self.name),
            domain: self.domain.clone(),
            value: Arc::new(move |p: &[S]| v(p) + p.iter().zip(&cv).map(|(x, k)| *x * *k).sum::<S>()),
            gradient: None,
            expression: None,
            polynomial_degree: self.polynomial_degree.map(|d| d.max(1)),
        };
        if let Some(g) = self.gradient.clone() {
            out.gradient = Some(Arc::new(move |p: &[S], o: &mut [S]| {
                g(p, o);
                o.iter_mut().zip(&cg).for_each(|(v, k)| *v = *v + *k);
            }));
        }
        Ok(out)
    }

    /// `x -> f(-x)` on the reflected box.
    pub fn reflected(&self) -> Self {
        let v = self.value.clone();
        let bounds: Vec<(S, S)> = (0..self.dim())
            .map(|i| {
                let (a, b) = self.domain.bounds(i);
                (-b, -a)
            })
            .collect();
        let mut out = ScalarField {
            name: format!("reflect({})", self.name),
            domain: Domain::new(&bounds).expect("reflection of a valid box"),
            value: Arc::new(move |p: &[S]| {
                let q: Vec<S> = p.iter().map(|x| -*x).collect();
                v(&q)
            }),
            gradient: None,
            expression: None,
            polynomial_degree: self.polynomial_degree,
        };
        if let Some(g) = self.gradient.clone() {
            out.gradient = Some(Arc::new(move |p: &[S], o: &mut [S]| {
                let q: Vec<S> = p.iter().map(|x| -*x).collect();
                g(&q, o);
                o.iter_mut().for_each(|v| *v = -*v);
            }));
        }
        out
    }

    /// Exchanges the two axes of a 2-D field.
    pub fn swapped_axes(&self) -> Result<Self, FieldError> {
        self.require_dim(2)?;
        let v = self.value.clone();
        let (ax, ay) = (self.domain.bounds(0), self.domain.bounds(1));
        let mut out = ScalarField {
            name: format!("swap({})", self.name),
            domain: Domain::new(&[ay, ax])?,
            value: Arc::new(move |p: &[S]| v(&[p[1], p[0]])),
            gradient: None,
            expression: None,
            polynomial_degree: self.polynomial_degree,
        };
        if let Some(g) = self.gradient.clone() {
            out.gradient = Some(Arc::new(move |p: &[S], o: &mut [S]| {
                let mut t = [S::zero(); 2];
                g(&[p[1], p[0]], &mut t);
                o[0] = t[1];
                o[1] = t[0];
            }));
        }
        Ok(out)
    }

    fn require_dim(&self, n: usize) -> Result<(), FieldError> {
        if self.dim() == n {
            Ok(())
        } else {
            Err(FieldError::WrongDimension {
                expected: n,
                got: self.dim(),
            })
        }
    }

    /// `g(x) = f(x, a*x + b)` on the x-interval where the line stays inside
    /// the box. The gradient follows by the chain rule: `g' = f_x + a f_y`.
    pub fn restrict_to_line(&self, a: S, b: S) -> Result<ScalarField<S>, FieldError> {
        self.require_dim(2)?;
        let (mut lo, mut hi) = self.domain.bounds(0);
        let (ylo, yhi) = self.domain.bounds(1);
        let empty = || FieldError::EmptyRestriction {
            a: a.as_f64(),
            b: b.as_f64(),
        };
        if a == S::zero() {
            if b < ylo || b > yhi {
                return Err(empty());
            }
        } else {
            let (t1, t2) = ((ylo - b) / a, (yhi - b) / a);
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
        if !(lo < hi) {
            return Err(empty());
        }
        let v = self.value.clone();
        let mut g = ScalarField {
            name: format!("{}|y={}x+{}", self.name, a, b),
            domain: Domain::new(&[(lo, hi)])?,
            value: Arc::new(move |p: &[S]| v(&[p[0], a * p[0] + b])),
            gradient: None,
            expression: None,
            polynomial_degree: self.polynomial_degree,
        };
        if let Some(grad) = self.gradient.clone() {
            g.gradient = Some(Arc::new(move |p: &[S], o: &mut [S]| {
                let mut t = [S::zero(); 2];
                grad(&[p[0], a * p[0] + b], &mut t);
                o[0] = t[0] + a * t[1];
            }));
        }
        Ok(g)
    }
}
