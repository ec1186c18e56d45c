//! Arithmetic expression DSL: parsing, evaluation, printing and exact
//! symbolic differentiation.
//!
//! ```
//! use homogopt::expr::Expression;
//!
//! let e = Expression::parse("x*y + sin(x)", &["x", "y"]).unwrap();
//! let v: f64 = e.evaluate(&[2.0, 3.0]).unwrap();
//! assert!((v - (6.0 + 2f64.sin())).abs() < 1e-15);
//! let dx = e.differentiate("x").unwrap();
//! assert_eq!(dx.to_string(), "y + cos(x)");
//! ```

mod derivative;
mod parser;

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::scalar::{to_f64_vec, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("invalid variable list: {0}")]
    InvalidVariables(String),
    #[error("expected a point with {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("domain error at {point:?}: {reason}")]
    Domain { point: Vec<f64>, reason: String },
    #[error("`{0}` is not differentiable")]
    NotDifferentiable(&'static str),
    #[error("variable `{0}` is not declared")]
    UndeclaredVariable(String),
}

/// Recognized unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply<S: Scalar>(self, v: S) -> S {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Variables are stored as indices into the owning
/// [`Expression`]'s variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

impl Node {
    pub fn binary(op: BinOp, a: Node, b: Node) -> Node {
        Node::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn pow(base: Node, exponent: i32) -> Node {
        Node::Pow(Box::new(base), exponent)
    }

    pub fn call(func: Func, arg: Node) -> Node {
        Node::Call(func, Box::new(arg))
    }

    pub fn neg(arg: Node) -> Node {
        Node::Neg(Box::new(arg))
    }

    fn depends_on(&self, var: usize) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(i) => *i == var,
            Node::Neg(a) | Node::Call(_, a) | Node::Pow(a, _) => a.depends_on(var),
            Node::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Call(_, a) | Node::Pow(a, _) => a.max_var(),
            Node::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Total polynomial degree, or `None` when the node is not a polynomial.
    fn polynomial_degree(&self) -> Option<u32> {
        match self {
            Node::Const(_) => Some(0),
            Node::Var(_) => Some(1),
            Node::Neg(a) => a.polynomial_degree(),
            Node::Call(..) => {
                if self.max_var().is_none() {
                    Some(0)
                } else {
                    None
                }
            }
            Node::Binary(op, a, b) => {
                let (da, db) = (a.polynomial_degree()?, b.polynomial_degree()?);
                match op {
                    BinOp::Add | BinOp::Sub => Some(da.max(db)),
                    BinOp::Mul => Some(da + db),
                    BinOp::Div if db == 0 => Some(da),
                    BinOp::Div => None,
                }
            }
            Node::Pow(a, n) if *n >= 0 => Some(a.polynomial_degree()? * (*n as u32)),
            Node::Pow(a, _) => (a.polynomial_degree()? == 0).then_some(0),
        }
    }

    fn emit(&self, ops: &mut Vec<Op>) {
        match self {
            Node::Const(c) => ops.push(Op::Const(*c)),
            Node::Var(i) => ops.push(Op::Var(*i)),
            Node::Neg(a) => {
                a.emit(ops);
                ops.push(Op::Neg);
            }
            Node::Call(f, a) => {
                a.emit(ops);
                ops.push(Op::Call(*f));
            }
            Node::Binary(op, a, b) => {
                a.emit(ops);
                b.emit(ops);
                ops.push(Op::Binary(*op));
            }
            Node::Pow(a, n) => {
                a.emit(ops);
                ops.push(Op::Pow(*n));
            }
        }
    }

    /// Binding strength as printed: sums, products, prefix minus, powers,
    /// atoms.
    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Neg(_) => 3,
            Node::Const(c) if c.is_sign_negative() => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }

    /// Prints with the fewest parentheses that reparse to the same tree.
    fn write(&self, vars: &[String], f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Node::Const(c) if c.is_sign_negative() => write!(f, "-{:?}", -c)?,
            Node::Const(c) => write!(f, "{c:?}")?,
            Node::Var(i) => f.write_str(&vars[*i])?,
            Node::Neg(a) => {
                f.write_str("-")?;
                a.write(vars, f, 3)?;
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(vars, f, 0)?;
                f.write_str(")")?;
            }
            Node::Binary(op, a, b) => {
                let p = self.precedence();
                a.write(vars, f, p)?;
                write!(f, " {} ", op.symbol())?;
                // a signed right operand reads better bracketed
                b.write(vars, f, if b.precedence() == 3 { 4 } else { p + 1 })?;
            }
            Node::Pow(a, n) => {
                a.write(vars, f, 5)?;
                write!(f, "^{n}")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Call(Func),
    Binary(BinOp),
    Pow(i32),
}

/// A parsed expression over a declared, ordered variable list.
///
/// Immutable once built; evaluation runs a flattened postfix program so the
/// tree is only walked at construction.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Node,
    variables: Arc<[String]>,
    program: Arc<[Op]>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.variables == other.variables
    }
}

impl Expression {
    /// Builds an expression from a tree, checking that every variable index
    /// refers to a declared variable.
    pub fn new(root: Node, variables: &[impl AsRef<str>]) -> Result<Self, ExprError> {
        let variables = validate_variables(variables)?;
        if let Some(i) = root.max_var() {
            if i >= variables.len() {
                return Err(ExprError::InvalidVariables(format!(
                    "variable index {i} out of range for {} declared variables",
                    variables.len()
                )));
            }
        }
        Ok(Self::from_parts(root, variables))
    }

    fn from_parts(root: Node, variables: Arc<[String]>) -> Self {
        let mut ops = Vec::new();
        root.emit(&mut ops);
        Expression {
            root,
            variables,
            program: ops.into(),
        }
    }

    pub fn parse(text: &str, variables: &[impl AsRef<str>]) -> Result<Self, ExprError> {
        let variables = validate_variables(variables)?;
        let root = parser::parse(text, &variables)?;
        Ok(Self::from_parts(root, variables))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Total degree when the expression is a polynomial in its variables.
    pub fn polynomial_degree(&self) -> Option<u32> {
        self.root.polynomial_degree()
    }

    pub fn depends_on(&self, name: &str) -> bool {
        self.variable_index(name)
            .is_some_and(|i| self.root.depends_on(i))
    }

    /// Evaluates at `point`. Division by zero and non-finite results are
    /// reported as [`ExprError::Domain`].
    pub fn evaluate<S: Scalar>(&self, point: &[S]) -> Result<S, ExprError> {
        if point.len() != self.variables.len() {
            return Err(ExprError::Arity {
                expected: self.variables.len(),
                got: point.len(),
            });
        }
        let mut stack: SmallVec<[S; 16]> = SmallVec::new();
        for op in self.program.iter() {
            match *op {
                Op::Const(c) => stack.push(S::lit(c)),
                Op::Var(i) => stack.push(point[i]),
                Op::Neg => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(-a);
                }
                Op::Call(f) => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(f.apply(a));
                }
                Op::Pow(n) => {
                    let a = stack.pop().expect("well-formed program");
                    if n < 0 && a == S::zero() {
                        return Err(domain(point, "zero raised to a negative power"));
                    }
                    stack.push(a.powi(n));
                }
                Op::Binary(op) => {
                    let b = stack.pop().expect("well-formed program");
                    let a = stack.pop().expect("well-formed program");
                    stack.push(match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        BinOp::Mul => a * b,
                        BinOp::Div => {
                            if b == S::zero() {
                                return Err(domain(point, "division by zero"));
                            }
                            a / b
                        }
                    });
                }
            }
        }
        let v = stack.pop().expect("well-formed program");
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain(point, "non-finite result"))
        }
    }

    /// Exact partial derivative with respect to `var`, with constant folding.
    pub fn differentiate(&self, var: &str) -> Result<Expression, ExprError> {
        let index = self
            .variable_index(var)
            .ok_or_else(|| ExprError::UndeclaredVariable(var.to_string()))?;
        let root = derivative::differentiate(&self.root, index)?;
        Ok(Self::from_parts(root, self.variables.clone()))
    }

    /// All partial derivatives in variable order.
    pub fn gradient(&self) -> Result<Vec<Expression>, ExprError> {
        self.variables
            .iter()
            .map(|v| self.differentiate(v))
            .collect()
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(&self.variables, f, 0)
    }
}

fn domain<S: Scalar>(point: &[S], reason: &str) -> ExprError {
    ExprError::Domain {
        point: to_f64_vec(point),
        reason: reason.to_string(),
    }
}

fn validate_variables(variables: &[impl AsRef<str>]) -> Result<Arc<[String]>, ExprError> {
    if variables.is_empty() {
        return Err(ExprError::InvalidVariables("no variables declared".into()));
    }
    let mut out: Vec<String> = Vec::with_capacity(variables.len());
    for v in variables {
        let v = v.as_ref();
        let valid = v
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(ExprError::InvalidVariables(format!("`{v}` is not an identifier")));
        }
        if Func::from_name(v).is_some() {
            return Err(ExprError::InvalidVariables(format!("`{v}` is a function name")));
        }
        if out.iter().any(|o| o == v) {
            return Err(ExprError::InvalidVariables(format!("`{v}` declared twice")));
        }
        out.push(v.to_string());
    }
    Ok(out.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Node {
        Node::Var(0)
    }

    #[test]
    fn evaluates_constants_and_powers() {
        let c = Expression::parse("7", &["x"]).unwrap();
        assert_eq!(c.evaluate(&[123.0_f64]).unwrap(), 7.0);
        let sq = Expression::parse("x^2", &["x"]).unwrap();
        assert_eq!(sq.evaluate(&[3.0_f64]).unwrap(), 9.0);
        let xy = Expression::parse("x*y", &["x", "y"]).unwrap();
        assert_eq!(xy.evaluate(&[2.0_f64, 3.0]).unwrap(), 6.0);
    }

    #[test]
    fn pole_is_a_domain_error() {
        let e = Expression::parse("1/x", &["x"]).unwrap();
        match e.evaluate(&[0.0_f64]) {
            Err(ExprError::Domain { point, .. }) => assert_eq!(point, vec![0.0]),
            other => panic!("expected domain error, got {other:?}"),
        }
        let s = Expression::parse("sqrt(x)", &["x"]).unwrap();
        assert!(matches!(s.evaluate(&[-1.0_f64]), Err(ExprError::Domain { .. })));
    }

    #[test]
    fn arity_is_checked() {
        let e = Expression::parse("x", &["x", "y"]).unwrap();
        assert!(matches!(
            e.evaluate(&[1.0_f64]),
            Err(ExprError::Arity { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn evaluates_in_f32() {
        let e = Expression::parse("x^2 + 1", &["x"]).unwrap();
        assert_eq!(e.evaluate(&[2.0_f32]).unwrap(), 5.0_f32);
    }

    #[test]
    fn polynomial_degree() {
        let vars = ["x", "y"];
        let deg = |t: &str| Expression::parse(t, &vars).unwrap().polynomial_degree();
        assert_eq!(deg("x^2*y + 3"), Some(3));
        assert_eq!(deg("(x + y)^4 / 2"), Some(4));
        assert_eq!(deg("sin(x)"), None);
        assert_eq!(deg("x / y"), None);
        assert_eq!(deg("x^-1"), None);
    }

    #[test]
    fn display_uses_minimal_parentheses() {
        let e = Expression::new(
            Node::binary(BinOp::Add, Node::pow(x(), 2), Node::Const(-2.5)),
            &["x"],
        )
        .unwrap();
        assert_eq!(e.to_string(), "x^2 + (-2.5)");
        let text = "(x - 1)^2 * -y - (x - (y - 2.0)) / sin(x + y) + (-x)^-3";
        let e = Expression::parse(text, &["x", "y"]).unwrap();
        assert_eq!(e.to_string(), "(x - 1.0)^2 * (-y) - (x - (y - 2.0)) / sin(x + y) + (-x)^-3");
        assert_eq!(Expression::parse(&e.to_string(), &["x", "y"]).unwrap().root(), e.root());
    }

    #[test]
    fn rejects_bad_variable_lists() {
        assert!(Expression::parse("x", &[] as &[&str]).is_err());
        assert!(Expression::parse("x", &["x", "x"]).is_err());
        assert!(Expression::parse("x", &["sin"]).is_err());
        assert!(Expression::new(Node::Var(3), &["x"]).is_err());
    }
}
