//! Symbolic differentiation with constant folding.

use super::{BinOp, ExprError, Func, Node};

pub(super) fn differentiate(node: &Node, var: usize) -> Result<Node, ExprError> {
    if !node.depends_on(var) {
        return Ok(Node::Const(0.0));
    }
    Ok(match node {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(i) => Node::Const(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(differentiate(a, var)?),
        Node::Binary(op, a, b) => {
            let (da, db) = (differentiate(a, var)?, differentiate(b, var)?);
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b), mul(a, db)),
                BinOp::Div => div(
                    sub(mul(da, b.clone()), mul(a, db)),
                    pow(b, 2),
                ),
            }
        }
        Node::Pow(a, n) => {
            let da = differentiate(a, var)?;
            mul(
                mul(Node::Const(f64::from(*n)), pow(a.as_ref().clone(), n - 1)),
                da,
            )
        }
        Node::Call(func, a) => {
            let da = differentiate(a, var)?;
            let a = a.as_ref().clone();
            let outer = match func {
                Func::Sin => Node::call(Func::Cos, a),
                Func::Cos => neg(Node::call(Func::Sin, a)),
                Func::Exp => Node::call(Func::Exp, a),
                Func::Sqrt => {
                    return Ok(div(da, mul(Node::Const(2.0), Node::call(Func::Sqrt, a))))
                }
                Func::Abs => return Err(ExprError::NotDifferentiable("abs")),
            };
            mul(outer, da)
        }
    })
}

fn as_const(n: &Node) -> Option<f64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        Node::Neg(inner) => *inner,
        other => Node::neg(other),
    }
}

fn add(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Node::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Node::binary(BinOp::Add, a, b),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Node::Const(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Node::binary(BinOp::Sub, a, b),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Node::Const(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Node::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Node::binary(BinOp::Mul, a, b),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) if y != 0.0 => Node::Const(x / y),
        (Some(x), _) if x == 0.0 => Node::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Node::binary(BinOp::Div, a, b),
    }
}

fn pow(a: Node, n: i32) -> Node {
    match (as_const(&a), n) {
        (_, 0) => Node::Const(1.0),
        (_, 1) => a,
        (Some(c), n) => Node::Const(c.powi(n)),
        _ => Node::pow(a, n),
    }
}
