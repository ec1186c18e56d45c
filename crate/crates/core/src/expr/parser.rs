//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' ['-'] integer)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`.

use super::{BinOp, ExprError, Func, Node};

pub(super) fn parse(text: &str, variables: &[String]) -> Result<Node, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        variables,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.error("empty expression"));
    }
    let node = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error(&format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(node)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    variables: &'a [String],
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else if self.pos == self.src.len() {
            Err(self.error(&format!("expected `{}`, found end of input", c as char)))
        } else {
            Err(self.error(&format!(
                "expected `{}`, found `{}`",
                c as char, self.src[self.pos] as char
            )))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        if self.eat(b'-') {
            return Ok(Node::neg(self.factor()?));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.integer()?;
            return Ok(Node::pow(base, exponent));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32, ExprError> {
        self.skip_ws();
        let start = self.pos;
        let negative = self.eat(b'-');
        self.skip_ws();
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let at_fraction = self
            .src
            .get(self.pos)
            .is_some_and(|c| matches!(c, b'.' | b'e' | b'E') || c.is_ascii_alphabetic());
        if digits_start == self.pos || at_fraction {
            self.pos = start;
            return Err(self.error("exponent must be an integer constant"));
        }
        let digits = std::str::from_utf8(&self.src[digits_start..self.pos]).expect("ascii digits");
        let value: i32 = digits.parse().map_err(|_| ExprError::Syntax {
            offset: digits_start,
            message: "exponent out of range".into(),
        })?;
        Ok(if negative { -value } else { value })
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.error(&format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
                return Err(self.error("malformed exponent in number"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        text.parse::<f64>().map(Node::Const).map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn identifier(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        if let Some(func) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Node::call(func, arg));
        }
        match self.variables.iter().position(|v| v == name) {
            Some(i) => Ok(Node::Var(i)),
            None => Err(ExprError::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            }),
        }
    }
}
