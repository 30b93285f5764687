//! A small, safe arithmetic expression language for custom utility functions.
//!
//! Expressions are built from bundle coordinates (`x1`, `x2`, ... — `x`, `y`,
//! `z` are aliases for the first three), numeric literals, the binary
//! operators `+ - * / ^`, and the functions `min(...)`, `max(...)` (two or
//! more arguments) and `sqrt(_)`. There is no assignment, no recursion and no
//! side effects, so evaluation always terminates in one pass over the tree.

use std::fmt;

/// Parsed expression tree. Variables are indexed by good.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    /// Evaluate at a bundle. Coordinates beyond `x.len()` read as 0 so that a
    /// two-good expression can be probed on truncated bundles safely.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(k) => x.get(*k).copied().unwrap_or(0.0),
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Min(es) => es.iter().map(|e| e.eval(x)).fold(f64::INFINITY, f64::min),
            Expr::Max(es) => es.iter().map(|e| e.eval(x)).fold(f64::NEG_INFINITY, f64::max),
            Expr::Sqrt(e) => e.eval(x).sqrt(),
        }
    }

    /// Largest variable index referenced, if any. Used to validate that an
    /// expression fits the economy's number of goods.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(k) => Some(*k),
            Expr::Neg(e) | Expr::Sqrt(e) => e.max_var(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.max_var().max(b.max_var()),
            Expr::Min(es) | Expr::Max(es) => es.iter().filter_map(|e| e.max_var()).max(),
        }
    }
}

/// Parse failure with the byte offset where it happened.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("expression parse error at byte {pos}: {message}")]
pub struct ExprError {
    pub pos: usize,
    pub message: String,
}

/// Parse an expression. Grammar (standard precedence, `^` binds tightest and
/// is right-associative):
///
/// ```text
/// expr    := term  (('+' | '-') term)*
/// term    := power (('*' | '/') power)*
/// power   := unary ('^' power)?
/// unary   := '-' unary | primary
/// primary := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'
/// ```
pub fn parse(input: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { input: input.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.input.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ExprError {
        ExprError { pos: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.input.get(self.pos).is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.input.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.power()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if self.eat(b'^') {
            // Right-associative: 2^3^2 = 2^(3^2).
            let exp = self.power()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            _ => Err(self.err("expected a number, name or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .input
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.' || *c == b'e' || *c == b'E')
        {
            // Allow a sign directly after an exponent marker.
            self.pos += 1;
            if matches!(self.input.get(self.pos - 1), Some(b'e') | Some(b'E'))
                && matches!(self.input.get(self.pos), Some(b'+') | Some(b'-'))
            {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.input[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ExprError { pos: start, message: format!("bad number literal '{text}'") })
    }

    fn name(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.input.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.input[start..self.pos]).unwrap().to_string();
        match name.as_str() {
            "min" | "max" | "sqrt" => {
                if !self.eat(b'(') {
                    return Err(self.err(&format!("expected '(' after '{name}'")));
                }
                let mut args = vec![self.expr()?];
                while self.eat(b',') {
                    args.push(self.expr()?);
                }
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                match name.as_str() {
                    "sqrt" if args.len() == 1 => Ok(Expr::Sqrt(Box::new(args.pop().unwrap()))),
                    "sqrt" => Err(ExprError {
                        pos: start,
                        message: "sqrt takes exactly one argument".to_string(),
                    }),
                    _ if args.len() < 2 => Err(ExprError {
                        pos: start,
                        message: format!("{name} takes at least two arguments"),
                    }),
                    "min" => Ok(Expr::Min(args)),
                    _ => Ok(Expr::Max(args)),
                }
            }
            // Single-letter aliases for the first three goods.
            "x" => Ok(Expr::Var(0)),
            "y" => Ok(Expr::Var(1)),
            "z" => Ok(Expr::Var(2)),
            _ => {
                // x1, x2, ... (one-based good index).
                if let Some(idx) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                    if idx >= 1 {
                        return Ok(Expr::Var(idx - 1));
                    }
                }
                Err(ExprError { pos: start, message: format!("unknown name '{name}'") })
            }
        }
    }
}

impl fmt::Display for Expr {
    /// Render back to parseable text (used when serializing custom utilities).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(k) => write!(f, "x{}", k + 1),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Min(es) => {
                write!(f, "min(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            Expr::Max(es) => {
                write!(f, "max(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            Expr::Sqrt(e) => write!(f, "sqrt({e})"),
        }
    }
}
