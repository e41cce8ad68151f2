//! Weight functions `u`, `v` written in a small arithmetic language.
//!
//! Grammar (`^` is right-associative; a leading minus belongs to the base, so
//! `-2^2` is `(-2)^2`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-' unary | base
//! base   := number | 'x' | '(' expr ')' | func '(' expr ')'
//! func   := exp | log | sin | cos | sqrt | abs
//! ```

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightExpr {
    Num(f64),
    X,
    Neg(Box<WeightExpr>),
    Bin(BinOp, Box<WeightExpr>, Box<WeightExpr>),
    Call(Func, Box<WeightExpr>),
}

impl WeightExpr {
    pub fn constant(c: f64) -> Self {
        WeightExpr::Num(c)
    }

    /// Evaluate at a point, reporting domain violations.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let dom = |message: &str| Error::Domain {
            x,
            message: message.to_string(),
        };
        let v = match self {
            WeightExpr::Num(c) => *c,
            WeightExpr::X => x,
            WeightExpr::Neg(e) => -e.eval(x)?,
            WeightExpr::Bin(op, l, r) => {
                let (a, b) = (l.eval(x)?, r.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(dom("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            WeightExpr::Call(f, e) => {
                let a = e.eval(x)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(dom("log of a non-positive value"));
                        }
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(dom("sqrt of a negative value"));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(dom("non-finite value"))
        }
    }
}

/// Fully parenthesised output; reparsing yields the same tree.
impl fmt::Display for WeightExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightExpr::Num(c) => {
                if *c < 0.0 {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            WeightExpr::X => write!(f, "x"),
            WeightExpr::Neg(e) => write!(f, "(-{e})"),
            WeightExpr::Bin(op, l, r) => write!(f, "({l}{}{r})", op.symbol()),
            WeightExpr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset,
            message: message.into(),
        })
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

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(self.pos, format!("expected '{}'", c as char)),
        }
    }

    fn expr(&mut self) -> Result<WeightExpr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = WeightExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<WeightExpr> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = WeightExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<WeightExpr> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.factor()?;
            return Ok(WeightExpr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<WeightExpr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(WeightExpr::Neg(Box::new(inner)));
        }
        self.base()
    }

    fn base(&mut self) -> Result<WeightExpr> {
        let start = match self.peek() {
            Some(_) => self.pos,
            None => return self.err(self.src.len(), "unexpected end of input"),
        };
        let c = self.src[start];
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let mut end = start;
            while end < self.src.len() && self.src[end].is_ascii_alphanumeric() {
                end += 1;
            }
            let word = std::str::from_utf8(&self.src[start..end]).expect("ascii");
            self.pos = end;
            if word == "x" {
                return Ok(WeightExpr::X);
            }
            let Some(func) = Func::from_name(word) else {
                return self.err(start, format!("unknown identifier `{word}`"));
            };
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(WeightExpr::Call(func, Box::new(arg)));
        }
        self.err(start, format!("unexpected character '{}'", c as char))
    }

    fn number(&mut self) -> Result<WeightExpr> {
        let start = self.pos;
        let s = self.src;
        let mut end = start;
        while end < s.len() && (s[end].is_ascii_digit() || s[end] == b'.') {
            end += 1;
        }
        if end < s.len() && (s[end] == b'e' || s[end] == b'E') {
            let mut k = end + 1;
            if k < s.len() && (s[k] == b'+' || s[k] == b'-') {
                k += 1;
            }
            if k < s.len() && s[k].is_ascii_digit() {
                while k < s.len() && s[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = std::str::from_utf8(&s[start..end]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = end;
                Ok(WeightExpr::Num(v))
            }
            Err(_) => self.err(start, format!("malformed number `{text}`")),
        }
    }
}

pub fn parse_weight(text: &str) -> Result<WeightExpr> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    if let Some(c) = p.peek() {
        return p.err(p.pos, format!("unexpected trailing '{}'", c as char));
    }
    Ok(e)
}

/// Pointwise values at the grid nodes.
pub fn evaluate_weight(expr: &WeightExpr, grid: &Arc<Grid>) -> Result<SampledFunction> {
    let values = grid
        .nodes()
        .iter()
        .map(|&x| expr.eval(x))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(grid.clone(), values)
}

/// The pair of positive weights `(u, v)` together with their samples.
#[derive(Debug, Clone)]
pub struct WeightPair {
    pub u: WeightExpr,
    pub v: WeightExpr,
    pub samples_u: SampledFunction,
    pub samples_v: SampledFunction,
}

impl WeightPair {
    pub fn new(u: WeightExpr, v: WeightExpr, grid: &Arc<Grid>) -> Result<Self> {
        check_positive("u", &u, grid)?;
        check_positive("v", &v, grid)?;
        Ok(Self {
            samples_u: evaluate_weight(&u, grid)?,
            samples_v: evaluate_weight(&v, grid)?,
            u,
            v,
        })
    }

    pub fn parse(u: &str, v: &str, grid: &Arc<Grid>) -> Result<Self> {
        Self::new(parse_weight(u)?, parse_weight(v)?, grid)
    }

    pub fn unit(grid: &Arc<Grid>) -> Self {
        Self::new(WeightExpr::constant(1.0), WeightExpr::constant(1.0), grid)
            .expect("constant weights are positive")
    }

    /// Same expressions sampled on another grid.
    pub fn resample(&self, grid: &Arc<Grid>) -> Result<Self> {
        Self::new(self.u.clone(), self.v.clone(), grid)
    }
}

/// Positivity at nodes and cell midpoints.
fn check_positive(name: &str, expr: &WeightExpr, grid: &Grid) -> Result<()> {
    let x = grid.nodes();
    let mids = x.windows(2).map(|w| 0.5 * (w[0] + w[1]));
    for t in x.iter().copied().chain(mids) {
        let value = expr.eval(t)?;
        if value <= 0.0 {
            return Err(Error::NotPositive {
                name: name.to_string(),
                x: t,
                value,
            });
        }
    }
    Ok(())
}
