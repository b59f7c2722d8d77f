//! Expression language for constraint components.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ['^' ['-'] number]
//! atom   := number | ident | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `x1..xn` (decision variables) and `z1..zm` (random variables).
//! Functions are `exp`, `log`, `sqrt` (one argument) and `norm` (Euclidean norm of
//! one or more arguments). Printing is fully parenthesized so that parsing the
//! printed form reproduces the tree exactly.

use std::fmt;

use super::dual::Number;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Norm,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Norm => "norm",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "norm" => Func::Norm,
            _ => return None,
        })
    }
}

/// Abstract syntax tree. Variable indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X(usize),
    Z(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Evaluates the tree over any scalar type implementing [`Number`].
    pub fn eval<N: Number>(&self, x: &[N], z: &[N]) -> Result<N> {
        let out = match self {
            Expr::Const(c) => N::constant(*c),
            Expr::X(i) => x[*i].clone(),
            Expr::Z(j) => z[*j].clone(),
            Expr::Neg(a) => -a.eval(x, z)?,
            Expr::Add(a, b) => a.eval(x, z)? + b.eval(x, z)?,
            Expr::Sub(a, b) => a.eval(x, z)? - b.eval(x, z)?,
            Expr::Mul(a, b) => a.eval(x, z)? * b.eval(x, z)?,
            Expr::Div(a, b) => {
                let den = b.eval(x, z)?;
                if den.value() == 0.0 {
                    return Err(Error::Domain("division by zero".into()));
                }
                a.eval(x, z)? / den
            }
            Expr::Pow(a, p) => {
                let base = a.eval(x, z)?;
                let v = base.value();
                let integral = p.fract() == 0.0;
                if (v < 0.0 && !integral) || (v == 0.0 && *p < 0.0) {
                    return Err(Error::Domain(format!("{v}^{p} is undefined")));
                }
                let dv = if *p == 0.0 { 0.0 } else { p * v.powf(p - 1.0) };
                base.lift(v.powf(*p), dv)
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(x, z)?;
                let v = a.value();
                match f {
                    Func::Exp => {
                        let e = v.exp();
                        a.lift(e, e)
                    }
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(Error::Domain(format!("log of nonpositive value {v}")));
                        }
                        a.lift(v.ln(), 1.0 / v)
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(Error::Domain(format!("sqrt of negative value {v}")));
                        }
                        let s = v.sqrt();
                        a.lift(s, 0.5 / s)
                    }
                    Func::Norm => {
                        let mut vals = vec![a];
                        for arg in &args[1..] {
                            vals.push(arg.eval(x, z)?);
                        }
                        N::norm(&vals)?
                    }
                }
            }
        };
        if !out.is_finite() {
            return Err(Error::Domain(format!("non-finite result in `{self}`")));
        }
        Ok(out)
    }

    pub fn depends_on_x(&self) -> bool {
        self.any(&|e| matches!(e, Expr::X(_)))
    }

    pub fn depends_on_z(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Z(_)))
    }

    fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Const(_) | Expr::X(_) | Expr::Z(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) => a.any(pred),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.any(pred) || b.any(pred),
            Expr::Call(_, args) => args.iter().any(|a| a.any(pred)),
        }
    }

    /// True when a `norm(..)` call has an argument depending on the given variable kind.
    pub(crate) fn has_norm_over(&self, over_x: bool) -> bool {
        self.any(&|e| match e {
            Expr::Call(Func::Norm, args) => args
                .iter()
                .any(|a| if over_x { a.depends_on_x() } else { a.depends_on_z() }),
            _ => false,
        })
    }
}

fn fmt_number(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // `{:?}` is the shortest representation that round-trips.
    write!(f, "{c:?}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => fmt_number(*c, f),
            Expr::X(i) => write!(f, "x{}", i + 1),
            Expr::Z(j) => write!(f, "z{}", j + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, p) => {
                write!(f, "({a}^")?;
                fmt_number(*p, f)?;
                write!(f, ")")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A parsed expression together with the variable dimensions it was checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub root: Expr,
    pub n: usize,
    pub m: usize,
}

impl Expression {
    pub fn parse(src: &str, n: usize, m: usize) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut parser = Parser { tokens, pos: 0, n, m };
        let root = parser.expr()?;
        parser.expect_end()?;
        Ok(Self { root, n, m })
    }

    pub fn eval<N: Number>(&self, x: &[N], z: &[N]) -> Result<N> {
        self.root.eval(x, z)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, i));
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| Error::Parse {
                offset: start,
                expected: vec!["number".into()],
            })?;
            out.push((Tok::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            return Err(Error::Parse {
                offset: i,
                expected: vec!["number".into(), "identifier".into(), "operator".into(), "'('".into()],
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    n: usize,
    m: usize,
}

fn expected(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

const ATOM_START: &[&str] = &["number", "identifier", "'('", "'-'"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, exp: &[&str]) -> Result<T> {
        Err(Error::Parse { offset: self.offset(), expected: expected(exp) })
    }

    fn expect_end(&self) -> Result<()> {
        match self.peek() {
            Tok::End => Ok(()),
            _ => self.fail(&["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"]),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let negative = if *self.peek() == Tok::Minus {
                self.bump();
                true
            } else {
                false
            };
            return match self.bump() {
                (Tok::Num(p), _) => Ok(Expr::Pow(Box::new(base), if negative { -p } else { p })),
                (_, offset) => Err(Error::Parse { offset, expected: expected(&["number"]) }),
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(c) => {
                self.bump();
                Ok(Expr::Const(c))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.offset();
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return self.fail(&["'('"]);
                    }
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        if func != Func::Norm {
                            return self.fail(&["')'"]);
                        }
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.close_paren()?;
                    return Ok(Expr::Call(func, args));
                }
                self.variable(&name, offset)
            }
            _ => self.fail(ATOM_START),
        }
    }

    fn close_paren(&mut self) -> Result<()> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            other => {
                let mut exp = vec!["')'".to_string()];
                if matches!(other, Tok::Num(_) | Tok::Ident(_)) {
                    exp.push("operator".into());
                }
                Err(Error::Parse { offset: self.offset(), expected: exp })
            }
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Expr> {
        let unknown = || Error::UnknownIdentifier { name: name.to_string(), offset };
        let (kind, digits) = name.split_at(1);
        let index: usize = digits.parse().map_err(|_| unknown())?;
        if index == 0 || digits.starts_with('0') {
            return Err(unknown());
        }
        match kind {
            "x" if index <= self.n => Ok(Expr::X(index - 1)),
            "z" if index <= self.m => Ok(Expr::Z(index - 1)),
            _ => Err(unknown()),
        }
    }
}
