//! Scalar expressions over indexed variables.
//!
//! Problem files name their variables (`x1`, `x2`, ...), but trees store
//! plain indices so that parsing is decoupled from dimension bookkeeping.
//! Every tree supports evaluation and symbolic partial differentiation;
//! derivative trees are only constant-folded, never simplified further.
//!
//! Grammar accepted by [`parse`]:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? power
//! power  := atom ('^' number)*          (right-associative, constant exponents)
//! atom   := number | ident | func '(' expr (',' number)? ')' | '(' expr ')'
//! func   := sin | cos | exp | log | sqrt | abs | spow
//! ```
//!
//! Exponents may carry a leading sign (`x1^-0.5`) so that printed derivative
//! trees reparse.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Half-width of the band around zero where the derivative of `abs` is
/// reported as undefined.
pub const ABS_KINK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    /// Sign of the argument. Only produced by differentiating `abs`; it
    /// refuses to evaluate inside the kink band.
    Sgn,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
            UnaryOp::Sgn => "sgn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree. Exponents of `Pow` and `Spow` are constants; `Spow(t, p)`
/// is `sign(t)·|t|^p` and requires `p > 1` so that it stays C¹.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Spow(Box<Expr>, f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected {found}, expected {expected}")]
    Unexpected { found: String, expected: &'static str },
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEnd { expected: &'static str },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("exponent must be a constant number")]
    NonConstantExponent,
    #[error("spow exponent must be greater than 1, got {0}")]
    SpowExponent(f64),
    #[error("malformed number `{0}`")]
    BadNumber(String),
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalErrorKind {
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
    #[error("derivative undefined at kink (argument {0})")]
    Nondifferentiable(f64),
    #[error("variable index {index} out of range for dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
}

/// Evaluation failure, carrying a rendering of the offending node.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{node}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub node: String,
}

impl EvalError {
    fn at(kind: EvalErrorKind, node: &Expr) -> Self {
        let mut node = node.to_string();
        if node.len() > 80 {
            let mut cut = 77;
            while !node.is_char_boundary(cut) {
                cut -= 1;
            }
            node.truncate(cut);
            node.push_str("...");
        }
        EvalError { kind, node }
    }

    pub fn is_nondifferentiable(&self) -> bool {
        matches!(self.kind, EvalErrorKind::Nondifferentiable(_))
    }
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn var(index: usize) -> Self {
        Expr::Var(index)
    }

    /// `-self`, cancelling a leading negation.
    pub fn negated(&self) -> Self {
        neg(self.clone())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    /// Variable indices that occur in the tree.
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(k) => {
                out.insert(*k);
            }
            Expr::Unary(_, a) | Expr::Pow(a, _) | Expr::Spow(a, _) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Largest variable index plus one (0 for constant trees).
    pub fn min_dimension(&self) -> usize {
        self.variables().last().map_or(0, |k| k + 1)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => return Ok(*c),
            Expr::Var(k) => {
                return x.get(*k).copied().ok_or_else(|| {
                    EvalError::at(
                        EvalErrorKind::VariableOutOfRange {
                            index: *k,
                            dim: x.len(),
                        },
                        self,
                    )
                })
            }
            Expr::Unary(op, a) => {
                let t = a.eval(x)?;
                match op {
                    UnaryOp::Neg => -t,
                    UnaryOp::Sin => t.sin(),
                    UnaryOp::Cos => t.cos(),
                    UnaryOp::Exp => t.exp(),
                    UnaryOp::Log => {
                        if t <= 0.0 {
                            return Err(EvalError::at(EvalErrorKind::LogDomain(t), self));
                        }
                        t.ln()
                    }
                    UnaryOp::Sqrt => {
                        if t < 0.0 {
                            return Err(EvalError::at(EvalErrorKind::SqrtDomain(t), self));
                        }
                        t.sqrt()
                    }
                    UnaryOp::Abs => t.abs(),
                    UnaryOp::Sgn => {
                        if t.abs() <= ABS_KINK_TOL {
                            return Err(EvalError::at(EvalErrorKind::Nondifferentiable(t), self));
                        }
                        t.signum()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let l = a.eval(x)?;
                let r = b.eval(x)?;
                match op {
                    BinaryOp::Add => l + r,
                    BinaryOp::Sub => l - r,
                    BinaryOp::Mul => l * r,
                    BinaryOp::Div => {
                        if r == 0.0 {
                            return Err(EvalError::at(EvalErrorKind::DivisionByZero, self));
                        }
                        l / r
                    }
                }
            }
            Expr::Pow(a, c) => {
                let t = a.eval(x)?;
                if t == 0.0 && *c < 0.0 {
                    return Err(EvalError::at(EvalErrorKind::DivisionByZero, self));
                }
                powc(t, *c)
            }
            Expr::Spow(a, p) => {
                let t = a.eval(x)?;
                if t == 0.0 { 0.0 } else { t.signum() * t.abs().powf(*p) }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::at(EvalErrorKind::NonFinite, self))
        }
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn differentiate(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(k) => Expr::Const(if *k == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.differentiate(var);
                if da.is_zero() {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                match op {
                    UnaryOp::Neg => neg(da),
                    UnaryOp::Sin => mul(unary(UnaryOp::Cos, a), da),
                    UnaryOp::Cos => neg(mul(unary(UnaryOp::Sin, a), da)),
                    UnaryOp::Exp => mul(unary(UnaryOp::Exp, a), da),
                    UnaryOp::Log => div(da, a),
                    UnaryOp::Sqrt => div(da, mul(Expr::Const(2.0), unary(UnaryOp::Sqrt, a))),
                    UnaryOp::Abs => mul(unary(UnaryOp::Sgn, a), da),
                    UnaryOp::Sgn => Expr::Const(0.0),
                }
            }
            Expr::Binary(op, a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                match op {
                    BinaryOp::Add => add(da, db),
                    BinaryOp::Sub => sub(da, db),
                    BinaryOp::Mul => add(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    BinaryOp::Div => {
                        if db.is_zero() {
                            div(da, (**b).clone())
                        } else {
                            div(
                                sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                                pow((**b).clone(), 2.0),
                            )
                        }
                    }
                }
            }
            Expr::Pow(a, c) => {
                let da = a.differentiate(var);
                if da.is_zero() || *c == 0.0 {
                    return Expr::Const(0.0);
                }
                if *c == 1.0 {
                    return da;
                }
                let a = (**a).clone();
                let inner = if *c == 2.0 { a } else { pow(a, c - 1.0) };
                mul(mul(Expr::Const(*c), inner), da)
            }
            Expr::Spow(a, p) => {
                let da = a.differentiate(var);
                if da.is_zero() {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                mul(
                    mul(Expr::Const(*p), pow(unary(UnaryOp::Abs, a), p - 1.0)),
                    da,
                )
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 3,
            Expr::Const(_) | Expr::Var(_) => 5,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Unary(..) | Expr::Spow(..) => 5,
            Expr::Pow(..) => 4,
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        }
    }
}

fn powc(t: f64, c: f64) -> f64 {
    if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
        t.powi(c as i32)
    } else {
        t.powf(c)
    }
}

fn folded(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

fn unary(op: UnaryOp, a: Expr) -> Expr {
    if let Expr::Const(c) = a {
        let v = match op {
            UnaryOp::Neg => Some(-c),
            UnaryOp::Sin => Some(c.sin()),
            UnaryOp::Cos => Some(c.cos()),
            UnaryOp::Exp => Some(c.exp()),
            UnaryOp::Log => (c > 0.0).then(|| c.ln()),
            UnaryOp::Sqrt => (c >= 0.0).then(|| c.sqrt()),
            UnaryOp::Abs => Some(c.abs()),
            UnaryOp::Sgn => (c.abs() > ABS_KINK_TOL).then(|| c.signum()),
        };
        if let Some(e) = v.and_then(folded) {
            return e;
        }
    }
    Expr::Unary(op, Box::new(a))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => unary(UnaryOp::Neg, other),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => folded(x + y).unwrap_or_else(|| bin(BinaryOp::Add, a, b)),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => bin(BinaryOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => folded(x - y).unwrap_or_else(|| bin(BinaryOp::Sub, a, b)),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => bin(BinaryOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => folded(x * y).unwrap_or_else(|| bin(BinaryOp::Mul, a, b)),
        _ if a.is_zero() || b.is_zero() => Expr::Const(0.0),
        _ if a.is_one() => b,
        _ if b.is_one() => a,
        _ => bin(BinaryOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => {
            folded(x / y).unwrap_or_else(|| bin(BinaryOp::Div, a, b))
        }
        _ if b.is_one() => a,
        _ => bin(BinaryOp::Div, a, b),
    }
}

fn pow(a: Expr, c: f64) -> Expr {
    if let Expr::Const(t) = a {
        if !(t == 0.0 && c < 0.0) {
            if let Some(e) = folded(powc(t, c)) {
                return e;
            }
        }
    }
    if c == 1.0 {
        return a;
    }
    Expr::Pow(Box::new(a), c)
}

fn bin(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, Box::new(a), Box::new(b))
}

/// Gradient of a scalar expression: one derivative tree per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(Vec<Expr>);

impl Gradient {
    pub fn of(expr: &Expr, dim: usize) -> Self {
        Gradient((0..dim).map(|k| expr.differentiate(k)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.0
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.0.iter().map(|e| e.eval(x)).collect()
    }

    /// `∇h(x)·u`, skipping components whose direction entry is zero.
    pub fn directional(&self, x: &[f64], u: &[f64]) -> Result<f64, EvalError> {
        let mut acc = 0.0;
        for (e, &uk) in self.0.iter().zip(u) {
            if uk != 0.0 {
                acc += e.eval(x)? * uk;
            }
        }
        Ok(acc)
    }
}

// ----------------------------------------------------------------------------
// Printing
// ----------------------------------------------------------------------------

struct Printer<'a> {
    expr: &'a Expr,
    names: Option<&'a [String]>,
}

impl Printer<'_> {
    fn child<'b>(&'b self, e: &'b Expr) -> Printer<'b> {
        Printer {
            expr: e,
            names: self.names,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
        if e.precedence() < min_prec {
            write!(f, "({})", self.child(e))
        } else {
            write!(f, "{}", self.child(e))
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(k) => match self.names.and_then(|n| n.get(*k)) {
                Some(name) => write!(f, "{name}"),
                None => write!(f, "x{}", k + 1),
            },
            Expr::Unary(UnaryOp::Neg, a) => {
                write!(f, "-")?;
                self.write_child(f, a, 4)
            }
            Expr::Unary(op, a) => write!(f, "{}({})", op.name(), self.child(a)),
            Expr::Spow(a, p) => write!(f, "spow({}, {p:?})", self.child(a)),
            Expr::Pow(a, c) => {
                self.write_child(f, a, 5)?;
                write!(f, "^{c:?}")
            }
            Expr::Binary(op, a, b) => {
                let (sym, prec) = match op {
                    BinaryOp::Add => ("+", 1),
                    BinaryOp::Sub => ("-", 1),
                    BinaryOp::Mul => ("*", 2),
                    BinaryOp::Div => ("/", 2),
                };
                self.write_child(f, a, prec)?;
                write!(f, " {sym} ")?;
                self.write_child(f, b, prec + 1)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer {
            expr: self,
            names: None,
        }
        .fmt(f)
    }
}

impl Expr {
    /// Renders the tree with the given variable names (falls back to `x{k+1}`).
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Printer {
            expr: self,
            names: Some(names),
        }
    }
}

// ----------------------------------------------------------------------------
// Parsing
// ----------------------------------------------------------------------------

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
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::BadNumber(lit.to_string()),
                })?;
                out.push((start, Tok::Num(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::Unexpected {
                        found: format!("character `{ch}`"),
                        expected: "an expression",
                    },
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn fail(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError {
                offset: self.offset(),
                kind: ParseErrorKind::Unexpected {
                    found: t.describe(),
                    expected,
                },
            },
            None => ParseError {
                offset: self.end,
                kind: ParseErrorKind::UnexpectedEnd { expected },
            },
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.fail(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinaryOp::Add,
                Some(Tok::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinaryOp::Mul,
                Some(Tok::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = bin(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            let inner = self.power()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let c = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), c));
        }
        Ok(base)
    }

    /// `'-'? number ('^' exponent)?`, folded right-associatively.
    fn exponent(&mut self) -> Result<f64, ParseError> {
        let v = self.signed_number("a constant exponent")?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let rest = self.exponent()?;
            return Ok(powc(v, rest));
        }
        Ok(v)
    }

    fn signed_number(&mut self, expected: &'static str) -> Result<f64, ParseError> {
        let negative = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(if negative { -v } else { v })
            }
            Some(Tok::Ident(_)) | Some(Tok::LParen) => Err(ParseError {
                offset: self.offset(),
                kind: ParseErrorKind::NonConstantExponent,
            }),
            _ => Err(self.fail(expected)),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    return self.call(&name, offset);
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(k) => Ok(Expr::Var(k)),
                    None => Err(ParseError {
                        offset,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    }),
                }
            }
            _ => {
                self.pos -= 1;
                Err(self.fail("a number, variable, function call or `(`"))
            }
        }
    }

    fn call(&mut self, name: &str, offset: usize) -> Result<Expr, ParseError> {
        let op = match name {
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "exp" => Some(UnaryOp::Exp),
            "log" => Some(UnaryOp::Log),
            "sqrt" => Some(UnaryOp::Sqrt),
            "abs" => Some(UnaryOp::Abs),
            "spow" => None,
            _ => {
                return Err(ParseError {
                    offset,
                    kind: ParseErrorKind::UnknownFunction(name.to_string()),
                })
            }
        };
        let arg = self.expr()?;
        let e = match op {
            Some(op) => Expr::Unary(op, Box::new(arg)),
            None => {
                self.expect(Tok::Comma, "`,` and an spow exponent")?;
                let at = self.offset();
                let p = self.signed_number("a constant exponent")?;
                if p <= 1.0 {
                    return Err(ParseError {
                        offset: at,
                        kind: ParseErrorKind::SpowExponent(p),
                    });
                }
                Expr::Spow(Box::new(arg), p)
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(e)
    }
}

/// Parses `text` over the ordered variable names `vars` (index = position).
pub fn parse(text: &str, vars: &[String]) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        vars,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.fail("an operator or end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("x{k}")).collect()
    }

    #[test]
    fn parses_example_trees() {
        let v = names(2);
        assert_eq!(
            parse("x1^3", &v).unwrap(),
            Expr::Pow(Box::new(Expr::Var(0)), 3.0)
        );
        assert_eq!(
            parse("x1^2 - x2", &v).unwrap(),
            bin(
                BinaryOp::Sub,
                Expr::Pow(Box::new(Expr::Var(0)), 2.0),
                Expr::Var(1)
            )
        );
        assert_eq!(parse("0", &names(1)).unwrap(), Expr::Const(0.0));
    }

    #[test]
    fn precedence_and_associativity() {
        let v = names(2);
        let e = parse("-x1^2", &v).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0]).unwrap(), -9.0);
        let e = parse("x1 - x2 - 1", &v).unwrap();
        assert_eq!(e.eval(&[5.0, 1.0]).unwrap(), 3.0);
        let e = parse("x1 / x2 / 2", &v).unwrap();
        assert_eq!(e.eval(&[8.0, 2.0]).unwrap(), 2.0);
        let e = parse("2^3^2", &v).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 512.0);
        let e = parse("2 * -x1 + 1", &v).unwrap();
        assert_eq!(e.eval(&[1.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let v = names(2);
        let err = parse("x1 + y", &v).unwrap_err();
        assert_eq!(err.offset, 5);
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(ref s) if s == "y"));

        let err = parse("x1 ^ x2", &v).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonConstantExponent);

        let err = parse("spow(x1, 1)", &v).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::SpowExponent(1.0));
        assert_eq!(err.offset, 9);

        let err = parse("spow(x1, x2)", &v).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonConstantExponent);

        let err = parse("(x1 + 2", &v).unwrap_err();
        assert_eq!(err.offset, 7);
        assert!(matches!(err.kind, ParseErrorKind::UnexpectedEnd { .. }));

        let err = parse("tan(x1)", &v).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownFunction(_)));

        let err = parse("x1 x2", &v).unwrap_err();
        assert_eq!(err.offset, 3);

        let err = parse("x1 # 2", &v).unwrap_err();
        assert_eq!(err.offset, 3);
    }

    #[test]
    fn evaluates_examples() {
        let v = names(2);
        assert_eq!(parse("x1^3", &v).unwrap().eval(&[2.0, 0.0]).unwrap(), 8.0);
        assert_eq!(
            parse("x1^2 - x2", &v).unwrap().eval(&[1.0, 1.0]).unwrap(),
            0.0
        );
        let e = parse("spow(x1, 1.5)", &v).unwrap();
        assert_eq!(e.eval(&[-4.0, 0.0]).unwrap(), -8.0);
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let v = names(1);
        let err = parse("log(x1)", &v).unwrap().eval(&[0.0]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::LogDomain(0.0));
        assert_eq!(err.node, "log(x1)");
        let err = parse("1 / x1", &v).unwrap().eval(&[0.0]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        let err = parse("sqrt(x1)", &v).unwrap().eval(&[-1.0]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::SqrtDomain(-1.0));
        let err = parse("x1^0.5", &v).unwrap().eval(&[-1.0]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::NonFinite);
    }

    #[test]
    fn derivative_examples() {
        let v = names(2);
        let g = parse("x1^3", &v).unwrap();
        assert_eq!(g.differentiate(0).eval(&[0.0, 0.0]).unwrap(), 0.0);
        let g = parse("x1^2 - x2", &v).unwrap();
        let d = g.differentiate(1);
        for x in [[0.0, 0.0], [3.0, -2.0], [-1.5, 7.0]] {
            assert_eq!(d.eval(&x).unwrap(), -1.0);
        }
        let g = parse("spow(x1, 1.5)", &v).unwrap();
        assert_eq!(g.differentiate(0).eval(&[0.0, 5.0]).unwrap(), 0.0);
        assert_eq!(g.differentiate(0).eval(&[-4.0, 5.0]).unwrap(), 3.0);
    }

    #[test]
    fn abs_derivative_refuses_the_kink() {
        let v = names(1);
        let d = parse("abs(x1)", &v).unwrap().differentiate(0);
        assert_eq!(d.eval(&[-2.0]).unwrap(), -1.0);
        let err = d.eval(&[1e-13]).unwrap_err();
        assert!(err.is_nondifferentiable());
        // spow's derivative uses abs but never its derivative
        let d = parse("spow(x1, 2)", &v).unwrap().differentiate(0);
        assert_eq!(d.eval(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn derivative_of_unrelated_variable_is_zero() {
        let v = names(2);
        let e = parse("log(x2) * sin(x2)", &v).unwrap();
        assert_eq!(e.differentiate(0), Expr::Const(0.0));
        assert_eq!(e.variables().into_iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn printing_reparses() {
        let v = names(2);
        for src in [
            "x1^2 - x2",
            "-x1^2 + 3 * -x2",
            "x1 - (x2 - 1)",
            "x1 / (x2 / 2)",
            "(x1 + x2)^3",
            "spow(x1 - x2, 1.5) * exp(-x2)",
            "abs(sin(x1)) / (2 + cos(x2))",
            "-(-x1)",
        ] {
            let e = parse(src, &v).unwrap();
            let printed = e.to_string();
            let again = parse(&printed, &v).unwrap();
            assert_eq!(e, again, "{src} -> {printed}");
        }
        let d = parse("sqrt(1 + x1^2)", &v).unwrap().differentiate(0);
        let again = parse(&d.to_string(), &v).unwrap();
        assert_eq!(
            d.eval(&[0.3, 0.0]).unwrap().to_bits(),
            again.eval(&[0.3, 0.0]).unwrap().to_bits()
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn leaf() -> impl Strategy<Value = Expr> {
            prop_oneof![
                (-3.0f64..3.0).prop_map(Expr::Const),
                (0usize..3).prop_map(Expr::Var),
            ]
        }

        // Trees whose domain is all of R^3 and whose values stay moderate.
        fn safe_expr() -> impl Strategy<Value = Expr> {
            leaf().prop_recursive(4, 24, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|a| Expr::Unary(UnaryOp::Neg, Box::new(a))),
                    inner.clone().prop_map(|a| Expr::Unary(UnaryOp::Sin, Box::new(a))),
                    inner.clone().prop_map(|a| Expr::Unary(UnaryOp::Cos, Box::new(a))),
                    inner.clone().prop_map(|a| Expr::Unary(
                        UnaryOp::Exp,
                        Box::new(Expr::Unary(UnaryOp::Sin, Box::new(a)))
                    )),
                    inner.clone().prop_map(|a| Expr::Unary(
                        UnaryOp::Log,
                        Box::new(bin(BinaryOp::Add, Expr::Const(1.0), Expr::Pow(Box::new(a), 2.0)))
                    )),
                    inner.clone().prop_map(|a| Expr::Unary(
                        UnaryOp::Sqrt,
                        Box::new(bin(BinaryOp::Add, Expr::Const(2.0), Expr::Unary(UnaryOp::Sin, Box::new(a))))
                    )),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(BinaryOp::Add, a, b)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(BinaryOp::Sub, a, b)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(BinaryOp::Mul, a, b)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(
                        BinaryOp::Div,
                        a,
                        bin(BinaryOp::Add, Expr::Const(2.0), Expr::Unary(UnaryOp::Cos, Box::new(b)))
                    )),
                    (inner.clone(), prop_oneof![Just(2.0), Just(3.0)])
                        .prop_map(|(a, c)| Expr::Pow(Box::new(a), c)),
                    inner.clone().prop_map(|a| Expr::Spow(Box::new(a), 3.0)),
                ]
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            #[test]
            fn gradient_matches_central_differences(
                e in safe_expr(),
                x in prop::array::uniform3(-2.0f64..2.0),
                k in 0usize..3,
            ) {
                let central = |h: f64| {
                    let mut xp = x;
                    let mut xm = x;
                    xp[k] += h;
                    xm[k] -= h;
                    (e.eval(&xp).unwrap() - e.eval(&xm).unwrap()) / (2.0 * h)
                };
                let h = 1e-5 * x[k].abs().max(1.0);
                let (coarse, fine) = (central(h), central(0.5 * h));
                // fast oscillation: the difference quotient itself is unresolved
                prop_assume!((coarse - fine).abs() <= 1e-3 * fine.abs().max(1.0));
                let fd = (4.0 * fine - coarse) / 3.0;
                let sym = e.differentiate(k).eval(&x).unwrap();
                prop_assert!(
                    (fd - sym).abs() <= 1e-6 * sym.abs().max(1.0),
                    "{e}: d/dx{} symbolic {sym} vs fd {fd}", k + 1
                );
            }

            #[test]
            fn print_then_parse_evaluates_identically(
                e in safe_expr(),
                pts in prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 100),
            ) {
                let names = names(3);
                let printed = e.to_string();
                let again = parse(&printed, &names).unwrap();
                for x in &pts {
                    let a = e.eval(x).map(f64::to_bits).ok();
                    let b = again.eval(x).map(f64::to_bits).ok();
                    prop_assert_eq!(a, b, "{}", printed);
                }
            }
        }
    }
}
