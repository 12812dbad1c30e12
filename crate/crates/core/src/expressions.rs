//! A small differentiable expression language.
//!
//! Scenario files describe drift functions, tensor components, immersions and
//! special functions as plain-text expressions over the coordinates `x1..x4`.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
//! var     := 'x1' | 'x2' | 'x3' | 'x4'
//! func    := exp | log | sin | cos | tan | sinh | cosh | sqrt | abs | sign
//! ```
//!
//! `^` binds tighter than unary minus, so `-x1^2` is `-(x1^2)`.

use std::fmt;

use thiserror::Error;

/// Number of coordinate variables the language knows about.
pub const MAX_VARS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Sqrt,
    Abs,
    /// Derivative of `abs`; kinked at 0.
    Sign,
}

impl Func {
    const ALL: [Func; 10] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Sqrt,
        Func::Abs,
        Func::Sign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64, EvalError> {
        let domain = |reason: &'static str| EvalError::Domain {
            func: self.name(),
            arg: x,
            reason,
        };
        Ok(match self {
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(domain("logarithm of a non-positive value"));
                }
                x.ln()
            }
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(domain("square root of a negative value"));
                }
                x.sqrt()
            }
            Func::Abs => x.abs(),
            Func::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based coordinate index: `Var(0)` is `x1`.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{func}({arg}): {reason}")]
    Domain {
        func: &'static str,
        arg: f64,
        reason: &'static str,
    },
    #[error("division by zero")]
    DivisionByZero,
    #[error("{base}^{exponent} is not a real number")]
    Power { base: f64, exponent: f64 },
    #[error("variable x{} is not supplied by a {dim}-dimensional point", index + 1)]
    MissingVariable { index: usize, dim: usize },
    #[error("non-finite result {0}")]
    NonFinite(f64),
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the next token and its starting byte offset without consuming it.
    fn peek(&mut self) -> Result<(Tok, usize, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start, start));
        };
        if c.is_ascii_digit() || c == '.' {
            let bytes = rest.as_bytes();
            let mut end = 0;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut exp_end = end + 1;
                if exp_end < bytes.len() && (bytes[exp_end] == b'+' || bytes[exp_end] == b'-') {
                    exp_end += 1;
                }
                let digits_start = exp_end;
                while exp_end < bytes.len() && bytes[exp_end].is_ascii_digit() {
                    exp_end += 1;
                }
                if exp_end > digits_start {
                    end = exp_end;
                }
            }
            let text = &rest[..end];
            let value: f64 = text.parse().map_err(|_| ParseError {
                offset: start,
                expected: vec!["number".into()],
                found: format!("'{text}'"),
            })?;
            return Ok((Tok::Num(value), start, start + end));
        }
        if c.is_ascii_alphabetic() {
            let end = rest
                .find(|ch: char| !ch.is_ascii_alphanumeric() && ch != '_')
                .unwrap_or(rest.len());
            return Ok((Tok::Ident(rest[..end].to_string()), start, start + end));
        }
        if "+-*/^()".contains(c) {
            return Ok((Tok::Op(c), start, start + 1));
        }
        Err(ParseError {
            offset: start,
            expected: vec!["token".into()],
            found: format!("'{c}'"),
        })
    }

    fn bump(&mut self, end: usize) {
        self.pos = end;
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Op(c) => format!("'{c}'"),
        Tok::End => "end of input".into(),
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
}

impl<'a> Parser<'a> {
    fn error(&mut self, expected: &[&str]) -> ParseError {
        match self.lex.peek() {
            Ok((tok, offset, _)) => ParseError {
                offset,
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: describe(&tok),
            },
            Err(e) => e,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let (tok, _, end) = self.lex.peek()?;
            match tok {
                Tok::Op('+') => {
                    self.lex.bump(end);
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.lex.bump(end);
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let (tok, _, end) = self.lex.peek()?;
            match tok {
                Tok::Op('*') => {
                    self.lex.bump(end);
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.lex.bump(end);
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let (tok, _, end) = self.lex.peek()?;
        match tok {
            Tok::Op('-') => {
                self.lex.bump(end);
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.lex.bump(end);
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        let (tok, _, end) = self.lex.peek()?;
        if tok == Tok::Op('^') {
            self.lex.bump(end);
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        const EXPECTED: &[&str] = &["number", "variable", "function", "'('", "'-'"];
        let (tok, offset, end) = self.lex.peek()?;
        match tok {
            Tok::Num(v) => {
                self.lex.bump(end);
                Ok(Expr::Num(v))
            }
            Tok::Op('(') => {
                self.lex.bump(end);
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if name == "pi" {
                    self.lex.bump(end);
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                if let Some(index) = parse_var(&name) {
                    self.lex.bump(end);
                    return Ok(Expr::Var(index));
                }
                if let Some(func) = Func::from_name(&name) {
                    self.lex.bump(end);
                    let (open, _, open_end) = self.lex.peek()?;
                    if open != Tok::Op('(') {
                        return Err(self.error(&["'('"]));
                    }
                    self.lex.bump(open_end);
                    let arg = self.expr()?;
                    self.expect_close()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                Err(ParseError {
                    offset,
                    expected: EXPECTED.iter().map(|s| s.to_string()).collect(),
                    found: format!("unknown identifier '{name}'"),
                })
            }
            _ => Err(self.error(EXPECTED)),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        let (tok, _, end) = self.lex.peek()?;
        if tok == Tok::Op(')') {
            self.lex.bump(end);
            Ok(())
        } else {
            Err(self.error(&["')'", "operator"]))
        }
    }
}

fn parse_var(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    let index: usize = digits.parse().ok()?;
    (1..=MAX_VARS).contains(&index).then(|| index - 1)
}

/// Parses an expression. Errors carry the byte offset of the offending token.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        lex: Lexer { src: text, pos: 0 },
    };
    let expr = parser.expr()?;
    let (tok, _, _) = parser.lex.peek()?;
    if tok != Tok::End {
        return Err(parser.error(&["operator", "end of input"]));
    }
    Ok(expr)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Printing

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                // `--x` would still parse, but a literal after '-' must not merge with it.
                write_operand(f, a, 4)
            }
            Expr::Add(a, b) => {
                write_operand(f, a, 1)?;
                write!(f, " + ")?;
                write_operand(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_operand(f, a, 1)?;
                write!(f, " - ")?;
                write_operand(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_operand(f, a, 2)?;
                write!(f, "*")?;
                write_operand(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_operand(f, a, 2)?;
                write!(f, "/")?;
                write_operand(f, b, 3)
            }
            Expr::Pow(a, b) => {
                write_operand(f, a, 5)?;
                write!(f, "^")?;
                write_operand(f, b, 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation

impl Expr {
    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_raw(p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(v))
        }
    }

    fn eval_raw(&self, p: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => *p.get(*i).ok_or(EvalError::MissingVariable {
                index: *i,
                dim: p.len(),
            })?,
            Expr::Neg(a) => -a.eval_raw(p)?,
            Expr::Add(a, b) => a.eval_raw(p)? + b.eval_raw(p)?,
            Expr::Sub(a, b) => a.eval_raw(p)? - b.eval_raw(p)?,
            Expr::Mul(a, b) => a.eval_raw(p)? * b.eval_raw(p)?,
            Expr::Div(a, b) => {
                let den = b.eval_raw(p)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval_raw(p)? / den
            }
            Expr::Pow(a, b) => {
                let base = a.eval_raw(p)?;
                let exponent = b.eval_raw(p)?;
                if let Some(n) = small_integer(exponent) {
                    if n < 0 && base == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    base.powi(n)
                } else {
                    if base < 0.0 || (base == 0.0 && exponent < 0.0) {
                        return Err(EvalError::Power { base, exponent });
                    }
                    base.powf(exponent)
                }
            }
            Expr::Call(func, a) => func.apply(a.eval_raw(p)?)?,
        })
    }

    /// Largest variable index referenced, plus one (0 for constants).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(i) => *i == var,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// True when the tree contains `abs` or `sign`, whose derivatives are kinked.
    pub fn has_kink(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Call(Func::Abs | Func::Sign, _) => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.has_kink(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.has_kink() || b.has_kink(),
        }
    }

    /// Arguments of every `abs`/`sign` node; a kink is hit where one of them vanishes.
    pub fn kink_arguments(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_kinks(&mut out);
        out
    }

    fn collect_kinks<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Call(func, a) => {
                if matches!(func, Func::Abs | Func::Sign) {
                    out.push(a);
                }
                a.collect_kinks(out);
            }
            Expr::Neg(a) => a.collect_kinks(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.collect_kinks(out);
                b.collect_kinks(out);
            }
        }
    }

    fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }
}

fn small_integer(x: f64) -> Option<i32> {
    (x.fract() == 0.0 && x.abs() <= 64.0).then_some(x as i32)
}

// ---------------------------------------------------------------------------
// Construction with 0/1 folding

pub fn num(v: f64) -> Expr {
    Expr::Num(v)
}

pub fn var(index: usize) -> Expr {
    Expr::Var(index)
}

fn is_zero(e: &Expr) -> bool {
    e.as_num() == Some(0.0)
}

fn is_one(e: &Expr) -> bool {
    e.as_num() == Some(1.0)
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => match b {
            Expr::Neg(inner) => Expr::Sub(Box::new(a), inner),
            b => Expr::Add(Box::new(a), Box::new(b)),
        },
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return Expr::Num(0.0);
    }
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        (Some(x), None) => match b {
            // fold numeric coefficients: c1 * (c2 * e) = (c1 c2) * e
            Expr::Mul(l, r) if l.as_num().is_some() => mul(num(x * l.as_num().unwrap()), *r),
            b => Expr::Mul(Box::new(a), Box::new(b)),
        },
        (None, Some(_)) => mul(b, a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) && !is_zero(&b) {
        return Expr::Num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Num(x / y),
        (None, Some(y)) if y != 0.0 => match a {
            Expr::Mul(l, r) if l.as_num().is_some() => mul(num(l.as_num().unwrap() / y), *r),
            a => Expr::Div(Box::new(a), Box::new(b)),
        },
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return Expr::Num(1.0);
    }
    if is_one(&b) {
        return a;
    }
    if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
        let v = x.powf(y);
        if v.is_finite() {
            return Expr::Num(v);
        }
    }
    Expr::Pow(Box::new(a), Box::new(b))
}

pub fn call(func: Func, a: Expr) -> Expr {
    if let Some(x) = a.as_num() {
        if let Ok(v) = func.apply(x) {
            if v.is_finite() {
                return Expr::Num(v);
            }
        }
    }
    Expr::Call(func, Box::new(a))
}

// ---------------------------------------------------------------------------
// Differentiation

impl Expr {
    /// Symbolic partial derivative with respect to `x{var+1}`.
    pub fn differentiate(&self, var: usize) -> Expr {
        if !self.depends_on(var) {
            return Expr::Num(0.0);
        }
        match self {
            Expr::Num(_) => num(0.0),
            Expr::Var(i) => num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.differentiate(var)),
            Expr::Add(a, b) => add(a.differentiate(var), b.differentiate(var)),
            Expr::Sub(a, b) => sub(a.differentiate(var), b.differentiate(var)),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(var), (**b).clone()),
                mul((**a).clone(), b.differentiate(var)),
            ),
            Expr::Div(a, b) => {
                if !b.depends_on(var) {
                    return div(a.differentiate(var), (**b).clone());
                }
                // (a'b - ab') / b^2
                div(
                    sub(
                        mul(a.differentiate(var), (**b).clone()),
                        mul((**a).clone(), b.differentiate(var)),
                    ),
                    pow((**b).clone(), num(2.0)),
                )
            }
            Expr::Pow(a, b) => {
                let (a, b) = (&**a, &**b);
                if !b.depends_on(var) {
                    // b a^(b-1) a'
                    let lowered = match b.as_num() {
                        Some(e) => num(e - 1.0),
                        None => sub(b.clone(), num(1.0)),
                    };
                    mul(
                        mul(b.clone(), pow(a.clone(), lowered)),
                        a.differentiate(var),
                    )
                } else {
                    // a^b (b' log a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.differentiate(var), call(Func::Log, a.clone())),
                            div(mul(b.clone(), a.differentiate(var)), a.clone()),
                        ),
                    )
                }
            }
            Expr::Call(func, a) => {
                let inner = a.differentiate(var);
                let a = (**a).clone();
                let outer = match func {
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => div(num(1.0), a),
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Tan => div(num(1.0), pow(call(Func::Cos, a), num(2.0))),
                    Func::Sinh => call(Func::Cosh, a),
                    Func::Cosh => call(Func::Sinh, a),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, a)),
                    Func::Abs => call(Func::Sign, a),
                    Func::Sign => num(0.0),
                };
                mul(outer, inner)
            }
        }
    }

    /// Repeated differentiation along the listed coordinates.
    pub fn partial(&self, vars: &[usize]) -> Expr {
        vars.iter()
            .fold(self.clone(), |acc, &v| acc.differentiate(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn parses_with_precedence() {
        assert_eq!(
            p("x1^2/2"),
            Expr::Div(
                Box::new(Expr::Pow(Box::new(Expr::Var(0)), Box::new(Expr::Num(2.0)))),
                Box::new(Expr::Num(2.0))
            )
        );
        assert_eq!(p("log(x2)"), Expr::Call(Func::Log, Box::new(Expr::Var(1))));
        // unary minus below ^, ^ right-associative
        assert_eq!(p("-x1^2").eval(&[3.0]).unwrap(), -9.0);
        assert_eq!(p("2^3^2").eval(&[]).unwrap(), 512.0);
        assert_eq!(p("2^-1").eval(&[]).unwrap(), 0.5);
        assert_eq!(p("1 - 2 - 3").eval(&[]).unwrap(), -4.0);
        assert_eq!(p("8/2/2").eval(&[]).unwrap(), 2.0);
        assert_eq!(p(" 1.5e1 *\tx1 ").eval(&[2.0]).unwrap(), 30.0);
    }

    #[test]
    fn syntax_errors_report_offsets() {
        let err = parse("1+").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(err.expected.iter().any(|e| e == "number"));
        assert_eq!(parse("sin x1").unwrap_err().offset, 4);
        assert_eq!(parse("(x1 + 2").unwrap_err().offset, 7);
        assert_eq!(parse("x5").unwrap_err().offset, 0);
        assert_eq!(parse("x1 x2").unwrap_err().offset, 3);
        assert_eq!(parse("x1 # 2").unwrap_err().offset, 3);
    }

    #[test]
    fn evaluates_examples() {
        assert_eq!(p("x1^2/2").eval(&[2.0]).unwrap(), 2.0);
        assert_eq!(p("exp(-x2)").eval(&[0.3, 0.0]).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert!((p("log(x2)").eval(&[0.0, e]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            p("log(x1)").eval(&[0.0]),
            Err(EvalError::Domain { func: "log", .. })
        ));
        assert!(matches!(
            p("sqrt(x1)").eval(&[-1.0]),
            Err(EvalError::Domain { func: "sqrt", .. })
        ));
        assert_eq!(p("1/x1").eval(&[0.0]), Err(EvalError::DivisionByZero));
        assert!(matches!(
            p("x1^0.5").eval(&[-1.0]),
            Err(EvalError::Power { .. })
        ));
        assert!(matches!(
            p("x3").eval(&[1.0, 2.0]),
            Err(EvalError::MissingVariable { index: 2, dim: 2 })
        ));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(p("x1^2/2").differentiate(0).to_string(), "x1");
        assert_eq!(p("log(x2)").differentiate(1).to_string(), "1/x2");
        assert_eq!(p("sin(x1)").partial(&[0, 0]).to_string(), "-sin(x1)");
        assert_eq!(p("x2*x1").differentiate(2), Expr::Num(0.0));
        assert_eq!(p("abs(x1)").differentiate(0).to_string(), "sign(x1)");
    }

    #[test]
    fn print_round_trip() {
        for s in [
            "-x1^2",
            "(-x1)^2",
            "x1 - (x2 - x3)",
            "x1/(x2*x3)",
            "2^3^2",
            "(2^3)^2",
            "-(x1 + 1)*exp(-x2/2)",
            "sqrt(abs(x1 - 0.25))",
            "1e-3*x4",
            "pi*x1",
        ] {
            let e = p(s);
            assert_eq!(p(&e.to_string()), e, "{s} -> {e}");
        }
    }

    #[test]
    fn folding_keeps_trees_small() {
        let e = p("3*x1 + 0*x2");
        assert_eq!(e.differentiate(0), Expr::Num(3.0));
        assert_eq!(e.differentiate(1), Expr::Num(0.0));
    }
}
