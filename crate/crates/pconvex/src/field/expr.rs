//! Small expression grammar for user-supplied fields, with forward-mode
//! symbolic differentiation of the parse tree.
//!
//! Grammar: `+ - * /`, numeric-literal powers `u^k`, unary minus, the
//! functions `sin cos exp sqrt`, parentheses, numeric literals, variables
//! `x1..xn` (aliases `x y z w` for the first four coordinates), and the
//! builtin `normsq` which expands to `x1^2 + ... + xn^2`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{DerivativeMode, ScalarField};
use crate::linalg::SymMatrix;

#[derive(Debug, Clone)]
enum Expr {
    Const(f64),
    Var(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Pow(Arc<Expr>, f64),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Exp(Arc<Expr>),
    Sqrt(Arc<Expr>),
}

impl Expr {
    fn is_const(&self, v: f64) -> bool {
        matches!(self, Expr::Const(c) if *c == v)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Neg(a) => -a.eval(x),
            Expr::Pow(a, k) => a.eval(x).powf(*k),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Sqrt(a) => a.eval(x).sqrt(),
        }
    }

    /// Partial derivative with respect to variable `var`, with light
    /// constant folding to keep the trees small.
    fn diff(&self, var: usize) -> Arc<Expr> {
        match self {
            Expr::Const(_) => cst(0.0),
            Expr::Var(i) => cst(if *i == var { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(
                mul(a.diff(var), b.clone()),
                mul(a.clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.diff(var), b.clone()),
                    mul(a.clone(), b.diff(var)),
                ),
                pow(b.clone(), 2.0),
            ),
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Pow(a, k) => mul(
                mul(cst(*k), pow(a.clone(), k - 1.0)),
                a.diff(var),
            ),
            Expr::Sin(a) => mul(Arc::new(Expr::Cos(a.clone())), a.diff(var)),
            Expr::Cos(a) => neg(mul(Arc::new(Expr::Sin(a.clone())), a.diff(var))),
            Expr::Exp(a) => mul(Arc::new(Expr::Exp(a.clone())), a.diff(var)),
            Expr::Sqrt(a) => div(
                a.diff(var),
                mul(cst(2.0), Arc::new(Expr::Sqrt(a.clone()))),
            ),
        }
    }
}

fn cst(v: f64) -> Arc<Expr> {
    Arc::new(Expr::Const(v))
}

fn add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Expr::Const(x), Expr::Const(y)) => cst(x + y),
        _ if a.is_const(0.0) => b,
        _ if b.is_const(0.0) => a,
        _ => Arc::new(Expr::Add(a, b)),
    }
}

fn sub(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Expr::Const(x), Expr::Const(y)) => cst(x - y),
        _ if b.is_const(0.0) => a,
        _ if a.is_const(0.0) => neg(b),
        _ => Arc::new(Expr::Sub(a, b)),
    }
}

fn mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Expr::Const(x), Expr::Const(y)) => cst(x * y),
        _ if a.is_const(0.0) || b.is_const(0.0) => cst(0.0),
        _ if a.is_const(1.0) => b,
        _ if b.is_const(1.0) => a,
        _ => Arc::new(Expr::Mul(a, b)),
    }
}

fn div(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => cst(x / y),
        _ if a.is_const(0.0) => cst(0.0),
        _ if b.is_const(1.0) => a,
        _ => Arc::new(Expr::Div(a, b)),
    }
}

fn neg(a: Arc<Expr>) -> Arc<Expr> {
    match &*a {
        Expr::Const(x) => cst(-x),
        Expr::Neg(inner) => inner.clone(),
        _ => Arc::new(Expr::Neg(a)),
    }
}

fn pow(a: Arc<Expr>, k: f64) -> Arc<Expr> {
    if k == 0.0 {
        cst(1.0)
    } else if k == 1.0 {
        a
    } else if let Expr::Const(x) = &*a {
        cst(x.powf(k))
    } else {
        Arc::new(Expr::Pow(a, k))
    }
}

// ---------------------------------------------------------------------------
// Tokenizer and recursive-descent parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "{v}"),
            Token::Ident(s) => write!(f, "{s}"),
            Token::Plus => write!(f, "+"),
            Token::Minus => write!(f, "-"),
            Token::Star => write!(f, "*"),
            Token::Slash => write!(f, "/"),
            Token::Caret => write!(f, "^"),
            Token::LParen => write!(f, "("),
            Token::RParen => write!(f, ")"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == b'.'
                        || bytes[i] == b'e'
                        || bytes[i] == b'E'
                        || ((bytes[i] == b'+' || bytes[i] == b'-')
                            && i > start
                            && (bytes[i - 1] == b'e' || bytes[i - 1] == b'E')))
                {
                    i += 1;
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| Error::ParseError {
                    reason: format!("bad number literal `{text}`"),
                })?;
                out.push(Token::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Token::Ident(src[start..i].to_string()));
            }
            other => {
                return Err(Error::ParseError {
                    reason: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(Error::ParseError {
                reason: format!("expected `{want}`, found `{t}`"),
            }),
            None => Err(Error::ParseError {
                reason: format!("expected `{want}`, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Arc<Expr>> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    acc = add(acc, self.term()?);
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    acc = sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Expr>> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    acc = mul(acc, self.unary()?);
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    acc = div(acc, self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Expr>> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.pos += 1;
            return Ok(neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Expr>> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.pos += 1;
            let negate = if matches!(self.peek(), Some(Token::Minus)) {
                self.pos += 1;
                true
            } else {
                false
            };
            match self.next() {
                Some(Token::Num(k)) => {
                    let k = if negate { -k } else { k };
                    return Ok(pow(base, k));
                }
                Some(Token::LParen) => {
                    // Parenthesized constant exponent, e.g. x^(-2).
                    let e = self.expr()?;
                    self.expect(Token::RParen)?;
                    if let Expr::Const(k) = &*e {
                        let k = if negate { -k } else { *k };
                        return Ok(pow(base, k));
                    }
                    return Err(Error::ParseError {
                        reason: "exponents must be numeric literals".into(),
                    });
                }
                other => {
                    return Err(Error::ParseError {
                        reason: format!(
                            "exponents must be numeric literals, found `{}`",
                            other.map(|t| t.to_string()).unwrap_or_else(|| "end".into())
                        ),
                    })
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Arc<Expr>> {
        match self.next() {
            Some(Token::Num(v)) => Ok(cst(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(Token::Ident(name)) => self.ident(&name),
            Some(t) => Err(Error::ParseError {
                reason: format!("unexpected token `{t}`"),
            }),
            None => Err(Error::ParseError {
                reason: "unexpected end of input".into(),
            }),
        }
    }

    fn ident(&mut self, name: &str) -> Result<Arc<Expr>> {
        match name {
            "sin" | "cos" | "exp" | "sqrt" => {
                self.expect(Token::LParen)?;
                let arg = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(match name {
                    "sin" => Arc::new(Expr::Sin(arg)),
                    "cos" => Arc::new(Expr::Cos(arg)),
                    "exp" => Arc::new(Expr::Exp(arg)),
                    _ => Arc::new(Expr::Sqrt(arg)),
                })
            }
            "normsq" => {
                let mut acc = cst(0.0);
                for i in 0..self.dim {
                    acc = add(acc, pow(Arc::new(Expr::Var(i)), 2.0));
                }
                Ok(acc)
            }
            "pi" => Ok(cst(std::f64::consts::PI)),
            _ => {
                let idx = self.variable_index(name)?;
                Ok(Arc::new(Expr::Var(idx)))
            }
        }
    }

    fn variable_index(&self, name: &str) -> Result<usize> {
        let idx = match name {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            "w" => Some(3),
            _ => name
                .strip_prefix('x')
                .and_then(|d| d.parse::<usize>().ok())
                .and_then(|k| k.checked_sub(1)),
        };
        match idx {
            Some(i) if i < self.dim => Ok(i),
            Some(i) => Err(Error::ParseError {
                reason: format!("variable `{name}` (index {}) exceeds dim {}", i + 1, self.dim),
            }),
            None => Err(Error::ParseError {
                reason: format!("unknown identifier `{name}`"),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// ExprField
// ---------------------------------------------------------------------------

/// Analytic field backed by a parsed expression; gradient and Hessian come
/// from symbolic differentiation of the tree, done once at construction.
pub struct ExprField {
    dim: usize,
    source: String,
    value: Arc<Expr>,
    gradient: Vec<Arc<Expr>>,
    /// Upper triangle (i ≤ j), row by row.
    hessian: Vec<Arc<Expr>>,
}

impl ExprField {
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ParseError {
                reason: "dimension must be positive".into(),
            });
        }
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            dim,
        };
        let value = parser.expr()?;
        if parser.pos != tokens.len() {
            return Err(Error::ParseError {
                reason: format!("trailing input at token {}", parser.pos),
            });
        }
        let gradient: Vec<Arc<Expr>> = (0..dim).map(|i| value.diff(i)).collect();
        let mut hessian = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                hessian.push(gradient[i].diff(j));
            }
        }
        Ok(ExprField {
            dim,
            source: src.to_string(),
            value,
            gradient,
            hessian,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl ScalarField for ExprField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let v = self.value.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvaluationError { point: x.to_vec() })
        }
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g: Vec<f64> = self.gradient.iter().map(|e| e.eval(x)).collect();
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::EvaluationError { point: x.to_vec() })
        }
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let n = self.dim;
        let mut entries = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let v = self.hessian[k].eval(x);
                if !v.is_finite() {
                    return Err(Error::EvaluationError { point: x.to_vec() });
                }
                entries[i * n + j] = v;
                entries[j * n + i] = v;
                k += 1;
            }
        }
        SymMatrix::new(n, entries)
    }

    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}
