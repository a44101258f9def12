//! Integrand expression language.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | factor
//! factor   := atom ('^' exponent)?
//! exponent := ('-' | '+')? number | '(' constant-expr ')'
//! atom     := number | 'x' | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Functions: `exp ln sin cos sqrt abs`. Exponents must be constant, so
//! `x^x` is rejected; write `exp(x*ln(x))` instead. `-x^2` is `-(x^2)`.

use std::fmt;

use thiserror::Error;

use super::jet::Jet2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl UnaryOp {
    fn from_ident(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Right operand must be a [`ExprNode::Constant`].
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprNode {
    Constant(f64),
    Variable,
    Unary(UnaryOp, Box<ExprNode>),
    Binary(BinaryOp, Box<ExprNode>, Box<ExprNode>),
}

impl ExprNode {
    pub fn unary(op: UnaryOp, child: ExprNode) -> Self {
        ExprNode::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, left: ExprNode, right: ExprNode) -> Self {
        ExprNode::Binary(op, Box::new(left), Box::new(right))
    }

    pub fn pow(base: ExprNode, exponent: f64) -> Self {
        Self::binary(BinaryOp::Pow, base, ExprNode::Constant(exponent))
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            ExprNode::Constant(_) => false,
            ExprNode::Variable => true,
            ExprNode::Unary(_, c) => c.depends_on_x(),
            ExprNode::Binary(_, l, r) => l.depends_on_x() || r.depends_on_x(),
        }
    }

    /// Fully parenthesized text that parses back to the same tree.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Constant(c) if *c < 0.0 => write!(f, "(-{})", -c),
            ExprNode::Constant(c) => write!(f, "{c}"),
            ExprNode::Variable => f.write_str("x"),
            ExprNode::Unary(UnaryOp::Neg, c) => write!(f, "(-{c})"),
            ExprNode::Unary(op, c) => write!(f, "{}({c})", op.name()),
            ExprNode::Binary(BinaryOp::Pow, l, r) => match r.as_ref() {
                ExprNode::Constant(c) => write!(f, "({l}^{c})"),
                other => write!(f, "({l}^({other}))"),
            },
            ExprNode::Binary(op, l, r) => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => unreachable!(),
                };
                write!(f, "({l} {sym} {r})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("malformed number {0:?}")]
    BadNumber(String),
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("exponent must be a constant")]
    NonConstantExponent,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq)]
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
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(n) => write!(f, "number {n}"),
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::Caret => f.write_str("'^'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
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
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
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
            let value: f64 = lit.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::BadNumber(lit.to_string()),
                offset: start,
            })?;
            out.push((Tok::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err(ParseError {
            kind: ParseErrorKind::UnexpectedChar(ch),
            offset: start,
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            offset: self.offset(),
        }
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(t) => self.err(ParseErrorKind::UnexpectedToken(t.to_string())),
            None => self.err(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinaryOp::Add,
                Some(Tok::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinaryOp::Mul,
                Some(Tok::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<ExprNode, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(ExprNode::unary(UnaryOp::Neg, self.unary()?));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<ExprNode, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let exponent = self.exponent()?;
        Ok(ExprNode::pow(base, exponent))
    }

    fn exponent(&mut self) -> Result<f64, ParseError> {
        let at = self.offset();
        match self.next() {
            Some(Tok::Num(n)) => Ok(n),
            Some(sign @ (Tok::Minus | Tok::Plus)) => match self.next() {
                Some(Tok::Num(n)) => Ok(if sign == Tok::Minus { -n } else { n }),
                Some(Tok::Ident(_)) | Some(Tok::LParen) => Err(ParseError {
                    kind: ParseErrorKind::NonConstantExponent,
                    offset: at,
                }),
                _ => {
                    self.pos -= 1;
                    Err(self.unexpected())
                }
            },
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                if inner.depends_on_x() {
                    return Err(ParseError {
                        kind: ParseErrorKind::NonConstantExponent,
                        offset: at,
                    });
                }
                let value = eval(&inner, 0.0)
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or(ParseError {
                        kind: ParseErrorKind::NonConstantExponent,
                        offset: at,
                    })?;
                Ok(value)
            }
            Some(Tok::Ident(_)) => Err(ParseError {
                kind: ParseErrorKind::NonConstantExponent,
                offset: at,
            }),
            Some(_) => {
                self.pos -= 1;
                Err(self.unexpected())
            }
            None => Err(self.unexpected()),
        }
    }

    fn atom(&mut self) -> Result<ExprNode, ParseError> {
        let at = self.offset();
        match self.next() {
            Some(Tok::Num(n)) => Ok(ExprNode::Constant(n)),
            Some(Tok::Ident(name)) if name == "x" => Ok(ExprNode::Variable),
            Some(Tok::Ident(name)) => {
                let op = UnaryOp::from_ident(&name).ok_or(ParseError {
                    kind: ParseErrorKind::UnknownIdentifier(name),
                    offset: at,
                })?;
                self.expect(Tok::LParen)?;
                let arg = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(ExprNode::unary(op, arg))
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(_) => {
                self.pos -= 1;
                Err(self.unexpected())
            }
            None => Err(self.unexpected()),
        }
    }
}

pub fn parse(text: &str) -> Result<ExprNode, ParseError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Empty,
            offset: 0,
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let tree = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.unexpected());
    }
    Ok(tree)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalErrorKind {
    LnOfNonpositive,
    SqrtOfNonpositive,
    DivisionByZero,
    PowerDomain,
    AbsAtZero,
    NonConstantExponent,
    NonFinite,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalErrorKind::LnOfNonpositive => "ln of a nonpositive value",
            EvalErrorKind::SqrtOfNonpositive => "sqrt of a nonpositive value",
            EvalErrorKind::DivisionByZero => "division by zero",
            EvalErrorKind::PowerDomain => "power outside its domain",
            EvalErrorKind::AbsAtZero => "abs is not differentiable at zero",
            EvalErrorKind::NonConstantExponent => "exponent must be a constant",
            EvalErrorKind::NonFinite => "non-finite result",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
#[error("{kind} at x = {x}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub x: f64,
}

fn jet(node: &ExprNode, x: f64) -> Result<Jet2, EvalErrorKind> {
    let out = match node {
        ExprNode::Constant(c) => Jet2::constant(*c),
        ExprNode::Variable => Jet2::variable(x),
        ExprNode::Unary(op, child) => {
            let u = jet(child, x)?;
            match op {
                UnaryOp::Neg => -u,
                UnaryOp::Exp => u.exp(),
                UnaryOp::Ln if u.v > 0.0 => u.ln(),
                UnaryOp::Ln => return Err(EvalErrorKind::LnOfNonpositive),
                UnaryOp::Sin => u.sin(),
                UnaryOp::Cos => u.cos(),
                UnaryOp::Sqrt if u.v > 0.0 => u.sqrt(),
                UnaryOp::Sqrt => return Err(EvalErrorKind::SqrtOfNonpositive),
                UnaryOp::Abs if u.v != 0.0 => u.abs(),
                UnaryOp::Abs => return Err(EvalErrorKind::AbsAtZero),
            }
        }
        ExprNode::Binary(op, l, r) => {
            if *op == BinaryOp::Pow {
                let c = match r.as_ref() {
                    ExprNode::Constant(c) => *c,
                    _ => return Err(EvalErrorKind::NonConstantExponent),
                };
                let u = jet(l, x)?;
                let integral = c.fract() == 0.0;
                let ok = if integral {
                    c >= 0.0 || u.v != 0.0
                } else {
                    u.v > 0.0 || (u.v == 0.0 && c > 2.0)
                };
                if !ok {
                    return Err(EvalErrorKind::PowerDomain);
                }
                u.powf(c)
            } else {
                let (u, w) = (jet(l, x)?, jet(r, x)?);
                match op {
                    BinaryOp::Add => u + w,
                    BinaryOp::Sub => u - w,
                    BinaryOp::Mul => u * w,
                    BinaryOp::Div if w.v != 0.0 => u / w,
                    BinaryOp::Div => return Err(EvalErrorKind::DivisionByZero),
                    BinaryOp::Pow => unreachable!(),
                }
            }
        }
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(EvalErrorKind::NonFinite)
    }
}

/// Value and first two derivatives of `expr` at `x`.
pub fn eval_jet2(expr: &ExprNode, x: f64) -> Result<Jet2, EvalError> {
    jet(expr, x).map_err(|kind| EvalError { kind, x })
}

/// Value only. Shares the jet path so domain rules are identical.
pub fn eval(expr: &ExprNode, x: f64) -> Result<f64, EvalError> {
    eval_jet2(expr, x).map(|j| j.v)
}
