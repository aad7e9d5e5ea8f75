//! Scalar expressions over the variables `x1..xn`.
//!
//! Problem files describe every vector-field component as a string in this
//! small language. The grammar, in EBNF:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" integer ] ;          (* right-associative *)
//! atom    = number | var | call | "(" expr ")" ;
//! call    = func "(" expr { "," expr } ")" ;
//! func    = "sin" | "cos" | "abs" | "sqrt" | "min" | "max" ;
//! var     = "x" digit { digit } ;            (* x1 .. x<dim> *)
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-2^2` is `-(2^2) = -4`. The
//! exponent must be a positive integer literal; powers are evaluated by
//! repeated multiplication.

use std::fmt;

use thiserror::Error;

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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Abs,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// Expression tree. Variables are stored 0-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Largest variable index used, 0-based.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Number(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(e) | Expr::Pow(e, _) => e.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
            Expr::Call(_, args) => args.iter().filter_map(Expr::max_var).max(),
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Number(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval(x)?;
                let b = b.eval(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::new("division by zero"));
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(base, k) => {
                let base = base.eval(x)?;
                let mut acc = base;
                for _ in 1..*k {
                    acc *= base;
                }
                acc
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(x)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::new("sqrt of a negative number"));
                        }
                        a.sqrt()
                    }
                    Func::Min => a.min(args[1].eval(x)?),
                    Func::Max => a.max(args[1].eval(x)?),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::new("non-finite intermediate value"))
        }
    }
}

/// Prints the fully parenthesized form; parsing the output yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) if *v < 0.0 => write!(f, "(-{:?})", -v),
            Expr::Number(v) => write!(f, "{v:?}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(e, k) => write!(f, "({e}^{k})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct EvalError {
    pub message: String,
}

impl EvalError {
    fn new(message: &str) -> Self {
        Self {
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnexpectedChar(char),
    InvalidNumber(String),
    UnknownIdentifier(String),
    VariableOutOfRange { index: usize, dim: usize },
    ArityMismatch {
        name: &'static str,
        expected: usize,
        found: usize,
    },
    NonIntegerExponent,
    UnexpectedToken(String),
    UnexpectedEnd,
    TrailingTokens,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::EmptyInput => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number {s:?}"),
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier {s:?}"),
            ParseErrorKind::VariableOutOfRange { index, dim } => {
                write!(f, "variable x{index} out of range for dimension {dim}")
            }
            ParseErrorKind::ArityMismatch {
                name,
                expected,
                found,
            } => write!(f, "{name} takes {expected} argument(s), got {found}"),
            ParseErrorKind::NonIntegerExponent => {
                write!(f, "exponent must be a positive integer literal")
            }
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token {t:?}"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::TrailingTokens => write!(f, "trailing input after expression"),
        }
    }
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
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

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("{v}"),
            Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
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
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| ParseError {
                    kind: ParseErrorKind::InvalidNumber(s.to_string()),
                    offset: start,
                })?;
                if !v.is_finite() {
                    return Err(ParseError {
                        kind: ParseErrorKind::InvalidNumber(s.to_string()),
                        offset: start,
                    });
                }
                toks.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(ch),
                    offset: i,
                });
            }
        };
        toks.push((tok, start));
        i += 1;
    }
    toks.push((Tok::End, text.len()));
    Ok(toks)
}

const BP_ADD: u8 = 10;
const BP_MUL: u8 = 20;
const BP_NEG: u8 = 25;
const BP_POW: u8 = 30;

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, kind: ParseErrorKind, offset: usize) -> Result<T, ParseError> {
        Err(ParseError { kind, offset })
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.peek() {
            Tok::End => self.err(ParseErrorKind::UnexpectedEnd, self.offset()),
            t => self.err(ParseErrorKind::UnexpectedToken(t.describe()), self.offset()),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected()
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let (op, lbp) = match self.peek() {
                Tok::Plus => (Some(BinOp::Add), BP_ADD),
                Tok::Minus => (Some(BinOp::Sub), BP_ADD),
                Tok::Star => (Some(BinOp::Mul), BP_MUL),
                Tok::Slash => (Some(BinOp::Div), BP_MUL),
                Tok::Caret => (None, BP_POW),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            match op {
                Some(op) => {
                    let rhs = self.expr(lbp + 1)?;
                    lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
                }
                None => {
                    let at = self.offset();
                    let rhs = self.expr(BP_POW)?;
                    let k = match rhs {
                        Expr::Number(v) if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => {
                            v as u32
                        }
                        _ => return self.err(ParseErrorKind::NonIntegerExponent, at),
                    };
                    lhs = Expr::Pow(Box::new(lhs), k);
                }
            }
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Number(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.expr(BP_NEG)?))),
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name, at),
            Tok::End => self.err(ParseErrorKind::UnexpectedEnd, at),
            t => self.err(ParseErrorKind::UnexpectedToken(t.describe()), at),
        }
    }

    fn identifier(&mut self, name: String, at: usize) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::LParen {
            let func = match Func::from_name(&name) {
                Some(f) => f,
                None => return self.err(ParseErrorKind::UnknownIdentifier(name), at),
            };
            self.bump();
            let mut args = vec![self.expr(0)?];
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.expr(0)?);
            }
            self.expect(Tok::RParen)?;
            if args.len() != func.arity() {
                return self.err(
                    ParseErrorKind::ArityMismatch {
                        name: func.name(),
                        expected: func.arity(),
                        found: args.len(),
                    },
                    at,
                );
            }
            return Ok(Expr::Call(func, args));
        }
        let index = name
            .strip_prefix('x')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse::<usize>().ok());
        match index {
            Some(i) if i >= 1 && i <= self.dim => Ok(Expr::Var(i - 1)),
            Some(i) => self.err(
                ParseErrorKind::VariableOutOfRange {
                    index: i,
                    dim: self.dim,
                },
                at,
            ),
            None => self.err(ParseErrorKind::UnknownIdentifier(name), at),
        }
    }
}

/// A parsed expression bound to a dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    ast: Expr,
    dim: usize,
}

impl Expression {
    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        let ast = parse(text, dim)?;
        Ok(Self { ast, dim })
    }

    /// Wraps an already-built tree. Panics if it references a variable beyond `dim`.
    pub fn from_ast(ast: Expr, dim: usize) -> Self {
        assert!(ast.max_var().is_none_or(|i| i < dim));
        Self { ast, dim }
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        eval_expr(self, x)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

pub fn parse(text: &str, dim: usize) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::EmptyInput,
            offset: 0,
        });
    }
    let mut parser = Parser {
        toks: tokenize(text)?,
        pos: 0,
        dim,
    };
    let ast = parser.expr(0)?;
    if *parser.peek() != Tok::End {
        return parser.err(ParseErrorKind::TrailingTokens, parser.offset());
    }
    Ok(ast)
}

pub fn eval_expr(expr: &Expression, x: &[f64]) -> Result<f64, EvalError> {
    if x.len() != expr.dim {
        return Err(EvalError {
            message: format!("expected {} variables, got {}", expr.dim, x.len()),
        });
    }
    expr.ast.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(text: &str, x: &[f64]) -> f64 {
        Expression::parse(text, x.len().max(1)).unwrap().eval(x).unwrap()
    }

    fn kind(text: &str, dim: usize) -> ParseErrorKind {
        parse(text, dim).unwrap_err().kind
    }

    #[test]
    fn example_one_first_component() {
        assert_eq!(ev("3*x1 + 1*x2 + 0.5*cos(x2)^3", &[0.0, 0.0]), 0.5);
    }

    #[test]
    fn remark_five_f_at_origin() {
        assert_eq!(ev("-x1 + (1/3)*sin(x1)", &[0.0]), 0.0);
    }

    #[test]
    fn remark_five_v_near_fixed_point() {
        let x = -0.3168;
        let v = ev("2*x1 + (1/3)*cos(x1)", &[x]);
        assert!((v - x).abs() <= 1e-3);
    }

    #[test]
    fn abs_sin_pi() {
        assert!(ev("abs(sin(x1))", &[std::f64::consts::PI]) <= 1e-15);
    }

    #[test]
    fn min_of_two() {
        assert_eq!(ev("min(x1, x2)", &[3.0, -1.0]), -1.0);
        assert_eq!(ev("max(x1, x2)", &[3.0, -1.0]), 3.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("2+3*4", &[0.0]), 14.0);
        assert_eq!(ev("2*3^2", &[0.0]), 18.0);
        assert_eq!(ev("-2^2", &[0.0]), -4.0);
        assert_eq!(ev("2*-3", &[0.0]), -6.0);
        assert_eq!(ev("10-4-3", &[0.0]), 3.0);
        assert_eq!(ev("64/4/2", &[0.0]), 8.0);
        assert_eq!(ev("(-2)^2", &[0.0]), 4.0);
    }

    #[test]
    fn caret_is_right_associative_and_literal_only() {
        assert_eq!(kind("x1^2^3", 1), ParseErrorKind::NonIntegerExponent);
        assert_eq!(kind("x1^0.5", 1), ParseErrorKind::NonIntegerExponent);
        assert_eq!(kind("x1^-1", 1), ParseErrorKind::NonIntegerExponent);
        assert_eq!(kind("x1^x1", 1), ParseErrorKind::NonIntegerExponent);
        assert_eq!(kind("x1^0", 1), ParseErrorKind::NonIntegerExponent);
    }

    #[test]
    fn error_offsets() {
        let e = parse("x3 + y", 2).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::VariableOutOfRange { index: 3, dim: 2 });
        assert_eq!(e.offset, 0);
        let e = parse("x1 + y", 2).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("y".into()));
        assert_eq!(e.offset, 5);
        let e = parse("x1 x2", 2).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::TrailingTokens);
        assert_eq!(e.offset, 3);
    }

    #[test]
    fn distinct_errors() {
        assert_eq!(kind("", 1), ParseErrorKind::EmptyInput);
        assert_eq!(kind("tan(x1)", 1), ParseErrorKind::UnknownIdentifier("tan".into()));
        assert_eq!(
            kind("sin(x1, x1)", 1),
            ParseErrorKind::ArityMismatch {
                name: "sin",
                expected: 1,
                found: 2
            }
        );
        assert_eq!(
            kind("min(x1)", 1),
            ParseErrorKind::ArityMismatch {
                name: "min",
                expected: 2,
                found: 1
            }
        );
        assert_eq!(kind("x0", 1), ParseErrorKind::VariableOutOfRange { index: 0, dim: 1 });
        assert_eq!(kind("(x1", 1), ParseErrorKind::UnexpectedEnd);
        assert_eq!(kind("x1 + #", 1), ParseErrorKind::UnexpectedChar('#'));
        assert_eq!(kind("1.2.3", 1), ParseErrorKind::InvalidNumber("1.2.3".into()));
        assert_eq!(kind("* x1", 1), ParseErrorKind::UnexpectedToken("*".into()));
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(ev("1e-3 * x1", &[1000.0]), 1.0);
        assert_eq!(ev("2.5E+1", &[0.0]), 25.0);
    }

    #[test]
    fn evaluation_errors() {
        let e = Expression::parse("1/x1", 1).unwrap();
        assert!(e.eval(&[0.0]).is_err());
        let e = Expression::parse("sqrt(x1)", 1).unwrap();
        assert!(e.eval(&[-1.0]).is_err());
        let e = Expression::parse("x1*x1*x1", 1).unwrap();
        assert!(e.eval(&[1e200]).is_err());
        assert!(e.eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn powers_use_repeated_multiplication() {
        let x = 0.7_f64;
        let c = x.cos();
        assert_eq!(ev("cos(x1)^3", &[x]), c * c * c);
    }

    fn arb_expr(dim: usize) -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0..100.0f64).prop_map(Expr::Number),
            (0..dim).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), inner.clone(), 0..4usize).prop_map(|(a, b, op)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][op];
                    Expr::Binary(op, Box::new(a), Box::new(b))
                }),
                (inner.clone(), 1..5u32).prop_map(|(e, k)| Expr::Pow(Box::new(e), k)),
                (inner.clone(), 0..4usize).prop_map(|(e, f)| {
                    let f = [Func::Sin, Func::Cos, Func::Abs, Func::Sqrt][f];
                    Expr::Call(f, vec![e])
                }),
                (inner.clone(), inner, any::<bool>()).prop_map(|(a, b, m)| {
                    Expr::Call(if m { Func::Min } else { Func::Max }, vec![a, b])
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(ast in arb_expr(3)) {
            let text = ast.to_string();
            let reparsed = parse(&text, 3).unwrap();
            prop_assert_eq!(reparsed, ast);
        }

        #[test]
        fn evaluation_is_repeatable(ast in arb_expr(2), a in -5.0..5.0f64, b in -5.0..5.0f64) {
            let e = Expression::from_ast(ast, 2);
            let first = e.eval(&[a, b]);
            let second = e.eval(&[a, b]);
            match (first, second) {
                (Ok(u), Ok(v)) => prop_assert_eq!(u.to_bits(), v.to_bits()),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "evaluation outcome changed"),
            }
        }
    }
}
