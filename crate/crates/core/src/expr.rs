//! Arithmetic expression parser and evaluator for problem data.
//!
//! Grammar: decimal/scientific number literals, declared variables, the
//! constants `pi` and `e` (folded to literals at parse time), the unary
//! functions `sin cos tan exp log sqrt abs sinh cosh`, parentheses, and the
//! operators `+ - * / ^`. `^` is right-associative and binds tighter than
//! unary minus, so `-2^2` is `-(2^2)` and `2^3^2` is `2^(3^2)`.
//!
//! Evaluation never hands back a NaN or infinity: any operation leaving the
//! finite domain (division by zero, `log` of a non-positive value, `0^-1`,
//! `sqrt` of a negative) is reported as an [`EvalError`].

use std::fmt;

/// Where and why parsing failed. Offsets are byte positions in the source.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    InvalidNumber(String),
    UnexpectedEnd,
    UnexpectedToken(String),
    UnknownIdentifier(String),
    UnknownFunction(String),
    MissingArgument(String),
    Arity { function: String, given: usize },
    TrailingInput(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: ", self.offset)?;
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "malformed number `{s}`"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::UnexpectedToken(s) => write!(f, "unexpected token `{s}`"),
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier `{s}`"),
            ParseErrorKind::UnknownFunction(s) => write!(f, "unknown function `{s}`"),
            ParseErrorKind::MissingArgument(s) => {
                write!(f, "function `{s}` needs a parenthesized argument")
            }
            ParseErrorKind::Arity { function, given } => {
                write!(f, "function `{function}` takes 1 argument, got {given}")
            }
            ParseErrorKind::TrailingInput(s) => write!(f, "trailing input starting at `{s}`"),
        }
    }
}

impl std::error::Error for ParseError {}

/// Evaluation failure: a domain violation or an unbound variable.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// The named operation produced a non-finite value.
    NonFinite { what: String },
    /// A variable had no binding.
    Unbound { name: String },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NonFinite { what } => {
                write!(f, "evaluation left the numeric domain in {what}")
            }
            EvalError::Unbound { name } => write!(f, "variable `{name}` is unbound"),
        }
    }
}

impl std::error::Error for EvalError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression over a fixed, ordered list of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    vars: Vec<String>,
    root: Node,
}

impl Expression {
    /// Declared variable names, in the order `evaluate` expects values.
    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    /// Evaluates with `values[i]` bound to `variables()[i]`.
    pub fn evaluate(&self, values: &[f64]) -> Result<f64, EvalError> {
        eval_node(&self.root, &self.vars, values)
    }

    /// Evaluates with variables bound by name.
    pub fn evaluate_named(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        let mut values = Vec::with_capacity(self.vars.len());
        for name in &self.vars {
            match bindings.iter().find(|(n, _)| n == name) {
                Some((_, v)) => values.push(*v),
                None => return Err(EvalError::Unbound { name: name.clone() }),
            }
        }
        eval_node(&self.root, &self.vars, &values)
    }

    #[cfg(test)]
    pub(crate) fn from_parts(vars: Vec<String>, root: Node) -> Expression {
        Expression { vars, root }
    }
}

fn eval_node(node: &Node, vars: &[String], values: &[f64]) -> Result<f64, EvalError> {
    let check = |v: f64, what: &dyn Fn() -> String| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { what: what() })
        }
    };
    match node {
        Node::Num(v) => Ok(*v),
        Node::Var(i) => values.get(*i).copied().ok_or_else(|| EvalError::Unbound {
            name: vars.get(*i).cloned().unwrap_or_default(),
        }),
        Node::Neg(inner) => Ok(-eval_node(inner, vars, values)?),
        Node::Bin(op, lhs, rhs) => {
            let a = eval_node(lhs, vars, values)?;
            let b = eval_node(rhs, vars, values)?;
            let v = match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            };
            check(v, &|| format!("`{} {} {}`", a, op.symbol(), b))
        }
        Node::Call(func, arg) => {
            let x = eval_node(arg, vars, values)?;
            check(func.apply(x), &|| format!("`{}({})`", func.name(), x))
        }
    }
}

const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 5;

fn node_precedence(node: &Node) -> u8 {
    match node {
        Node::Num(v) if *v < 0.0 => PREC_UNARY,
        Node::Num(_) | Node::Var(_) | Node::Call(..) => PREC_ATOM,
        Node::Neg(_) => PREC_UNARY,
        Node::Bin(op, ..) => op.precedence(),
    }
}

fn fmt_node(node: &Node, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let paren = |child: &Node, needed: bool, f: &mut fmt::Formatter<'_>| {
        if needed {
            write!(f, "(")?;
            fmt_node(child, vars, f)?;
            write!(f, ")")
        } else {
            fmt_node(child, vars, f)
        }
    };
    match node {
        Node::Num(v) => write!(f, "{v}"),
        Node::Var(i) => write!(f, "{}", vars[*i]),
        Node::Neg(inner) => {
            write!(f, "-")?;
            paren(inner, node_precedence(inner) < PREC_UNARY, f)
        }
        Node::Bin(op, lhs, rhs) => {
            let p = op.precedence();
            if *op == BinOp::Pow {
                // Right-associative: parenthesize any structured base.
                paren(lhs, node_precedence(lhs) <= p, f)?;
                write!(f, " ^ ")?;
                paren(rhs, node_precedence(rhs) < PREC_UNARY, f)
            } else {
                paren(lhs, node_precedence(lhs) < p, f)?;
                write!(f, " {} ", op.symbol())?;
                paren(rhs, node_precedence(rhs) <= p, f)
            }
        }
        Node::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            fmt_node(arg, vars, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, &self.vars, f)
    }
}

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
    Comma,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(v) => format!("{v}"),
            Token::Ident(s) => s.clone(),
            Token::Plus => "+".into(),
            Token::Minus => "-".into(),
            Token::Star => "*".into(),
            Token::Slash => "/".into(),
            Token::Caret => "^".into(),
            Token::LParen => "(".into(),
            Token::RParen => ")".into(),
            Token::Comma => ",".into(),
        }
    }
}

fn tokenize(source: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let b = bytes[pos];
        let start = pos;
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => pos += 1,
            b'+' => {
                tokens.push((start, Token::Plus));
                pos += 1;
            }
            b'-' => {
                tokens.push((start, Token::Minus));
                pos += 1;
            }
            b'*' => {
                tokens.push((start, Token::Star));
                pos += 1;
            }
            b'/' => {
                tokens.push((start, Token::Slash));
                pos += 1;
            }
            b'^' => {
                tokens.push((start, Token::Caret));
                pos += 1;
            }
            b'(' => {
                tokens.push((start, Token::LParen));
                pos += 1;
            }
            b')' => {
                tokens.push((start, Token::RParen));
                pos += 1;
            }
            b',' => {
                tokens.push((start, Token::Comma));
                pos += 1;
            }
            b'0'..=b'9' | b'.' => {
                while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                    pos += 1;
                }
                if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                    let mut ahead = pos + 1;
                    if ahead < bytes.len() && (bytes[ahead] == b'+' || bytes[ahead] == b'-') {
                        ahead += 1;
                    }
                    if ahead < bytes.len() && bytes[ahead].is_ascii_digit() {
                        pos = ahead;
                        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                            pos += 1;
                        }
                    }
                }
                let text = &source[start..pos];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::InvalidNumber(text.to_string()),
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::InvalidNumber(text.to_string()),
                    });
                }
                tokens.push((start, Token::Num(value)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while pos < bytes.len()
                    && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_')
                {
                    pos += 1;
                }
                tokens.push((start, Token::Ident(source[start..pos].to_string())));
            }
            _ => {
                let c = source[pos..].chars().next().unwrap();
                return Err(ParseError {
                    offset: pos,
                    kind: ParseErrorKind::UnexpectedChar(c),
                });
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    cursor: usize,
    vars: &'a [&'a str],
    end_offset: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(usize, Token)> {
        self.tokens.get(self.cursor)
    }

    fn next(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.cursor).cloned();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn unexpected_end(&self) -> ParseError {
        ParseError {
            offset: self.end_offset,
            kind: ParseErrorKind::UnexpectedEnd,
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some((_, tok)) = self.peek() {
            let op = match tok {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => break,
            };
            self.next();
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((_, tok)) = self.peek() {
            let op = match tok {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => break,
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if let Some((_, Token::Minus)) = self.peek() {
            self.next();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if let Some((_, Token::Caret)) = self.peek() {
            self.next();
            // The exponent admits unary minus: 2^-3.
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let (offset, tok) = self.next().ok_or_else(|| self.unexpected_end())?;
        match tok {
            Token::Num(v) => Ok(Node::Num(v)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Ident(name) => self.ident(offset, name),
            other => Err(ParseError {
                offset,
                kind: ParseErrorKind::UnexpectedToken(other.describe()),
            }),
        }
    }

    fn ident(&mut self, offset: usize, name: String) -> Result<Node, ParseError> {
        let called = matches!(self.peek(), Some((_, Token::LParen)));
        if called {
            self.next();
            let func = Func::from_name(&name).ok_or(ParseError {
                offset,
                kind: ParseErrorKind::UnknownFunction(name.clone()),
            })?;
            let mut args = vec![self.expr()?];
            while let Some((_, Token::Comma)) = self.peek() {
                self.next();
                args.push(self.expr()?);
            }
            self.expect_rparen()?;
            if args.len() != 1 {
                return Err(ParseError {
                    offset,
                    kind: ParseErrorKind::Arity {
                        function: name,
                        given: args.len(),
                    },
                });
            }
            return Ok(Node::Call(func, Box::new(args.pop().unwrap())));
        }
        match name.as_str() {
            "pi" => Ok(Node::Num(std::f64::consts::PI)),
            "e" => Ok(Node::Num(std::f64::consts::E)),
            _ => {
                if let Some(index) = self.vars.iter().position(|v| *v == name) {
                    Ok(Node::Var(index))
                } else if Func::from_name(&name).is_some() {
                    Err(ParseError {
                        offset,
                        kind: ParseErrorKind::MissingArgument(name),
                    })
                } else {
                    Err(ParseError {
                        offset,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    })
                }
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.next() {
            Some((_, Token::RParen)) => Ok(()),
            Some((offset, other)) => Err(ParseError {
                offset,
                kind: ParseErrorKind::UnexpectedToken(other.describe()),
            }),
            None => Err(self.unexpected_end()),
        }
    }
}

/// Parses `source` over the given variable names.
pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expression, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        cursor: 0,
        vars: allowed_vars,
        end_offset: source.len(),
    };
    let root = parser.expr()?;
    if let Some((offset, tok)) = parser.peek() {
        return Err(ParseError {
            offset: *offset,
            kind: ParseErrorKind::TrailingInput(tok.describe()),
        });
    }
    Ok(Expression {
        vars: allowed_vars.iter().map(|s| s.to_string()).collect(),
        root,
    })
}
