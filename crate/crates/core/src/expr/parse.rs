use std::fmt;

use super::ast::{BinOp, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken { found: String, expected: &'static str },
    UnexpectedEnd { expected: &'static str },
    InvalidNumber(String),
    UnknownIdentifier(String),
    NonSmooth(String),
    Arity { name: String, expected: usize, found: usize },
}

/// Parse failure with the byte offset into the source where it was detected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => {
                write!(f, "syntax error at offset {}: unexpected character {c:?}", self.offset)
            }
            ParseErrorKind::UnexpectedToken { found, expected } => write!(
                f,
                "syntax error at offset {}: expected {expected}, found `{found}`",
                self.offset
            ),
            ParseErrorKind::UnexpectedEnd { expected } => write!(
                f,
                "syntax error at offset {}: expected {expected}, found end of input",
                self.offset
            ),
            ParseErrorKind::InvalidNumber(s) => {
                write!(f, "syntax error at offset {}: invalid number `{s}`", self.offset)
            }
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier \"{name}\" at offset {}", self.offset)
            }
            ParseErrorKind::NonSmooth(name) => write!(
                f,
                "non-smooth function \"{name}\" at offset {} is not supported; ingredients must be C²",
                self.offset
            ),
            ParseErrorKind::Arity { name, expected, found } => write!(
                f,
                "wrong arity at offset {}: `{name}` takes {expected} argument(s), got {found}",
                self.offset
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => n.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Sym(c) => c.to_string(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
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
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError {
                offset: start,
                kind: ParseErrorKind::InvalidNumber(text.into()),
            })?;
            out.push((start, Tok::Num(value)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].into())));
        } else if b"+-*/^(),".contains(&c) {
            out.push((i, Tok::Sym(c as char)));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError { offset: i, kind: ParseErrorKind::UnexpectedChar(ch) });
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, sym: char) -> bool {
        if *self.peek() == Tok::Sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        let kind = match self.peek() {
            Tok::End => ParseErrorKind::UnexpectedEnd { expected },
            tok => ParseErrorKind::UnexpectedToken { found: tok.describe(), expected },
        };
        ParseError { offset: self.offset(), kind }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::bin(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            Ok(Expr::bin(BinOp::Pow, base, self.unary()?))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Num(n))
            }
            Tok::Sym('(') => {
                self.bump();
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.unexpected("')'"));
                }
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                self.identifier(name, offset)
            }
            _ => Err(self.unexpected("a number, variable, function call or '('")),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        let called = *self.peek() == Tok::Sym('(');
        if let Some(var) = Var::from_name(&name) {
            if called {
                let found = self.arguments()?.len();
                return Err(ParseError {
                    offset,
                    kind: ParseErrorKind::Arity { name, expected: 0, found },
                });
            }
            return Ok(Expr::Var(var));
        }
        if let Some(func) = Func::from_name(&name) {
            if !called {
                return Err(ParseError {
                    offset,
                    kind: ParseErrorKind::Arity { name, expected: 1, found: 0 },
                });
            }
            let mut args = self.arguments()?;
            if args.len() != 1 {
                return Err(ParseError {
                    offset,
                    kind: ParseErrorKind::Arity { name, expected: 1, found: args.len() },
                });
            }
            return Ok(Expr::Call(func, Box::new(args.remove(0))));
        }
        let kind = if matches!(name.as_str(), "abs" | "min" | "max" | "sign") {
            ParseErrorKind::NonSmooth(name)
        } else {
            ParseErrorKind::UnknownIdentifier(name)
        };
        Err(ParseError { offset, kind })
    }

    /// Parses `'(' [expr (',' expr)*] ')'`; the opening parenthesis is next.
    fn arguments(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.bump();
        let mut args = Vec::new();
        if self.eat(')') {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(')') {
                return Ok(args);
            }
            if !self.eat(',') {
                return Err(self.unexpected("',' or ')'"));
            }
        }
    }
}

/// Parses an expression in `t`, `x`, `v`.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser { toks: lex(source)?, pos: 0 };
    let expr = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Ok(expr)
}
