//! The scenario expression language.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" unary ] ;
//! atom    = number | ident | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "exp" | "sqrt" ;
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-2^2`
//! is `-4` and `2^3^2` is `512`.

use std::fmt;

use crate::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 4] = [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub(crate) fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
            BinOp::Pow => power(a, b),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    /// Visit every identifier.
    pub fn for_each_var(&self, f: &mut impl FnMut(&str)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => f(v),
            Expr::Neg(e) | Expr::Call(_, e) => e.for_each_var(f),
            Expr::Bin(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
        }
    }

    /// Evaluate with `lookup` resolving identifiers.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        Some(match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => lookup(v)?,
            Expr::Neg(e) => -e.eval_with(lookup)?,
            Expr::Call(f, e) => f.apply(e.eval_with(lookup)?),
            Expr::Bin(op, l, r) => {
                op.apply(l.eval_with(lookup)?, r.eval_with(lookup)?)
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.write_at(f, 3)
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.write_at(f, 0)?;
                write!(f, ")")
            }
            Expr::Bin(op, l, r) => {
                let (lmin, rmin) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                l.write_at(f, lmin)?;
                match op {
                    BinOp::Pow => write!(f, "^")?,
                    _ => write!(f, " {} ", op.symbol())?,
                }
                r.write_at(f, rmin)
            }
        }
    }
}

/// Prints with the minimal parentheses needed to parse back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

fn power(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    Sym(char),
    Newline,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

/// Split `text` into tokens. Newlines are kept (the scenario format is line
/// oriented); `#` starts a comment running to the end of the line.
pub(crate) fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        if c == '\n' {
            push(&mut out, Tok::Newline);
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => push(&mut out, Tok::Num(v)),
                _ => {
                    return Err(ParseError {
                        line: start_line,
                        column: start_col,
                        expected: vec!["number".into()],
                        found: format!("`{s}`"),
                    })
                }
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            col += i - start;
            push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
        } else if c == '"' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(ParseError {
                    line: start_line,
                    column: start_col,
                    expected: vec!["closing `\"`".into()],
                    found: "end of line".into(),
                });
            }
            i += 1;
            col += i - start;
            push(&mut out, Tok::Str(chars[start + 1..i - 1].iter().collect()));
        } else if "+-*/^()[],=".contains(c) {
            push(&mut out, Tok::Sym(c));
            i += 1;
            col += 1;
        } else {
            return Err(ParseError {
                line,
                column: col,
                expected: vec!["expression".into()],
                found: format!("character {c:?}"),
            });
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

const MAX_DEPTH: usize = 256;

/// Recursive-descent parser over a token slice.
pub(crate) struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    depth: usize,
    /// Open `[` / `(` positions; newlines inside them are skipped.
    open: Vec<(usize, usize)>,
    multiline: bool,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(toks: &'a [Token]) -> Self {
        Parser {
            toks,
            pos: 0,
            depth: 0,
            open: Vec::new(),
            multiline: false,
        }
    }

    pub(crate) fn peek(&mut self) -> &Token {
        if self.multiline || !self.open.is_empty() {
            while self.toks[self.pos].tok == Tok::Newline {
                self.pos += 1;
            }
        }
        &self.toks[self.pos]
    }

    pub(crate) fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&mut self, expected: &[&str]) -> ParseError {
        let t = self.peek().clone();
        let (line, column) = match (&t.tok, self.open.last()) {
            (Tok::Eof, Some(&(l, c))) => (l, c),
            _ => (t.line, t.column),
        };
        let mut found = t.tok.describe();
        if t.tok == Tok::Eof && !self.open.is_empty() {
            found.push_str(" (unclosed bracket)");
        }
        ParseError {
            line,
            column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{c}`")]))
        }
    }

    pub(crate) fn open_bracket(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.peek().clone();
        self.expect(c)?;
        self.open.push((t.line, t.column));
        Ok(())
    }

    pub(crate) fn close_bracket(&mut self, c: char, alternatives: &[&str]) -> Result<(), ParseError> {
        if self.peek().tok == Tok::Sym(c) {
            self.open.pop();
            if self.toks[self.pos].tok != Tok::Eof {
                self.pos += 1;
            }
            Ok(())
        } else {
            let mut exp: Vec<&str> = alternatives.to_vec();
            let close = format!("`{c}`");
            exp.push(&close);
            Err(self.error(&exp))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error(&["shallower nesting"]));
        }
        Ok(())
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => break,
            };
            self.next();
            lhs = Expr::bin(op, lhs, self.term()?);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => break,
            };
            self.next();
            lhs = Expr::bin(op, lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            self.enter()?;
            let e = Expr::Neg(Box::new(self.unary()?));
            self.depth -= 1;
            return Ok(e);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            self.enter()?;
            let exp = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok.clone() {
            Tok::Num(v) => {
                self.next();
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                self.next();
                match Func::from_name(&name) {
                    Some(f) => {
                        self.open_bracket('(')?;
                        let arg = self.expr()?;
                        self.close_bracket(')', &["operator"])?;
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                    None => Ok(Expr::Var(name)),
                }
            }
            Tok::Sym('(') => {
                self.open_bracket('(')?;
                let e = self.expr()?;
                self.close_bracket(')', &["operator"])?;
                Ok(e)
            }
            _ => Err(self.error(&["number", "identifier", "`(`", "`-`"])),
        }
    }
}

/// Parse a single expression (the whole input).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks);
    p.multiline = true;
    let e = p.expr()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

/// Evaluate a closed expression (`pi` is the only identifier allowed).
pub fn eval_constant(e: &Expr) -> Option<f64> {
    e.eval_with(&|v| (v == "pi").then_some(std::f64::consts::PI))
}
