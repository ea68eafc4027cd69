//! Canonical text form and a small expression parser.
//!
//! Serialized form: terms in descending graded-lex order joined by ` + `,
//! each term `coef * x1^2*x3` (the coefficient is always printed, exponent 1
//! is omitted). The zero polynomial is `0`. The parser accepts that form and
//! ordinary infix expressions with `+ - * / ^` and parentheses.

use std::fmt;

use super::{fmt_rational, parse_rational, MultiPoly, PolyError};

/// Variable names used for printing and parsing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarNames(Vec<String>);

impl VarNames {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        VarNames(names.into_iter().map(Into::into).collect())
    }

    /// `prefix1 .. prefixN`, or starting at `first` instead of 1.
    pub fn indexed(prefix: &str, first: usize, count: usize) -> Self {
        VarNames((first..first + count).map(|i| format!("{prefix}{i}")).collect())
    }

    pub fn default_for(nvars: usize) -> Self {
        Self::indexed("x", 1, nvars)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> &str {
        &self.0[i]
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }
}

impl MultiPoly {
    /// Canonical text using `names` (must cover every variable).
    pub fn to_text(&self, names: &VarNames) -> String {
        assert!(
            names.len() >= self.nvars,
            "{} names for {} variables",
            names.len(),
            self.nvars
        );
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms.iter().rev() {
            let factors: Vec<String> = m
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e != 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        names.get(i).to_string()
                    } else {
                        format!("{}^{}", names.get(i), e)
                    }
                })
                .collect();
            if factors.is_empty() {
                parts.push(fmt_rational(c));
            } else {
                parts.push(format!("{} * {}", fmt_rational(c), factors.join("*")));
            }
        }
        parts.join(" + ")
    }

    /// Parses an expression over the given variable names.
    pub fn parse(src: &str, names: &VarNames) -> Result<MultiPoly, PolyError> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            names,
        };
        let out = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(PolyError::Parse(format!(
                "unexpected `{}` in `{src}`",
                p.tokens[p.pos]
            )));
        }
        Ok(out)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(&VarNames::default_for(self.nvars)))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(s) | Tok::Ident(s) => f.write_str(s),
            Tok::Op(c) => write!(f, "{c}"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Tok>, PolyError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(PolyError::Parse(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    names: &'a VarNames,
}

impl Parser<'_> {
    fn nvars(&self) -> usize {
        self.names.len()
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<MultiPoly, PolyError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly, PolyError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                if d.is_zero() {
                    return Err(PolyError::Parse("division by zero".into()));
                }
                let inv = d
                    .inverse_monomial()
                    .map_err(|_| PolyError::Parse("can only divide by a single term".into()))?;
                acc = &acc * &inv;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<MultiPoly, PolyError> {
        if self.eat('-') {
            return Ok(-&self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<MultiPoly, PolyError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        let e: u32 = match self.tokens.get(self.pos) {
            Some(Tok::Num(s)) => s
                .parse()
                .map_err(|_| PolyError::Parse(format!("bad exponent `{s}`")))?,
            other => {
                return Err(PolyError::Parse(format!(
                    "expected exponent, found {}",
                    other.map_or("end of input".to_string(), |t| format!("`{t}`"))
                )))
            }
        };
        self.pos += 1;
        if neg {
            let inv = base
                .inverse_monomial()
                .map_err(|_| PolyError::Parse("negative power of a sum".into()))?;
            Ok(inv.pow(e))
        } else {
            Ok(base.pow(e))
        }
    }

    fn atom(&mut self) -> Result<MultiPoly, PolyError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| PolyError::Parse("unexpected end of input".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(s) => Ok(MultiPoly::constant(self.nvars(), parse_rational(&s)?)),
            Tok::Ident(name) => match self.names.position(&name) {
                Some(i) => Ok(MultiPoly::var(self.nvars(), i)),
                None => Err(PolyError::Parse(format!("unknown variable `{name}`"))),
            },
            Tok::Op('(') => {
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(PolyError::Parse("missing `)`".into()));
                }
                Ok(inner)
            }
            Tok::Op(c) => Err(PolyError::Parse(format!("unexpected `{c}`"))),
        }
    }
}

/// Convenience for tests and small tools: parse with `x1..xn` names.
pub fn parse_default(src: &str, nvars: usize) -> Result<MultiPoly, PolyError> {
    MultiPoly::parse(src, &VarNames::default_for(nvars))
}
