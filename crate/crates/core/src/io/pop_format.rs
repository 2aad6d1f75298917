//! The `.pop` text format.
//!
//! ```text
//! # comment
//! name robinson
//! vars x1 x2 x3
//! min x1^6 + x2^6 - 3*x1^2*x2^2*x3^2
//! h: x1^2 + x2^2 + x3^2 - 1 == 0
//! g: 1 - x1 >= 0
//! ```
//!
//! Numeric literals are read as exact rationals: `0.25`, `3`, `1/3`
//! (division by a constant).

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::instance::{InstanceError, PopInstance};
use crate::poly::RatPoly;

/// Per-factor exponent cap.
pub const MAX_EXPONENT: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownVariable(String),
    DuplicateVariable(String),
    ExponentOverflow(String),
    NonIntegerExponent,
    DivisionByNonConstant,
    DivisionByZero,
    MissingVars,
    MissingObjective,
    DuplicateDirective(String),
    UnknownDirective(String),
    BadRelation { expected: &'static str },
    Instance(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token {t}"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of line"),
            ParseErrorKind::UnknownVariable(v) => write!(f, "unknown variable {v:?}"),
            ParseErrorKind::DuplicateVariable(v) => write!(f, "variable {v:?} declared twice"),
            ParseErrorKind::ExponentOverflow(e) => write!(f, "exponent {e} exceeds {MAX_EXPONENT}"),
            ParseErrorKind::NonIntegerExponent => {
                write!(f, "exponents must be nonnegative integer literals")
            }
            ParseErrorKind::DivisionByNonConstant => {
                write!(f, "division by a non-constant expression")
            }
            ParseErrorKind::DivisionByZero => write!(f, "division by zero"),
            ParseErrorKind::MissingVars => {
                write!(f, "`vars` must be declared before any expression")
            }
            ParseErrorKind::MissingObjective => write!(f, "no `min` objective"),
            ParseErrorKind::DuplicateDirective(d) => write!(f, "`{d}` given more than once"),
            ParseErrorKind::UnknownDirective(d) => write!(f, "unknown directive {d:?}"),
            ParseErrorKind::BadRelation { expected } => write!(f, "expected `{expected}`"),
            ParseErrorKind::Instance(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational, String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    EqEq,
    Ge,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(_, s) => write!(f, "{s:?}"),
            Tok::Ident(s) => write!(f, "{s:?}"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::Ge => f.write_str("`>=`"),
        }
    }
}

fn decimal(text: &str) -> BigRational {
    match text.split_once('.') {
        None => BigRational::from_integer(text.parse::<BigInt>().expect("digits")),
        Some((int, frac)) => {
            let digits = format!("{int}{frac}");
            let numer: BigInt = if digits.is_empty() {
                BigInt::zero()
            } else {
                digits.parse().expect("digits")
            };
            let denom = num_traits::pow(BigInt::from(10u32), frac.len());
            BigRational::new(numer, denom)
        }
    }
}

/// Tokens with their 1-based columns.
fn tokenize(line: &str, lineno: usize, col0: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |i: usize, kind| ParseError {
        line: lineno,
        column: col0 + i + 1,
        kind,
    };
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '=' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                Tok::EqEq
            }
            '>' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                Tok::Ge
            }
            d if d.is_ascii_digit() || d == '.' => {
                let mut j = i;
                let mut seen_dot = false;
                while j < chars.len()
                    && (chars[j].is_ascii_digit() || (chars[j] == '.' && !seen_dot))
                {
                    seen_dot |= chars[j] == '.';
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                if text == "." {
                    return Err(err(i, ParseErrorKind::UnexpectedChar('.')));
                }
                i = j - 1;
                Tok::Num(decimal(&text), text)
            }
            a if a.is_alphabetic() || a == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                i = j - 1;
                Tok::Ident(text)
            }
            other => return Err(err(i, ParseErrorKind::UnexpectedChar(other))),
        };
        out.push((tok, col0 + start + 1));
        i += 1;
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    vars: &'a HashMap<String, usize>,
    nvars: usize,
    line: usize,
    end_col: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column: self.col(),
            kind,
        }
    }

    fn expr(&mut self) -> Result<RatPoly, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RatPoly, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let col = self.col();
                    let d = self.unary()?;
                    if d.degree().unwrap_or(0) > 0 {
                        return Err(ParseError {
                            line: self.line,
                            column: col,
                            kind: ParseErrorKind::DivisionByNonConstant,
                        });
                    }
                    let c = d.constant_term();
                    if c.is_zero() {
                        return Err(ParseError {
                            line: self.line,
                            column: col,
                            kind: ParseErrorKind::DivisionByZero,
                        });
                    }
                    acc = acc.scale(&c.recip());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RatPoly, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RatPoly, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let col = self.col();
            match self.toks.get(self.pos) {
                Some((Tok::Num(v, text), _)) => {
                    if !v.is_integer() || text.contains('.') {
                        return Err(self.err(ParseErrorKind::NonIntegerExponent));
                    }
                    let e = v.to_integer();
                    let e = u32::try_from(&e)
                        .ok()
                        .filter(|&e| e <= MAX_EXPONENT)
                        .ok_or(ParseError {
                            line: self.line,
                            column: col,
                            kind: ParseErrorKind::ExponentOverflow(text.clone()),
                        })?;
                    self.pos += 1;
                    Ok(base.pow(e))
                }
                Some(_) => Err(self.err(ParseErrorKind::NonIntegerExponent)),
                None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<RatPoly, ParseError> {
        let Some((tok, col)) = self.toks.get(self.pos).cloned() else {
            return Err(self.err(ParseErrorKind::UnexpectedEnd));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v, _) => Ok(RatPoly::constant(self.nvars, v)),
            Tok::Ident(name) => match self.vars.get(&name) {
                Some(&i) => Ok(RatPoly::var(self.nvars, i)),
                None => Err(ParseError {
                    line: self.line,
                    column: col,
                    kind: ParseErrorKind::UnknownVariable(name),
                }),
            },
            Tok::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(t) => Err(self.err(ParseErrorKind::UnexpectedToken(t.to_string()))),
                    None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
                }
            }
            other => Err(ParseError {
                line: self.line,
                column: col,
                kind: ParseErrorKind::UnexpectedToken(other.to_string()),
            }),
        }
    }
}

enum Relation {
    Eq,
    Ge,
}

/// Parse a `.pop` document.
pub fn parse_pop(text: &str) -> Result<PopInstance, ParseError> {
    let mut name: Option<String> = None;
    let mut vars: Option<(Vec<String>, HashMap<String, usize>)> = None;
    let mut objective: Option<RatPoly> = None;
    let mut eqs = Vec::new();
    let mut ineqs = Vec::new();
    let mut last_line = 1;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = raw.split('#').next().unwrap_or("");
        let trimmed = line.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = line.chars().count() - trimmed.chars().count();
        let (head, rest) = match trimmed.find(|c: char| c.is_whitespace() || c == ':') {
            Some(p) => (&trimmed[..p], &trimmed[p..]),
            None => (trimmed, ""),
        };
        let rest_col = indent + head.chars().count();
        let at = |col: usize, kind| ParseError {
            line: lineno,
            column: col,
            kind,
        };
        match head {
            "name" => {
                if name.is_some() {
                    return Err(at(
                        indent + 1,
                        ParseErrorKind::DuplicateDirective("name".into()),
                    ));
                }
                name = Some(rest.trim().to_string());
            }
            "vars" => {
                if vars.is_some() {
                    return Err(at(
                        indent + 1,
                        ParseErrorKind::DuplicateDirective("vars".into()),
                    ));
                }
                let toks = tokenize(rest, lineno, rest_col)?;
                let mut names = Vec::new();
                let mut map = HashMap::new();
                for (t, col) in toks {
                    match t {
                        Tok::Ident(v) => {
                            if map.insert(v.clone(), names.len()).is_some() {
                                return Err(at(col, ParseErrorKind::DuplicateVariable(v)));
                            }
                            names.push(v);
                        }
                        other => {
                            return Err(at(col, ParseErrorKind::UnexpectedToken(other.to_string())))
                        }
                    }
                }
                vars = Some((names, map));
            }
            "min" | "h" | "g" => {
                let Some((names, map)) = vars.as_ref() else {
                    return Err(at(indent + 1, ParseErrorKind::MissingVars));
                };
                let (body, body_col) = if head == "min" {
                    (rest, rest_col)
                } else {
                    let r = rest.trim_start();
                    let skipped = rest.chars().count() - r.chars().count();
                    match r.strip_prefix(':') {
                        Some(b) => (b, rest_col + skipped + 1),
                        None => {
                            return Err(at(
                                rest_col + skipped + 1,
                                ParseErrorKind::UnexpectedToken(format!("{r:?}")),
                            ))
                        }
                    }
                };
                let toks = tokenize(body, lineno, body_col)?;
                let end_col = body_col + body.chars().count() + 1;
                let mut p = ExprParser {
                    toks: &toks,
                    pos: 0,
                    vars: map,
                    nvars: names.len(),
                    line: lineno,
                    end_col,
                };
                let lhs = p.expr()?;
                let relation = match p.peek() {
                    None => None,
                    Some(Tok::EqEq) => Some(Relation::Eq),
                    Some(Tok::Ge) => Some(Relation::Ge),
                    Some(t) => return Err(p.err(ParseErrorKind::UnexpectedToken(t.to_string()))),
                };
                let poly = match (head, relation) {
                    ("min", None) => lhs,
                    ("h", Some(Relation::Eq)) | ("g", Some(Relation::Ge)) => {
                        p.pos += 1;
                        let rhs = p.expr()?;
                        if let Some(t) = p.peek() {
                            return Err(p.err(ParseErrorKind::UnexpectedToken(t.to_string())));
                        }
                        &lhs - &rhs
                    }
                    ("min", Some(_)) => {
                        return Err(p.err(ParseErrorKind::UnexpectedToken("relation".into())))
                    }
                    ("h", _) => return Err(p.err(ParseErrorKind::BadRelation { expected: "==" })),
                    _ => return Err(p.err(ParseErrorKind::BadRelation { expected: ">=" })),
                };
                match head {
                    "min" => {
                        if objective.is_some() {
                            return Err(at(
                                indent + 1,
                                ParseErrorKind::DuplicateDirective("min".into()),
                            ));
                        }
                        objective = Some(poly);
                    }
                    "h" => eqs.push(poly),
                    _ => ineqs.push(poly),
                }
            }
            other => {
                return Err(at(
                    indent + 1,
                    ParseErrorKind::UnknownDirective(other.to_string()),
                ))
            }
        }
    }

    let Some((names, _)) = vars else {
        return Err(ParseError {
            line: last_line,
            column: 1,
            kind: ParseErrorKind::MissingVars,
        });
    };
    let Some(objective) = objective else {
        return Err(ParseError {
            line: last_line,
            column: 1,
            kind: ParseErrorKind::MissingObjective,
        });
    };
    PopInstance::new(name.unwrap_or_default(), names, objective, eqs, ineqs).map_err(
        |e: InstanceError| ParseError {
            line: last_line,
            column: 1,
            kind: ParseErrorKind::Instance(e.to_string()),
        },
    )
}

/// Canonical text form; `parse_pop(print_pop(p)) == p`.
pub fn print_pop(instance: &PopInstance) -> String {
    let names = instance.var_names();
    let mut out = String::new();
    if !instance.name().is_empty() {
        out.push_str(&format!("name {}\n", instance.name()));
    }
    out.push_str(&format!("vars {}\n", names.join(" ")));
    out.push_str(&format!(
        "min {}\n",
        instance.objective().format_with(names)
    ));
    for h in instance.equalities() {
        out.push_str(&format!("h: {} == 0\n", h.format_with(names)));
    }
    for g in instance.inequalities() {
        out.push_str(&format!("g: {} >= 0\n", g.format_with(names)));
    }
    out
}
