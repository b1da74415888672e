//! Canonical text form for polynomials and polynomial vector fields.
//!
//! Polynomials print with terms in descending graded-lex order, e.g.
//! `2*x1^2*x2 - 1/3*x2^3`; fields print as `(p1, p2, ...)`. The parser
//! accepts that form plus parentheses, integer powers of subexpressions,
//! decimal literals (converted exactly) and the shorthand `v:f` for the
//! planar curl field of `f`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::field::{curl2, PolyVectorField};
use super::poly::{Monomial, Polynomial};
use super::PolyError;

fn fmt_monomial(m: &Monomial, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let mut first = true;
    for (i, &e) in m.exponents().iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            f.write_str("*")?;
        }
        first = false;
        if e == 1 {
            write!(f, "x{}", i + 1)?;
        } else {
            write!(f, "x{}^{}", i + 1, e)?;
        }
    }
    Ok(())
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms().rev().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            let constant = m.total_degree() == 0;
            if constant {
                write!(f, "{a}")?;
            } else {
                if !a.is_one() {
                    write!(f, "{a}*")?;
                }
                fmt_monomial(m, f)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.components().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, dim: usize) -> Self {
        Self { src: src.as_bytes(), pos: 0, dim }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Parse { pos: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = Polynomial::zero(self.dim);
        let mut sign = 1;
        if self.eat(b'-') {
            sign = -1;
        } else {
            self.eat(b'+');
        }
        loop {
            let t = self.term()?;
            acc = if sign > 0 { &acc + &t } else { &acc - &t };
            if self.eat(b'+') {
                sign = 1;
            } else if self.eat(b'-') {
                sign = -1;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            let f = self.factor()?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let digits = self.digits();
            if digits.is_empty() {
                return self.err("expected a non-negative integer exponent");
            }
            let n: u32 = match digits.parse() {
                Ok(n) => n,
                Err(_) => return self.err("exponent too large"),
            };
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<BigRational, PolyError> {
        let int_part = self.digits();
        let mut value = BigRational::from_integer(int_part.parse::<BigInt>().unwrap_or_default());
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let frac = self.digits();
            if !frac.is_empty() {
                let num: BigInt = frac.parse().unwrap_or_default();
                let den = num_traits::pow(BigInt::from(10), frac.len());
                value += BigRational::new(num, den);
            }
        }
        Ok(value)
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let mut value = self.number()?;
                if self.eat(b'/') {
                    self.skip_ws();
                    let den = self.number()?;
                    if den.is_zero() {
                        return self.err("division by zero");
                    }
                    value /= den;
                }
                Ok(Polynomial::constant(self.dim, value))
            }
            Some(b'x') => {
                self.pos += 1;
                let digits = self.digits();
                let index: usize = if digits.is_empty() {
                    if self.dim == 1 {
                        1
                    } else {
                        return self.err("bare 'x' is only allowed in one dimension");
                    }
                } else {
                    match digits.parse() {
                        Ok(i) => i,
                        Err(_) => return self.err("bad variable index"),
                    }
                };
                if index == 0 || index > self.dim {
                    return self.err(format!("variable x{index} out of range for dimension {}", self.dim));
                }
                Ok(Polynomial::var(self.dim, index - 1)?)
            }
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
            None => self.err("unexpected end of input"),
        }
    }

    fn finish(&mut self) -> Result<(), PolyError> {
        self.skip_ws();
        if self.pos != self.src.len() {
            return self.err("trailing input");
        }
        Ok(())
    }
}

/// Parses a polynomial in `dim` variables.
pub fn parse_polynomial(src: &str, dim: usize) -> Result<Polynomial, PolyError> {
    if dim == 0 {
        return Err(PolyError::Parse { pos: 0, message: "dimension must be at least 1".into() });
    }
    let mut p = Parser::new(src, dim);
    let out = p.expr()?;
    p.finish()?;
    Ok(out)
}

/// Parses a field: `(p1, ..., pd)`, `[p1, ..., pd]` or `v:f` (planar curl).
/// The dimension is the number of components.
pub fn parse_field(src: &str) -> Result<PolyVectorField, PolyError> {
    let trimmed = src.trim_start();
    let offset = src.len() - trimmed.len();
    if let Some(rest) = trimmed.strip_prefix("v:") {
        let f = parse_polynomial(rest, 2).map_err(|e| e.shift(offset + 2))?;
        return curl2(&f);
    }
    let bytes = trimmed.as_bytes();
    let close = match bytes.first() {
        Some(b'(') => b')',
        Some(b'[') => b']',
        _ => {
            return Err(PolyError::Parse {
                pos: offset,
                message: "expected '(' or '[' or 'v:'".into(),
            })
        }
    };
    // split top-level components
    let mut depth = 0i32;
    let mut parts = Vec::new();
    let mut start = 1;
    let mut end = None;
    for (i, &c) in bytes.iter().enumerate().skip(1) {
        match c {
            b'(' | b'[' => depth += 1,
            b')' | b']' if depth > 0 => depth -= 1,
            b',' if depth == 0 => {
                parts.push((start, i));
                start = i + 1;
            }
            _ if c == close && depth == 0 => {
                parts.push((start, i));
                end = Some(i);
                break;
            }
            _ => {}
        }
    }
    let Some(end) = end else {
        return Err(PolyError::Parse { pos: src.len(), message: "unterminated field".into() });
    };
    if !trimmed[end + 1..].trim().is_empty() {
        return Err(PolyError::Parse { pos: offset + end + 1, message: "trailing input".into() });
    }
    let dim = parts.len();
    let components = parts
        .iter()
        .map(|&(a, b)| parse_polynomial(&trimmed[a..b], dim).map_err(|e| e.shift(offset + a)))
        .collect::<Result<Vec<_>, _>>()?;
    PolyVectorField::new(components)
}

impl FromStr for PolyVectorField {
    type Err = PolyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_field(s)
    }
}

impl serde::Serialize for PolyVectorField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PolyVectorField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_field(&s).map_err(serde::de::Error::custom)
    }
}
