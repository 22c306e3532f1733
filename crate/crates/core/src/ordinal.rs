//! Ordinals below ε₀ in Cantor normal form.
//!
//! An ordinal is stored as a list of `(exponent, coefficient)` terms,
//! `ω^e1·c1 + … + ω^ek·ck`, with strictly decreasing exponents and positive
//! coefficients. The empty list is `0`. Exponents are ordinals themselves;
//! their nesting depth is bounded (default [`DEFAULT_DEPTH_LIMIT`]) and every
//! constructor that could exceed the bound reports [`OrdinalError::DepthLimit`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const DEFAULT_DEPTH_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrdinalError {
    #[error("ordinal exponent nesting exceeds depth limit {0}")]
    DepthLimit(usize),
    #[error("ordinal syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("not in Cantor normal form: {0}")]
    NotNormal(String),
    #[error("family shape `{0}` is outside the supported catalog")]
    UnsupportedFamily(String),
    #[error("coefficient overflow")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordinal {
    terms: Vec<(Ordinal, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(Self::zero(), n)] }
        }
    }

    pub fn omega() -> Self {
        Ordinal { terms: vec![(Self::finite(1), 1)] }
    }

    /// `ω^e · c`; `c == 0` yields zero.
    pub fn omega_pow(e: Ordinal, c: u64) -> Result<Self, OrdinalError> {
        Self::omega_pow_with_limit(e, c, DEFAULT_DEPTH_LIMIT)
    }

    pub fn omega_pow_with_limit(e: Ordinal, c: u64, limit: usize) -> Result<Self, OrdinalError> {
        if c == 0 {
            return Ok(Self::zero());
        }
        let o = Ordinal { terms: vec![(e, c)] };
        o.check_depth(limit)?;
        Ok(o)
    }

    /// Builds an ordinal from raw terms, validating normal form and depth.
    pub fn from_terms(terms: Vec<(Ordinal, u64)>, limit: usize) -> Result<Self, OrdinalError> {
        for (i, (_, c)) in terms.iter().enumerate() {
            if *c == 0 {
                return Err(OrdinalError::NotNormal(format!("term {i} has coefficient 0")));
            }
            if i > 0 && terms[i - 1].0 <= terms[i].0 {
                return Err(OrdinalError::NotNormal(format!(
                    "exponents not strictly decreasing at term {i}"
                )));
            }
        }
        let o = Ordinal { terms };
        o.check_depth(limit)?;
        Ok(o)
    }

    pub fn terms(&self) -> &[(Ordinal, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|(e, _)| e.is_zero())
    }

    pub fn as_finite(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(e, c)] if e.is_zero() => Some(*c),
            _ => None,
        }
    }

    pub fn is_successor(&self) -> bool {
        matches!(self.terms.last(), Some((e, _)) if e.is_zero())
    }

    pub fn is_limit(&self) -> bool {
        !self.is_zero() && !self.is_successor()
    }

    /// Nesting depth: 0 for zero, 1 for nonzero finite, 1 + max exponent depth otherwise.
    pub fn depth(&self) -> usize {
        self.terms
            .iter()
            .map(|(e, _)| 1 + e.depth())
            .max()
            .unwrap_or(0)
    }

    fn check_depth(&self, limit: usize) -> Result<(), OrdinalError> {
        if self.depth() > limit {
            Err(OrdinalError::DepthLimit(limit))
        } else {
            Ok(())
        }
    }

    pub fn succ(&self) -> Result<Self, OrdinalError> {
        let mut terms = self.terms.clone();
        match terms.last_mut() {
            Some((e, c)) if e.is_zero() => *c = c.checked_add(1).ok_or(OrdinalError::Overflow)?,
            _ => terms.push((Self::zero(), 1)),
        }
        Ok(Ordinal { terms })
    }

    /// Ordinal sum `self + other`.
    pub fn add(&self, other: &Ordinal) -> Result<Self, OrdinalError> {
        self.add_with_limit(other, DEFAULT_DEPTH_LIMIT)
    }

    pub fn add_with_limit(&self, other: &Ordinal, limit: usize) -> Result<Self, OrdinalError> {
        let Some((lead, lead_c)) = other.terms.first() else {
            return Ok(self.clone());
        };
        let mut terms: Vec<(Ordinal, u64)> =
            self.terms.iter().take_while(|(e, _)| e > lead).cloned().collect();
        let mut rest = other.terms.iter();
        rest.next();
        match self.terms.iter().find(|(e, _)| e == lead) {
            Some((_, c)) => {
                terms.push((lead.clone(), c.checked_add(*lead_c).ok_or(OrdinalError::Overflow)?))
            }
            None => terms.push((lead.clone(), *lead_c)),
        }
        terms.extend(rest.cloned());
        let o = Ordinal { terms };
        o.check_depth(limit)?;
        Ok(o)
    }

    pub fn max<'a>(&'a self, other: &'a Ordinal) -> &'a Ordinal {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(other.terms.iter()) {
            match a.0.cmp(&b.0) {
                Ordering::Equal => {}
                ord => return ord,
            }
            match a.1.cmp(&b.1) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn compare(a: &Ordinal, b: &Ordinal) -> Ordering {
    a.cmp(b)
}

/// Families of ordinals whose supremum can be taken exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrdinalFamily {
    List(Vec<Ordinal>),
    /// `{c : n < ω}`
    Constant(Ordinal),
    /// `{n : n < ω}`
    Naturals,
    /// `{ω·n : n < ω}`
    OmegaTimesN,
}

impl FromStr for OrdinalFamily {
    type Err = OrdinalError;

    /// Accepts `[a, b, …]`, `const(a)`, `n`, `w*n`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "n" {
            return Ok(OrdinalFamily::Naturals);
        }
        if t.replace(' ', "") == "w*n" {
            return Ok(OrdinalFamily::OmegaTimesN);
        }
        if let Some(inner) = t.strip_prefix("const(").and_then(|r| r.strip_suffix(')')) {
            return Ok(OrdinalFamily::Constant(inner.parse()?));
        }
        if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            if inner.trim().is_empty() {
                return Ok(OrdinalFamily::List(Vec::new()));
            }
            let items = inner
                .split(',')
                .map(|x| x.parse())
                .collect::<Result<Vec<Ordinal>, _>>()?;
            return Ok(OrdinalFamily::List(items));
        }
        Err(OrdinalError::UnsupportedFamily(t.to_string()))
    }
}

/// Least upper bound of a family.
pub fn sup(family: &OrdinalFamily) -> Ordinal {
    match family {
        OrdinalFamily::List(xs) => xs.iter().max().cloned().unwrap_or_default(),
        OrdinalFamily::Constant(c) => c.clone(),
        OrdinalFamily::Naturals => Ordinal::omega(),
        OrdinalFamily::OmegaTimesN => Ordinal { terms: vec![(Ordinal::finite(2), 1)] },
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if e.is_zero() {
                write!(f, "{c}")?;
                continue;
            }
            write!(f, "w")?;
            if *e != Ordinal::finite(1) {
                match e.as_finite() {
                    Some(n) => write!(f, "^{n}")?,
                    None if *e == Ordinal::omega() => write!(f, "^w")?,
                    None => write!(f, "^({e})")?,
                }
            }
            if *c != 1 {
                write!(f, "*{c}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = OrdinalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = OrdParser { src: s.as_bytes(), pos: 0, limit: DEFAULT_DEPTH_LIMIT };
        let o = p.sum(0)?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(o)
    }
}

struct OrdParser<'a> {
    src: &'a [u8],
    pos: usize,
    limit: usize,
}

impl OrdParser<'_> {
    fn err(&self, msg: &str) -> OrdinalError {
        OrdinalError::Syntax { pos: self.pos, msg: msg.to_string() }
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

    fn number(&mut self) -> Result<u64, OrdinalError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected number"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("number out of range"))
    }

    fn sum(&mut self, depth: usize) -> Result<Ordinal, OrdinalError> {
        if depth > self.limit {
            return Err(OrdinalError::DepthLimit(self.limit));
        }
        let mut terms: Vec<(Ordinal, u64)> = Vec::new();
        loop {
            let term = self.term(depth)?;
            if let Some(t) = term {
                terms.push(t);
            }
            if self.peek() == Some(b'+') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ordinal::from_terms(terms, self.limit)
    }

    /// Returns `None` for a literal `0` term.
    fn term(&mut self, depth: usize) -> Result<Option<(Ordinal, u64)>, OrdinalError> {
        match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                let exp = if self.peek() == Some(b'^') {
                    self.pos += 1;
                    if self.peek() == Some(b'(') {
                        self.pos += 1;
                        let e = self.sum(depth + 1)?;
                        if self.peek() != Some(b')') {
                            return Err(self.err("expected `)`"));
                        }
                        self.pos += 1;
                        e
                    } else if self.peek() == Some(b'w') {
                        self.pos += 1;
                        Ordinal::omega()
                    } else {
                        Ordinal::finite(self.number()?)
                    }
                } else {
                    Ordinal::finite(1)
                };
                let coeff = if self.peek() == Some(b'*') {
                    self.pos += 1;
                    self.number()?
                } else {
                    1
                };
                if coeff == 0 {
                    return Ok(None);
                }
                if depth + 1 + exp.depth() > self.limit {
                    return Err(OrdinalError::DepthLimit(self.limit));
                }
                Ok(Some((exp, coeff)))
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.number()?;
                Ok((n > 0).then(|| (Ordinal::zero(), n)))
            }
            _ => Err(self.err("expected `w` or a number")),
        }
    }
}

impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
