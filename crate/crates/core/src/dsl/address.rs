//! Vertex addresses and region paths.
//!
//! An address is a `/`-separated list of steps naming exactly one vertex of a
//! [`GraphExpr`](super::GraphExpr). Union sides and copies contribute a step;
//! `join_vertex`, `add_edge` and the base tree of `with_tops` pass addresses of
//! their base expression through unchanged.

use std::fmt;
use std::str::FromStr;

use super::DslError;

/// Index into a child/leaf/vertex family. `Tok(n)` (rendered `b<n>`) is a symbolic
/// branch token: pairwise distinct, otherwise arbitrary, members of an uncountable
/// index set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Index {
    Nat(u64),
    Tok(u32),
}

impl Index {
    pub fn nat(&self) -> Option<u64> {
        match self {
            Index::Nat(n) => Some(*n),
            Index::Tok(_) => None,
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Nat(n) => write!(f, "{n}"),
            Index::Tok(t) => write!(f, "b{t}"),
        }
    }
}

impl FromStr for Index {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(t) = s.strip_prefix('b') {
            return t
                .parse()
                .map(Index::Tok)
                .map_err(|_| DslError::address(s, "bad branch token"));
        }
        s.parse()
            .map(Index::Nat)
            .map_err(|_| DslError::address(s, "bad index"))
    }
}

/// One coordinate of an address. Variant order fixes the "least address"
/// tie-breaking used throughout the constructions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Label(String),
    Center,
    Node(Vec<Index>),
    R(u64),
    Tooth(u64, u64),
    K(Index),
    Leaf(Index),
    Top(Vec<Index>),
    Left,
    Right,
    Copy(Index),
}

fn render_seq(f: &mut fmt::Formatter<'_>, seq: &[Index]) -> fmt::Result {
    for (i, x) in seq.iter().enumerate() {
        if i > 0 {
            write!(f, ".")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

pub(crate) fn parse_seq(s: &str) -> Result<Vec<Index>, DslError> {
    s.split('.').map(str::parse).collect()
}

/// Node syntax shared by addresses and descriptors: `v` or `v:0.1.b2`.
pub(crate) fn parse_node(s: &str) -> Result<Vec<Index>, DslError> {
    if s == "v" {
        Ok(Vec::new())
    } else if let Some(rest) = s.strip_prefix("v:") {
        parse_seq(rest)
    } else {
        Err(DslError::address(s, "expected tree node `v` or `v:i.j…`"))
    }
}

pub(crate) struct NodeDisplay<'a>(pub &'a [Index]);

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v")?;
        if !self.0.is_empty() {
            write!(f, ":")?;
            render_seq(f, self.0)?;
        }
        Ok(())
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Label(l) => write!(f, "{l}"),
            Step::Center => write!(f, "center"),
            Step::Node(seq) => write!(f, "{}", NodeDisplay(seq)),
            Step::R(n) => write!(f, "r{n}"),
            Step::Tooth(n, k) => write!(f, "t{n}.{k}"),
            Step::K(i) => write!(f, "k:{i}"),
            Step::Leaf(i) => write!(f, "leaf:{i}"),
            Step::Top(p) => {
                write!(f, "top")?;
                if !p.is_empty() {
                    write!(f, ":")?;
                    render_seq(f, p)?;
                }
                Ok(())
            }
            Step::Left => write!(f, "left"),
            Step::Right => write!(f, "right"),
            Step::Copy(i) => write!(f, "copy:{i}"),
        }
    }
}

/// Identifiers usable as vertex labels: `[A-Za-z_][A-Za-z0-9_]*`, excluding
/// reserved step spellings.
pub fn is_valid_label(s: &str) -> bool {
    let mut chars = s.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if !(first.is_ascii_alphabetic() || first == '_') {
        return false;
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return false;
    }
    if matches!(s, "center" | "left" | "right" | "v" | "top" | "base" | "all") {
        return false;
    }
    !(s.len() > 1 && s.starts_with('r') && s[1..].bytes().all(|b| b.is_ascii_digit()))
}

impl FromStr for Step {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "center" => return Ok(Step::Center),
            "left" => return Ok(Step::Left),
            "right" => return Ok(Step::Right),
            "v" => return Ok(Step::Node(Vec::new())),
            "top" => return Ok(Step::Top(Vec::new())),
            _ => {}
        }
        if s.starts_with("v:") {
            return Ok(Step::Node(parse_node(s)?));
        }
        if let Some(rest) = s.strip_prefix("top:") {
            let p = parse_seq(rest)?;
            if p.last() == Some(&Index::Nat(0)) {
                return Err(DslError::address(s, "top branch prefix must not end in 0"));
            }
            return Ok(Step::Top(p));
        }
        if let Some(rest) = s.strip_prefix("leaf:") {
            return Ok(Step::Leaf(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix("k:") {
            return Ok(Step::K(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix("copy:") {
            return Ok(Step::Copy(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix('r') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                return rest.parse().map(Step::R).map_err(|_| DslError::address(s, "bad index"));
            }
        }
        if let Some(rest) = s.strip_prefix('t') {
            if let Some((n, k)) = rest.split_once('.') {
                if let (Ok(n), Ok(k)) = (n.parse(), k.parse()) {
                    return Ok(Step::Tooth(n, k));
                }
            }
        }
        if is_valid_label(s) {
            return Ok(Step::Label(s.to_string()));
        }
        Err(DslError::address(s, "unrecognized address step"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Address(pub Vec<Step>);

impl Address {
    pub fn new(steps: Vec<Step>) -> Self {
        Address(steps)
    }

    pub fn single(step: Step) -> Self {
        Address(vec![step])
    }

    pub fn steps(&self) -> &[Step] {
        &self.0
    }

    pub fn prefixed(&self, prefix: &[Step]) -> Address {
        let mut v = prefix.to_vec();
        v.extend(self.0.iter().cloned());
        Address(v)
    }

    pub fn strip_prefix(&self, prefix: &[Step]) -> Option<Address> {
        self.0.strip_prefix(prefix).map(|s| Address(s.to_vec()))
    }

    /// Maps every symbolic token through `f`, leaving naturals alone.
    pub fn rename_tokens(&self, f: &impl Fn(u32) -> u32) -> Address {
        let ren = |i: &Index| match i {
            Index::Tok(t) => Index::Tok(f(*t)),
            n => n.clone(),
        };
        let seq = |s: &[Index]| s.iter().map(ren).collect::<Vec<_>>();
        Address(
            self.0
                .iter()
                .map(|st| match st {
                    Step::Node(s) => Step::Node(seq(s)),
                    Step::Top(s) => Step::Top(seq(s)),
                    Step::K(i) => Step::K(ren(i)),
                    Step::Leaf(i) => Step::Leaf(ren(i)),
                    Step::Copy(i) => Step::Copy(ren(i)),
                    other => other.clone(),
                })
                .collect(),
        )
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "/")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Address {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(DslError::address(s, "empty address"));
        }
        s.split('/').map(str::parse).collect::<Result<Vec<_>, _>>().map(Address)
    }
}

/// One step of a path through the expression tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExprStep {
    /// Into the base of `join_vertex`, `add_edge` or `with_tops`.
    Base,
    Left,
    Right,
    Copy(Index),
    /// Every copy of a `copies` node at once.
    AllCopies,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RegionPath(pub Vec<ExprStep>);

impl RegionPath {
    pub fn root() -> Self {
        RegionPath(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join(&self, tail: &RegionPath) -> RegionPath {
        let mut v = self.0.clone();
        v.extend(tail.0.iter().cloned());
        RegionPath(v)
    }

    pub fn child(&self, step: ExprStep) -> RegionPath {
        let mut v = self.0.clone();
        v.push(step);
        RegionPath(v)
    }

    /// Address steps contributed by this path (`None` if it contains `copy:*`).
    pub fn address_prefix(&self) -> Option<Vec<Step>> {
        let mut out = Vec::new();
        for s in &self.0 {
            match s {
                ExprStep::Base => {}
                ExprStep::Left => out.push(Step::Left),
                ExprStep::Right => out.push(Step::Right),
                ExprStep::Copy(i) => out.push(Step::Copy(i.clone())),
                ExprStep::AllCopies => return None,
            }
        }
        Some(out)
    }

    pub fn has_wildcard(&self) -> bool {
        self.0.contains(&ExprStep::AllCopies)
    }

    /// Replaces every `copy:*` step by `copy:i`.
    pub fn instantiate(&self, i: &Index) -> RegionPath {
        RegionPath(
            self.0
                .iter()
                .map(|s| match s {
                    ExprStep::AllCopies => ExprStep::Copy(i.clone()),
                    o => o.clone(),
                })
                .collect(),
        )
    }
}

impl fmt::Display for RegionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, ".");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "/")?;
            }
            match s {
                ExprStep::Base => write!(f, "base")?,
                ExprStep::Left => write!(f, "left")?,
                ExprStep::Right => write!(f, "right")?,
                ExprStep::Copy(i) => write!(f, "copy:{i}")?,
                ExprStep::AllCopies => write!(f, "copy:*")?,
            }
        }
        Ok(())
    }
}

impl FromStr for RegionPath {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "." {
            return Ok(RegionPath::root());
        }
        s.split('/')
            .map(|st| match st {
                "base" => Ok(ExprStep::Base),
                "left" => Ok(ExprStep::Left),
                "right" => Ok(ExprStep::Right),
                "copy:*" => Ok(ExprStep::AllCopies),
                _ => match st.strip_prefix("copy:") {
                    Some(i) => Ok(ExprStep::Copy(i.parse()?)),
                    None => Err(DslError::address(s, "bad region path step")),
                },
            })
            .collect::<Result<Vec<_>, _>>()
            .map(RegionPath)
    }
}

/// Serde via the text form.
macro_rules! serde_via_string {
    ($t:ty) => {
        impl serde::Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> serde::Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}
pub(crate) use serde_via_string;

serde_via_string!(Address);
serde_via_string!(RegionPath);
serde_via_string!(Index);
serde_via_string!(Step);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_round_trip() {
        for s in [
            "r3",
            "t4.2",
            "center",
            "leaf:7",
            "leaf:b2",
            "v",
            "v:0.b1.3",
            "k:5",
            "top:1.0.2",
            "top",
            "left/r0",
            "copy:b3/v:1",
            "root",
            "_p0",
        ] {
            let a: Address = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
        }
    }

    #[test]
    fn address_errors() {
        assert!("top:1.0".parse::<Address>().is_err());
        assert!("".parse::<Address>().is_err());
        assert!("leaf:x".parse::<Address>().is_err());
        assert!("9x".parse::<Address>().is_err());
    }

    #[test]
    fn region_paths() {
        for s in [".", "base", "left/base", "base/copy:*/base", "copy:3"] {
            let p: RegionPath = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        let p: RegionPath = "left/base/copy:2".parse().unwrap();
        assert_eq!(
            p.address_prefix().unwrap(),
            vec![Step::Left, Step::Copy(Index::Nat(2))]
        );
        assert!("copy:*".parse::<RegionPath>().unwrap().address_prefix().is_none());
    }

    #[test]
    fn step_order_prefers_shallow_nodes() {
        let root = Address::single(Step::Node(vec![]));
        let child = Address::single(Step::Node(vec![Index::Nat(0)]));
        assert!(root < child);
        assert!(Index::Nat(1_000) < Index::Tok(0));
    }

    #[test]
    fn labels() {
        assert!(is_valid_label("d"));
        assert!(is_valid_label("root"));
        assert!(is_valid_label("_p1"));
        assert!(!is_valid_label("r12"));
        assert!(!is_valid_label("center"));
        assert!(!is_valid_label("1a"));
    }
}
