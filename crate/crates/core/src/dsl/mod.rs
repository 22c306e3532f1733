//! Finite presentations of infinite graphs.
//!
//! A [`GraphExpr`] is a small AST built from a closed catalog of constructors
//! (rays, combs, stars, `T_κ`, complete graphs, `T_ℵ₁` with tops, unions, copies,
//! one-vertex joins and single added edges). Everything else in the crate
//! analyses these expressions structurally and checks the answers on finite
//! truncations.

mod address;
pub mod components;
mod descriptor;
pub mod export;
mod parse;
mod semantics;
pub mod truncate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use address::{is_valid_label, Address, ExprStep, Index, RegionPath, Step};
pub(crate) use address::{parse_node, serde_via_string, NodeDisplay};

pub use components::{components_after_deletion, is_connected, restrict, AttachTemplate, Attachment, Embed, Links, Region};
pub use descriptor::{LineKind, VertexSet};
pub use parse::parse;
pub use semantics::{
    centers, contains, desc_card, descend, has_edge, line_position, line_vertex, neighbors, resolve,
    subexpr, top_of, vertices_card, Neighborhood,
};
pub use truncate::{truncate, FiniteTruncation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("bad address `{text}`: {msg}")]
    Address { text: String, msg: String },
    #[error("ill-formed expression: {0}")]
    IllFormed(String),
    #[error("address `{0}` does not resolve")]
    Unresolvable(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
}

impl DslError {
    pub(crate) fn address(text: &str, msg: &str) -> Self {
        DslError::Address { text: text.to_string(), msg: msg.to_string() }
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        DslError::Unsupported(msg.into())
    }
}

/// Coarse cardinalities. `Uncountable` is an uncountable cardinal whose exact
/// value we do not pin down (e.g. the number of branches of `T_ℵ₁`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cardinality {
    Finite(u64),
    Aleph0,
    Aleph1,
    Uncountable,
}

impl Cardinality {
    pub const ZERO: Cardinality = Cardinality::Finite(0);
    pub const ONE: Cardinality = Cardinality::Finite(1);

    pub fn is_finite(self) -> bool {
        matches!(self, Cardinality::Finite(_))
    }

    pub fn is_countable(self) -> bool {
        self <= Cardinality::Aleph0
    }

    pub fn is_zero(self) -> bool {
        self == Cardinality::ZERO
    }

    pub fn sum(self, other: Cardinality) -> Cardinality {
        match (self, other) {
            (Cardinality::Finite(a), Cardinality::Finite(b)) => {
                a.checked_add(b).map_or(Cardinality::Aleph0, Cardinality::Finite)
            }
            _ => self.max(other),
        }
    }

    pub fn product(self, other: Cardinality) -> Cardinality {
        match (self, other) {
            (Cardinality::Finite(0), _) | (_, Cardinality::Finite(0)) => Cardinality::ZERO,
            (Cardinality::Finite(a), Cardinality::Finite(b)) => {
                a.checked_mul(b).map_or(Cardinality::Aleph0, Cardinality::Finite)
            }
            _ => self.max(other),
        }
    }

    /// Number of indices actually instantiated in a truncation of width `w`.
    pub fn instantiate(self, w: u64) -> u64 {
        match self {
            Cardinality::Finite(n) => n,
            _ => w,
        }
    }

    /// `κ^ℵ₀`, the number of branches of `T_κ`.
    pub fn branches(self) -> Cardinality {
        match self {
            Cardinality::Finite(0) => Cardinality::ZERO,
            Cardinality::Finite(1) => Cardinality::ONE,
            _ => Cardinality::Uncountable,
        }
    }

    pub fn admits(self, i: &Index) -> bool {
        match (self, i) {
            (Cardinality::Finite(n), Index::Nat(k)) => *k < n,
            (Cardinality::Finite(_), Index::Tok(_)) => false,
            (Cardinality::Aleph0, Index::Nat(_)) => true,
            (Cardinality::Aleph0, Index::Tok(_)) => false,
            _ => true,
        }
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cardinality::Finite(n) => write!(f, "{n}"),
            Cardinality::Aleph0 => write!(f, "aleph0"),
            Cardinality::Aleph1 => write!(f, "aleph1"),
            Cardinality::Uncountable => write!(f, "uncountable"),
        }
    }
}

impl std::str::FromStr for Cardinality {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aleph0" => Ok(Cardinality::Aleph0),
            "aleph1" => Ok(Cardinality::Aleph1),
            "uncountable" => Ok(Cardinality::Uncountable),
            _ => s
                .parse()
                .map(Cardinality::Finite)
                .map_err(|_| DslError::address(s, "bad cardinality")),
        }
    }
}

serde_via_string!(Cardinality);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }
}

/// How a top is joined to its branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TopAdjacency {
    /// Every vertex of the branch.
    WholeRay,
    /// The branch vertices of even depth.
    Every2nd,
}

impl TopAdjacency {
    pub fn joins_depth(self, depth: usize) -> bool {
        match self {
            TopAdjacency::WholeRay => true,
            TopAdjacency::Every2nd => depth.is_multiple_of(2),
        }
    }

    pub fn step(self) -> u64 {
        match self {
            TopAdjacency::WholeRay => 1,
            TopAdjacency::Every2nd => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphExpr {
    Finite { vertices: Vec<String>, edges: Vec<(String, String)> },
    Ray,
    /// A ray with a path of the given length hanging off every spine vertex.
    Comb(u64),
    Star(Cardinality),
    Tree(Cardinality),
    Complete(Cardinality),
    /// `T_ℵ₁` plus one top per branch. Branches are addressed by their
    /// eventually-zero representatives, see [`Step::Top`].
    WithTops { base: Box<GraphExpr>, adjacency: TopAdjacency },
    Union(Box<GraphExpr>, Box<GraphExpr>),
    Copies(Cardinality, Box<GraphExpr>),
    JoinVertex { base: Box<GraphExpr>, label: String, attach: VertexSet },
    AddEdge { base: Box<GraphExpr>, a: Address, b: Address },
}

impl GraphExpr {
    pub fn finite(vertices: &[&str], edges: &[(&str, &str)]) -> Self {
        GraphExpr::Finite {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            edges: edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    pub fn single(label: &str) -> Self {
        GraphExpr::finite(&[label], &[])
    }

    pub fn with_tops(adjacency: TopAdjacency) -> Self {
        GraphExpr::WithTops { base: Box::new(GraphExpr::Tree(Cardinality::Aleph1)), adjacency }
    }

    pub fn union(l: GraphExpr, r: GraphExpr) -> Self {
        GraphExpr::Union(Box::new(l), Box::new(r))
    }

    pub fn copies(k: Cardinality, e: GraphExpr) -> Self {
        GraphExpr::Copies(k, Box::new(e))
    }

    pub fn join_vertex(base: GraphExpr, label: &str, attach: VertexSet) -> Self {
        GraphExpr::JoinVertex { base: Box::new(base), label: label.to_string(), attach }
    }

    pub fn add_edge(base: GraphExpr, a: Address, b: Address) -> Self {
        GraphExpr::AddEdge { base: Box::new(base), a, b }
    }

    /// The immediate sub-expression behind an expression step.
    pub fn child(&self, step: &ExprStep) -> Option<&GraphExpr> {
        match (self, step) {
            (GraphExpr::WithTops { base, .. }, ExprStep::Base)
            | (GraphExpr::JoinVertex { base, .. }, ExprStep::Base)
            | (GraphExpr::AddEdge { base, .. }, ExprStep::Base) => Some(base),
            (GraphExpr::Union(l, _), ExprStep::Left) => Some(l),
            (GraphExpr::Union(_, r), ExprStep::Right) => Some(r),
            (GraphExpr::Copies(k, e), ExprStep::Copy(i)) if k.admits(i) => Some(e),
            (GraphExpr::Copies(k, e), ExprStep::AllCopies) if !k.is_zero() => Some(e),
            _ => None,
        }
    }

    /// Renames every symbolic branch token occurring in the expression.
    pub fn rename_tokens(&self, f: &impl Fn(u32) -> u32) -> GraphExpr {
        match self {
            GraphExpr::WithTops { base, adjacency } => GraphExpr::WithTops {
                base: Box::new(base.rename_tokens(f)),
                adjacency: *adjacency,
            },
            GraphExpr::Union(l, r) => GraphExpr::union(l.rename_tokens(f), r.rename_tokens(f)),
            GraphExpr::Copies(k, e) => GraphExpr::copies(*k, e.rename_tokens(f)),
            GraphExpr::JoinVertex { base, label, attach } => GraphExpr::JoinVertex {
                base: Box::new(base.rename_tokens(f)),
                label: label.clone(),
                attach: attach.rename_tokens(f),
            },
            GraphExpr::AddEdge { base, a, b } => GraphExpr::AddEdge {
                base: Box::new(base.rename_tokens(f)),
                a: a.rename_tokens(f),
                b: b.rename_tokens(f),
            },
            other => other.clone(),
        }
    }
}

impl fmt::Display for GraphExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        parse::render(self, f)
    }
}

impl std::str::FromStr for GraphExpr {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

serde_via_string!(GraphExpr);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinal_arithmetic() {
        use Cardinality::*;
        assert!(Finite(1_000) < Aleph0 && Aleph0 < Aleph1 && Aleph1 < Uncountable);
        assert_eq!(Finite(2).sum(Finite(3)), Finite(5));
        assert_eq!(Finite(2).sum(Aleph0), Aleph0);
        assert_eq!(Aleph0.product(Aleph0), Aleph0);
        assert_eq!(Aleph1.product(Finite(0)), Finite(0));
        assert_eq!(Aleph0.branches(), Uncountable);
        assert!(Aleph1.admits(&Index::Tok(3)));
        assert!(!Aleph0.admits(&Index::Tok(3)));
        assert!(!Finite(2).admits(&Index::Nat(2)));
    }
}
