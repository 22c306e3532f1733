//! Trees in DSL graphs as symbolic parent rules.
//!
//! A [`TreeRule`] is interpreted relative to an expression: it maps every
//! vertex address to its parent, to `Root`, or to `Absent` (not in the tree).
//! Combinators follow the expression structure, so a rule for a union, a copy
//! family or a joined vertex is built from rules for the parts.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{
    contains, desc_card, has_edge, neighbors, resolve, top_of, truncate, Address, Cardinality, DslError,
    ExprStep, GraphExpr, Index, Links, Region, Step, Verdict, VertexSet,
};
use crate::ends::{end_space, RaySchema, Selection};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error("invalid tree: {0}")]
    Invalid(String),
    #[error("outside the supported catalog: {0}")]
    Unknown(String),
    #[error("no such tree exists: {0}")]
    Nonexistent(String),
    #[error("end class `{0}` is not dominated")]
    NotAllDominated(String),
    #[error("no rank: {0}")]
    NoRank(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SpanError> {
    Err(SpanError::Invalid(msg.into()))
}

fn unknown<T>(msg: impl Into<String>) -> Result<T, SpanError> {
    Err(SpanError::Unknown(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parent {
    Root,
    Of(Address),
    Absent,
}

impl Parent {
    fn prefixed(self, p: &[Step]) -> Parent {
        match self {
            Parent::Of(a) => Parent::Of(a.prefixed(p)),
            x => x,
        }
    }
}

/// How the path `P` of an assembled part sits in the anchor tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PartShape {
    /// A finite root path; local labels in order from the root.
    Path { labels: Vec<String> },
    /// A ray: `prefix` anchor vertices above the attachment line, then the
    /// line itself. Locally the ray is the spine of the local expression.
    Ray { prefix: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembledPart {
    pub region: Region,
    /// The member together with its path `P`.
    pub local: GraphExpr,
    pub shape: PartShape,
    /// Spanning tree of `local`.
    pub tree: TreeRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedPart {
    pub region: Region,
    /// Spanning tree of a member (in member-local addresses).
    pub tree: TreeRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TreeRule {
    Empty,
    /// The expression is a tree already (ray, comb, star, `T_κ`).
    Structural,
    /// Complete graph: `k:n` hangs below `k:(n-1)`.
    CliqueLine,
    /// Complete graph: every vertex hangs below `k:0`.
    CliqueStar,
    /// Finite graph with an explicit parent table.
    Finite { parents: Vec<(String, Option<String>)> },
    Union { left: Box<TreeRule>, right: Box<TreeRule> },
    /// The same rule inside every copy.
    Copies { inner: Box<TreeRule> },
    /// A rule on the base of a wrapper; the wrapper's own vertices are absent.
    Base { inner: Box<TreeRule> },
    /// The joined vertex becomes the root; roots of the base forest hang below it.
    NewRoot { base: Box<TreeRule> },
    /// For an added edge `below–root`: the base piece rooted at `root` hangs below `below`.
    Graft { base: Box<TreeRule>, below: Address, root: Address },
    /// The joined vertex is the root and every attachment vertex hangs below it;
    /// other base vertices keep their base parent.
    Fan { base: Box<TreeRule> },
    /// `T_ℵ₁` with tops: tops hang below the tree root, joined nodes below the
    /// top of their zero-extended branch, the others below their tree parent.
    TopsFan,
    /// Down-closure of finitely many vertices.
    DownClosure { tree: Box<TreeRule>, of: Vec<Address> },
    /// Vertices of depth at most `depth`.
    DownToDepth { tree: Box<TreeRule>, depth: u64 },
    /// `base` rerouted along a ray whose vertices lie in order on one ray of `base`.
    Reroute { base: Box<TreeRule>, ray: RaySchema },
    /// An anchor tree plus member trees joined by least edges.
    Merged { anchor: Box<TreeRule>, parts: Vec<MergedPart> },
    /// An anchor tree plus, per member, a tree of the member and its anchor path.
    Assembled { anchor: Box<TreeRule>, parts: Vec<AssembledPart> },
    /// Explicit parent overrides (`None` = root).
    Override { base: Box<TreeRule>, entries: Vec<(Address, Option<Address>)> },
}

const CHAIN_LIMIT: usize = 100_000;

fn node(s: Vec<Index>) -> Address {
    Address::single(Step::Node(s))
}

impl TreeRule {
    pub fn boxed(self) -> Box<TreeRule> {
        Box::new(self)
    }

    pub fn parent(&self, e: &GraphExpr, v: &Address) -> Result<Parent, SpanError> {
        if !resolve(e, v) {
            return Ok(Parent::Absent);
        }
        self.parent_in(e, v)
    }

    fn parent_in(&self, e: &GraphExpr, v: &Address) -> Result<Parent, SpanError> {
        let s = v.steps();
        match (self, e) {
            (TreeRule::Empty, _) => Ok(Parent::Absent),
            (TreeRule::Structural, _) => structural(e, s),
            (TreeRule::CliqueLine, GraphExpr::Complete(_)) => match s {
                [Step::K(Index::Nat(0))] => Ok(Parent::Root),
                [Step::K(Index::Nat(n))] => Ok(Parent::Of(Address::single(Step::K(Index::Nat(n - 1))))),
                _ => unknown("clique line through an uncountable clique"),
            },
            (TreeRule::CliqueStar, GraphExpr::Complete(_)) => match s {
                [Step::K(Index::Nat(0))] => Ok(Parent::Root),
                _ => Ok(Parent::Of(Address::single(Step::K(Index::Nat(0))))),
            },
            (TreeRule::Finite { parents }, GraphExpr::Finite { .. }) => match s {
                [Step::Label(l)] => Ok(match parents.iter().find(|(x, _)| x == l) {
                    Some((_, Some(p))) => Parent::Of(Address::single(Step::Label(p.clone()))),
                    Some((_, None)) => Parent::Root,
                    None => Parent::Absent,
                }),
                _ => Ok(Parent::Absent),
            },
            (TreeRule::Union { left, right }, GraphExpr::Union(l, r)) => match s {
                [Step::Left, rest @ ..] => Ok(left.parent_in(l, &Address(rest.to_vec()))?.prefixed(&[Step::Left])),
                [Step::Right, rest @ ..] => {
                    Ok(right.parent_in(r, &Address(rest.to_vec()))?.prefixed(&[Step::Right]))
                }
                _ => Ok(Parent::Absent),
            },
            (TreeRule::Copies { inner }, GraphExpr::Copies(_, ie)) => match s {
                [Step::Copy(i), rest @ ..] => {
                    Ok(inner.parent_in(ie, &Address(rest.to_vec()))?.prefixed(&[Step::Copy(i.clone())]))
                }
                _ => Ok(Parent::Absent),
            },
            (TreeRule::Base { inner }, _) => {
                let be = base_of(e)?;
                if resolve(be, v) {
                    inner.parent_in(be, v)
                } else {
                    Ok(Parent::Absent)
                }
            }
            (TreeRule::NewRoot { base }, GraphExpr::JoinVertex { base: be, label, .. }) => {
                if is_label(s, label) {
                    return Ok(Parent::Root);
                }
                Ok(match base.parent_in(be, v)? {
                    Parent::Root => Parent::Of(Address::single(Step::Label(label.clone()))),
                    p => p,
                })
            }
            (TreeRule::Graft { base, below, root }, GraphExpr::AddEdge { base: be, .. }) => {
                if v == root {
                    Ok(Parent::Of(below.clone()))
                } else {
                    base.parent_in(be, v)
                }
            }
            (TreeRule::Fan { base }, GraphExpr::JoinVertex { base: be, label, attach }) => {
                if is_label(s, label) {
                    Ok(Parent::Root)
                } else if contains(be, attach, v) {
                    Ok(Parent::Of(Address::single(Step::Label(label.clone()))))
                } else {
                    match base.parent_in(be, v)? {
                        Parent::Root => invalid(format!("fan: base root {v} is not joined")),
                        p => Ok(p),
                    }
                }
            }
            (TreeRule::TopsFan, GraphExpr::WithTops { adjacency, .. }) => Ok(match s {
                [Step::Node(t)] if t.is_empty() => Parent::Root,
                [Step::Top(_)] => Parent::Of(node(vec![])),
                [Step::Node(t)] if adjacency.joins_depth(t.len()) => Parent::Of(Address::single(top_of(t))),
                [Step::Node(t)] => Parent::Of(node(t[..t.len() - 1].to_vec())),
                _ => Parent::Absent,
            }),
            (TreeRule::DownClosure { tree, of }, _) => {
                let p = tree.parent_in(e, v)?;
                if p == Parent::Absent {
                    return Ok(p);
                }
                for x in of {
                    if ancestors(tree, e, x)?.contains(v) {
                        return Ok(p);
                    }
                }
                Ok(Parent::Absent)
            }
            (TreeRule::DownToDepth { tree, depth }, _) => {
                let p = tree.parent_in(e, v)?;
                if p == Parent::Absent {
                    return Ok(p);
                }
                match bounded_chain(tree, e, v, *depth as usize + 1)? {
                    Some(_) => Ok(p),
                    None => Ok(Parent::Absent),
                }
            }
            (TreeRule::Reroute { base, ray }, _) => reroute_parent(base, ray, e, v),
            (TreeRule::Merged { anchor, parts }, _) => {
                let p = anchor.parent_in(e, v)?;
                if p != Parent::Absent {
                    return Ok(p);
                }
                for part in parts {
                    if let Some((key, local)) = part.region.locate(v) {
                        return merged_parent(e, part, &key, &local);
                    }
                }
                Ok(Parent::Absent)
            }
            (TreeRule::Assembled { anchor, parts }, _) => {
                let p = anchor.parent_in(e, v)?;
                if p != Parent::Absent {
                    return Ok(p);
                }
                for part in parts {
                    if let Some((key, local)) = part.region.locate(v) {
                        return assembled_parent(anchor, e, part, &key, &local);
                    }
                }
                Ok(Parent::Absent)
            }
            (TreeRule::Override { base, entries }, _) => match entries.iter().find(|(x, _)| x == v) {
                Some((_, Some(p))) => Ok(Parent::Of(p.clone())),
                Some((_, None)) => Ok(Parent::Root),
                None => base.parent_in(e, v),
            },
            (r, e) => invalid(format!("rule `{}` does not apply to `{e}`", r.name())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TreeRule::Empty => "empty",
            TreeRule::Structural => "structural",
            TreeRule::CliqueLine => "clique_line",
            TreeRule::CliqueStar => "clique_star",
            TreeRule::Finite { .. } => "finite",
            TreeRule::Union { .. } => "union",
            TreeRule::Copies { .. } => "copies",
            TreeRule::Base { .. } => "base",
            TreeRule::NewRoot { .. } => "new_root",
            TreeRule::Graft { .. } => "graft",
            TreeRule::Fan { .. } => "fan",
            TreeRule::TopsFan => "tops_fan",
            TreeRule::DownClosure { .. } => "down_closure",
            TreeRule::DownToDepth { .. } => "down_to_depth",
            TreeRule::Reroute { .. } => "reroute",
            TreeRule::Merged { .. } => "merged",
            TreeRule::Assembled { .. } => "assembled",
            TreeRule::Override { .. } => "override",
        }
    }
}

fn is_label(s: &[Step], label: &str) -> bool {
    matches!(s, [Step::Label(l)] if l == label)
}

fn base_of(e: &GraphExpr) -> Result<&GraphExpr, SpanError> {
    e.child(&ExprStep::Base)
        .ok_or_else(|| SpanError::Invalid(format!("`{e}` has no base")))
}

fn structural(e: &GraphExpr, s: &[Step]) -> Result<Parent, SpanError> {
    let one = |st: Step| Ok(Parent::Of(Address::single(st)));
    match (e, s) {
        (GraphExpr::Ray | GraphExpr::Comb(_), [Step::R(0)]) => Ok(Parent::Root),
        (GraphExpr::Ray | GraphExpr::Comb(_), [Step::R(n)]) => one(Step::R(n - 1)),
        (GraphExpr::Comb(_), [Step::Tooth(n, 1)]) => one(Step::R(*n)),
        (GraphExpr::Comb(_), [Step::Tooth(n, k)]) => one(Step::Tooth(*n, k - 1)),
        (GraphExpr::Star(_), [Step::Center]) => Ok(Parent::Root),
        (GraphExpr::Star(_), [Step::Leaf(_)]) => one(Step::Center),
        (GraphExpr::Tree(_), [Step::Node(t)]) => match t.split_last() {
            None => Ok(Parent::Root),
            Some((_, p)) => one(Step::Node(p.to_vec())),
        },
        _ => invalid(format!("`{e}` is not a tree constructor")),
    }
}

/// `v, parent(v), …, root`.
pub fn ancestors(rule: &TreeRule, e: &GraphExpr, v: &Address) -> Result<Vec<Address>, SpanError> {
    bounded_chain(rule, e, v, CHAIN_LIMIT)?
        .ok_or_else(|| SpanError::Invalid(format!("no root within {CHAIN_LIMIT} steps of {v}")))
}

/// The root chain of `v` if it has at most `limit` edges.
fn bounded_chain(rule: &TreeRule, e: &GraphExpr, v: &Address, limit: usize) -> Result<Option<Vec<Address>>, SpanError> {
    let mut chain = vec![v.clone()];
    let mut seen = HashSet::from([v.clone()]);
    let mut cur = v.clone();
    loop {
        match rule.parent(e, &cur)? {
            Parent::Root => return Ok(Some(chain)),
            Parent::Absent => return invalid(format!("{cur} is not in the tree")),
            Parent::Of(u) => {
                if !seen.insert(u.clone()) {
                    return invalid(format!("cycle through {u}"));
                }
                if chain.len() > limit {
                    return Ok(None);
                }
                chain.push(u.clone());
                cur = u;
            }
        }
    }
}

/// Next vertex from `v` towards `target`, `None` when `v == target`.
fn toward(rule: &TreeRule, e: &GraphExpr, v: &Address, target: &Address) -> Result<Option<Address>, SpanError> {
    if v == target {
        return Ok(None);
    }
    let chain = ancestors(rule, e, target)?;
    if let Some(pos) = chain.iter().position(|x| x == v) {
        return Ok(Some(chain[pos - 1].clone()));
    }
    match rule.parent(e, v)? {
        Parent::Of(u) => Ok(Some(u)),
        _ => invalid(format!("{v} is a root but not an ancestor of {target}")),
    }
}

/// Least element of a descriptor among the first vertices of `e`.
pub fn least_member(e: &GraphExpr, d: &VertexSet) -> Option<Address> {
    if let VertexSet::Explicit(v) = d {
        return v.iter().filter(|a| resolve(e, a)).min().cloned();
    }
    truncate(e, 3, 2).vertices.into_iter().filter(|a| contains(e, d, a)).min()
}

/// Least `(anchor vertex, member vertex)` edge of an attachment.
pub fn least_edge(host: &GraphExpr, member: &GraphExpr, att: &[Links]) -> Option<(Address, Address)> {
    att.iter()
        .filter_map(|l| match l {
            Links::Vertex { host: h, local } => Some((h.clone(), least_member(member, local)?)),
            Links::Line { start, local, .. } => Some((l.line_host(*start)?, local.clone())),
            Links::Set { host: h, local } => Some((least_member(host, h)?, least_member(member, local)?)),
        })
        .min()
}

fn merged_parent(e: &GraphExpr, part: &MergedPart, key: &[Index], local: &Address) -> Result<Parent, SpanError> {
    let att = part.region.attachment(key);
    let Some((h, k)) = least_edge(e, &part.region.expr, &att) else {
        return invalid(format!("member {key:?} has no edge to the anchor"));
    };
    let host = |a: &Address| {
        part.region
            .embed
            .host(key, a)
            .ok_or_else(|| SpanError::Invalid(format!("cannot place {a}")))
    };
    match toward(&part.tree, &part.region.expr, local, &k)? {
        None => Ok(Parent::Of(h)),
        Some(u) => Ok(Parent::Of(host(&u)?)),
    }
}

/// Host addresses of the path `P` of one member.
pub struct PathInAnchor {
    pub prefix: Vec<Address>,
    pub line: Option<Links>,
}

impl PathInAnchor {
    pub fn vertex(&self, j: u64) -> Option<Address> {
        match usize::try_from(j).ok().and_then(|j| self.prefix.get(j)) {
            Some(a) => Some(a.clone()),
            None => self.line.as_ref()?.line_host(j - self.prefix.len() as u64),
        }
    }
}

/// Locates the path `P` (down-closure of the attachment in the anchor) for a
/// member with attachment `att`.
pub fn path_in_anchor(
    anchor: &TreeRule,
    e: &GraphExpr,
    att: &[Links],
    shape: &PartShape,
) -> Result<PathInAnchor, SpanError> {
    match shape {
        PartShape::Path { labels } => {
            let mut best: Vec<Address> = Vec::new();
            let mut hosts = Vec::new();
            for l in att {
                let Links::Vertex { host, .. } = l else {
                    return unknown("path shape with a non-vertex attachment");
                };
                hosts.push(host.clone());
                let c = ancestors(anchor, e, host)?;
                if c.len() > best.len() {
                    best = c;
                }
            }
            best.reverse();
            if hosts.iter().any(|h| !best.contains(h)) {
                return invalid("attachment is not a chain of the anchor");
            }
            if best.len() != labels.len() {
                return unknown("members attach along paths of different lengths");
            }
            Ok(PathInAnchor { prefix: best, line: None })
        }
        PartShape::Ray { prefix } => {
            let [l @ Links::Line { .. }] = att else {
                return unknown("ray shape needs exactly one line attachment");
            };
            let first = l.line_host(0).expect("line link");
            let mut up = ancestors(anchor, e, &first)?;
            up.remove(0);
            up.reverse();
            if up.len() != *prefix {
                return unknown("members sit at different anchor depths");
            }
            Ok(PathInAnchor { prefix: up, line: Some(l.clone()) })
        }
    }
}

fn assembled_parent(
    anchor: &TreeRule,
    e: &GraphExpr,
    part: &AssembledPart,
    key: &[Index],
    local: &Address,
) -> Result<Parent, SpanError> {
    let att = part.region.attachment(key);
    let p = path_in_anchor(anchor, e, &att, &part.shape)?;
    let p0 = match &part.shape {
        PartShape::Path { labels } => Address::single(Step::Label(labels[0].clone())),
        PartShape::Ray { .. } => Address::single(Step::R(0)),
    };
    let Some(next) = toward(&part.tree, &part.local, local, &p0)? else {
        return invalid("member vertex coincides with the path root");
    };
    let on_path = match (&part.shape, next.steps()) {
        (PartShape::Path { labels }, [Step::Label(l)]) => labels.iter().position(|x| x == l).map(|j| j as u64),
        (PartShape::Ray { .. }, [Step::R(j)]) => Some(*j),
        _ => None,
    };
    let host = match on_path {
        Some(j) => p.vertex(j),
        None => part.region.embed.host(key, &next),
    };
    host.map(Parent::Of)
        .ok_or_else(|| SpanError::Invalid(format!("cannot place {next}")))
}

fn reroute_parent(base: &TreeRule, ray: &RaySchema, e: &GraphExpr, v: &Address) -> Result<Parent, SpanError> {
    let p = base.parent_in(e, v)?;
    if p == Parent::Absent {
        return Ok(p);
    }
    // is v = R_i for some i ≥ 1?
    if let Some(i) = ray_index(e, ray, v) {
        if i >= 1 {
            return Ok(Parent::Of(ray.vertex(i - 1)));
        }
        return Ok(p);
    }
    let dv = ancestors(base, e, v)?.len();
    let d0 = ancestors(base, e, &ray.vertex(0))?.len();
    if dv <= d0 {
        return Ok(p);
    }
    // first R_i strictly deeper than v; depths grow by at least one per index
    for i in 1..=(dv - d0 + 1) as u64 {
        let ri = ray.vertex(i);
        let chain = ancestors(base, e, &ri)?;
        if chain.len() > dv {
            return Ok(match chain.iter().position(|x| x == v) {
                Some(pos) => Parent::Of(chain[pos - 1].clone()),
                None => p,
            });
        }
    }
    Ok(p)
}

fn ray_index(e: &GraphExpr, ray: &RaySchema, v: &Address) -> Option<u64> {
    let rest = v.steps().strip_prefix(ray.addr.as_slice())?;
    let sub = crate::dsl::subexpr(e, &ray.region.instantiate(&Index::Nat(0)))?;
    let n = crate::dsl::line_position(sub, &ray.kind, rest)?;
    (n >= ray.start && (n - ray.start).is_multiple_of(ray.step)).then(|| (n - ray.start) / ray.step)
}

fn combine(v: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Yes;
    for x in v {
        match x {
            Verdict::No => return Verdict::No,
            Verdict::Unknown => out = Verdict::Unknown,
            Verdict::Yes => {}
        }
    }
    out
}

/// Whether the tree contains no ray.
pub fn is_rayless(rule: &TreeRule, e: &GraphExpr) -> Verdict {
    match (rule, e) {
        (TreeRule::Empty | TreeRule::Finite { .. } | TreeRule::CliqueStar | TreeRule::TopsFan, _) => Verdict::Yes,
        (TreeRule::DownClosure { .. } | TreeRule::DownToDepth { .. }, _) => Verdict::Yes,
        (TreeRule::Structural, GraphExpr::Star(_) | GraphExpr::Tree(Cardinality::Finite(0))) => Verdict::Yes,
        (TreeRule::Structural, _) => Verdict::No,
        (TreeRule::CliqueLine, GraphExpr::Complete(k)) => Verdict::from_bool(k.is_finite()),
        (TreeRule::Union { left, right }, GraphExpr::Union(l, r)) => combine([is_rayless(left, l), is_rayless(right, r)]),
        (TreeRule::Copies { inner }, GraphExpr::Copies(_, ie)) => is_rayless(inner, ie),
        (TreeRule::Base { inner: b } | TreeRule::NewRoot { base: b } | TreeRule::Graft { base: b, .. }, _) => {
            match base_of(e) {
                Ok(be) => is_rayless(b, be),
                Err(_) => Verdict::Unknown,
            }
        }
        (TreeRule::Fan { base }, GraphExpr::JoinVertex { base: be, attach, .. }) => fan_rayless(base, be, attach),
        (TreeRule::Reroute { .. }, _) => Verdict::No,
        (TreeRule::Override { base, .. }, _) => is_rayless(base, e),
        (TreeRule::Merged { anchor, parts }, _) => combine(
            std::iter::once(is_rayless(anchor, e)).chain(parts.iter().map(|p| is_rayless(&p.tree, &p.region.expr))),
        ),
        (TreeRule::Assembled { anchor, parts }, _) => combine(
            std::iter::once(is_rayless(anchor, e)).chain(parts.iter().map(|p| match p.shape {
                // the member side of a tree containing the ray P
                PartShape::Ray { .. } => match tree_ends(&p.tree, &p.local) {
                    Ok(t) if t.image.iter().filter(|(id, s)| id != "base/ray" && !s.is_none()).count() == 0 => {
                        Verdict::Yes
                    }
                    _ => Verdict::Unknown,
                },
                PartShape::Path { .. } => is_rayless(&p.tree, &p.local),
            })),
        ),
        _ => Verdict::Unknown,
    }
}

/// A fan tree has a ray only if some ray of the base tree eventually avoids
/// the attachment. Base rays are line rays; we require the attachment to hit
/// every window of eight consecutive positions.
fn fan_rayless(base: &TreeRule, be: &GraphExpr, attach: &VertexSet) -> Verdict {
    if is_rayless(base, be) == Verdict::Yes {
        return Verdict::Yes;
    }
    let (Ok(img), Ok(space)) = (tree_ends(base, be), end_space(be)) else {
        return Verdict::Unknown;
    };
    for (id, sel) in &img.image {
        if sel.is_none() {
            continue;
        }
        let Some(c) = space.class(id) else { return Verdict::Unknown };
        if c.branches {
            return Verdict::Unknown;
        }
        let hits: Vec<bool> = (0..64).map(|n| contains(be, attach, &c.ray.vertex(n))).collect();
        if !hits.windows(8).all(|w| w.iter().any(|&h| h)) {
            return Verdict::Unknown;
        }
    }
    Verdict::Yes
}

/// Ends of the host reached by rays of the tree, per host end class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEnds {
    pub image: Vec<(String, Selection)>,
    pub injective: bool,
}

fn prefixed(img: Vec<(String, Selection)>, p: &str) -> Vec<(String, Selection)> {
    img.into_iter().map(|(id, s)| (format!("{p}/{id}"), s)).collect()
}

fn raw_ends(rule: &TreeRule, e: &GraphExpr) -> Result<Vec<(String, Selection)>, SpanError> {
    let all = |id: &str| Ok(vec![(id.to_string(), Selection::All)]);
    match (rule, e) {
        (TreeRule::Empty | TreeRule::Finite { .. } | TreeRule::CliqueStar | TreeRule::TopsFan, _) => Ok(vec![]),
        (TreeRule::DownClosure { .. } | TreeRule::DownToDepth { .. }, _) => Ok(vec![]),
        (TreeRule::Structural, GraphExpr::Ray | GraphExpr::Comb(_) | GraphExpr::Tree(Cardinality::Finite(1))) => {
            all("ray")
        }
        (TreeRule::Structural, GraphExpr::Tree(Cardinality::Finite(0)) | GraphExpr::Star(_)) => Ok(vec![]),
        (TreeRule::Structural, GraphExpr::Tree(_)) => all("branches"),
        (TreeRule::CliqueLine, GraphExpr::Complete(k)) if k.is_finite() => Ok(vec![]),
        (TreeRule::CliqueLine, GraphExpr::Complete(_)) => all("clique"),
        (TreeRule::Union { left, right }, GraphExpr::Union(l, r)) => {
            let mut v = prefixed(raw_ends(left, l)?, "left");
            v.extend(prefixed(raw_ends(right, r)?, "right"));
            Ok(v)
        }
        (TreeRule::Copies { inner }, GraphExpr::Copies(_, ie)) => Ok(prefixed(raw_ends(inner, ie)?, "copy:*")),
        (TreeRule::Base { inner: b } | TreeRule::NewRoot { base: b } | TreeRule::Graft { base: b, .. }, _) => {
            Ok(prefixed(raw_ends(b, base_of(e)?)?, "base"))
        }
        (TreeRule::Fan { .. }, _) => match is_rayless(rule, e) {
            Verdict::Yes => Ok(vec![]),
            _ => unknown("fan tree with rays"),
        },
        (TreeRule::Reroute { base, .. } | TreeRule::Override { base, .. }, _) => raw_ends(base, e),
        (TreeRule::Merged { anchor, parts }, _) => {
            for p in parts {
                if !raw_ends(&p.tree, &p.region.expr)?.iter().all(|(_, s)| s.is_none()) {
                    return unknown("member tree with rays");
                }
            }
            raw_ends(anchor, e)
        }
        (TreeRule::Assembled { anchor, parts }, _) => {
            for p in parts {
                let skip = matches!(p.shape, PartShape::Ray { .. });
                let own = raw_ends(&p.tree, &p.local)?;
                if own.iter().any(|(id, s)| !s.is_none() && !(skip && id == "base/ray")) {
                    return unknown("member tree with rays of its own");
                }
            }
            raw_ends(anchor, e)
        }
        _ => unknown(format!("ends of rule `{}` on `{e}`", rule.name())),
    }
}

/// End image of a tree in its host, aligned with the host's end classes.
/// Distinct tree classes live in distinct host constructors, so the map is
/// injective whenever it is defined.
pub fn tree_ends(rule: &TreeRule, e: &GraphExpr) -> Result<TreeEnds, SpanError> {
    let raw = raw_ends(rule, e)?;
    let space = end_space(e)?;
    for (id, _) in &raw {
        if space.class(id).is_none() {
            return invalid(format!("tree end class `{id}` is not an end class of the host"));
        }
    }
    let image = space
        .classes
        .iter()
        .map(|c| {
            let s = raw.iter().find(|(id, _)| *id == c.id).map_or(Selection::None, |(_, s)| s.clone());
            (c.id.clone(), s)
        })
        .collect();
    Ok(TreeEnds { image, injective: true })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    NormalSpanning,
    EndFaithful,
    Rayless,
    /// A tree that need not span (normal, rayless or merged pieces).
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub rayless: Verdict,
    /// Host end classes reached by rays of the tree.
    pub end_classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDescriptor {
    pub schema: u32,
    pub kind: TreeKind,
    pub host: GraphExpr,
    pub root: Option<Address>,
    pub rule: TreeRule,
    pub summary: TreeSummary,
}

impl TreeDescriptor {
    pub fn new(kind: TreeKind, host: GraphExpr, rule: TreeRule) -> Self {
        let root = truncate(&host, 2, 2)
            .vertices
            .iter()
            .find(|v| matches!(rule.parent(&host, v), Ok(Parent::Root | Parent::Of(_))))
            .and_then(|v| ancestors(&rule, &host, v).ok())
            .and_then(|c| c.last().cloned());
        let end_classes = tree_ends(&rule, &host)
            .map(|t| t.image.into_iter().filter(|(_, s)| !s.is_none()).map(|(id, _)| id).collect())
            .unwrap_or_default();
        let summary = TreeSummary { rayless: is_rayless(&rule, &host), end_classes };
        TreeDescriptor { schema: 1, kind, host, root, rule, summary }
    }

    pub fn parent(&self, v: &Address) -> Result<Parent, SpanError> {
        self.rule.parent(&self.host, v)
    }

    pub fn spans(&self) -> bool {
        self.kind != TreeKind::Partial
    }
}

/// One named check on a truncation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, failures: Vec<String>) -> Self {
        let ok = failures.is_empty();
        let detail = failures.into_iter().take(3).collect::<Vec<_>>().join("; ");
        Check { name: name.to_string(), ok, detail }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckOpts {
    pub spanning: bool,
    pub normal: bool,
    pub covers: Option<VertexSet>,
}

/// Tree edges of a truncation as index pairs `(child, parent)`.
pub fn tree_edges(desc: &TreeDescriptor, t: &crate::dsl::FiniteTruncation) -> Vec<(usize, usize)> {
    let ps = par::map(&t.vertices, |v| desc.parent(v));
    ps.iter()
        .enumerate()
        .filter_map(|(i, p)| match p {
            Ok(Parent::Of(u)) => t.index_of(u).map(|j| (i, j)),
            _ => None,
        })
        .collect()
}

/// Spanning, edge, acyclicity, connectivity and (optionally) normality and
/// coverage checks of a tree on the truncation `(d, w)` of its host.
pub fn check_on_truncation(desc: &TreeDescriptor, d: u64, w: u64, opts: &CheckOpts) -> Vec<Check> {
    let host = &desc.host;
    let t = truncate(host, d, w);
    let parents = par::map(&t.vertices, |v| desc.parent(v));
    let chains = par::map(&t.vertices, |v| match desc.parent(v) {
        Ok(Parent::Absent) => None,
        _ => Some(ancestors(&desc.rule, host, v)),
    });
    let mut out = Vec::new();
    let mut eval = Vec::new();
    for (v, p) in t.vertices.iter().zip(&parents) {
        if let Err(err) = p {
            eval.push(format!("{v}: {err}"));
        }
    }
    out.push(Check::new("evaluates", eval));
    if opts.spanning {
        let missing = t
            .vertices
            .iter()
            .zip(&parents)
            .filter(|(_, p)| matches!(p, Ok(Parent::Absent)))
            .map(|(v, _)| format!("{v} not covered"))
            .collect();
        out.push(Check::new("spanning", missing));
    }
    let bad_edges = t
        .vertices
        .iter()
        .zip(&parents)
        .filter_map(|(v, p)| match p {
            Ok(Parent::Of(u)) if !has_edge(host, v, u) => Some(format!("{v}–{u} is not an edge")),
            _ => None,
        })
        .collect();
    out.push(Check::new("edges", bad_edges));
    let mut cyc = Vec::new();
    let mut roots = Vec::new();
    for (v, c) in t.vertices.iter().zip(&chains) {
        match c {
            Some(Ok(c)) => roots.push(c.last().cloned().expect("nonempty chain")),
            Some(Err(err)) => cyc.push(format!("{v}: {err}")),
            None => {}
        }
    }
    out.push(Check::new("acyclic", cyc));
    roots.sort();
    roots.dedup();
    let conn = if roots.len() > 1 {
        vec![format!("{} roots: {} and {}", roots.len(), roots[0], roots[1])]
    } else {
        vec![]
    };
    out.push(Check::new("connected", conn));
    if opts.normal {
        let comparable = |i: usize, j: usize| match (&chains[i], &chains[j]) {
            (Some(Ok(ci)), Some(Ok(cj))) => ci.contains(&t.vertices[j]) || cj.contains(&t.vertices[i]),
            _ => true,
        };
        let mut bad = Vec::new();
        for (i, j) in t.edges() {
            if chains[i].is_some() && chains[j].is_some() && !comparable(i, j) {
                bad.push(format!("{}–{} joins incomparable vertices", t.vertices[i], t.vertices[j]));
            }
        }
        // T–T paths through the rest of the graph
        let outside: Vec<bool> = chains.iter().map(Option::is_none).collect();
        for k in t.components(&outside) {
            let mut nb: Vec<usize> = (0..t.len())
                .filter(|&u| !outside[u] && k.iter().any(|&v| t.adjacent(u, v)))
                .collect();
            nb.dedup();
            for a in 0..nb.len() {
                for b in a + 1..nb.len() {
                    if !comparable(nb[a], nb[b]) {
                        bad.push(format!(
                            "{} and {} are joined through {}",
                            t.vertices[nb[a]], t.vertices[nb[b]], t.vertices[k[0]]
                        ));
                    }
                }
            }
        }
        out.push(Check::new("normal", bad));
    }
    if let Some(u) = &opts.covers {
        let missing = t
            .vertices
            .iter()
            .zip(&parents)
            .filter(|(v, p)| contains(host, u, v) && matches!(p, Ok(Parent::Absent)))
            .map(|(v, _)| format!("{v} in U is not covered"))
            .collect();
        out.push(Check::new("covers", missing));
    }
    out
}

/// Truncation evidence that a tree reflects ends. Separators `X` are balls
/// around the root inside the `(d, w)` truncation; components `K` of `G − X`
/// are approximated one level further out, and continuation is read off one
/// more level beyond that. Each `K` meets at most one component of `T − X`
/// that continues, and exactly one when `K` itself continues, has only
/// vertices of finite degree, and `exact` is set.
pub fn reflect_evidence(desc: &TreeDescriptor, d: u64, w: u64, exact: bool) -> Result<(), String> {
    let host = &desc.host;
    let t = truncate(host, d, w);
    let mid = truncate(host, d + 1, w + 1);
    let outer = truncate(host, d + 2, w + 1);
    let nested = |a: &crate::dsl::FiniteTruncation, b: &crate::dsl::FiniteTruncation| a.vertices.iter().all(|v| b.index_of(v).is_some());
    if !nested(&t, &mid) || !nested(&mid, &outer) {
        return Err("truncations are not nested".into());
    }
    let n = mid.len();
    let parents = par::map(&outer.vertices, |v| desc.parent(v));
    // tree edges and host edges from `mid` to the rest of `outer` (or beyond)
    let mut tree_out = vec![false; n];
    let mut host_out = vec![false; n];
    let mut infinite_deg = vec![false; n];
    for (i, v) in outer.vertices.iter().enumerate() {
        let inside = mid.index_of(v);
        match (&parents[i], inside) {
            (Ok(Parent::Of(u)), Some(j)) if mid.index_of(u).is_none() => tree_out[j] = true,
            (Ok(Parent::Of(u)), None) => {
                if let Some(j) = mid.index_of(u) {
                    tree_out[j] = true;
                }
            }
            _ => {}
        }
        if let Some(j) = inside {
            host_out[j] = outer.adj[i].iter().any(|&k| mid.index_of(&outer.vertices[k]).is_none());
            infinite_deg[j] =
                neighbors(host, v).is_ok_and(|nb| nb.families.iter().any(|f| !desc_card(host, f).is_finite()));
        }
    }
    let Some(root) = desc.root.as_ref().and_then(|r| t.index_of(r)) else {
        return Ok(());
    };
    let mut dist = vec![usize::MAX; t.len()];
    dist[root] = 0;
    let mut q = std::collections::VecDeque::from([root]);
    while let Some(v) = q.pop_front() {
        for &u in &t.adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                q.push_back(u);
            }
        }
    }
    for r in 0..3 {
        let keep: Vec<bool> = mid
            .vertices
            .iter()
            .map(|v| t.index_of(v).is_none_or(|i| dist[i] > r))
            .collect();
        // components of T − X over `outer`: fragments inside `mid` may join
        // through the shell beyond it
        let in_x = |v: &Address| t.index_of(v).is_some_and(|i| dist[i] <= r);
        let mut uf: Vec<usize> = (0..outer.len()).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            uf[x] = r;
            r
        }
        for (i, v) in outer.vertices.iter().enumerate() {
            if let Ok(Parent::Of(u)) = &parents[i] {
                if let Some(j) = outer.index_of(u).filter(|_| !in_x(v) && !in_x(u)) {
                    let (a, b) = (find(&mut uf, i), find(&mut uf, j));
                    uf[a] = b;
                }
            }
        }
        let at_outer: Vec<usize> = mid.vertices.iter().map(|v| outer.index_of(v).expect("nested")).collect();
        for k in mid.components(&keep) {
            let mut tails: Vec<usize> = k.iter().filter(|&&v| tree_out[v]).map(|&v| find(&mut uf, at_outer[v])).collect();
            tails.sort();
            tails.dedup();
            // a vertex of infinite degree has neighbours outside every
            // truncation, so its component here may be a fragment
            let whole = !k.iter().any(|&v| infinite_deg[v]);
            let continues = whole && k.iter().any(|&v| host_out[v]);
            let label = mid.vertices[k[0]].to_string();
            if tails.len() > 1 {
                return Err(format!("radius {r}: component at {label} holds {} tree tails", tails.len()));
            }
            if exact && continues && tails.is_empty() {
                return Err(format!("radius {r}: component at {label} continues but holds no tree tail"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn all_ok(desc: &TreeDescriptor, d: u64, w: u64, normal: bool) {
        let opts = CheckOpts { spanning: desc.spans(), normal, covers: None };
        for c in check_on_truncation(desc, d, w, &opts) {
            assert!(c.ok, "{} failed on {}: {}", c.name, desc.host, c.detail);
        }
    }

    #[test]
    fn structural_trees() {
        for src in ["ray", "comb(2)", "star(aleph0)", "tree(aleph1)", "tree(3)"] {
            let desc = TreeDescriptor::new(TreeKind::NormalSpanning, parse(src).unwrap(), TreeRule::Structural);
            all_ok(&desc, 4, 3, true);
        }
        let comb = TreeDescriptor::new(TreeKind::NormalSpanning, parse("comb(2)").unwrap(), TreeRule::Structural);
        assert_eq!(comb.root, Some(Address::single(Step::R(0))));
        assert_eq!(comb.summary.rayless, Verdict::No);
        assert_eq!(comb.summary.end_classes, vec!["ray".to_string()]);
    }

    #[test]
    fn clique_line_is_normal_and_star_is_not() {
        let k = parse("complete(aleph0)").unwrap();
        all_ok(&TreeDescriptor::new(TreeKind::NormalSpanning, k.clone(), TreeRule::CliqueLine), 4, 5, true);
        let star = TreeDescriptor::new(TreeKind::Rayless, k, TreeRule::CliqueStar);
        all_ok(&star, 4, 5, false);
        let opts = CheckOpts { spanning: true, normal: true, covers: None };
        let normal = check_on_truncation(&star, 4, 5, &opts).into_iter().find(|c| c.name == "normal").unwrap();
        assert!(!normal.ok);
    }

    #[test]
    fn tops_fan_spans_without_rays() {
        for adj in ["whole_ray", "every_2nd"] {
            let e = parse(&format!("with_tops(tree(aleph1), all, {adj})")).unwrap();
            let desc = TreeDescriptor::new(TreeKind::Rayless, e, TreeRule::TopsFan);
            assert_eq!(desc.summary.rayless, Verdict::Yes);
            all_ok(&desc, 4, 3, false);
        }
    }

    #[test]
    fn joins_and_grafts() {
        let e = parse("join_vertex(copies(aleph0, star(aleph0)), root, centers(.))").unwrap();
        let rule = TreeRule::NewRoot { base: TreeRule::Copies { inner: TreeRule::Structural.boxed() }.boxed() };
        all_ok(&TreeDescriptor::new(TreeKind::NormalSpanning, e, rule), 4, 3, true);
        let e = parse("add_edge(union(ray, ray), left/r0, right/r0)").unwrap();
        let rule = TreeRule::Graft {
            base: TreeRule::Union { left: TreeRule::Structural.boxed(), right: TreeRule::Structural.boxed() }.boxed(),
            below: "left/r0".parse().unwrap(),
            root: "right/r0".parse().unwrap(),
        };
        let desc = TreeDescriptor::new(TreeKind::NormalSpanning, e, rule);
        all_ok(&desc, 5, 2, true);
        assert_eq!(desc.summary.end_classes.len(), 2);
        let fan = TreeDescriptor::new(
            TreeKind::Rayless,
            parse("join_vertex(comb(1), d, prog(spine(.), 0, 2))").unwrap(),
            TreeRule::Fan { base: TreeRule::Structural.boxed() },
        );
        assert_eq!(fan.summary.rayless, Verdict::Yes);
        all_ok(&fan, 5, 2, false);
    }

    #[test]
    fn broken_rules_are_caught() {
        let e = parse("ray").unwrap();
        let cyc = TreeRule::Override {
            base: TreeRule::Structural.boxed(),
            entries: vec![("r0".parse().unwrap(), Some("r1".parse().unwrap()))],
        };
        let desc = TreeDescriptor::new(TreeKind::NormalSpanning, e.clone(), cyc);
        let opts = CheckOpts { spanning: true, normal: true, covers: None };
        assert!(check_on_truncation(&desc, 4, 1, &opts).iter().any(|c| c.name == "acyclic" && !c.ok));
        let jump = TreeRule::Override {
            base: TreeRule::Structural.boxed(),
            entries: vec![("r3".parse().unwrap(), Some("r0".parse().unwrap()))],
        };
        let desc = TreeDescriptor::new(TreeKind::NormalSpanning, e, jump);
        assert!(check_on_truncation(&desc, 4, 1, &opts).iter().any(|c| c.name == "edges" && !c.ok));
    }

    #[test]
    fn reroute_along_a_sparse_ray() {
        let e = parse("complete(aleph0)").unwrap();
        let ray = RaySchema {
            region: crate::dsl::RegionPath::root(),
            addr: vec![],
            kind: crate::dsl::LineKind::Clique,
            start: 0,
            step: 2,
        };
        let desc =
            TreeDescriptor::new(TreeKind::Partial, e, TreeRule::Reroute { base: TreeRule::CliqueLine.boxed(), ray });
        all_ok(&desc, 4, 9, false);
        let k = |n| Address::single(Step::K(Index::Nat(n)));
        assert_eq!(desc.parent(&k(4)).unwrap(), Parent::Of(k(2)));
        assert_eq!(desc.parent(&k(3)).unwrap(), Parent::Of(k(4)));
    }
}
