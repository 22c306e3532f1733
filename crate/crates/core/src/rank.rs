//! Ideal ranks: ideals, rank search with witnesses, no-rank certificates,
//! Schmidt's rank, κ-rank and normal rank, and the translation between
//! ranks and rayless tree-decompositions.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dsl::{
    components_after_deletion, contains, desc_card, is_connected, subexpr, truncate, Address, Cardinality,
    ExprStep, GraphExpr, Index, Region, RegionPath, Step, Verdict, VertexSet,
};
use crate::ends::{end_space, is_dispersed};
use crate::ordinal::Ordinal;
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "ideal", content = "below", rename_all = "snake_case")]
pub enum Ideal {
    FiniteSets,
    /// Sets of size less than the given cardinal.
    SetsBelow(Cardinality),
    /// Sets contained in a normal tree of the host.
    NormallySpanned,
}

fn all_of(v: impl IntoIterator<Item = Verdict>) -> Verdict {
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

fn card_below(c: Cardinality, k: Cardinality) -> Verdict {
    match (c, k) {
        (Cardinality::Uncountable, Cardinality::Uncountable) | (Cardinality::Aleph1, Cardinality::Uncountable) => {
            Verdict::Unknown
        }
        _ => Verdict::from_bool(c < k),
    }
}

impl Ideal {
    /// Membership of a descriptor of `host` (in host coordinates).
    pub fn contains(&self, host: &GraphExpr, d: &VertexSet) -> Verdict {
        match self {
            Ideal::FiniteSets => Verdict::from_bool(desc_card(host, d).is_finite()),
            Ideal::SetsBelow(k) => card_below(desc_card(host, d), *k),
            Ideal::NormallySpanned => normally_spanned(host, d),
        }
    }

    fn name(&self) -> String {
        match self {
            Ideal::FiniteSets => "finite sets".into(),
            Ideal::SetsBelow(k) => format!("sets below {k}"),
            Ideal::NormallySpanned => "normally spanned sets".into(),
        }
    }
}

/// Whether `d` lies in a normal tree of `e`: countable sets and dispersed sets
/// do, levels of a `T_κ` region do (they are dispersed, and there are
/// countably many), and the vertex sets of `T_ℵ₁` with tops and of an
/// uncountable clique do not. Anything else is `Unknown`.
pub fn normally_spanned(e: &GraphExpr, d: &VertexSet) -> Verdict {
    let d = d.normalized();
    if desc_card(e, &d).is_countable() || is_dispersed(e, &d) == Verdict::Yes {
        return Verdict::Yes;
    }
    match &d {
        VertexSet::Union(ms) => all_of(ms.iter().map(|m| normally_spanned(e, m))),
        VertexSet::Minus(a, _) => match normally_spanned(e, a) {
            Verdict::Yes => Verdict::Yes,
            _ => Verdict::Unknown,
        },
        VertexSet::All(p) => match subexpr(e, &p.instantiate(&Index::Nat(0))) {
            Some(sub) => all_spanned(sub, p.has_wildcard()),
            None => Verdict::Unknown,
        },
        _ => Verdict::Unknown,
    }
}

/// `V(sub)` normally spanned in any host containing `sub`; `family` marks
/// sub-expressions repeated over possibly uncountably many copies.
fn all_spanned(sub: &GraphExpr, family: bool) -> Verdict {
    match sub {
        GraphExpr::Tree(_) => Verdict::Yes,
        GraphExpr::Star(_) | GraphExpr::Finite { .. } if !family => Verdict::Yes,
        GraphExpr::Complete(k) if !k.is_countable() => Verdict::No,
        GraphExpr::WithTops { .. } => Verdict::No,
        GraphExpr::Ray | GraphExpr::Comb(_) | GraphExpr::Complete(_) if !family => Verdict::Yes,
        GraphExpr::Union(l, r) => all_of([all_spanned(l, family), all_spanned(r, family)]),
        GraphExpr::Copies(k, inner) => all_spanned(inner, family || !k.is_countable()),
        GraphExpr::JoinVertex { base, .. } | GraphExpr::AddEdge { base, .. } => all_spanned(base, family),
        _ => Verdict::Unknown,
    }
}

/// Where a sub-expression sits inside the host whose ideal we rank against.
#[derive(Debug, Clone)]
enum Frame {
    Region { region: Box<Region>, key: Vec<Index> },
    Sub { path: RegionPath, addr: Vec<Step> },
}

#[derive(Debug, Clone)]
struct Ctx {
    top: GraphExpr,
    frames: Vec<Frame>,
}

impl Ctx {
    fn root(top: &GraphExpr) -> Self {
        Ctx { top: top.clone(), frames: Vec::new() }
    }

    fn with(&self, f: Frame) -> Self {
        let mut c = self.clone();
        c.frames.push(f);
        c
    }

    fn lift(&self, d: &VertexSet) -> Option<VertexSet> {
        let mut d = d.clone();
        for f in self.frames.iter().rev() {
            d = match f {
                Frame::Region { region, key } => region.embed.lift_desc(&region.expr, key, &d)?,
                Frame::Sub { path, addr } => d.lifted(path, addr),
            };
        }
        Some(d)
    }

    fn member(&self, ideal: &Ideal, e: &GraphExpr, d: &VertexSet) -> Verdict {
        match ideal {
            Ideal::NormallySpanned => {
                if self.frames.is_empty() {
                    return normally_spanned(e, d);
                }
                if desc_card(e, d).is_countable() {
                    return Verdict::Yes;
                }
                match self.lift(d) {
                    Some(h) => normally_spanned(&self.top, &h),
                    None => Verdict::Unknown,
                }
            }
            _ => ideal.contains(e, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Child {
    pub region: Region,
    pub witness: PeelingTree,
}

/// Rank witness. Families of isomorphic components share one child.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum PeelingTree {
    /// `V(G)` is in the ideal.
    Base,
    Peel { x: VertexSet, rank: Ordinal, children: Vec<Child> },
}

impl PeelingTree {
    pub fn rank(&self) -> Ordinal {
        match self {
            PeelingTree::Base => Ordinal::zero(),
            PeelingTree::Peel { rank, .. } => rank.clone(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            PeelingTree::Base => 0,
            PeelingTree::Peel { children, .. } => 1 + children.iter().map(|c| c.witness.depth()).max().unwrap_or(0),
        }
    }
}

/// Least ordinal above every child rank.
fn peel_rank(children: &[Child]) -> Ordinal {
    children
        .iter()
        .map(|c| c.witness.rank().succ().expect("small ranks"))
        .max()
        .unwrap_or_else(Ordinal::zero)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Certificate {
    /// An uncountable clique survives deletion of any member of the ideal,
    /// up to a copy of itself.
    UncountableClique { path: RegionPath },
    /// A `T_κ` sub-expression for the ideal of sets below `κ`.
    ContainsTree { path: RegionPath, kappa: Cardinality },
    /// A ray; finite sets never peel a ray away.
    ContainsRay { class: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum RankResult {
    Ranked { rank: Ordinal, witness: PeelingTree },
    NoRank { certificate: Certificate },
    Unknown { reason: String },
}

impl RankResult {
    pub fn rank(&self) -> Option<&Ordinal> {
        match self {
            RankResult::Ranked { rank, .. } => Some(rank),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&PeelingTree> {
        match self {
            RankResult::Ranked { witness, .. } => Some(witness),
            _ => None,
        }
    }

    pub fn is_no_rank(&self) -> bool {
        matches!(self, RankResult::NoRank { .. })
    }

    /// `"2"`, `"no rank"` or `"unknown"`.
    pub fn short(&self) -> String {
        match self {
            RankResult::Ranked { rank, .. } => rank.to_string(),
            RankResult::NoRank { .. } => "no rank".into(),
            RankResult::Unknown { .. } => "unknown".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankOptions {
    /// Try the no-rank rules before searching.
    pub certificates: bool,
    pub max_depth: usize,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions { certificates: true, max_depth: 6 }
    }
}

/// Sub-expressions with their paths; copy families use `copy:*`.
fn subexprs(e: &GraphExpr) -> Vec<(RegionPath, &GraphExpr)> {
    let mut out = vec![(RegionPath::root(), e)];
    let kids: Vec<(ExprStep, &GraphExpr)> = match e {
        GraphExpr::WithTops { base, .. } | GraphExpr::JoinVertex { base, .. } | GraphExpr::AddEdge { base, .. } => {
            vec![(ExprStep::Base, &**base)]
        }
        GraphExpr::Union(l, r) => vec![(ExprStep::Left, &**l), (ExprStep::Right, &**r)],
        GraphExpr::Copies(_, inner) => vec![(ExprStep::AllCopies, &**inner)],
        _ => vec![],
    };
    for (step, k) in kids {
        for (p, s) in subexprs(k) {
            let mut path = vec![step.clone()];
            path.extend(p.0);
            out.push((RegionPath(path), s));
        }
    }
    out
}

fn has_uncountable_clique(e: &GraphExpr) -> bool {
    subexprs(e).iter().any(|(_, s)| matches!(s, GraphExpr::Complete(k) if !k.is_countable()))
}

/// The no-rank rules, in order: uncountable clique, `T_κ` containment, ray.
pub fn no_rank_certificate(e: &GraphExpr, ideal: &Ideal) -> Option<Certificate> {
    let clique_rule = match ideal {
        Ideal::NormallySpanned | Ideal::FiniteSets => true,
        Ideal::SetsBelow(k) => *k <= Cardinality::Aleph1,
    };
    let subs = subexprs(e);
    if clique_rule {
        if let Some((p, _)) = subs.iter().find(|(_, s)| matches!(s, GraphExpr::Complete(k) if !k.is_countable())) {
            return Some(Certificate::UncountableClique { path: p.clone() });
        }
    }
    if let Ideal::SetsBelow(k) = ideal {
        if !k.is_countable() {
            let hit = subs.iter().find(|(_, s)| matches!(s, GraphExpr::Tree(t) if t >= k));
            if let Some((p, _)) = hit {
                return Some(Certificate::ContainsTree { path: p.clone(), kappa: *k });
            }
        }
    }
    if matches!(ideal, Ideal::FiniteSets | Ideal::SetsBelow(Cardinality::Aleph0)) {
        if let Ok(space) = end_space(e) {
            if let Some(c) = space.classes.first() {
                return Some(Certificate::ContainsRay { class: c.id.clone() });
            }
        }
    }
    None
}

/// Re-checks a certificate: the structure it names exists, and for the clique
/// rule every catalog candidate in the ideal leaves an uncountable clique.
pub fn check_certificate(e: &GraphExpr, ideal: &Ideal, cert: &Certificate) -> Result<(), String> {
    let at = |p: &RegionPath| subexpr(e, &p.instantiate(&Index::Nat(0))).ok_or(format!("no sub-expression at `{p}`"));
    match cert {
        Certificate::UncountableClique { path } => {
            if !matches!(at(path)?, GraphExpr::Complete(k) if !k.is_countable()) {
                return Err(format!("`{path}` is not an uncountable clique"));
            }
            let ctx = Ctx::root(e);
            for x in catalog(e) {
                if ctx.member(ideal, e, &x) != Verdict::Yes {
                    continue;
                }
                if let Ok(rs) = components_after_deletion(e, &x) {
                    if !rs.iter().any(|g| has_uncountable_clique(&g.expr)) {
                        return Err(format!("deleting `{x}` leaves no uncountable clique"));
                    }
                }
            }
            Ok(())
        }
        Certificate::ContainsTree { path, kappa } => match (ideal, at(path)?) {
            (Ideal::SetsBelow(k), GraphExpr::Tree(t)) if k == kappa && t >= kappa => Ok(()),
            _ => Err(format!("no T_{kappa} at `{path}` for {}", ideal.name())),
        },
        Certificate::ContainsRay { class } => {
            let space = end_space(e).map_err(|err| err.to_string())?;
            match (ideal, space.class(class)) {
                (Ideal::FiniteSets | Ideal::SetsBelow(Cardinality::Aleph0), Some(_)) => Ok(()),
                _ => Err(format!("no end class `{class}` for {}", ideal.name())),
            }
        }
    }
}

fn explicit(a: impl IntoIterator<Item = Address>) -> VertexSet {
    VertexSet::Explicit(a.into_iter().collect())
}

fn one(s: Step) -> VertexSet {
    explicit([Address::single(s)])
}

/// Peeling candidates of one constructor, before pairing.
fn base_catalog(e: &GraphExpr) -> Vec<VertexSet> {
    let root = RegionPath::root;
    match e {
        GraphExpr::Finite { .. } | GraphExpr::Union(..) => vec![],
        GraphExpr::Ray | GraphExpr::Comb(_) => vec![one(Step::R(0)), VertexSet::spine(root())],
        GraphExpr::Star(_) => vec![one(Step::Center)],
        GraphExpr::Tree(_) => vec![one(Step::Node(vec![]))],
        GraphExpr::Complete(_) => vec![one(Step::K(Index::Nat(0)))],
        GraphExpr::WithTops { .. } => {
            vec![VertexSet::All(RegionPath(vec![ExprStep::Base])), VertexSet::Tops(root())]
        }
        GraphExpr::Copies(_, inner) => base_catalog(inner)
            .into_iter()
            .filter(|d| !has_explicit(d))
            .map(|d| d.lifted(&RegionPath(vec![ExprStep::AllCopies]), &[]))
            .collect(),
        GraphExpr::JoinVertex { base, label, .. } => {
            let mut v = vec![one(Step::Label(label.clone()))];
            v.extend(lift_base(base));
            v
        }
        GraphExpr::AddEdge { base, a, b } => {
            let mut v = vec![explicit([a.clone()]), explicit([b.clone()])];
            v.extend(lift_base(base));
            v
        }
    }
}

fn lift_base(base: &GraphExpr) -> Vec<VertexSet> {
    let p = RegionPath(vec![ExprStep::Base]);
    let mut v: Vec<VertexSet> = base_catalog(base).iter().map(|d| d.lifted(&p, &[])).collect();
    if let GraphExpr::Union(l, r) = base {
        for (step, s, side) in [(ExprStep::Left, Step::Left, l), (ExprStep::Right, Step::Right, r)] {
            let q = RegionPath(vec![ExprStep::Base, step]);
            v.extend(base_catalog(side).iter().map(|d| d.lifted(&q, std::slice::from_ref(&s))));
        }
    }
    v
}

fn has_explicit(d: &VertexSet) -> bool {
    match d {
        VertexSet::Explicit(_) => true,
        VertexSet::Union(v) => v.iter().any(has_explicit),
        VertexSet::Minus(a, b) => has_explicit(a) || has_explicit(b),
        _ => false,
    }
}

/// Candidate sets `X`: the empty set for disconnected graphs, the
/// per-constructor sets, and unions of two of them. Catalog order is the
/// tie-break order.
pub fn catalog(e: &GraphExpr) -> Vec<VertexSet> {
    let mut out = Vec::new();
    if is_connected(e) != Verdict::Yes {
        out.push(VertexSet::empty());
    }
    let base = base_catalog(e);
    out.extend(base.iter().cloned());
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            out.push(VertexSet::Union(vec![base[i].clone(), base[j].clone()]).normalized());
        }
    }
    let mut seen = Vec::new();
    out.retain(|d| {
        let n = d.normalized();
        let fresh = !seen.contains(&n);
        seen.push(n);
        fresh
    });
    out
}

struct Engine<'a> {
    ideal: &'a Ideal,
    opts: RankOptions,
}

enum Attempt {
    Found(Ordinal, PeelingTree),
    Failed(String),
}

impl Engine<'_> {
    fn search(&self, ctx: &Ctx, e: &GraphExpr, depth: usize) -> RankResult {
        let all = VertexSet::all();
        if ctx.member(self.ideal, e, &all) == Verdict::Yes {
            return RankResult::Ranked { rank: Ordinal::zero(), witness: PeelingTree::Base };
        }
        if self.opts.certificates {
            if let Some(certificate) = no_rank_certificate(e, self.ideal) {
                return RankResult::NoRank { certificate };
            }
        }
        if depth >= self.opts.max_depth {
            return RankResult::Unknown { reason: format!("search depth {depth} reached at `{e}`") };
        }
        let cands: Vec<VertexSet> =
            catalog(e).into_iter().filter(|x| ctx.member(self.ideal, e, x) == Verdict::Yes).collect();
        if cands.is_empty() {
            return RankResult::Unknown { reason: format!("no catalog set of `{e}` is in the ideal") };
        }
        let attempts = par::map(&cands, |x| self.attempt(ctx, e, x, depth));
        let mut best: Option<(Ordinal, PeelingTree)> = None;
        let mut reasons = Vec::new();
        for a in attempts {
            match a {
                Attempt::Found(r, w) => {
                    if best.as_ref().is_none_or(|(b, _)| r < *b) {
                        best = Some((r, w));
                    }
                }
                Attempt::Failed(why) => reasons.push(why),
            }
        }
        match best {
            Some((rank, witness)) => RankResult::Ranked { rank, witness },
            None => RankResult::Unknown { reason: reasons.into_iter().next().unwrap_or_default() },
        }
    }

    fn attempt(&self, ctx: &Ctx, e: &GraphExpr, x: &VertexSet, depth: usize) -> Attempt {
        let regions = match components_after_deletion(e, x) {
            Ok(r) => r,
            Err(err) => return Attempt::Failed(format!("`{e}` − `{x}`: {err}")),
        };
        if regions.iter().any(|g| g.expr == *e) {
            return Attempt::Failed(format!("`{e}` − `{x}` contains a copy of itself"));
        }
        let mut children = Vec::new();
        for g in regions {
            let key = g.embed.rep_key();
            let sub = ctx.with(Frame::Region { region: Box::new(g.clone()), key });
            match self.search(&sub, &g.expr, depth + 1) {
                RankResult::Ranked { witness, .. } => children.push(Child { region: g, witness }),
                RankResult::NoRank { .. } => return Attempt::Failed(format!("a component of `{e}` − `{x}` has no rank")),
                RankResult::Unknown { reason } => return Attempt::Failed(reason),
            }
        }
        let rank = peel_rank(&children);
        Attempt::Found(rank.clone(), PeelingTree::Peel { x: x.clone(), rank, children })
    }
}

pub fn ideal_rank(e: &GraphExpr, ideal: &Ideal) -> RankResult {
    ideal_rank_with(e, ideal, RankOptions::default())
}

pub fn ideal_rank_with(e: &GraphExpr, ideal: &Ideal, opts: RankOptions) -> RankResult {
    Engine { ideal, opts }.search(&Ctx::root(e), e, 0)
}

/// Rank of the sub-expression at `path` with membership judged in `host`.
/// Wildcard paths use the first copy.
pub fn ideal_rank_in(host: &GraphExpr, path: &RegionPath, ideal: &Ideal) -> RankResult {
    let concrete = path.instantiate(&Index::Nat(0));
    let (Some(sub), Some(addr)) = (subexpr(host, &concrete), concrete.address_prefix()) else {
        return RankResult::Unknown { reason: format!("no sub-expression at `{path}`") };
    };
    let ctx = Ctx::root(host).with(Frame::Sub { path: concrete.clone(), addr });
    Engine { ideal, opts: RankOptions::default() }.search(&ctx, sub, 0)
}

/// Rank of one member of a region of `host − X`, judged in `host`.
pub fn ideal_rank_in_region(host: &GraphExpr, region: &Region, ideal: &Ideal) -> RankResult {
    let ctx = Ctx::root(host).with(Frame::Region { region: Box::new(region.clone()), key: region.embed.rep_key() });
    Engine { ideal, opts: RankOptions::default() }.search(&ctx, &region.expr, 0)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RankError {
    #[error("normal rank needs a connected graph; `{0}` is not known to be connected")]
    Disconnected(String),
    #[error("`{0}` contains a ray (end class `{1}`)")]
    HasRay(String, String),
    #[error("invalid witness: {0}")]
    Witness(String),
}

pub fn normal_rank(e: &GraphExpr) -> Result<RankResult, RankError> {
    if is_connected(e) != Verdict::Yes {
        return Err(RankError::Disconnected(e.to_string()));
    }
    Ok(ideal_rank(e, &Ideal::NormallySpanned))
}

pub fn kappa_rank(e: &GraphExpr, kappa: Cardinality) -> RankResult {
    ideal_rank(e, &Ideal::SetsBelow(kappa))
}

/// Rank for the ideal of finite sets; defined only for rayless graphs.
pub fn schmidt_rank(e: &GraphExpr) -> Result<RankResult, RankError> {
    if let Ok(space) = end_space(e) {
        if let Some(c) = space.classes.first() {
            return Err(RankError::HasRay(e.to_string(), c.id.clone()));
        }
    }
    Ok(ideal_rank(e, &Ideal::FiniteSets))
}

/// Re-derives a witness: membership of every `X`, the component regions, and
/// the rank bookkeeping. Returns the witnessed rank.
pub fn check_witness(e: &GraphExpr, ideal: &Ideal, w: &PeelingTree) -> Result<Ordinal, RankError> {
    check_at(&Ctx::root(e), ideal, e, w).map_err(RankError::Witness)
}

fn check_at(ctx: &Ctx, ideal: &Ideal, e: &GraphExpr, w: &PeelingTree) -> Result<Ordinal, String> {
    match w {
        PeelingTree::Base => match ctx.member(ideal, e, &VertexSet::all()) {
            Verdict::Yes => Ok(Ordinal::zero()),
            v => Err(format!("V(`{e}`) membership is {v:?}")),
        },
        PeelingTree::Peel { x, rank, children } => {
            match ctx.member(ideal, e, x) {
                Verdict::Yes => {}
                v => return Err(format!("`{x}` membership in `{e}` is {v:?}")),
            }
            let regions = components_after_deletion(e, x).map_err(|err| err.to_string())?;
            if regions.len() != children.len() || regions.iter().zip(children).any(|(g, c)| *g != c.region) {
                return Err(format!("regions of `{e}` − `{x}` differ from the witness"));
            }
            let mut best = Ordinal::zero();
            for c in children {
                let sub = ctx.with(Frame::Region { region: Box::new(c.region.clone()), key: c.region.embed.rep_key() });
                let r = check_at(&sub, ideal, &c.region.expr, &c.witness)?;
                if r != c.witness.rank() {
                    return Err(format!("child rank {r} recorded as {}", c.witness.rank()));
                }
                best = std::cmp::max(best, r.succ().map_err(|err| err.to_string())?);
            }
            if best != *rank {
                return Err(format!("node rank {rank} but children give {best}"));
            }
            Ok(best)
        }
    }
}

/// Checks a witness against truncations: every component of a truncation
/// minus `X` lies in one member of one witnessed region.
pub fn witness_on_truncation(e: &GraphExpr, w: &PeelingTree, d: u64, width: u64) -> Result<(), String> {
    let PeelingTree::Peel { x, children, .. } = w else { return Ok(()) };
    let t = truncate(e, d, width);
    let keep: Vec<bool> = t.vertices.iter().map(|a| !contains(e, x, a)).collect();
    for comp in t.components(&keep) {
        let mut spot = None;
        for &i in &comp {
            let a = &t.vertices[i];
            let hits: Vec<(usize, Vec<Index>)> = children
                .iter()
                .enumerate()
                .filter_map(|(ci, c)| c.region.locate(a).map(|(k, _)| (ci, k)))
                .collect();
            if hits.len() != 1 {
                return Err(format!("{a} lies in {} witnessed regions", hits.len()));
            }
            match &spot {
                None => spot = Some(hits[0].clone()),
                Some(s) if *s != hits[0] => return Err(format!("component through {a} spans two members")),
                _ => {}
            }
        }
    }
    for c in children {
        witness_on_truncation(&c.region.expr, &c.witness, d, width)?;
    }
    Ok(())
}

/// A tree-decomposition read off a peeling witness: node ids are sequences of
/// `(child index, member key)`; the part of a node is its own `X` (or the
/// whole member at a leaf), widened by the `X` of every ancestor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub schema: u32,
    pub host: GraphExpr,
    pub witness: PeelingTree,
    /// The decomposition tree as an expression (a join of stars over stars).
    pub shape: GraphExpr,
    /// Whether children's parts include the ancestors' `X`.
    pub widened: bool,
}

pub type NodeId = Vec<(usize, Vec<Index>)>;

fn shape_of(w: &PeelingTree, depth: usize) -> GraphExpr {
    let label = format!("t{depth}");
    let PeelingTree::Peel { children, .. } = w else { return GraphExpr::single(&label) };
    let parts: Vec<GraphExpr> = children
        .iter()
        .map(|c| {
            let s = shape_of(&c.witness, depth + 1);
            if c.region.is_family() {
                GraphExpr::copies(c.region.count, s)
            } else {
                s
            }
        })
        .collect();
    match parts.into_iter().reduce(GraphExpr::union) {
        None => GraphExpr::single(&label),
        Some(base) => GraphExpr::join_vertex(base, &label, VertexSet::Centers(RegionPath::root())),
    }
}

pub fn rank_to_decomposition(e: &GraphExpr, ideal: &Ideal, w: &PeelingTree) -> Result<TreeDecomposition, RankError> {
    check_witness(e, ideal, w)?;
    Ok(TreeDecomposition { schema: 1, host: e.clone(), witness: w.clone(), shape: shape_of(w, 0), widened: true })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axiom {
    T1,
    T2,
    T3,
    Rayless,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomFailure {
    pub axiom: Axiom,
    pub d: u64,
    pub w: u64,
    pub witness: String,
}

impl TreeDecomposition {
    /// The node whose own set contains `v`.
    pub fn home(&self, v: &Address) -> Option<NodeId> {
        let mut node = Vec::new();
        let (mut e, mut w, mut a) = (&self.host, &self.witness, v.clone());
        loop {
            match w {
                PeelingTree::Base => return Some(node),
                PeelingTree::Peel { x, children, .. } => {
                    if contains(e, x, &a) {
                        return Some(node);
                    }
                    let (i, (key, local)) =
                        children.iter().enumerate().find_map(|(i, c)| c.region.locate(&a).map(|l| (i, l)))?;
                    node.push((i, key));
                    e = &children[i].region.expr;
                    w = &children[i].witness;
                    a = local;
                }
            }
        }
    }

    /// The part of a node, in host coordinates, when expressible.
    pub fn part(&self, node: &[(usize, Vec<Index>)]) -> Option<VertexSet> {
        self.part_at(&self.witness, node)
    }

    fn part_at(&self, w: &PeelingTree, node: &[(usize, Vec<Index>)]) -> Option<VertexSet> {
        match (w, node) {
            (PeelingTree::Base, []) => Some(VertexSet::all()),
            (PeelingTree::Peel { x, .. }, []) => Some(x.clone()),
            (PeelingTree::Peel { x, children, .. }, [(i, key), rest @ ..]) => {
                let c = children.get(*i)?;
                let sub = self.part_at(&c.witness, rest)?;
                let lifted = c.region.embed.lift_desc(&c.region.expr, key, &sub)?;
                Some(if self.widened { VertexSet::Union(vec![lifted, x.clone()]) } else { lifted })
            }
            _ => None,
        }
    }

    /// Checks the decomposition tree is rayless and (T1)–(T3) on one truncation.
    pub fn check(&self, d: u64, width: u64) -> Result<(), AxiomFailure> {
        let fail = |axiom, witness: String| AxiomFailure { axiom, d, w: width, witness };
        if end_space(&self.shape).map(|s| !s.is_empty()).unwrap_or(true) {
            return Err(fail(Axiom::Rayless, self.shape.to_string()));
        }
        let t = truncate(&self.host, d, width);
        let homes = par::map(&t.vertices, |v| self.home(v));
        let mut nodes: Vec<NodeId> = Vec::new();
        for (v, h) in t.vertices.iter().zip(&homes) {
            let Some(h) = h else { return Err(fail(Axiom::T1, v.to_string())) };
            for k in 0..=h.len() {
                nodes.push(h[..k].to_vec());
            }
        }
        nodes.sort();
        nodes.dedup();
        let parts: BTreeMap<NodeId, VertexSet> = nodes
            .iter()
            .map(|n| Ok((n.clone(), self.part(n).ok_or_else(|| fail(Axiom::T1, format!("part of node {n:?}")))?)))
            .collect::<Result<_, _>>()?;
        let member: Vec<Vec<bool>> =
            par::map(&t.vertices, |v| nodes.iter().map(|n| contains(&self.host, &parts[n], v)).collect());
        for (i, v) in t.vertices.iter().enumerate() {
            if !member[i].iter().any(|&b| b) {
                return Err(fail(Axiom::T1, v.to_string()));
            }
        }
        for (i, j) in t.edges() {
            if !(0..nodes.len()).any(|n| member[i][n] && member[j][n]) {
                return Err(fail(Axiom::T2, format!("{}–{}", t.vertices[i], t.vertices[j])));
            }
        }
        let index: HashMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        for (i, v) in t.vertices.iter().enumerate() {
            let tops = (0..nodes.len())
                .filter(|&n| member[i][n])
                .filter(|&n| {
                    let node = &nodes[n];
                    node.is_empty() || !member[i][index[&node[..node.len() - 1].to_vec()]]
                })
                .count();
            if tops != 1 {
                return Err(fail(Axiom::T3, format!("{v} lies in {tops} separate subtrees")));
            }
        }
        Ok(())
    }

    /// Representative nodes: every witness node, with representative keys.
    pub fn representative_nodes(&self) -> Vec<NodeId> {
        fn walk(w: &PeelingTree, prefix: NodeId, out: &mut Vec<NodeId>) {
            out.push(prefix.clone());
            if let PeelingTree::Peel { children, .. } = w {
                for (i, c) in children.iter().enumerate() {
                    let mut p = prefix.clone();
                    p.push((i, c.region.embed.rep_key()));
                    walk(&c.witness, p, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.witness, Vec::new(), &mut out);
        out
    }
}

/// Runs [`TreeDecomposition::check`] over a sweep of truncations.
pub fn verify_decomposition(td: &TreeDecomposition, sweep: &[(u64, u64)]) -> Result<(), AxiomFailure> {
    let results = par::map(sweep, |&(d, w)| td.check(d, w));
    results.into_iter().collect::<Result<Vec<()>, _>>().map(|_| ())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionBound {
    pub bound: Ordinal,
    /// The peeling witness induced by the decomposition.
    pub witness: PeelingTree,
}

/// Upper bound on the rank from a rayless decomposition whose parts lie in
/// the ideal: the Schmidt rank of the decomposition tree.
pub fn decomposition_to_rank(td: &TreeDecomposition, ideal: &Ideal) -> Result<DecompositionBound, String> {
    for n in td.representative_nodes() {
        let p = td.part(&n).ok_or_else(|| format!("part of node {n:?} is not expressible"))?;
        match ideal.contains(&td.host, &p) {
            Verdict::Yes => {}
            v => return Err(format!("part `{p}` membership is {v:?}")),
        }
    }
    match schmidt_rank(&td.shape) {
        Ok(RankResult::Ranked { rank, .. }) => Ok(DecompositionBound { bound: rank, witness: td.witness.clone() }),
        Ok(other) => Err(format!("decomposition tree rank: {}", other.short())),
        Err(err) => Err(err.to_string()),
    }
}
