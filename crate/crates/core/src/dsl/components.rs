//! Components after deleting a symbolic vertex set.
//!
//! The result is a list of [`Region`]s: single components, or families of
//! pairwise isomorphic components sharing one local expression. Each region
//! carries an [`Embed`] mapping member-local addresses into the host and the
//! templates describing how members attach to the deleted set.

use serde::{Deserialize, Serialize};

use super::semantics::{centers, contains, desc_card, has_edge, line_vertex, resolve, subexpr};
use super::{
    Address, Cardinality, DslError, ExprStep, GraphExpr, Index, LineKind, RegionPath, Step, Verdict,
    VertexSet,
};

/// Which kind of single vertex a [`Embed::Vertex`] family ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Leaf,
    Top,
}

/// Local-to-host address map of a region. `path`/`addr` locate the relevant
/// constructor inside the host. Families are indexed by a key (a sequence of
/// indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "embed", rename_all = "snake_case")]
pub enum Embed {
    /// The local expression is the host sub-expression at `path`.
    Sub { path: RegionPath, addr: Vec<Step> },
    /// One member per copy; key `[i, rest..]`.
    Copies { path: RegionPath, addr: Vec<Step>, inner: Box<Embed> },
    /// Tail of a ray or comb: local `r_j` is host `r_{j+offset}`.
    Shift { path: RegionPath, addr: Vec<Step>, offset: u64 },
    /// Subtrees below `parent·i` for every `i` not excluded; key `[i]`.
    Subtree { path: RegionPath, addr: Vec<Step>, parent: Vec<Index>, excluded: Vec<Index> },
    /// Isolated single vertices (local label `x`): star leaves (key `[i]`) or
    /// tops (key = branch prefix).
    Vertex { path: RegionPath, addr: Vec<Step>, kind: VertexKind, excluded: Vec<Index> },
    /// A complete graph or star with finitely many clique vertices / leaves
    /// removed; the remaining naturals are renumbered in order.
    Renumber { path: RegionPath, addr: Vec<Step>, removed: Vec<u64> },
    /// Tooth paths of a comb (local labels `p1..pL`); key `[n]`.
    Tooth { path: RegionPath, addr: Vec<Step>, len: u64 },
    /// Finite region, explicit label table.
    Table { map: Vec<(String, Address)> },
    /// A region with one joined vertex added on top of an inner embedding.
    Join { inner: Box<Embed>, label: String, host: Address },
    /// Two regions merged by an added edge; local addresses carry `left`/`right`.
    Pair { left: Box<Embed>, right: Box<Embed> },
}

fn key_first(excluded: &[Index]) -> Index {
    (0..).map(Index::Nat).find(|i| !excluded.contains(i)).unwrap()
}

fn key_second(excluded: &[Index]) -> Index {
    (0..).map(Index::Nat).filter(|i| !excluded.contains(i)).nth(1).unwrap()
}

fn single_label(local: &Address) -> Option<&str> {
    match local.steps() {
        [Step::Label(l)] => Some(l),
        _ => None,
    }
}

impl Embed {
    pub fn identity() -> Self {
        Embed::Sub { path: RegionPath::root(), addr: Vec::new() }
    }

    /// Number of key indices consumed at this level (`None` = all the rest).
    pub fn rep_key(&self) -> Vec<Index> {
        match self {
            Embed::Copies { inner, .. } => {
                let mut k = vec![Index::Nat(0)];
                k.extend(inner.rep_key());
                k
            }
            Embed::Subtree { excluded, .. } => vec![key_first(excluded)],
            Embed::Vertex { kind: VertexKind::Leaf, excluded, .. } => vec![key_first(excluded)],
            Embed::Vertex { kind: VertexKind::Top, .. } => Vec::new(),
            Embed::Tooth { .. } => vec![Index::Nat(0)],
            Embed::Join { inner, .. } => inner.rep_key(),
            _ => Vec::new(),
        }
    }

    /// A second member key, different from [`Embed::rep_key`] for families.
    pub fn alt_key(&self) -> Vec<Index> {
        match self {
            Embed::Copies { inner, .. } => {
                let mut k = vec![Index::Nat(1)];
                k.extend(inner.rep_key());
                k
            }
            Embed::Subtree { excluded, .. } => vec![key_second(excluded)],
            Embed::Vertex { kind: VertexKind::Leaf, excluded, .. } => vec![key_second(excluded)],
            Embed::Vertex { kind: VertexKind::Top, .. } => vec![Index::Nat(1)],
            Embed::Tooth { .. } => vec![Index::Nat(1)],
            Embed::Join { inner, .. } => inner.alt_key(),
            _ => Vec::new(),
        }
    }

    pub fn is_family(&self) -> bool {
        match self {
            Embed::Copies { .. } | Embed::Subtree { .. } | Embed::Vertex { .. } | Embed::Tooth { .. } => true,
            Embed::Join { inner, .. } => inner.is_family(),
            _ => false,
        }
    }

    /// Host address of a member-local vertex.
    pub fn host(&self, key: &[Index], local: &Address) -> Option<Address> {
        let with = |addr: &[Step], s: Step| {
            let mut v = addr.to_vec();
            v.push(s);
            Address(v)
        };
        match self {
            Embed::Sub { addr, .. } => Some(local.prefixed(addr)),
            Embed::Copies { addr, inner, .. } => {
                let (i, rest) = key.split_first()?;
                let mut p = addr.clone();
                p.push(Step::Copy(i.clone()));
                inner.host(rest, local).map(|a| a.prefixed(&p))
            }
            Embed::Shift { addr, offset, .. } => match local.steps() {
                [Step::R(j)] => Some(with(addr, Step::R(j + offset))),
                [Step::Tooth(j, k)] => Some(with(addr, Step::Tooth(j + offset, *k))),
                _ => None,
            },
            Embed::Subtree { addr, parent, .. } => match (local.steps(), key) {
                ([Step::Node(s)], [i]) => {
                    let mut t = parent.clone();
                    t.push(i.clone());
                    t.extend(s.iter().cloned());
                    Some(with(addr, Step::Node(t)))
                }
                _ => None,
            },
            Embed::Vertex { addr, kind, .. } => {
                single_label(local).filter(|l| *l == "x")?;
                match kind {
                    VertexKind::Leaf => Some(with(addr, Step::Leaf(key.first()?.clone()))),
                    VertexKind::Top => Some(with(addr, Step::Top(key.to_vec()))),
                }
            }
            Embed::Renumber { addr, removed, .. } => {
                let map = |i: &Index| match i {
                    Index::Nat(j) => {
                        Index::Nat((0..).filter(|h| !removed.contains(h)).nth(*j as usize).unwrap())
                    }
                    t => t.clone(),
                };
                match local.steps() {
                    [Step::K(i)] => Some(with(addr, Step::K(map(i)))),
                    [Step::Leaf(i)] => Some(with(addr, Step::Leaf(map(i)))),
                    [Step::Center] => Some(with(addr, Step::Center)),
                    _ => None,
                }
            }
            Embed::Tooth { addr, len, .. } => {
                let l = single_label(local)?;
                let k: u64 = l.strip_prefix('p')?.parse().ok()?;
                let n = key.first()?.nat()?;
                (1..=*len).contains(&k).then(|| with(addr, Step::Tooth(n, k)))
            }
            Embed::Table { map } => {
                let l = single_label(local)?;
                map.iter().find(|(x, _)| x == l).map(|(_, h)| h.clone())
            }
            Embed::Join { inner, label, host } => {
                if single_label(local) == Some(label.as_str()) {
                    Some(host.clone())
                } else {
                    inner.host(key, local)
                }
            }
            Embed::Pair { left, right } => match local.steps() {
                [Step::Left, rest @ ..] => left.host(key, &Address(rest.to_vec())),
                [Step::Right, rest @ ..] => right.host(key, &Address(rest.to_vec())),
                _ => None,
            },
        }
    }

    /// Inverse of [`Embed::host`] (does not check that the local address
    /// resolves in the region's expression).
    pub fn locate(&self, host: &Address) -> Option<(Vec<Index>, Address)> {
        let strip = |addr: &[Step]| host.steps().strip_prefix(addr).map(<[Step]>::to_vec);
        match self {
            Embed::Sub { addr, .. } => Some((Vec::new(), Address(strip(addr)?))),
            Embed::Copies { addr, inner, .. } => {
                let rest = strip(addr)?;
                let (Step::Copy(i), rest) = rest.split_first()? else { return None };
                let (k, local) = inner.locate(&Address(rest.to_vec()))?;
                let mut key = vec![i.clone()];
                key.extend(k);
                Some((key, local))
            }
            Embed::Shift { addr, offset, .. } => match strip(addr)?.as_slice() {
                [Step::R(j)] if j >= offset => Some((Vec::new(), Address::single(Step::R(j - offset)))),
                [Step::Tooth(j, k)] if j >= offset => {
                    Some((Vec::new(), Address::single(Step::Tooth(j - offset, *k))))
                }
                _ => None,
            },
            Embed::Subtree { addr, parent, excluded, .. } => match strip(addr)?.as_slice() {
                [Step::Node(t)] if t.len() > parent.len() && t.starts_with(parent) => {
                    let i = t[parent.len()].clone();
                    (!excluded.contains(&i))
                        .then(|| (vec![i], Address::single(Step::Node(t[parent.len() + 1..].to_vec()))))
                }
                _ => None,
            },
            Embed::Vertex { addr, kind, excluded, .. } => match (strip(addr)?.as_slice(), kind) {
                ([Step::Leaf(i)], VertexKind::Leaf) if !excluded.contains(i) => {
                    Some((vec![i.clone()], Address::single(Step::Label("x".into()))))
                }
                ([Step::Top(p)], VertexKind::Top) => {
                    Some((p.clone(), Address::single(Step::Label("x".into()))))
                }
                _ => None,
            },
            Embed::Renumber { addr, removed, .. } => {
                let unmap = |i: &Index| match i {
                    Index::Nat(h) if removed.contains(h) => None,
                    Index::Nat(h) => Some(Index::Nat(h - removed.iter().filter(|r| *r < h).count() as u64)),
                    t => Some(t.clone()),
                };
                match strip(addr)?.as_slice() {
                    [Step::K(i)] => Some((Vec::new(), Address::single(Step::K(unmap(i)?)))),
                    [Step::Leaf(i)] => Some((Vec::new(), Address::single(Step::Leaf(unmap(i)?)))),
                    [Step::Center] => Some((Vec::new(), Address::single(Step::Center))),
                    _ => None,
                }
            }
            Embed::Tooth { addr, len, .. } => match strip(addr)?.as_slice() {
                [Step::Tooth(n, k)] if (1..=*len).contains(k) => {
                    Some((vec![Index::Nat(*n)], Address::single(Step::Label(format!("p{k}")))))
                }
                _ => None,
            },
            Embed::Table { map } => map
                .iter()
                .find(|(_, h)| h == host)
                .map(|(l, _)| (Vec::new(), Address::single(Step::Label(l.clone())))),
            Embed::Join { inner, label, host: h } => {
                if h == host {
                    Some((inner.rep_key(), Address::single(Step::Label(label.clone()))))
                } else {
                    inner.locate(host)
                }
            }
            Embed::Pair { left, right } => {
                if let Some((k, l)) = left.locate(host) {
                    return Some((k, l.prefixed(&[Step::Left])));
                }
                right.locate(host).map(|(k, l)| (k, l.prefixed(&[Step::Right])))
            }
        }
    }

    /// Host-coordinate descriptor of the member with `key` restricted to the
    /// local descriptor `d`, when expressible.
    pub fn lift_desc(&self, local_expr: &GraphExpr, key: &[Index], d: &VertexSet) -> Option<VertexSet> {
        if let VertexSet::Union(v) = d {
            return v
                .iter()
                .map(|x| self.lift_desc(local_expr, key, x))
                .collect::<Option<Vec<_>>>()
                .map(VertexSet::Union);
        }
        if let VertexSet::Explicit(v) = d {
            return v.iter().map(|a| self.host(key, a)).collect::<Option<Vec<_>>>().map(VertexSet::Explicit);
        }
        match self {
            Embed::Sub { path, addr } => Some(d.lifted(path, addr)),
            Embed::Copies { path, addr, inner } => {
                let (i, rest) = key.split_first()?;
                let inner_d = inner.lift_desc(local_expr, rest, d)?;
                let mut a = addr.clone();
                a.push(Step::Copy(i.clone()));
                Some(inner_d.lifted(&path.child(ExprStep::Copy(i.clone())), &a))
            }
            _ => {
                if let GraphExpr::Finite { vertices, .. } = local_expr {
                    let hosts = vertices
                        .iter()
                        .map(|l| Address::single(Step::Label(l.clone())))
                        .filter(|a| contains(local_expr, d, a))
                        .map(|a| self.host(key, &a))
                        .collect::<Option<Vec<_>>>()?;
                    return Some(VertexSet::Explicit(hosts));
                }
                match d {
                    VertexSet::Centers(p) if p.is_root() => {
                        let c = centers(local_expr).ok()?;
                        self.lift_desc(local_expr, key, &VertexSet::Explicit(c))
                    }
                    VertexSet::All(p) if p.is_root() => match self {
                        Embed::Shift { path, addr, offset } => {
                            let removed = (0..*offset)
                                .flat_map(|j| {
                                    let mut v = vec![Step::R(j)];
                                    if let Some(GraphExpr::Comb(len)) = Some(local_expr) {
                                        v.extend((1..=*len).map(|k| Step::Tooth(j, k)));
                                    }
                                    v
                                })
                                .map(|s| Address::single(s).prefixed(addr))
                                .collect();
                            Some(VertexSet::Minus(
                                Box::new(VertexSet::All(path.clone())),
                                Box::new(VertexSet::Explicit(removed)),
                            ))
                        }
                        Embed::Renumber { path, addr, removed } => {
                            let step = |h: u64| match local_expr {
                                GraphExpr::Star(_) => Step::Leaf(Index::Nat(h)),
                                _ => Step::K(Index::Nat(h)),
                            };
                            Some(VertexSet::Minus(
                                Box::new(VertexSet::All(path.clone())),
                                Box::new(VertexSet::Explicit(
                                    removed.iter().map(|&h| Address::single(step(h)).prefixed(addr)).collect(),
                                )),
                            ))
                        }
                        _ => None,
                    },
                    _ => None,
                }
            }
        }
    }

    fn prepend(&mut self, step: &ExprStep, astep: Option<&Step>) {
        let fix = |path: &mut RegionPath, addr: &mut Vec<Step>| {
            path.0.insert(0, step.clone());
            if let Some(s) = astep {
                addr.insert(0, s.clone());
            }
        };
        match self {
            Embed::Sub { path, addr }
            | Embed::Copies { path, addr, .. }
            | Embed::Shift { path, addr, .. }
            | Embed::Subtree { path, addr, .. }
            | Embed::Vertex { path, addr, .. }
            | Embed::Renumber { path, addr, .. }
            | Embed::Tooth { path, addr, .. } => fix(path, addr),
            Embed::Table { map } => {
                if let Some(s) = astep {
                    for (_, h) in map.iter_mut() {
                        h.0.insert(0, s.clone());
                    }
                }
            }
            Embed::Join { inner, host, .. } => {
                inner.prepend(step, astep);
                if let Some(s) = astep {
                    host.0.insert(0, s.clone());
                }
            }
            Embed::Pair { left, right } => {
                left.prepend(step, astep);
                right.prepend(step, astep);
            }
        }
    }
}

/// One attachment of a member to the deleted set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "link", rename_all = "snake_case")]
pub enum Links {
    /// A deleted host vertex and its neighbours inside the member (local).
    Vertex { host: Address, local: VertexSet },
    /// Every vertex of a deleted host set is adjacent to every local vertex of
    /// `local`, and to nothing else in the member.
    Set { host: VertexSet, local: VertexSet },
    /// One local vertex adjacent to the positions `start, start+step, …` of a
    /// host line.
    Line { path: RegionPath, addr: Vec<Step>, kind: LineKind, start: u64, step: u64, local: Address },
}

impl Links {
    pub fn host_set(&self) -> VertexSet {
        match self {
            Links::Vertex { host, .. } => VertexSet::Explicit(vec![host.clone()]),
            Links::Set { host, .. } => host.clone(),
            Links::Line { path, kind, start, step, .. } => {
                VertexSet::Line { region: path.clone(), kind: kind.clone(), start: *start, step: *step }
            }
        }
    }

    /// Host address of line position `n` (line links only).
    pub fn line_host(&self, n: u64) -> Option<Address> {
        match self {
            Links::Line { addr, kind, .. } => {
                let mut v = addr.clone();
                v.push(line_vertex(kind, n));
                Some(Address(v))
            }
            _ => None,
        }
    }

    fn prepend(&mut self, step: &ExprStep, astep: Option<&Step>) {
        let p = RegionPath(vec![step.clone()]);
        let a: Vec<Step> = astep.cloned().into_iter().collect();
        match self {
            Links::Vertex { host, .. } => *host = host.prefixed(&a),
            Links::Set { host, .. } => *host = host.lifted(&p, &a),
            Links::Line { path, addr, .. } => {
                path.0.insert(0, step.clone());
                addr.splice(0..0, a);
            }
        }
    }
}

/// Attachment templates; instantiated per member key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "attach", rename_all = "snake_case")]
pub enum AttachTemplate {
    Fixed(Links),
    /// A top family: the member with key `p` is adjacent to the branch `p` of
    /// the tree at `path`.
    TopLine { path: RegionPath, addr: Vec<Step>, step: u64 },
    /// Tooth `n` hangs off spine vertex `r_n`.
    ToothBase { addr: Vec<Step> },
    /// Member inside copy `key[0]`.
    InCopy { path: RegionPath, addr: Vec<Step>, inner: Vec<AttachTemplate> },
}

impl AttachTemplate {
    fn prepend(&mut self, step: &ExprStep, astep: Option<&Step>) {
        match self {
            AttachTemplate::Fixed(l) => l.prepend(step, astep),
            AttachTemplate::TopLine { path, addr, .. } | AttachTemplate::InCopy { path, addr, .. } => {
                path.0.insert(0, step.clone());
                if let Some(s) = astep {
                    addr.insert(0, s.clone());
                }
            }
            AttachTemplate::ToothBase { addr } => {
                if let Some(s) = astep {
                    addr.insert(0, s.clone());
                }
            }
        }
    }

    fn instantiate(&self, key: &[Index], out: &mut Vec<Links>) {
        match self {
            AttachTemplate::Fixed(l) => out.push(l.clone()),
            AttachTemplate::TopLine { path, addr, step } => out.push(Links::Line {
                path: path.clone(),
                addr: addr.clone(),
                kind: LineKind::Branch(key.to_vec()),
                start: 0,
                step: *step,
                local: Address::single(Step::Label("x".into())),
            }),
            AttachTemplate::ToothBase { addr } => {
                if let Some(Index::Nat(n)) = key.first() {
                    let mut h = addr.clone();
                    h.push(Step::R(*n));
                    out.push(Links::Vertex {
                        host: Address(h),
                        local: VertexSet::Explicit(vec![Address::single(Step::Label("p1".into()))]),
                    });
                }
            }
            AttachTemplate::InCopy { path, addr, inner } => {
                let Some((i, rest)) = key.split_first() else { return };
                let step = ExprStep::Copy(i.clone());
                let astep = Step::Copy(i.clone());
                let mut sub = Vec::new();
                inner.iter().for_each(|t| t.instantiate(rest, &mut sub));
                for mut l in sub {
                    l.prepend(&step, Some(&astep));
                    let p = path.clone();
                    match &mut l {
                        Links::Vertex { host, .. } => *host = host.prefixed(addr),
                        Links::Set { host, .. } => *host = host.lifted(&p, addr),
                        Links::Line { path: lp, addr: la, .. } => {
                            lp.0.splice(0..0, p.0.iter().cloned());
                            la.splice(0..0, addr.iter().cloned());
                        }
                    }
                    out.push(l);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    /// The (shared) isomorphism type of a member.
    pub expr: GraphExpr,
    /// Number of members; 1 for a single component.
    pub count: Cardinality,
    /// Union of all members in host coordinates, when expressible.
    pub members: Option<VertexSet>,
    pub embed: Embed,
    pub attach: Vec<AttachTemplate>,
}

/// Instantiated attachment of one member.
pub type Attachment = Vec<Links>;

impl Region {
    fn whole(e: &GraphExpr) -> Region {
        Region {
            expr: e.clone(),
            count: Cardinality::ONE,
            members: Some(VertexSet::all()),
            embed: Embed::identity(),
            attach: Vec::new(),
        }
    }

    pub fn attachment(&self, key: &[Index]) -> Attachment {
        let mut out = Vec::new();
        self.attach.iter().for_each(|t| t.instantiate(key, &mut out));
        out
    }

    pub fn is_family(&self) -> bool {
        self.count != Cardinality::ONE || self.embed.is_family()
    }

    /// Locates a host vertex in this region: member key and local address.
    pub fn locate(&self, host: &Address) -> Option<(Vec<Index>, Address)> {
        self.embed.locate(host).filter(|(_, l)| resolve(&self.expr, l))
    }

    fn prepend(mut self, step: ExprStep, astep: Option<Step>) -> Region {
        self.embed.prepend(&step, astep.as_ref());
        let p = RegionPath(vec![step.clone()]);
        let a: Vec<Step> = astep.iter().cloned().collect();
        self.members = self.members.map(|m| m.lifted(&p, &a));
        self.attach.iter_mut().for_each(|t| t.prepend(&step, astep.as_ref()));
        self
    }

    fn over_copies(self, k: Cardinality) -> Region {
        let members = self
            .members
            .and_then(|m| (!has_explicit(&m)).then(|| m.lifted(&RegionPath(vec![ExprStep::AllCopies]), &[])));
        Region {
            expr: self.expr,
            count: k.product(self.count),
            members,
            embed: Embed::Copies { path: RegionPath::root(), addr: Vec::new(), inner: Box::new(self.embed) },
            attach: if self.attach.is_empty() {
                Vec::new()
            } else {
                vec![AttachTemplate::InCopy { path: RegionPath::root(), addr: Vec::new(), inner: self.attach }]
            },
        }
    }
}

fn has_explicit(d: &VertexSet) -> bool {
    match d {
        VertexSet::Explicit(v) => !v.is_empty(),
        VertexSet::Union(v) => v.iter().any(has_explicit),
        VertexSet::Minus(a, b) => has_explicit(a) || has_explicit(b),
        _ => false,
    }
}

fn unsupported<T>(e: &GraphExpr, x: &VertexSet) -> Result<T, DslError> {
    Err(DslError::unsupported(format!("deleting `{x}` from `{e}`")))
}

/// The part of `d` (interpreted in `e`) lying inside the child at `step`, in
/// the child's coordinates. `copy:*` requires `d` to treat all copies alike.
pub fn restrict(e: &GraphExpr, d: &VertexSet, step: &ExprStep) -> Result<VertexSet, DslError> {
    let astep = match step {
        ExprStep::Left => Some(Step::Left),
        ExprStep::Right => Some(Step::Right),
        ExprStep::Copy(i) => Some(Step::Copy(i.clone())),
        _ => None,
    };
    let mut out = Vec::new();
    for m in d.members() {
        match &m {
            VertexSet::Explicit(v) => {
                let mut keep = Vec::new();
                for a in v {
                    match (step, &astep) {
                        (ExprStep::AllCopies, _) => {
                            return Err(DslError::unsupported(format!("`{a}` singles out one copy")))
                        }
                        (ExprStep::Base, _) => {
                            let child = e.child(step).expect("base");
                            if resolve(child, a) {
                                keep.push(a.clone());
                            }
                        }
                        (_, Some(s)) => {
                            if let Some(rest) = a.strip_prefix(std::slice::from_ref(s)) {
                                keep.push(rest);
                            }
                        }
                        _ => {}
                    }
                }
                out.push(VertexSet::Explicit(keep));
            }
            VertexSet::Minus(a, b) => out.push(VertexSet::Minus(
                Box::new(restrict(e, a, step)?),
                Box::new(restrict(e, b, step)?),
            )),
            _ => {
                let p = m.region().expect("region descriptor");
                if let Some(first) = p.0.first() {
                    if let Some(x) = m.strip_step(step) {
                        out.push(x);
                    } else if matches!((first, step), (ExprStep::Copy(_), ExprStep::AllCopies)) {
                        return Err(DslError::unsupported(format!("`{m}` singles out one copy")));
                    }
                    continue;
                }
                let pass = match (&m, e) {
                    (VertexSet::All(_), _) => true,
                    (VertexSet::Centers(_), GraphExpr::JoinVertex { .. }) => false,
                    (VertexSet::Centers(_), _) => true,
                    (VertexSet::Leaves(_) | VertexSet::Tops(_) | VertexSet::TopsThrough(..), GraphExpr::WithTops { .. }) => {
                        false
                    }
                    (VertexSet::Leaves(_) | VertexSet::Tops(_) | VertexSet::TopsThrough(..), _) => true,
                    _ => return unsupported(e, &m),
                };
                if pass {
                    out.push(m.clone());
                }
            }
        }
    }
    Ok(VertexSet::Union(out).normalized())
}

fn contains_all(x: &VertexSet) -> bool {
    x.members().iter().any(|m| matches!(m, VertexSet::All(p) if p.is_root()))
}

/// Explicit address list of `x` on a primitive constructor, if finite and
/// spelled out (centers are resolved).
fn explicit_on(e: &GraphExpr, x: &VertexSet) -> Option<Vec<Address>> {
    let mut out = Vec::new();
    for m in x.members() {
        match m {
            VertexSet::Explicit(v) => out.extend(v.into_iter().filter(|a| resolve(e, a))),
            VertexSet::Centers(p) if p.is_root() => out.extend(centers(e).ok()?),
            VertexSet::Level(p, 0) if p.is_root() => out.push(Address::single(Step::Node(vec![]))),
            _ => return None,
        }
    }
    out.sort();
    out.dedup();
    Some(out)
}

/// Finite region spanned by the given host vertices, with labels `p0, p1, …`.
fn finite_region(host: &GraphExpr, verts: &[Address], deleted: &[Address]) -> Region {
    let labels: Vec<String> = (0..verts.len()).map(|i| format!("p{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            if has_edge(host, &verts[i], &verts[j]) {
                edges.push((labels[i].clone(), labels[j].clone()));
            }
        }
    }
    let attach = deleted
        .iter()
        .filter_map(|x| {
            let local: Vec<Address> = verts
                .iter()
                .zip(&labels)
                .filter(|(v, _)| has_edge(host, x, v))
                .map(|(_, l)| Address::single(Step::Label(l.clone())))
                .collect();
            (!local.is_empty()).then(|| {
                AttachTemplate::Fixed(Links::Vertex { host: x.clone(), local: VertexSet::Explicit(local) })
            })
        })
        .collect();
    Region {
        expr: GraphExpr::Finite { vertices: labels.clone(), edges },
        count: Cardinality::ONE,
        members: Some(VertexSet::Explicit(verts.to_vec())),
        embed: Embed::Table { map: labels.into_iter().zip(verts.iter().cloned()).collect() },
        attach,
    }
}

fn fixed(host: Address, local: VertexSet) -> AttachTemplate {
    AttachTemplate::Fixed(Links::Vertex { host, local })
}

fn local(s: Step) -> Address {
    Address::single(s)
}

/// Components of `e − x`, as regions in `e`'s coordinates.
pub fn components_after_deletion(e: &GraphExpr, x: &VertexSet) -> Result<Vec<Region>, DslError> {
    let x = x.normalized();
    if x.is_syntactically_empty() {
        return pieces(e);
    }
    if contains_all(&x) {
        return Ok(Vec::new());
    }
    match e {
        GraphExpr::Finite { vertices, .. } => {
            let Some(f) = explicit_on(e, &x) else { return unsupported(e, &x) };
            let rest: Vec<Address> = vertices
                .iter()
                .map(|l| local(Step::Label(l.clone())))
                .filter(|a| !f.contains(a))
                .collect();
            Ok(finite_components(e, &rest, &f))
        }
        GraphExpr::Ray | GraphExpr::Comb(_) => {
            let len = if let GraphExpr::Comb(l) = e { *l } else { 0 };
            if x.members().iter().any(|m| matches!(m, VertexSet::Line { kind: LineKind::Spine, start: 0, step: 1, .. })) {
                if x.members().len() != 1 || len == 0 {
                    return if len == 0 { Ok(Vec::new()) } else { unsupported(e, &x) };
                }
                let labels: Vec<String> = (1..=len).map(|k| format!("p{k}")).collect();
                let edges = labels.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
                return Ok(vec![Region {
                    expr: GraphExpr::Finite { vertices: labels, edges },
                    count: Cardinality::Aleph0,
                    members: Some(VertexSet::Minus(
                        Box::new(VertexSet::all()),
                        Box::new(VertexSet::spine(RegionPath::root())),
                    )),
                    embed: Embed::Tooth { path: RegionPath::root(), addr: Vec::new(), len },
                    attach: vec![AttachTemplate::ToothBase { addr: Vec::new() }],
                }]);
            }
            let Some(f) = explicit_on(e, &x) else { return unsupported(e, &x) };
            let mut spine: Vec<u64> = Vec::new();
            for a in &f {
                match a.steps() {
                    [Step::R(n)] => spine.push(*n),
                    _ => return unsupported(e, &x),
                }
            }
            let max = *spine.iter().max().unwrap();
            let mut out = Vec::new();
            // teeth of deleted spine vertices
            for &n in &spine {
                if len > 0 {
                    let verts: Vec<Address> = (1..=len).map(|k| local(Step::Tooth(n, k))).collect();
                    out.push(finite_region(e, &verts, &f));
                }
            }
            // finite stretches between deleted spine vertices
            let mut start = 0;
            for n in 0..=max {
                if spine.contains(&n) {
                    if start < n {
                        let verts: Vec<Address> = (start..n)
                            .flat_map(|j| std::iter::once(Step::R(j)).chain((1..=len).map(move |k| Step::Tooth(j, k))))
                            .map(local)
                            .collect();
                        out.push(finite_region(e, &verts, &f));
                    }
                    start = n + 1;
                }
            }
            let removed: Vec<Address> = (0..=max)
                .flat_map(|j| std::iter::once(Step::R(j)).chain((1..=len).map(move |k| Step::Tooth(j, k))))
                .map(local)
                .collect();
            out.push(Region {
                expr: e.clone(),
                count: Cardinality::ONE,
                members: Some(VertexSet::Minus(Box::new(VertexSet::all()), Box::new(VertexSet::Explicit(removed)))),
                embed: Embed::Shift { path: RegionPath::root(), addr: Vec::new(), offset: max + 1 },
                attach: vec![fixed(local(Step::R(max)), VertexSet::Explicit(vec![local(Step::R(0))]))],
            });
            Ok(out)
        }
        GraphExpr::Star(k) => {
            let Some(f) = explicit_on(e, &x) else { return unsupported(e, &x) };
            let center = local(Step::Center);
            let removed: Vec<Index> = f
                .iter()
                .filter_map(|a| match a.steps() {
                    [Step::Leaf(i)] => Some(i.clone()),
                    _ => None,
                })
                .collect();
            let left = match k {
                Cardinality::Finite(n) => Cardinality::Finite(n - removed.len() as u64),
                k => *k,
            };
            if f.contains(&center) {
                if left.is_zero() {
                    return Ok(Vec::new());
                }
                return Ok(vec![Region {
                    expr: GraphExpr::single("x"),
                    count: left,
                    members: Some(VertexSet::Minus(
                        Box::new(VertexSet::Leaves(RegionPath::root())),
                        Box::new(VertexSet::Explicit(f.clone())),
                    )),
                    embed: Embed::Vertex {
                        path: RegionPath::root(),
                        addr: Vec::new(),
                        kind: VertexKind::Leaf,
                        excluded: removed,
                    },
                    attach: vec![fixed(center, VertexSet::Explicit(vec![local(Step::Label("x".into()))]))],
                }]);
            }
            let nat_removed: Option<Vec<u64>> = removed.iter().map(Index::nat).collect();
            let Some(mut nat_removed) = nat_removed else { return unsupported(e, &x) };
            nat_removed.sort_unstable();
            let attach = f
                .iter()
                .map(|a| fixed(a.clone(), VertexSet::Explicit(vec![local(Step::Center)])))
                .collect();
            Ok(vec![Region {
                expr: GraphExpr::Star(left),
                count: Cardinality::ONE,
                members: Some(VertexSet::Minus(Box::new(VertexSet::all()), Box::new(VertexSet::Explicit(f.clone())))),
                embed: Embed::Renumber { path: RegionPath::root(), addr: Vec::new(), removed: nat_removed },
                attach,
            }])
        }
        GraphExpr::Tree(k) => {
            let Some(f) = explicit_on(e, &x) else { return unsupported(e, &x) };
            let nodes: Vec<Vec<Index>> = f
                .iter()
                .filter_map(|a| match a.steps() {
                    [Step::Node(s)] => Some(s.clone()),
                    _ => None,
                })
                .collect();
            let down_closed = nodes.iter().all(|s| s.is_empty() || nodes.contains(&s[..s.len() - 1].to_vec()));
            if !down_closed {
                return unsupported(e, &x);
            }
            let mut out = Vec::new();
            for s in &nodes {
                let excluded: Vec<Index> = nodes
                    .iter()
                    .filter(|t| t.len() == s.len() + 1 && t.starts_with(s))
                    .map(|t| t[s.len()].clone())
                    .collect();
                let count = match k {
                    Cardinality::Finite(n) => Cardinality::Finite(n - excluded.len() as u64),
                    k => *k,
                };
                if count.is_zero() {
                    continue;
                }
                out.push(Region {
                    expr: e.clone(),
                    count,
                    members: None,
                    embed: Embed::Subtree { path: RegionPath::root(), addr: Vec::new(), parent: s.clone(), excluded },
                    attach: vec![fixed(local(Step::Node(s.clone())), VertexSet::Centers(RegionPath::root()))],
                });
            }
            if nodes.len() == 1 {
                out[0].members = Some(VertexSet::Minus(Box::new(VertexSet::all()), Box::new(VertexSet::Explicit(f))));
            }
            Ok(out)
        }
        GraphExpr::Complete(k) => {
            let Some(f) = explicit_on(e, &x) else { return unsupported(e, &x) };
            let mut removed = Vec::new();
            for a in &f {
                match a.steps() {
                    [Step::K(Index::Nat(n))] => removed.push(*n),
                    _ => return unsupported(e, &x),
                }
            }
            removed.sort_unstable();
            let left = match k {
                Cardinality::Finite(n) => Cardinality::Finite(n - removed.len() as u64),
                k => *k,
            };
            if left.is_zero() {
                return Ok(Vec::new());
            }
            Ok(vec![Region {
                expr: GraphExpr::Complete(left),
                count: Cardinality::ONE,
                members: Some(VertexSet::Minus(Box::new(VertexSet::all()), Box::new(VertexSet::Explicit(f.clone())))),
                embed: Embed::Renumber { path: RegionPath::root(), addr: Vec::new(), removed },
                attach: f.iter().map(|a| fixed(a.clone(), VertexSet::all())).collect(),
            }])
        }
        GraphExpr::WithTops { adjacency, .. } => {
            let ms = x.members();
            let base_all = ms.iter().any(|m| matches!(m, VertexSet::All(p) if p.0 == [ExprStep::Base]));
            let tops = ms.iter().any(|m| matches!(m, VertexSet::Tops(p) if p.is_root()));
            match (base_all, tops, ms.len()) {
                (true, true, 2) => Ok(Vec::new()),
                (true, false, 1) => Ok(vec![Region {
                    expr: GraphExpr::single("x"),
                    count: Cardinality::Aleph1.branches(),
                    members: Some(VertexSet::Tops(RegionPath::root())),
                    embed: Embed::Vertex {
                        path: RegionPath::root(),
                        addr: Vec::new(),
                        kind: VertexKind::Top,
                        excluded: Vec::new(),
                    },
                    attach: vec![AttachTemplate::TopLine {
                        path: RegionPath(vec![ExprStep::Base]),
                        addr: Vec::new(),
                        step: adjacency.step(),
                    }],
                }]),
                _ => unsupported(e, &x),
            }
        }
        GraphExpr::Union(l, r) => {
            let mut out: Vec<Region> = components_after_deletion(l, &restrict(e, &x, &ExprStep::Left)?)?
                .into_iter()
                .map(|g| g.prepend(ExprStep::Left, Some(Step::Left)))
                .collect();
            out.extend(
                components_after_deletion(r, &restrict(e, &x, &ExprStep::Right)?)?
                    .into_iter()
                    .map(|g| g.prepend(ExprStep::Right, Some(Step::Right))),
            );
            Ok(out)
        }
        GraphExpr::Copies(k, inner) => {
            let xi = restrict(e, &x, &ExprStep::AllCopies)?;
            Ok(components_after_deletion(inner, &xi)?.into_iter().map(|g| g.over_copies(*k)).collect())
        }
        GraphExpr::JoinVertex { base, label, attach } => {
            let d = local(Step::Label(label.clone()));
            let d_deleted = x.members().iter().any(|m| match m {
                VertexSet::Explicit(v) => v.contains(&d),
                VertexSet::Centers(p) => p.is_root(),
                _ => false,
            });
            let xb = restrict(e, &x, &ExprStep::Base)?;
            let regions = components_after_deletion(base, &xb)?;
            if d_deleted {
                let mut out = Vec::new();
                for g in regions {
                    let pulled = pull_back(base, attach, &g)?;
                    let mut g = g.prepend(ExprStep::Base, None);
                    if !pulled.is_syntactically_empty() && !desc_card(&g.expr, &pulled).is_zero() {
                        g.attach.push(fixed(d.clone(), pulled));
                    }
                    out.push(g);
                }
                return Ok(out);
            }
            let mut meeting = Vec::new();
            let mut out = Vec::new();
            for g in regions {
                let pulled = pull_back(base, attach, &g)?;
                if pulled.is_syntactically_empty() || desc_card(&g.expr, &pulled).is_zero() {
                    out.push(g.prepend(ExprStep::Base, None));
                } else {
                    meeting.push((g, pulled));
                }
            }
            match meeting.len() {
                0 => {
                    out.push(Region {
                        expr: GraphExpr::single(label),
                        count: Cardinality::ONE,
                        members: Some(VertexSet::Explicit(vec![d.clone()])),
                        embed: Embed::Table { map: vec![(label.clone(), d.clone())] },
                        attach: vec![AttachTemplate::Fixed(Links::Set {
                            host: attach.lifted(&RegionPath(vec![ExprStep::Base]), &[]),
                            local: VertexSet::Explicit(vec![d.clone()]),
                        })],
                    });
                    Ok(out)
                }
                _ if meeting.iter().all(|(g, _)| !g.is_family()) => {
                    let mut it = meeting.into_iter().map(|(g, p)| (g.prepend(ExprStep::Base, None), p));
                    let first = it.next().unwrap();
                    let (g, pulled) = it.fold(first, |(l, pl), (r, pr)| {
                        let pulled = VertexSet::Union(vec![
                            pl.lifted(&RegionPath(vec![ExprStep::Left]), &[Step::Left]),
                            pr.lifted(&RegionPath(vec![ExprStep::Right]), &[Step::Right]),
                        ])
                        .normalized();
                        (pair_union(l, r), pulled)
                    });
                    if !explicit_attach_only(attach) {
                        return unsupported(e, &x);
                    }
                    let mut extra = Vec::new();
                    if let VertexSet::Explicit(sv) = attach.normalized() {
                        for s in sv.iter().filter(|s| g.locate(s).is_none()) {
                            extra.push(fixed(s.clone(), VertexSet::Explicit(vec![local(Step::Label(label.clone()))])));
                        }
                    }
                    let mut attach_t = g.attach;
                    attach_t.extend(extra);
                    out.push(Region {
                        expr: GraphExpr::JoinVertex { base: Box::new(g.expr), label: label.clone(), attach: pulled },
                        count: Cardinality::ONE,
                        members: g.members.map(|m| VertexSet::Union(vec![m, VertexSet::Explicit(vec![d.clone()])])),
                        embed: Embed::Join { inner: Box::new(g.embed), label: label.clone(), host: d },
                        attach: attach_t,
                    });
                    Ok(out)
                }
                _ => unsupported(e, &x),
            }
        }
        GraphExpr::AddEdge { base, a, b } => {
            let regions: Vec<Region> = components_after_deletion(base, &restrict(e, &x, &ExprStep::Base)?)?
                .into_iter()
                .map(|g| g.prepend(ExprStep::Base, None))
                .collect();
            let xa = contains(e, &x, a);
            let xb = contains(e, &x, b);
            let mut regions = regions;
            let find = |v: &Address, rs: &[Region]| rs.iter().position(|g| g.locate(v).is_some());
            match (xa, xb) {
                (true, true) => Ok(regions),
                (true, false) | (false, true) => {
                    let (del, keep) = if xa { (a, b) } else { (b, a) };
                    let Some(i) = find(keep, &regions) else { return unsupported(e, &x) };
                    if regions[i].is_family() {
                        return unsupported(e, &x);
                    }
                    let (_, l) = regions[i].locate(keep).unwrap();
                    regions[i].attach.push(fixed(del.clone(), VertexSet::Explicit(vec![l])));
                    Ok(regions)
                }
                (false, false) => {
                    let (Some(i), Some(j)) = (find(a, &regions), find(b, &regions)) else { return unsupported(e, &x) };
                    if regions[i].is_family() || regions[j].is_family() {
                        return unsupported(e, &x);
                    }
                    if i == j {
                        let g = &mut regions[i];
                        let (_, la) = g.locate(a).unwrap();
                        let (_, lb) = g.locate(b).unwrap();
                        g.expr = GraphExpr::AddEdge { base: Box::new(g.expr.clone()), a: la, b: lb };
                        return Ok(regions);
                    }
                    let (lo, hi) = (i.min(j), i.max(j));
                    let gh = regions.remove(hi);
                    let gl = regions.remove(lo);
                    let merged = merge_pair(gl, gh, a, b);
                    regions.insert(lo, merged);
                    Ok(regions)
                }
            }
        }
    }
}

fn explicit_attach_only(d: &VertexSet) -> bool {
    matches!(d.normalized(), VertexSet::Explicit(_))
}

/// Disjoint union of two single regions; local addresses gain `left`/`right`.
fn pair_union(l: Region, r: Region) -> Region {
    let mut attach = Vec::new();
    for (side, s, g) in [(ExprStep::Left, Step::Left, &l), (ExprStep::Right, Step::Right, &r)] {
        let p = RegionPath(vec![side]);
        for t in &g.attach {
            match t {
                AttachTemplate::Fixed(Links::Vertex { host, local }) => {
                    attach.push(fixed(host.clone(), local.lifted(&p, std::slice::from_ref(&s))))
                }
                AttachTemplate::Fixed(Links::Set { host, local }) => attach.push(AttachTemplate::Fixed(Links::Set {
                    host: host.clone(),
                    local: local.lifted(&p, std::slice::from_ref(&s)),
                })),
                AttachTemplate::Fixed(Links::Line { path, addr, kind, start, step, local }) => {
                    attach.push(AttachTemplate::Fixed(Links::Line {
                        path: path.clone(),
                        addr: addr.clone(),
                        kind: kind.clone(),
                        start: *start,
                        step: *step,
                        local: local.prefixed(std::slice::from_ref(&s)),
                    }))
                }
                _ => unreachable!("key-dependent attachment on a single region"),
            }
        }
    }
    Region {
        expr: GraphExpr::union(l.expr, r.expr),
        count: Cardinality::ONE,
        members: match (l.members, r.members) {
            (Some(x), Some(y)) => Some(VertexSet::Union(vec![x, y])),
            _ => None,
        },
        embed: Embed::Pair { left: Box::new(l.embed), right: Box::new(r.embed) },
        attach,
    }
}

fn merge_pair(l: Region, r: Region, a: &Address, b: &Address) -> Region {
    let la = l.locate(a).or_else(|| l.locate(b)).unwrap().1;
    let rb = r.locate(b).or_else(|| r.locate(a)).unwrap().1;
    let mut g = pair_union(l, r);
    g.expr = GraphExpr::AddEdge {
        base: Box::new(g.expr),
        a: la.prefixed(&[Step::Left]),
        b: rb.prefixed(&[Step::Right]),
    };
    g
}

/// Pulls a descriptor of `base` back into the local coordinates of a region of
/// `base`, provided every member sees the same local set.
pub fn pull_back(base: &GraphExpr, d: &VertexSet, g: &Region) -> Result<VertexSet, DslError> {
    pull(base, d, &g.embed, &g.expr)
}

fn pull(e: &GraphExpr, d: &VertexSet, embed: &Embed, local_expr: &GraphExpr) -> Result<VertexSet, DslError> {
    let fail = || DslError::unsupported(format!("pulling `{d}` back into a region of `{e}`"));
    match embed {
        Embed::Sub { path, .. } => {
            let mut cur = e;
            let mut dd = d.normalized();
            for step in &path.0 {
                dd = restrict(cur, &dd, step)?;
                cur = cur.child(step).ok_or_else(fail)?;
            }
            Ok(dd)
        }
        Embed::Copies { path, inner, .. } => {
            let mut cur = e;
            let mut dd = d.normalized();
            for step in &path.0 {
                dd = restrict(cur, &dd, step)?;
                cur = cur.child(step).ok_or_else(fail)?;
            }
            let dd = restrict(cur, &dd, &ExprStep::AllCopies)?;
            let inner_e = cur.child(&ExprStep::AllCopies).ok_or_else(fail)?;
            pull(inner_e, &dd, inner, local_expr)
        }
        _ => {
            // Finite-local regions: test the images of the local vertices for
            // two different members and require agreement.
            if let GraphExpr::Finite { vertices, .. } = local_expr {
                let test = |key: &[Index]| -> Option<Vec<Address>> {
                    vertices
                        .iter()
                        .map(|l| local(Step::Label(l.clone())))
                        .filter_map(|la| embed.host(key, &la).map(|h| (la, h)))
                        .filter(|(_, h)| contains(e, d, h))
                        .map(|(la, _)| Some(la))
                        .collect()
                };
                let a = test(&embed.rep_key()).ok_or_else(fail)?;
                if embed.is_family() && test(&embed.alt_key()).ok_or_else(fail)? != a {
                    return Err(fail());
                }
                return Ok(VertexSet::Explicit(a));
            }
            // Infinite local expressions: only explicit or disjoint descriptors.
            let mut out = Vec::new();
            for m in d.members() {
                match m {
                    VertexSet::Explicit(v) => {
                        for h in v {
                            if let Some((_, l)) = embed.locate(&h).filter(|(_, l)| resolve(local_expr, l)) {
                                if embed.is_family() {
                                    return Err(fail());
                                }
                                out.push(l);
                            }
                        }
                    }
                    _ => return Err(fail()),
                }
            }
            Ok(VertexSet::Explicit(out))
        }
    }
}

fn finite_components(e: &GraphExpr, rest: &[Address], deleted: &[Address]) -> Vec<Region> {
    let mut seen = vec![false; rest.len()];
    let mut out = Vec::new();
    for s in 0..rest.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut k = 0;
        while k < comp.len() {
            let v = comp[k];
            k += 1;
            for u in 0..rest.len() {
                if !seen[u] && has_edge(e, &rest[v], &rest[u]) {
                    seen[u] = true;
                    comp.push(u);
                }
            }
        }
        comp.sort_unstable();
        let verts: Vec<Address> = comp.iter().map(|&i| rest[i].clone()).collect();
        // keep the original labels
        let labels: Vec<String> = verts
            .iter()
            .map(|a| match a.steps() {
                [Step::Label(l)] => l.clone(),
                _ => unreachable!(),
            })
            .collect();
        let mut g = finite_region(e, &verts, deleted);
        if let GraphExpr::Finite { edges, .. } = &g.expr {
            let ren = |p: &String| labels[p[1..].parse::<usize>().unwrap()].clone();
            let edges = edges.iter().map(|(a, b)| (ren(a), ren(b))).collect();
            g.expr = GraphExpr::Finite { vertices: labels.clone(), edges };
        }
        g.embed = Embed::identity();
        g.attach = g
            .attach
            .into_iter()
            .map(|t| match t {
                AttachTemplate::Fixed(Links::Vertex { host, local: VertexSet::Explicit(v) }) => {
                    let v = v
                        .iter()
                        .map(|a| match a.steps() {
                            [Step::Label(p)] => Address::single(Step::Label(ren_label(&labels, p))),
                            _ => a.clone(),
                        })
                        .collect();
                    fixed(host, VertexSet::Explicit(v))
                }
                t => t,
            })
            .collect();
        out.push(g);
    }
    out
}

fn ren_label(labels: &[String], p: &str) -> String {
    labels[p[1..].parse::<usize>().unwrap()].clone()
}

/// Pieces of `e` itself (no deletion).
fn pieces(e: &GraphExpr) -> Result<Vec<Region>, DslError> {
    match is_connected(e) {
        Verdict::Yes => return Ok(vec![Region::whole(e)]),
        Verdict::Unknown => return Err(DslError::unsupported(format!("connectivity of `{e}`"))),
        Verdict::No => {}
    }
    match e {
        GraphExpr::Finite { vertices, .. } => {
            let rest: Vec<Address> = vertices.iter().map(|l| local(Step::Label(l.clone()))).collect();
            Ok(finite_components(e, &rest, &[]))
        }
        GraphExpr::Union(..) | GraphExpr::Copies(..) => components_after_deletion_nonempty(e),
        GraphExpr::Complete(_) => Ok(Vec::new()),
        GraphExpr::JoinVertex { base, label, attach } => {
            // disconnected: `attach` is empty, so the new vertex is isolated
            let mut out: Vec<Region> = pieces(base)?.into_iter().map(|g| g.prepend(ExprStep::Base, None)).collect();
            let d = local(Step::Label(label.clone()));
            let _ = attach;
            out.push(Region {
                expr: GraphExpr::single(label),
                count: Cardinality::ONE,
                members: Some(VertexSet::Explicit(vec![d.clone()])),
                embed: Embed::Table { map: vec![(label.clone(), d)] },
                attach: Vec::new(),
            });
            Ok(out)
        }
        GraphExpr::AddEdge { .. } => components_after_deletion_addedge(e),
        _ => Err(DslError::unsupported(format!("pieces of `{e}`"))),
    }
}

fn components_after_deletion_nonempty(e: &GraphExpr) -> Result<Vec<Region>, DslError> {
    match e {
        GraphExpr::Union(l, r) => {
            let mut out: Vec<Region> =
                pieces(l)?.into_iter().map(|g| g.prepend(ExprStep::Left, Some(Step::Left))).collect();
            out.extend(pieces(r)?.into_iter().map(|g| g.prepend(ExprStep::Right, Some(Step::Right))));
            Ok(out)
        }
        GraphExpr::Copies(k, inner) => Ok(pieces(inner)?.into_iter().map(|g| g.over_copies(*k)).collect()),
        _ => unreachable!(),
    }
}

fn components_after_deletion_addedge(e: &GraphExpr) -> Result<Vec<Region>, DslError> {
    components_after_deletion(e, &VertexSet::Explicit(vec![]))
        .or_else(|_| {
            let GraphExpr::AddEdge { base, a, b } = e else { unreachable!() };
            let mut regions: Vec<Region> = pieces(base)?.into_iter().map(|g| g.prepend(ExprStep::Base, None)).collect();
            let find = |v: &Address, rs: &[Region]| rs.iter().position(|g| g.locate(v).is_some());
            let (Some(i), Some(j)) = (find(a, &regions), find(b, &regions)) else {
                return Err(DslError::unsupported(format!("pieces of `{e}`")));
            };
            if regions[i].is_family() || regions[j].is_family() {
                return Err(DslError::unsupported(format!("pieces of `{e}`")));
            }
            let (lo, hi) = (i.min(j), i.max(j));
            let gh = regions.remove(hi);
            let gl = regions.remove(lo);
            regions.insert(lo, merge_pair(gl, gh, a, b));
            Ok(regions)
        })
}

/// Connectivity by structural recursion.
pub fn is_connected(e: &GraphExpr) -> Verdict {
    match e {
        GraphExpr::Finite { vertices, .. } => {
            if vertices.is_empty() {
                return Verdict::No;
            }
            let rest: Vec<Address> = vertices.iter().map(|l| local(Step::Label(l.clone()))).collect();
            let mut seen = vec![false; rest.len()];
            seen[0] = true;
            let mut stack = vec![0];
            while let Some(v) = stack.pop() {
                for u in 0..rest.len() {
                    if !seen[u] && has_edge(e, &rest[v], &rest[u]) {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            Verdict::from_bool(seen.iter().all(|&s| s))
        }
        GraphExpr::Ray | GraphExpr::Comb(_) | GraphExpr::Star(_) | GraphExpr::Tree(_) | GraphExpr::WithTops { .. } => {
            Verdict::Yes
        }
        GraphExpr::Complete(k) => Verdict::from_bool(!k.is_zero()),
        GraphExpr::Union(..) => Verdict::No,
        GraphExpr::Copies(k, inner) => match k {
            Cardinality::Finite(1) => is_connected(inner),
            _ => Verdict::No,
        },
        GraphExpr::JoinVertex { base, attach, .. } => {
            if attach.is_syntactically_empty() || desc_card(base, attach).is_zero() {
                return Verdict::No;
            }
            match is_connected(base) {
                Verdict::Yes => Verdict::Yes,
                Verdict::Unknown => Verdict::Unknown,
                Verdict::No => {
                    let Ok(ps) = pieces(base) else { return Verdict::Unknown };
                    let mut all = true;
                    for g in &ps {
                        match pull_back(base, attach, g) {
                            Ok(p) if !p.is_syntactically_empty() && !desc_card(&g.expr, &p).is_zero() => {}
                            Ok(_) => all = false,
                            Err(_) => return Verdict::Unknown,
                        }
                    }
                    if all {
                        Verdict::Yes
                    } else {
                        Verdict::No
                    }
                }
            }
        }
        GraphExpr::AddEdge { base, a, b } => match is_connected(base) {
            Verdict::Yes => Verdict::Yes,
            Verdict::Unknown => Verdict::Unknown,
            Verdict::No => {
                let Ok(ps) = pieces(base) else { return Verdict::Unknown };
                let fam = ps.iter().any(Region::is_family);
                if fam || ps.len() > 2 {
                    return Verdict::No;
                }
                let ia = ps.iter().position(|g| g.locate(a).is_some());
                let ib = ps.iter().position(|g| g.locate(b).is_some());
                Verdict::from_bool(ps.len() == 2 && ia.is_some() && ib.is_some() && ia != ib)
            }
        },
    }
}

/// Resolves a region path inside `e` to its sub-expression (re-exported for
/// callers that only hold a [`Region`]).
pub fn region_expr<'a>(e: &'a GraphExpr, p: &RegionPath) -> Option<&'a GraphExpr> {
    subexpr(e, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, truncate};

    fn regions(e: &str, x: &str) -> Vec<Region> {
        components_after_deletion(&parse(e).unwrap(), &x.parse().unwrap()).unwrap()
    }

    #[test]
    fn tops_become_isolated() {
        let r = regions("with_tops(tree(aleph1), all, whole_ray)", "all(base)");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].expr, GraphExpr::single("x"));
        assert!(!r[0].count.is_countable());
        let att = r[0].attachment(&[Index::Tok(1)]);
        assert_eq!(att[0].host_set().to_string(), "branch(base, v:b1)");
    }

    #[test]
    fn ray_minus_root_is_a_ray() {
        let r = regions("ray", "{r0}");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].expr, GraphExpr::Ray);
        assert_eq!(r[0].count, Cardinality::ONE);
        assert_eq!(r[0].embed.host(&[], &"r2".parse().unwrap()).unwrap().to_string(), "r3");
    }

    #[test]
    fn star_minus_center() {
        let r = regions("star(aleph0)", "{center}");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].count, Cardinality::Aleph0);
        assert_eq!(r[0].expr, GraphExpr::single("x"));
    }

    #[test]
    fn connectivity() {
        assert_eq!(is_connected(&parse("comb(2)").unwrap()), Verdict::Yes);
        assert_eq!(is_connected(&parse("union(ray, ray)").unwrap()), Verdict::No);
        assert_eq!(is_connected(&parse("add_edge(union(ray, ray), left/r0, right/r0)").unwrap()), Verdict::Yes);
        assert_eq!(
            is_connected(&parse("join_vertex(copies(aleph0, star(aleph0)), root, centers(.))").unwrap()),
            Verdict::Yes
        );
        assert_eq!(is_connected(&parse("join_vertex(union(ray, ray), d, {left/r3})").unwrap()), Verdict::No);
    }

    #[test]
    fn nested_tops_family() {
        let e = "join_vertex(copies(aleph1, with_tops(tree(aleph1), all, whole_ray)), root, centers(.))";
        let r = regions(e, "union({root}, all(base/copy:*/base))");
        assert_eq!(r.len(), 1);
        let key = vec![Index::Nat(2), Index::Tok(1)];
        let host = r[0].embed.host(&key, &"x".parse().unwrap()).unwrap();
        assert_eq!(host.to_string(), "copy:2/top:b1");
        assert_eq!(r[0].locate(&host), Some((key.clone(), "x".parse().unwrap())));
        let att = r[0].attachment(&key);
        assert_eq!(att.len(), 1);
        assert_eq!(att[0].line_host(1).unwrap().to_string(), "copy:2/v:b1");
    }

    #[test]
    fn star_of_stars_root() {
        let e = "join_vertex(copies(aleph0, star(aleph0)), root, centers(.))";
        let r = regions(e, "{root}");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].expr, GraphExpr::Star(Cardinality::Aleph0));
        assert_eq!(r[0].count, Cardinality::Aleph0);
        let att = r[0].attachment(&r[0].embed.rep_key());
        assert_eq!(att, vec![Links::Vertex { host: "root".parse().unwrap(), local: "centers(.)".parse().unwrap() }]);
    }

    /// Deleting X from a truncation gives components that each map into one
    /// region member.
    #[test]
    fn agrees_with_truncations() {
        let cases = [
            ("ray", "{r0}"),
            ("ray", "{r2, r4}"),
            ("comb(2)", "{r1}"),
            ("comb(2)", "spine(.)"),
            ("star(aleph0)", "{center}"),
            ("star(5)", "{leaf:1}"),
            ("tree(aleph0)", "{v, v:1}"),
            ("complete(aleph0)", "{k:0, k:3}"),
            ("with_tops(tree(aleph1), all, every_2nd)", "all(base)"),
            ("join_vertex(copies(aleph0, star(aleph0)), root, centers(.))", "{root}"),
            ("add_edge(union(ray, ray), left/r0, right/r0)", "{left/r1}"),
            ("join_vertex(comb(1), d, spine(.))", "{d}"),
            ("join_vertex(union(ray, star(3)), d, {left/r0, right/center})", "{left/r2}"),
        ];
        for (e, x) in cases {
            let e = parse(e).unwrap();
            let x: VertexSet = x.parse().unwrap();
            let rs = components_after_deletion(&e, &x).unwrap();
            let t = truncate(&e, 4, 3);
            let keep: Vec<bool> = t.vertices.iter().map(|a| !contains(&e, &x, a)).collect();
            for comp in t.components(&keep) {
                let spots: Vec<(usize, Vec<Index>)> = comp
                    .iter()
                    .map(|&i| {
                        let a = &t.vertices[i];
                        let hits: Vec<_> = rs
                            .iter()
                            .enumerate()
                            .filter_map(|(ri, g)| g.locate(a).map(|(k, _)| (ri, k)))
                            .collect();
                        assert_eq!(hits.len(), 1, "{a} in {e} - {x}: {hits:?}");
                        hits[0].clone()
                    })
                    .collect();
                assert!(spots.windows(2).all(|w| w[0] == w[1]), "{e} - {x}: {spots:?}");
            }
        }
    }
}
