//! End spaces of DSL graphs: end classes, closures of vertex sets, domination,
//! and the star/comb search on finite truncations.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dsl::components::restrict;
use crate::dsl::{
    desc_card, line_vertex, Address, Cardinality, DslError, ExprStep, FiniteTruncation, GraphExpr, Index,
    LineKind, RegionPath, Step, Verdict, VertexSet,
};

/// A ray given by a line: the vertices `addr·line(start + step·n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaySchema {
    pub region: RegionPath,
    pub addr: Vec<Step>,
    pub kind: LineKind,
    pub start: u64,
    pub step: u64,
}

impl RaySchema {
    fn on(region: RegionPath, addr: Vec<Step>, kind: LineKind) -> Self {
        RaySchema { region, addr, kind, start: 0, step: 1 }
    }

    pub fn vertex(&self, n: u64) -> Address {
        let mut v = self.addr.clone();
        v.push(line_vertex(&self.kind, self.start + self.step * n));
        Address(v)
    }

    /// The ray's vertex set as a descriptor.
    pub fn descriptor(&self) -> VertexSet {
        VertexSet::Line { region: self.region.clone(), kind: self.kind.clone(), start: self.start, step: self.step }
    }
}

/// Why an end class is (not) dominated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum Domination {
    /// One vertex adjacent to infinitely many vertices of every ray in the class.
    Vertex { addr: Address },
    /// Every end of the family is dominated by the top of its own branch.
    OwnTop,
    /// The class lives in a locally finite region, so no vertex sends an
    /// infinite fan.
    LocallyFinite,
    /// The class lives in a tree region; no vertex of a tree dominates a ray.
    Acyclic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndClass {
    pub id: String,
    pub count: Cardinality,
    /// Path of the constructor the class lives in (`copy:*` for copy families).
    pub region: RegionPath,
    /// Representative ray (first copy of every copy family).
    pub ray: RaySchema,
    /// Branch families are keyed by branch; single classes are one end per
    /// region instance.
    pub branches: bool,
    pub dominated: Verdict,
    pub witness: Option<Domination>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndSpace {
    pub classes: Vec<EndClass>,
}

impl EndSpace {
    pub fn class(&self, id: &str) -> Option<&EndClass> {
        self.classes.iter().find(|c| c.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn all_dominated(&self) -> Verdict {
        if self.classes.iter().all(|c| c.dominated == Verdict::Yes) {
            Verdict::Yes
        } else if self.classes.iter().any(|c| c.dominated == Verdict::No) {
            Verdict::No
        } else {
            Verdict::Unknown
        }
    }
}

fn class_id(path: &RegionPath, name: &str) -> String {
    if path.is_root() {
        name.to_string()
    } else {
        format!("{path}/{name}")
    }
}

fn concrete(step: &ExprStep) -> Option<Step> {
    match step {
        ExprStep::Left => Some(Step::Left),
        ExprStep::Right => Some(Step::Right),
        ExprStep::Copy(i) => Some(Step::Copy(i.clone())),
        ExprStep::AllCopies => Some(Step::Copy(Index::Nat(0))),
        ExprStep::Base => None,
    }
}

/// End classes of `e`.
pub fn end_space(e: &GraphExpr) -> Result<EndSpace, DslError> {
    let mut classes = Vec::new();
    collect(e, &RegionPath::root(), &[], Cardinality::ONE, &mut classes)?;
    Ok(EndSpace { classes })
}

fn collect(
    e: &GraphExpr,
    path: &RegionPath,
    addr: &[Step],
    mult: Cardinality,
    out: &mut Vec<EndClass>,
) -> Result<(), DslError> {
    let single = |name: &str, kind: LineKind, dom: Verdict, w: Domination| EndClass {
        id: class_id(path, name),
        count: mult,
        region: path.clone(),
        ray: RaySchema::on(path.clone(), addr.to_vec(), kind),
        branches: false,
        dominated: dom,
        witness: Some(w),
    };
    let down = |step: ExprStep, out: &mut Vec<EndClass>, child: &GraphExpr, mult: Cardinality| {
        let mut a = addr.to_vec();
        a.extend(concrete(&step));
        collect(child, &path.child(step), &a, mult, out)
    };
    match e {
        GraphExpr::Finite { .. } | GraphExpr::Star(_) => {}
        GraphExpr::Ray | GraphExpr::Comb(_) => {
            out.push(single("ray", LineKind::Spine, Verdict::No, Domination::LocallyFinite))
        }
        GraphExpr::Tree(Cardinality::Finite(0)) => {}
        GraphExpr::Tree(Cardinality::Finite(1)) => {
            out.push(single("ray", LineKind::Branch(vec![]), Verdict::No, Domination::Acyclic))
        }
        GraphExpr::Tree(_) => out.push(EndClass {
            id: class_id(path, "branches"),
            count: mult.product(Cardinality::Uncountable),
            region: path.clone(),
            ray: RaySchema::on(path.clone(), addr.to_vec(), LineKind::Branch(vec![])),
            branches: true,
            dominated: Verdict::No,
            witness: Some(Domination::Acyclic),
        }),
        GraphExpr::Complete(k) if k.is_finite() => {}
        GraphExpr::Complete(_) => {
            let mut w = addr.to_vec();
            w.push(Step::K(Index::Nat(0)));
            let mut c = single("clique", LineKind::Clique, Verdict::Yes, Domination::Vertex { addr: Address(w) });
            c.ray.start = 1;
            out.push(c);
        }
        GraphExpr::WithTops { base, .. } => {
            let from = out.len();
            down(ExprStep::Base, out, base, mult)?;
            for c in &mut out[from..] {
                c.dominated = Verdict::Yes;
                c.witness = Some(Domination::OwnTop);
            }
        }
        GraphExpr::Union(l, r) => {
            down(ExprStep::Left, out, l, mult)?;
            down(ExprStep::Right, out, r, mult)?;
        }
        GraphExpr::Copies(k, inner) => {
            if !k.is_zero() {
                down(ExprStep::AllCopies, out, inner, mult.product(*k))?;
            }
        }
        GraphExpr::JoinVertex { base, label, attach } => {
            let from = out.len();
            down(ExprStep::Base, out, base, mult)?;
            let sel = closure_ends(base, attach)?;
            let mut w = addr.to_vec();
            w.push(Step::Label(label.clone()));
            for (c, (_, s)) in out[from..].iter_mut().zip(sel.classes) {
                if c.dominated == Verdict::Yes {
                    continue;
                }
                match s {
                    Selection::All => {
                        c.dominated = Verdict::Yes;
                        c.witness = Some(Domination::Vertex { addr: Address(w.clone()) });
                    }
                    Selection::None => {}
                    _ => {
                        c.dominated = Verdict::Unknown;
                        c.witness = None;
                    }
                }
            }
        }
        GraphExpr::AddEdge { base, .. } => down(ExprStep::Base, out, base, mult)?,
    }
    Ok(())
}

/// Which ends of one class lie in a closure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "sel", content = "of", rename_all = "snake_case")]
pub enum Selection {
    All,
    None,
    /// The ends of the branches `p·0·0·…` for the listed prefixes.
    Branches(Vec<Vec<Index>>),
    /// The ends of all branches through the given node.
    Through(Vec<Index>),
    Unknown,
}

impl Selection {
    fn join(self, other: Selection) -> Selection {
        use Selection::*;
        match (self, other) {
            (All, _) | (_, All) => All,
            (None, x) | (x, None) => x,
            (Branches(mut a), Branches(b)) => {
                a.extend(b);
                a.sort();
                a.dedup();
                Branches(a)
            }
            (Through(p), Through(q)) if p.starts_with(&q) => Through(q),
            (Through(p), Through(q)) if q.starts_with(&p) => Through(p),
            _ => Unknown,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Selection::None)
    }
}

/// `∂_Ω M` as a selection per end class (in [`end_space`] order).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndSubset {
    pub classes: Vec<(String, Selection)>,
}

impl EndSubset {
    pub fn all(space: &EndSpace) -> Self {
        EndSubset { classes: space.classes.iter().map(|c| (c.id.clone(), Selection::All)).collect() }
    }

    pub fn get(&self, id: &str) -> Option<&Selection> {
        self.classes.iter().find(|(i, _)| i == id).map(|(_, s)| s)
    }

    pub fn is_empty(&self) -> bool {
        self.classes.iter().all(|(_, s)| s.is_none())
    }
}

/// The ends in the closure of `m`.
pub fn closure_ends(e: &GraphExpr, m: &VertexSet) -> Result<EndSubset, DslError> {
    let mut classes = Vec::new();
    let finite = desc_card(e, m).is_finite();
    closure_rec(e, &RegionPath::root(), &m.normalized(), finite, &mut classes)?;
    Ok(EndSubset { classes })
}

fn closure_rec(
    e: &GraphExpr,
    path: &RegionPath,
    m: &VertexSet,
    finite: bool,
    out: &mut Vec<(String, Selection)>,
) -> Result<(), DslError> {
    let one = |name: &str, out: &mut Vec<(String, Selection)>| {
        let infinite = !finite && !desc_card(e, m).is_finite();
        out.push((class_id(path, name), if infinite { Selection::All } else { Selection::None }));
    };
    let down = |step: ExprStep, child: &GraphExpr, out: &mut Vec<(String, Selection)>| {
        let sub = if finite { VertexSet::empty() } else { restrict(e, m, &step)? };
        closure_rec(child, &path.child(step), &sub, finite, out)
    };
    match e {
        GraphExpr::Finite { .. } | GraphExpr::Star(_) => {}
        GraphExpr::Tree(Cardinality::Finite(0)) => {}
        GraphExpr::Complete(k) if k.is_finite() => {}
        GraphExpr::Ray | GraphExpr::Comb(_) | GraphExpr::Tree(Cardinality::Finite(1)) => one("ray", out),
        GraphExpr::Complete(_) => one("clique", out),
        GraphExpr::Tree(_) => {
            let sel = if finite { Selection::None } else { tree_selection(m) };
            out.push((class_id(path, "branches"), sel));
        }
        GraphExpr::WithTops { base, .. } => {
            let mut tops = Selection::None;
            if !finite {
                for x in m.members() {
                    match x {
                        VertexSet::Tops(p) if p.is_root() => tops = tops.join(Selection::All),
                        VertexSet::TopsThrough(p, q) if p.is_root() => tops = tops.join(Selection::Through(q)),
                        VertexSet::All(p) if p.is_root() => tops = tops.join(Selection::All),
                        VertexSet::Explicit(_) => {}
                        VertexSet::Minus(a, b) => {
                            // removing a few tops or a dispersed part of the base
                            // does not change the closure
                            if desc_card(e, &b).is_finite() {
                                let c = closure_ends(e, &a)?;
                                tops = tops.join(c.classes.into_iter().next().map_or(Selection::None, |(_, s)| s));
                            } else {
                                tops = Selection::Unknown;
                            }
                        }
                        _ => {}
                    }
                }
            }
            let from = out.len();
            down(ExprStep::Base, base, out)?;
            for (_, s) in &mut out[from..] {
                *s = std::mem::replace(s, Selection::None).join(tops.clone());
            }
        }
        GraphExpr::Union(l, r) => {
            down(ExprStep::Left, l, out)?;
            down(ExprStep::Right, r, out)?;
        }
        GraphExpr::Copies(k, inner) => {
            if !k.is_zero() {
                down(ExprStep::AllCopies, inner, out)?;
            }
        }
        GraphExpr::JoinVertex { base, .. } | GraphExpr::AddEdge { base, .. } => {
            down(ExprStep::Base, base, out)?;
        }
    }
    Ok(())
}

fn tree_selection(m: &VertexSet) -> Selection {
    let mut sel = Selection::None;
    for x in m.members() {
        let s = match &x {
            VertexSet::Explicit(_) | VertexSet::Level(..) | VertexSet::Children(..) | VertexSet::Centers(_) => {
                Selection::None
            }
            VertexSet::All(p) if p.is_root() => Selection::All,
            VertexSet::Line { region, kind: LineKind::Branch(q), .. } if region.is_root() => {
                Selection::Branches(vec![q.clone()])
            }
            VertexSet::Minus(a, b) => {
                if tree_selection(b).is_none() {
                    tree_selection(a)
                } else {
                    Selection::Unknown
                }
            }
            _ => Selection::Unknown,
        };
        sel = sel.join(s);
    }
    sel
}

/// `Yes` iff no end lies in the closure of `u`.
pub fn is_dispersed(e: &GraphExpr, u: &VertexSet) -> Verdict {
    match closure_ends(e, u) {
        Ok(c) if c.is_empty() => Verdict::Yes,
        Ok(c) if c.classes.iter().any(|(_, s)| !matches!(s, Selection::None | Selection::Unknown)) => Verdict::No,
        _ => Verdict::Unknown,
    }
}

/// Domination verdict of one end class together with its witness.
pub fn is_dominated(e: &GraphExpr, id: &str) -> Result<(Verdict, Option<Domination>), DslError> {
    let space = end_space(e)?;
    let c = space
        .class(id)
        .ok_or_else(|| DslError::unsupported(format!("no end class `{id}`")))?;
    Ok((c.dominated, c.witness.clone()))
}

/// Finite prefix of a comb or a star attached to a target set, on vertex
/// indices of a truncation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CombOrStar {
    Comb { spine: Vec<usize>, teeth: Vec<Vec<usize>> },
    Star { center: usize, paths: Vec<Vec<usize>> },
    Exhausted { reachable: usize },
}

/// Grows a BFS tree from `root` and reads off `k` teeth of a comb or `k` rays
/// of a star ending in `target`.
pub fn star_comb_search(t: &FiniteTruncation, root: usize, target: &[bool], k: usize) -> CombOrStar {
    let n = t.len();
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut q = VecDeque::from([root]);
    seen[root] = true;
    while let Some(v) = q.pop_front() {
        order.push(v);
        for u in 0..n {
            if !seen[u] && t.adjacent(v, u) {
                seen[u] = true;
                parent[u] = v;
                q.push_back(u);
            }
        }
    }
    let mut children = vec![Vec::new(); n];
    for &v in &order[1..] {
        children[parent[v]].push(v);
    }
    // number of target vertices in each BFS subtree
    let mut mark = vec![0usize; n];
    for &v in order.iter().rev() {
        mark[v] += usize::from(target[v]);
        if v != root {
            mark[parent[v]] += mark[v];
        }
    }
    let reachable = mark[root];
    if k == 0 {
        return CombOrStar::Exhausted { reachable };
    }
    let dive = |mut v: usize| {
        let mut path = vec![v];
        while !target[v] {
            v = *children[v].iter().find(|&&c| mark[c] > 0).expect("subtree holds a target");
            path.push(v);
        }
        path
    };
    for &v in &order {
        let live: Vec<usize> = children[v].iter().copied().filter(|&c| mark[c] > 0).collect();
        if live.len() >= k {
            let paths = live[..k]
                .iter()
                .map(|&c| {
                    let mut p = vec![v];
                    p.extend(dive(c));
                    p
                })
                .collect();
            return CombOrStar::Star { center: v, paths };
        }
    }
    let mut spine = Vec::new();
    let mut teeth = Vec::new();
    let mut v = root;
    loop {
        spine.push(v);
        let mut live: Vec<usize> = children[v].iter().copied().filter(|&c| mark[c] > 0).collect();
        live.sort_by_key(|&c| std::cmp::Reverse(mark[c]));
        if target[v] {
            teeth.push(vec![v]);
        } else if live.len() >= 2 {
            let mut p = vec![v];
            p.extend(dive(live[1]));
            teeth.push(p);
        }
        if teeth.len() >= k {
            return CombOrStar::Comb { spine, teeth };
        }
        match live.first() {
            Some(&c) => v = c,
            None => return CombOrStar::Exhausted { reachable },
        }
    }
}

/// Direct inspection of a search result: paths follow edges, are internally
/// disjoint, end in the target set and number exactly `k`.
pub fn validate_comb_or_star(t: &FiniteTruncation, target: &[bool], w: &CombOrStar, k: usize) -> Result<(), String> {
    let is_path = |p: &[usize]| p.windows(2).all(|x| t.adjacent(x[0], x[1]));
    match w {
        CombOrStar::Exhausted { .. } => Ok(()),
        CombOrStar::Star { center, paths } => {
            if paths.len() != k {
                return Err(format!("star has {} paths, wanted {k}", paths.len()));
            }
            let mut used = vec![false; t.len()];
            for p in paths {
                if p.first() != Some(center) || p.len() < 2 || !is_path(p) {
                    return Err(format!("bad star path {p:?}"));
                }
                if !target[*p.last().unwrap()] {
                    return Err(format!("star path {p:?} misses the target"));
                }
                for &v in &p[1..] {
                    if std::mem::replace(&mut used[v], true) || v == *center {
                        return Err(format!("star paths meet at {v}"));
                    }
                }
            }
            Ok(())
        }
        CombOrStar::Comb { spine, teeth } => {
            if teeth.len() != k {
                return Err(format!("comb has {} teeth, wanted {k}", teeth.len()));
            }
            if !is_path(spine) {
                return Err("spine is not a path".into());
            }
            let mut on_spine = vec![false; t.len()];
            for &v in spine {
                if std::mem::replace(&mut on_spine[v], true) {
                    return Err(format!("spine repeats {v}"));
                }
            }
            let mut used = vec![false; t.len()];
            for p in teeth {
                let (&s, rest) = p.split_first().ok_or("empty tooth")?;
                if !on_spine[s] || !is_path(p) || !target[*p.last().unwrap()] {
                    return Err(format!("bad tooth {p:?}"));
                }
                if std::mem::replace(&mut used[s], true) {
                    return Err(format!("two teeth start at {s}"));
                }
                for &v in rest {
                    if on_spine[v] || std::mem::replace(&mut used[v], true) {
                        return Err(format!("tooth {p:?} is not disjoint"));
                    }
                }
            }
            Ok(())
        }
    }
}
