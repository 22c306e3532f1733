//! Normal spanning trees, normal trees around a set, forest merging, ray
//! rerouting and rank transfer to a component plus its attachment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::tree::{ancestors, least_edge, MergedPart, Parent, SpanError, TreeDescriptor, TreeKind, TreeRule};
use crate::dsl::{
    components_after_deletion, contains, has_edge, is_connected, restrict, subexpr, truncate, Address, ExprStep,
    GraphExpr, Links, Region, RegionPath, Step, Verdict, VertexSet,
};
use crate::ends::RaySchema;
use crate::ordinal::Ordinal;
use crate::rank::{ideal_rank_in_region, Ideal, RankResult};

/// Why a normal spanning tree is normal, per constructor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalityCertificate {
    pub argument: Vec<String>,
}

fn argument(e: &GraphExpr, out: &mut Vec<String>) {
    let line = match e {
        GraphExpr::Finite { .. } => "finite part: the enumeration tree attaches each new path below the top of a chain",
        GraphExpr::Ray | GraphExpr::Comb(_) | GraphExpr::Star(_) | GraphExpr::Tree(_) => {
            "tree constructor: every edge is a tree edge"
        }
        GraphExpr::Complete(_) => "clique: the tree is a path, so all vertices are comparable",
        GraphExpr::JoinVertex { .. } => "joined vertex is the root, hence below nothing and above everything",
        GraphExpr::AddEdge { .. } => "added edge joins a vertex to its descendant",
        GraphExpr::Union(..) | GraphExpr::Copies(..) => "disjoint pieces are normal on their own",
        GraphExpr::WithTops { .. } => "tops are not spanned",
    };
    out.push(line.to_string());
    match e {
        GraphExpr::Union(l, r) => {
            argument(l, out);
            argument(r, out);
        }
        GraphExpr::Copies(_, inner) => argument(inner, out),
        GraphExpr::JoinVertex { base, .. } | GraphExpr::AddEdge { base, .. } => argument(base, out),
        _ => {}
    }
}

/// Enumeration construction on a finite graph: take the least unreached
/// vertex, the component of the rest containing it, and hang a shortest path
/// to it below the deepest tree vertex that component sees.
pub(crate) fn jung_finite(e: &GraphExpr) -> TreeRule {
    let GraphExpr::Finite { vertices, .. } = e else { unreachable!() };
    let mut order: Vec<&String> = vertices.iter().collect();
    order.sort();
    let addr = |l: &str| Address::single(Step::Label(l.to_string()));
    let adj = |a: &str, b: &str| has_edge(e, &addr(a), &addr(b));
    let mut parent: Vec<(String, Option<String>)> = Vec::new();
    let in_tree = |p: &Vec<(String, Option<String>)>, l: &str| p.iter().any(|(x, _)| x == l);
    let depth = |p: &Vec<(String, Option<String>)>, l: &str| {
        let mut d = 0;
        let mut cur = l.to_string();
        while let Some((_, Some(q))) = p.iter().find(|(x, _)| *x == cur) {
            d += 1;
            cur = q.clone();
        }
        d
    };
    while let Some(u) = order.iter().find(|l| !in_tree(&parent, l)).map(|l| l.to_string()) {
        // component of G − T containing u
        let mut comp = vec![u.clone()];
        let mut i = 0;
        while i < comp.len() {
            for w in &order {
                if !in_tree(&parent, w) && !comp.contains(w) && adj(&comp[i], w) {
                    comp.push(w.to_string());
                }
            }
            i += 1;
        }
        let top = order
            .iter()
            .filter(|t| in_tree(&parent, t) && comp.iter().any(|c| adj(c, t)))
            .max_by_key(|t| depth(&parent, t))
            .map(|t| t.to_string());
        let Some(top) = top else {
            parent.push((u, None));
            continue;
        };
        // shortest path inside the component from a neighbour of `top` to u
        let mut prev: Vec<(String, Option<String>)> =
            comp.iter().filter(|c| adj(c, &top)).map(|c| (c.clone(), None)).collect();
        let mut i = 0;
        while i < prev.len() && !prev.iter().any(|(x, _)| *x == u) {
            let cur = prev[i].0.clone();
            for w in &comp {
                if !prev.iter().any(|(x, _)| x == w) && adj(&cur, w) {
                    prev.push((w.clone(), Some(cur.clone())));
                }
            }
            i += 1;
        }
        let mut path = vec![u.clone()];
        while let Some((_, Some(p))) = prev.iter().find(|(x, _)| *x == *path.last().unwrap()) {
            path.push(p.clone());
        }
        path.reverse();
        let mut above = top;
        for v in path {
            parent.push((v.clone(), Some(above)));
            above = v;
        }
    }
    TreeRule::Finite { parents: parent }
}

pub(crate) fn sample_roots(rule: &TreeRule, e: &GraphExpr) -> Vec<Address> {
    truncate(e, 2, 2).vertices.into_iter().filter(|v| matches!(rule.parent(e, v), Ok(Parent::Root))).collect()
}

/// A normal spanning forest of `e` (one normal tree per piece).
pub fn nst_rule(e: &GraphExpr) -> Result<TreeRule, SpanError> {
    match e {
        GraphExpr::Finite { .. } => Ok(jung_finite(e)),
        GraphExpr::Ray | GraphExpr::Comb(_) | GraphExpr::Star(_) | GraphExpr::Tree(_) => Ok(TreeRule::Structural),
        GraphExpr::Complete(k) if k.is_countable() => Ok(TreeRule::CliqueLine),
        GraphExpr::Complete(_) => Err(SpanError::Nonexistent("an uncountable clique has no normal spanning tree".into())),
        GraphExpr::WithTops { .. } => Err(SpanError::Nonexistent("T_ℵ₁ with tops has no normal spanning tree".into())),
        GraphExpr::Union(l, r) => Ok(TreeRule::Union { left: nst_rule(l)?.boxed(), right: nst_rule(r)?.boxed() }),
        GraphExpr::Copies(_, inner) => Ok(TreeRule::Copies { inner: nst_rule(inner)?.boxed() }),
        GraphExpr::JoinVertex { base, attach, .. } => {
            let b = nst_rule(base)?;
            if sample_roots(&b, base).iter().all(|r| contains(base, attach, r)) {
                Ok(TreeRule::NewRoot { base: b.boxed() })
            } else {
                Err(SpanError::Unknown(format!("`{e}`: a base root is not joined")))
            }
        }
        GraphExpr::AddEdge { base, a, b } => {
            let t = nst_rule(base)?;
            let ca = ancestors(&t, base, a)?;
            let cb = ancestors(&t, base, b)?;
            if ca.contains(b) || cb.contains(a) {
                return Ok(TreeRule::Base { inner: t.boxed() });
            }
            let (below, root) = if cb.len() == 1 {
                (a, b)
            } else if ca.len() == 1 {
                (b, a)
            } else {
                return Err(SpanError::Unknown(format!("`{e}`: added edge between incomparable non-roots")));
            };
            Ok(TreeRule::Graft { base: t.boxed(), below: below.clone(), root: root.clone() })
        }
    }
}

pub fn normal_spanning_tree(e: &GraphExpr) -> Result<(TreeDescriptor, NormalityCertificate), SpanError> {
    if is_connected(e) != Verdict::Yes {
        return Err(SpanError::Invalid(format!("`{e}` is not known to be connected")));
    }
    let rule = nst_rule(e)?;
    let mut lines = Vec::new();
    argument(e, &mut lines);
    Ok((TreeDescriptor::new(TreeKind::NormalSpanning, e.clone(), rule), NormalityCertificate { argument: lines }))
}

fn avoids_tops(x: &VertexSet) -> bool {
    x.members().iter().all(|m| match m {
        VertexSet::Tops(_) | VertexSet::TopsThrough(..) => false,
        VertexSet::Explicit(v) => v.iter().all(|a| !matches!(a.steps(), [Step::Top(_)])),
        VertexSet::All(p) => !p.is_root(),
        VertexSet::Minus(a, _) => avoids_tops(a),
        _ => true,
    })
}

/// A normal tree containing `x`, with its vertex set. Pieces without a
/// spanning normal tree fall back to smaller normal trees (the base tree of
/// `T_ℵ₁` with tops).
pub fn normal_tree_containing(e: &GraphExpr, x: &VertexSet) -> Result<(TreeRule, VertexSet), SpanError> {
    let x = x.normalized();
    if let Ok(t) = nst_rule(e) {
        if let VertexSet::Explicit(v) = &x {
            let mut set = BTreeSet::new();
            for a in v {
                set.extend(ancestors(&t, e, a)?);
            }
            return Ok((TreeRule::DownClosure { tree: t.boxed(), of: v.clone() }, VertexSet::Explicit(set.into_iter().collect())));
        }
        return Ok((t, VertexSet::all()));
    }
    match e {
        GraphExpr::WithTops { .. } if avoids_tops(&x) => {
            Ok((TreeRule::Base { inner: TreeRule::Structural.boxed() }, VertexSet::All(RegionPath(vec![ExprStep::Base]))))
        }
        GraphExpr::Copies(_, inner) => {
            let (t, s) = normal_tree_containing(inner, &restrict(e, &x, &ExprStep::AllCopies)?)?;
            Ok((TreeRule::Copies { inner: t.boxed() }, s.lifted(&RegionPath(vec![ExprStep::AllCopies]), &[])))
        }
        GraphExpr::Union(l, r) => {
            let (tl, sl) = normal_tree_containing(l, &restrict(e, &x, &ExprStep::Left)?)?;
            let (tr, sr) = normal_tree_containing(r, &restrict(e, &x, &ExprStep::Right)?)?;
            let set = VertexSet::Union(vec![
                sl.lifted(&RegionPath(vec![ExprStep::Left]), &[Step::Left]),
                sr.lifted(&RegionPath(vec![ExprStep::Right]), &[Step::Right]),
            ]);
            Ok((TreeRule::Union { left: tl.boxed(), right: tr.boxed() }, set.normalized()))
        }
        GraphExpr::JoinVertex { base, label, attach } => {
            // the joined vertex becomes the root whether or not it is in x
            let d = Address::single(Step::Label(label.clone()));
            let (t, s) = normal_tree_containing(base, &restrict(e, &x, &ExprStep::Base)?)?;
            if !sample_roots(&t, base).iter().all(|r| contains(base, attach, r)) {
                return Err(SpanError::Unknown(format!("`{e}`: a base root is not joined")));
            }
            let set = VertexSet::Union(vec![VertexSet::Explicit(vec![d]), s.lifted(&RegionPath(vec![ExprStep::Base]), &[])]);
            Ok((TreeRule::NewRoot { base: t.boxed() }, set.normalized()))
        }
        _ => Err(SpanError::Unknown(format!("normal tree of `{e}` around `{x}`"))),
    }
}

/// Whether two descriptors agree on a truncation.
pub fn same_set(e: &GraphExpr, a: &VertexSet, b: &VertexSet) -> bool {
    a.normalized() == b.normalized()
        || truncate(e, 4, 3).vertices.iter().all(|v| contains(e, a, v) == contains(e, b, v))
}

/// Joins member trees to the anchor tree (spanning `anchor_set`) by the least
/// edge from each member to its attachment. One tree per region of
/// `e − anchor_set`, in region order.
pub fn merge_forest(
    e: &GraphExpr,
    anchor: TreeRule,
    anchor_set: &VertexSet,
    members: Vec<TreeRule>,
) -> Result<TreeRule, SpanError> {
    let regions = components_after_deletion(e, anchor_set)?;
    if regions.is_empty() {
        return Ok(anchor);
    }
    if regions.len() != members.len() {
        return Err(SpanError::Invalid(format!("{} regions but {} member trees", regions.len(), members.len())));
    }
    for g in &regions {
        if least_edge(e, &g.expr, &g.attachment(&g.embed.rep_key())).is_none() {
            return Err(SpanError::Invalid(format!("a member `{}` has no edge to the anchor", g.expr)));
        }
    }
    let parts = regions.into_iter().zip(members).map(|(region, tree)| MergedPart { region, tree }).collect();
    Ok(TreeRule::Merged { anchor: anchor.boxed(), parts })
}

/// Number of ray positions checked when validating a ray schema.
const RAY_PREFIX: u64 = 12;

/// Reroutes `t` so that it contains the ray `ray`. The ray's vertices must
/// appear in order along one ray of `t`; then each `R_{i+1}` hangs below
/// `R_i` and the tree vertices strictly between them hang below their
/// successor towards `R_{i+1}`.
pub fn reroute_with_ray(e: &GraphExpr, t: &TreeRule, ray: &RaySchema) -> Result<TreeRule, SpanError> {
    for n in 0..RAY_PREFIX {
        if !has_edge(e, &ray.vertex(n), &ray.vertex(n + 1)) {
            return Err(SpanError::Invalid(format!("{}–{} is not an edge", ray.vertex(n), ray.vertex(n + 1))));
        }
    }
    let contained =
        (0..RAY_PREFIX).all(|n| matches!(t.parent(e, &ray.vertex(n + 1)), Ok(Parent::Of(p)) if p == ray.vertex(n)));
    if contained {
        return Ok(t.clone());
    }
    for n in 0..RAY_PREFIX {
        if !ancestors(t, e, &ray.vertex(n + 1))?.contains(&ray.vertex(n)) {
            return Err(SpanError::Unknown(format!("{} is not below {} in the tree", ray.vertex(n + 1), ray.vertex(n))));
        }
    }
    Ok(TreeRule::Reroute { base: t.clone().boxed(), ray: ray.clone() })
}

/// The rank of one member `C` of a region of `e − x`, judged in `e`; this
/// bounds the rank of `G[C ∪ x]`.
pub fn rank_transfer_bound(e: &GraphExpr, x: &VertexSet, region: &Region, ideal: &Ideal) -> Result<Ordinal, SpanError> {
    match ideal.contains(e, x) {
        Verdict::Yes => {}
        v => return Err(SpanError::Invalid(format!("`{x}` membership is {v:?}"))),
    }
    match ideal_rank_in_region(e, region, ideal) {
        RankResult::Ranked { rank, .. } => Ok(rank),
        RankResult::NoRank { .. } => Err(SpanError::NoRank(region.expr.to_string())),
        RankResult::Unknown { reason } => Err(SpanError::Unknown(reason)),
    }
}

fn base_path(depth: usize) -> RegionPath {
    RegionPath(vec![ExprStep::Base; depth])
}

/// `G[C ∪ x]` for a representative member `C` of `region`, when the
/// attachment is finitely many vertices, or one line of a base tree that is
/// all of `x`.
pub fn induced_with_attachment(e: &GraphExpr, x: &VertexSet, region: &Region) -> Option<GraphExpr> {
    let att = region.attachment(&region.embed.rep_key());
    if let [Links::Line { path, addr, kind, start, step, .. }] = att.as_slice() {
        let tree = subexpr(e, path)?;
        if !addr.is_empty() || !same_set(e, x, &VertexSet::All(path.clone())) {
            return None;
        }
        let GraphExpr::Finite { vertices, .. } = &region.expr else { return None };
        let [label] = vertices.as_slice() else { return None };
        let line = VertexSet::Line { region: RegionPath::root(), kind: kind.clone(), start: *start, step: *step };
        return Some(GraphExpr::join_vertex(tree.clone(), label, line));
    }
    let mut hosts: Vec<Address> = Vec::new();
    for l in &att {
        let Links::Vertex { host, .. } = l else { return None };
        if !hosts.contains(host) {
            hosts.push(host.clone());
        }
    }
    if !same_set(e, x, &VertexSet::Explicit(hosts.clone())) {
        return None;
    }
    let mut g = region.expr.clone();
    for (i, h) in hosts.iter().enumerate() {
        let mut parts: Vec<VertexSet> = att
            .iter()
            .filter_map(|l| match l {
                Links::Vertex { host, local } if host == h => Some(local.lifted(&base_path(i), &[])),
                _ => None,
            })
            .collect();
        let earlier: Vec<Address> = (0..i)
            .filter(|&j| has_edge(e, &hosts[j], h))
            .map(|j| Address::single(Step::Label(format!("q{j}"))))
            .collect();
        parts.push(VertexSet::Explicit(earlier));
        g = GraphExpr::join_vertex(g, &format!("q{i}"), VertexSet::Union(parts).normalized());
    }
    Some(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, LineKind};
    use crate::spanning::{check_on_truncation, CheckOpts};

    fn normal_ok(desc: &TreeDescriptor, d: u64, w: u64) {
        let opts = CheckOpts { spanning: true, normal: true, covers: None };
        for c in check_on_truncation(desc, d, w, &opts) {
            assert!(c.ok, "{} failed on {}: {}", c.name, desc.host, c.detail);
        }
    }

    #[test]
    fn normal_spanning_trees() {
        for src in [
            "ray",
            "comb(1)",
            "tree(aleph1)",
            "complete(aleph0)",
            "join_vertex(comb(1), d, spine(.))",
            "join_vertex(copies(aleph0, star(aleph0)), root, centers(.))",
            "add_edge(union(ray, ray), left/r0, right/r0)",
            "finite{v[a, b, c, d, e], e[a-c, c-e, e-b, b-d, d-a, a-e]}",
        ] {
            let (desc, cert) = normal_spanning_tree(&parse(src).unwrap()).unwrap();
            assert!(!cert.argument.is_empty());
            normal_ok(&desc, 4, 3);
        }
        for src in ["complete(aleph1)", "with_tops(tree(aleph1), all, whole_ray)"] {
            assert!(matches!(normal_spanning_tree(&parse(src).unwrap()), Err(SpanError::Nonexistent(_))), "{src}");
        }
    }

    #[test]
    fn normal_trees_around_sets() {
        let e = parse("with_tops(tree(aleph1), all, whole_ray)").unwrap();
        let (rule, set) = normal_tree_containing(&e, &"all(base)".parse().unwrap()).unwrap();
        assert_eq!(rule, TreeRule::Base { inner: TreeRule::Structural.boxed() });
        assert!(same_set(&e, &set, &"all(base)".parse().unwrap()));
        let e = parse("ray").unwrap();
        let (_, set) = normal_tree_containing(&e, &"{r3}".parse().unwrap()).unwrap();
        assert_eq!(set, "{r0, r1, r2, r3}".parse().unwrap());
    }

    #[test]
    fn merging_members_onto_an_anchor() {
        let e = parse("with_tops(tree(aleph1), all, whole_ray)").unwrap();
        let x: VertexSet = "all(base)".parse().unwrap();
        let anchor = TreeRule::Base { inner: TreeRule::Structural.boxed() };
        let member = TreeRule::Finite { parents: vec![("x".into(), None)] };
        let rule = merge_forest(&e, anchor, &x, vec![member]).unwrap();
        let desc = TreeDescriptor::new(TreeKind::EndFaithful, e, rule);
        let opts = CheckOpts { spanning: true, normal: false, covers: None };
        for c in check_on_truncation(&desc, 3, 2, &opts) {
            assert!(c.ok, "{}: {}", c.name, c.detail);
        }
        let e = parse("add_edge(union(ray, ray), left/r0, right/r0)").unwrap();
        let x: VertexSet = "all(base/left)".parse().unwrap();
        let anchor = TreeRule::Base {
            inner: TreeRule::Union { left: TreeRule::Structural.boxed(), right: TreeRule::Empty.boxed() }.boxed(),
        };
        let rule = merge_forest(&e, anchor, &x, vec![TreeRule::Structural]).unwrap();
        normal_ok(&TreeDescriptor::new(TreeKind::NormalSpanning, e, rule), 5, 2);
    }

    #[test]
    fn rerouting_keeps_or_replaces() {
        let k = parse("complete(aleph0)").unwrap();
        let clique = |step| RaySchema { region: RegionPath::root(), addr: vec![], kind: LineKind::Clique, start: 0, step };
        for step in [2, 3] {
            let rule = reroute_with_ray(&k, &TreeRule::CliqueLine, &clique(step)).unwrap();
            assert!(matches!(rule, TreeRule::Reroute { .. }));
            let desc = TreeDescriptor::new(TreeKind::Partial, k.clone(), rule);
            let opts = CheckOpts { spanning: false, normal: false, covers: None };
            for c in check_on_truncation(&desc, 4, 10, &opts) {
                assert!(c.ok, "{}: {}", c.name, c.detail);
            }
        }
        assert_eq!(reroute_with_ray(&k, &TreeRule::CliqueLine, &clique(1)).unwrap(), TreeRule::CliqueLine);
        let comb = parse("comb(1)").unwrap();
        let spine = RaySchema { region: RegionPath::root(), addr: vec![], kind: LineKind::Spine, start: 0, step: 1 };
        assert_eq!(reroute_with_ray(&comb, &TreeRule::Structural, &spine).unwrap(), TreeRule::Structural);
        let sparse = RaySchema { step: 2, ..spine };
        assert!(matches!(reroute_with_ray(&comb, &TreeRule::Structural, &sparse), Err(SpanError::Invalid(_))));
    }
}
