//! End-faithful spanning trees from a normal-rank witness.
//!
//! At a peel with set `X` we take a normal tree `T_X` spanning exactly `X`.
//! Each component `C` of `G − X` sees a root path `P` of `T_X`; the member
//! together with `P` is rebuilt as a local expression whose rank is at most the
//! child rank, a tree of it containing `P` as a root path is built
//! recursively, and the member side is hung off `P`.

use super::ops::{nst_rule, normal_tree_containing, same_set};
use super::tree::{
    ancestors, reflect_evidence, tree_ends, AssembledPart, Check, PartShape, SpanError, TreeDescriptor, TreeKind,
    TreeRule,
};
use crate::dsl::{
    components_after_deletion, has_edge, Address, ExprStep, GraphExpr, LineKind, Links, Region, RegionPath, Step,
    VertexSet,
};
use crate::ends::Selection;
use crate::rank::{ideal_rank_in_region, normal_rank, Child, Ideal, PeelingTree, RankError, RankResult};

fn base_path(depth: usize) -> RegionPath {
    RegionPath(vec![ExprStep::Base; depth])
}

fn label(j: usize) -> String {
    format!("q{j}")
}

fn label_addr(j: usize) -> Address {
    Address::single(Step::Label(label(j)))
}

/// The member plus its root path: `P = p_0 … p_{m−1}` becomes nested joins,
/// outermost `p_0`, so that joining roots yields `P` as a root path.
fn member_with_path(e: &GraphExpr, region: &Region, att: &[Links], path: &[Address]) -> GraphExpr {
    let m = path.len();
    let mut g = region.expr.clone();
    for j in (0..m).rev() {
        let h = &path[j];
        let mut parts: Vec<VertexSet> = att
            .iter()
            .filter_map(|l| match l {
                Links::Vertex { host, local } if host == h => Some(local.lifted(&base_path(m - 1 - j), &[])),
                _ => None,
            })
            .collect();
        let deeper: Vec<Address> = (j + 1..m).filter(|&k| has_edge(e, &path[k], h)).map(label_addr).collect();
        parts.push(VertexSet::Explicit(deeper));
        g = GraphExpr::join_vertex(g, &label(j), VertexSet::Union(parts).normalized());
    }
    g
}

/// Moves a member witness onto the member plus path: peels grow by `P`.
fn transfer(local: &GraphExpr, m: usize, w: &PeelingTree) -> Result<PeelingTree, SpanError> {
    let PeelingTree::Peel { x, rank, children } = w else {
        return Ok(PeelingTree::Base);
    };
    let y = VertexSet::Union(vec![x.lifted(&base_path(m), &[]), VertexSet::Explicit((0..m).map(label_addr).collect())])
        .normalized();
    let regions = components_after_deletion(local, &y)?;
    if regions.len() != children.len() || regions.iter().zip(children).any(|(r, c)| r.expr != c.region.expr) {
        return Err(SpanError::Unknown("regions change when the path is added".into()));
    }
    let children =
        regions.into_iter().zip(children).map(|(region, c)| Child { region, witness: c.witness.clone() }).collect();
    Ok(PeelingTree::Peel { x: y, rank: rank.clone(), children })
}

/// Root path of the anchor through every attachment vertex, root first.
fn root_path(anchor: &TreeRule, e: &GraphExpr, att: &[Links]) -> Result<Vec<Address>, SpanError> {
    let mut best: Vec<Address> = Vec::new();
    for l in att {
        let Links::Vertex { host, .. } = l else { unreachable!() };
        let c = ancestors(anchor, e, host)?;
        if c.len() > best.len() {
            best = c;
        }
    }
    best.reverse();
    for l in att {
        if let Links::Vertex { host, .. } = l {
            if !best.contains(host) {
                return Err(SpanError::Invalid(format!("attachment {host} is not on one root path")));
            }
        }
    }
    Ok(best)
}

fn part(e: &GraphExpr, anchor: &TreeRule, child: &Child) -> Result<AssembledPart, SpanError> {
    let region = &child.region;
    let att = region.attachment(&region.embed.rep_key());
    if att.iter().all(|l| matches!(l, Links::Vertex { .. })) {
        let path = root_path(anchor, e, &att)?;
        let local = member_with_path(e, region, &att, &path);
        let w = transfer(&local, path.len(), &child.witness)?;
        let tree = efst_with(&local, &w)?;
        let labels = (0..path.len()).map(label).collect();
        return Ok(AssembledPart { region: region.clone(), local, shape: PartShape::Path { labels }, tree });
    }
    // a single vertex seeing a line of the anchor: the path is a ray
    let [l @ Links::Line { kind, start, step, .. }] = att.as_slice() else {
        return Err(SpanError::Unknown("member attaches through a vertex set".into()));
    };
    let GraphExpr::Finite { vertices, .. } = &region.expr else {
        return Err(SpanError::Unknown("line attachment to a member with more than one vertex".into()));
    };
    if vertices.len() != 1 || child.witness != PeelingTree::Base {
        return Err(SpanError::Unknown("line attachment to a member with more than one vertex".into()));
    }
    if !matches!(kind, LineKind::Spine | LineKind::Branch(_)) {
        return Err(SpanError::Unknown("line attachment along a clique".into()));
    }
    let first = l.line_host(0).expect("line link");
    let prefix = ancestors(anchor, e, &first)?.len() - 1;
    let at = prefix as u64 + start;
    let ray = VertexSet::Line { region: RegionPath::root(), kind: LineKind::Spine, start: at, step: *step };
    let local = GraphExpr::join_vertex(GraphExpr::Ray, &vertices[0], ray);
    let x = Address::single(Step::Label(vertices[0].clone()));
    let tree = TreeRule::Override {
        base: TreeRule::Base { inner: TreeRule::Structural.boxed() }.boxed(),
        entries: vec![(x, Some(Address::single(Step::R(at))))],
    };
    Ok(AssembledPart { region: region.clone(), local, shape: PartShape::Ray { prefix }, tree })
}

/// End-faithful spanning tree of `e` following a peeling witness.
pub fn efst_with(e: &GraphExpr, w: &PeelingTree) -> Result<TreeRule, SpanError> {
    let PeelingTree::Peel { x, children, .. } = w else {
        return nst_rule(e).map_err(|err| match err {
            SpanError::Nonexistent(r) => SpanError::Invalid(format!("base of the witness is not normally spanned: {r}")),
            other => other,
        });
    };
    let (anchor, span) = normal_tree_containing(e, x)?;
    let parts = if same_set(e, &span, x) {
        children.iter().map(|c| part(e, &anchor, c)).collect::<Result<Vec<_>, _>>()?
    } else {
        // the tree picked up more vertices: members shrink, so their ranks
        // do not grow; rank them afresh
        let mut out = Vec::new();
        for region in components_after_deletion(e, &span)? {
            let witness = match ideal_rank_in_region(e, &region, &Ideal::NormallySpanned) {
                RankResult::Ranked { witness, .. } => witness,
                RankResult::NoRank { .. } => return Err(SpanError::NoRank(region.expr.to_string())),
                RankResult::Unknown { reason } => return Err(SpanError::Unknown(reason)),
            };
            out.push(part(e, &anchor, &Child { region, witness })?);
        }
        out
    };
    if parts.is_empty() {
        return Ok(anchor);
    }
    Ok(TreeRule::Assembled { anchor: anchor.boxed(), parts })
}

/// End-faithful spanning tree from the normal-rank witness of `e`.
pub fn end_faithful_spanning_tree(e: &GraphExpr) -> Result<TreeDescriptor, SpanError> {
    let witness = match normal_rank(e) {
        Ok(RankResult::Ranked { witness, .. }) => witness,
        Ok(RankResult::NoRank { .. }) => return Err(SpanError::NoRank(e.to_string())),
        Ok(RankResult::Unknown { reason }) => return Err(SpanError::Unknown(reason)),
        Err(RankError::Disconnected(s)) => return Err(SpanError::Invalid(format!("`{s}` is not connected"))),
        Err(err) => return Err(SpanError::Unknown(err.to_string())),
    };
    Ok(TreeDescriptor::new(TreeKind::EndFaithful, e.clone(), efst_with(e, &witness)?))
}

/// Truncation evidence of end reflection, plus the structural end image
/// (every end class fully reached, injectively) when it can be read off the
/// rule.
pub fn reflects_check(desc: &TreeDescriptor, d: u64, w: u64) -> Vec<Check> {
    let mut out = Vec::new();
    match tree_ends(&desc.rule, &desc.host) {
        Ok(t) if !t.injective => {
            out.push(Check { name: "end_image".into(), ok: false, detail: "not injective".into() })
        }
        Ok(t) => {
            let missing: Vec<String> =
                t.image.iter().filter(|(_, s)| *s != Selection::All).map(|(id, s)| format!("{id}: {s:?}")).collect();
            out.push(Check { name: "end_image".into(), ok: missing.is_empty(), detail: missing.join("; ") });
        }
        Err(SpanError::Invalid(detail)) => out.push(Check { name: "end_image".into(), ok: false, detail }),
        Err(_) => {}
    }
    let evidence = match reflect_evidence(desc, d, w, true) {
        Ok(()) => Check { name: "reflects".into(), ok: true, detail: String::new() },
        Err(detail) => Check { name: "reflects".into(), ok: false, detail },
    };
    out.push(evidence);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::rank::{ideal_rank, Ideal};
    use crate::spanning::{check_on_truncation, CheckOpts};

    fn efst_ok(desc: &TreeDescriptor, d: u64, w: u64) {
        let opts = CheckOpts { spanning: true, normal: false, covers: None };
        let checks = check_on_truncation(desc, d, w, &opts).into_iter().chain(reflects_check(desc, d, w));
        for c in checks {
            assert!(c.ok, "{} failed on {}: {}", c.name, desc.host, c.detail);
        }
    }

    #[test]
    fn rank_zero_hosts_get_normal_trees() {
        for src in ["ray", "comb(2)", "tree(aleph1)", "join_vertex(comb(1), d, spine(.))"] {
            let desc = end_faithful_spanning_tree(&parse(src).unwrap()).unwrap();
            efst_ok(&desc, 4, 3);
        }
    }

    #[test]
    fn tops_hang_off_their_rays() {
        for adj in ["whole_ray", "every_2nd"] {
            let e = parse(&format!("with_tops(tree(aleph1), all, {adj})")).unwrap();
            let desc = end_faithful_spanning_tree(&e).unwrap();
            assert!(matches!(desc.rule, TreeRule::Assembled { .. }));
            efst_ok(&desc, 4, 3);
        }
    }

    #[test]
    fn depth_two_witness() {
        let e = parse("join_vertex(copies(aleph0, star(aleph0)), root, centers(.))").unwrap();
        let RankResult::Ranked { witness, .. } = ideal_rank(&e, &Ideal::FiniteSets) else { panic!() };
        assert_eq!(witness.depth(), 2);
        let rule = efst_with(&e, &witness).unwrap();
        efst_ok(&TreeDescriptor::new(TreeKind::EndFaithful, e, rule), 4, 3);
    }
}
