//! Rayless trees covering a vertex set, and rayless spanning trees.

use super::ops::{jung_finite, normal_tree_containing, nst_rule, sample_roots};
use super::tree::{ancestors, is_rayless, SpanError, TreeDescriptor, TreeKind, TreeRule};
use crate::dsl::{contains, GraphExpr, RegionPath, Verdict, VertexSet};
use crate::ends::{closure_ends, end_space, is_dominated};
use crate::rank::{normal_rank, Ideal, PeelingTree, RankError, RankResult};

/// A rayless spanning forest of `e`, one tree per piece, where the catalog
/// gives one directly.
fn rayless_forest(e: &GraphExpr) -> Result<TreeRule, SpanError> {
    let unknown = || Err(SpanError::Unknown(format!("no rayless spanning forest construction for `{e}`")));
    match e {
        GraphExpr::Finite { .. } => Ok(jung_finite(e)),
        GraphExpr::Star(_) => Ok(TreeRule::Structural),
        GraphExpr::Tree(k) if k.is_zero() => Ok(TreeRule::Structural),
        GraphExpr::Complete(_) => Ok(TreeRule::CliqueStar),
        GraphExpr::WithTops { .. } => Ok(TreeRule::TopsFan),
        GraphExpr::Union(l, r) => {
            Ok(TreeRule::Union { left: rayless_forest(l)?.boxed(), right: rayless_forest(r)?.boxed() })
        }
        GraphExpr::Copies(_, inner) => Ok(TreeRule::Copies { inner: rayless_forest(inner)?.boxed() }),
        GraphExpr::JoinVertex { base, attach, .. } => {
            if let Ok(b) = rayless_forest(base) {
                if sample_roots(&b, base).iter().all(|r| contains(base, attach, r)) {
                    return Ok(TreeRule::NewRoot { base: b.boxed() });
                }
            }
            // every ray of a normal tree of the base runs through the joined
            // vertex's neighbourhood: fan them out from it
            let fan = TreeRule::Fan { base: nst_rule(base)?.boxed() };
            match is_rayless(&fan, e) {
                Verdict::Yes => Ok(fan),
                _ => unknown(),
            }
        }
        GraphExpr::AddEdge { base, a, b } => {
            let t = rayless_forest(base)?;
            let (ca, cb) = (ancestors(&t, base, a)?, ancestors(&t, base, b)?);
            if ca.last() == cb.last() {
                Ok(TreeRule::Base { inner: t.boxed() })
            } else if cb.len() == 1 {
                Ok(TreeRule::Graft { base: t.boxed(), below: a.clone(), root: b.clone() })
            } else if ca.len() == 1 {
                Ok(TreeRule::Graft { base: t.boxed(), below: b.clone(), root: a.clone() })
            } else {
                unknown()
            }
        }
        _ => unknown(),
    }
}

fn all_dominated(e: &GraphExpr, u: &VertexSet) -> Result<(), SpanError> {
    for (id, sel) in closure_ends(e, u)?.classes {
        if sel.is_none() {
            continue;
        }
        match is_dominated(e, &id)?.0 {
            Verdict::Yes => {}
            Verdict::No => return Err(SpanError::NotAllDominated(id)),
            Verdict::Unknown => return Err(SpanError::Unknown(format!("domination of end class `{id}`"))),
        }
    }
    Ok(())
}

/// A rayless tree of `e` including `u`. `u` must be normally spanned; every
/// end in its closure must be dominated.
pub fn rayless_tree_containing(e: &GraphExpr, u: &VertexSet) -> Result<TreeDescriptor, SpanError> {
    match Ideal::NormallySpanned.contains(e, u) {
        Verdict::Yes => {}
        v => return Err(SpanError::Invalid(format!("`{u}` normally spanned: {v:?}"))),
    }
    all_dominated(e, u)?;
    let u = u.normalized();
    let partial = |rule| Ok(TreeDescriptor::new(TreeKind::Partial, e.clone(), rule));
    match (&u, e) {
        (VertexSet::Explicit(_), _) => return partial(normal_tree_containing(e, &u)?.0),
        (VertexSet::Level(p, n), GraphExpr::Tree(_)) if p.is_root() => {
            return partial(TreeRule::DownToDepth { tree: TreeRule::Structural.boxed(), depth: *n })
        }
        _ => {}
    }
    let rule = rayless_forest(e)?;
    if is_rayless(&rule, e) != Verdict::Yes {
        return Err(SpanError::Unknown(format!("rayless construction for `{e}` is not known to be rayless")));
    }
    Ok(TreeDescriptor::new(TreeKind::Rayless, e.clone(), rule))
}

/// A rayless spanning tree of `e`, or the end class showing there is none.
pub fn rayless_spanning_tree(e: &GraphExpr) -> Result<TreeDescriptor, SpanError> {
    let witness = match normal_rank(e) {
        Ok(RankResult::Ranked { witness, .. }) => witness,
        Ok(RankResult::NoRank { .. }) => return Err(SpanError::NoRank(e.to_string())),
        Ok(RankResult::Unknown { reason }) => return Err(SpanError::Unknown(reason)),
        Err(RankError::Disconnected(s)) => return Err(SpanError::Invalid(format!("`{s}` is not connected"))),
        Err(err) => return Err(SpanError::Unknown(err.to_string())),
    };
    for c in end_space(e)?.classes {
        match c.dominated {
            Verdict::Yes => {}
            Verdict::No => return Err(SpanError::NotAllDominated(c.id)),
            Verdict::Unknown => return Err(SpanError::Unknown(format!("domination of end class `{}`", c.id))),
        }
    }
    let cover = match &witness {
        PeelingTree::Base => VertexSet::All(RegionPath::root()),
        PeelingTree::Peel { x, .. } => x.clone(),
    };
    let desc = rayless_tree_containing(e, &cover)?;
    if !desc.spans() {
        // TODO: assemble member trees onto the rayless tree around X when it
        // does not already span
        return Err(SpanError::Unknown(format!("rayless tree around `{cover}` does not span `{e}`")));
    }
    Ok(TreeDescriptor { kind: TreeKind::Rayless, ..desc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::spanning::{check_on_truncation, CheckOpts};

    fn tree_ok(desc: &TreeDescriptor, u: Option<VertexSet>) {
        assert_eq!(desc.summary.rayless, Verdict::Yes, "{}", desc.host);
        let opts = CheckOpts { spanning: desc.spans(), normal: false, covers: u };
        for c in check_on_truncation(desc, 4, 3, &opts) {
            assert!(c.ok, "{} failed on {}: {}", c.name, desc.host, c.detail);
        }
    }

    #[test]
    fn trees_around_sets() {
        let ray = parse("ray").unwrap();
        let spine: VertexSet = "spine(.)".parse().unwrap();
        assert!(matches!(rayless_tree_containing(&ray, &spine), Err(SpanError::NotAllDominated(_))));
        let fan = parse("join_vertex(ray, d, all(.))").unwrap();
        let spine: VertexSet = "spine(base)".parse().unwrap();
        tree_ok(&rayless_tree_containing(&fan, &spine).unwrap(), Some(spine));
        let t = parse("tree(aleph1)").unwrap();
        let level: VertexSet = "level(., 2)".parse().unwrap();
        tree_ok(&rayless_tree_containing(&t, &level).unwrap(), Some(level));
        let star = parse("star(aleph0)").unwrap();
        tree_ok(&rayless_tree_containing(&star, &"leaves(.)".parse().unwrap()).unwrap(), None);
    }

    #[test]
    fn spanning_iff_all_dominated() {
        for src in ["ray", "comb(1)", "tree(aleph0)", "tree(aleph1)"] {
            assert!(matches!(rayless_spanning_tree(&parse(src).unwrap()), Err(SpanError::NotAllDominated(_))), "{src}");
        }
        for src in [
            "complete(aleph0)",
            "join_vertex(comb(1), d, spine(.))",
            "with_tops(tree(aleph1), all, whole_ray)",
            "with_tops(tree(aleph1), all, every_2nd)",
            "star(aleph0)",
        ] {
            let desc = rayless_spanning_tree(&parse(src).unwrap()).unwrap();
            assert!(desc.spans());
            tree_ok(&desc, None);
        }
    }
}
