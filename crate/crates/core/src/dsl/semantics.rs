//! Vertex resolution, descriptor membership, cardinalities and adjacency.

use super::{
    Address, Cardinality, DslError, ExprStep, GraphExpr, Index, LineKind, RegionPath, Step,
    VertexSet,
};

/// Sub-expression at a region path (`copy:*` picks the shared copy type).
pub fn subexpr<'a>(e: &'a GraphExpr, path: &RegionPath) -> Option<&'a GraphExpr> {
    path.0.iter().try_fold(e, |cur, step| cur.child(step))
}

fn index_ok(k: Cardinality, i: &Index) -> bool {
    k.admits(i)
}

fn top_ok(k: Cardinality, p: &[Index]) -> bool {
    p.last() != Some(&Index::Nat(0)) && p.iter().all(|i| index_ok(k, i))
}

/// Whether `addr` names a vertex of `e`.
pub fn resolve(e: &GraphExpr, addr: &Address) -> bool {
    resolve_steps(e, &addr.0)
}

fn resolve_steps(e: &GraphExpr, s: &[Step]) -> bool {
    match (e, s) {
        (GraphExpr::Finite { vertices, .. }, [Step::Label(l)]) => vertices.contains(l),
        (GraphExpr::Ray, [Step::R(_)]) => true,
        (GraphExpr::Comb(_), [Step::R(_)]) => true,
        (GraphExpr::Comb(len), [Step::Tooth(_, k)]) => *k >= 1 && k <= len,
        (GraphExpr::Star(_), [Step::Center]) => true,
        (GraphExpr::Star(k), [Step::Leaf(i)]) => index_ok(*k, i),
        (GraphExpr::Tree(k), [Step::Node(seq)]) => seq.iter().all(|i| index_ok(*k, i)),
        (GraphExpr::Complete(k), [Step::K(i)]) => index_ok(*k, i),
        (GraphExpr::WithTops { base, .. }, [Step::Top(p)]) => match **base {
            GraphExpr::Tree(k) => top_ok(k, p),
            _ => false,
        },
        (GraphExpr::WithTops { base, .. }, _) => resolve_steps(base, s),
        (GraphExpr::Union(l, _), [Step::Left, rest @ ..]) => resolve_steps(l, rest),
        (GraphExpr::Union(_, r), [Step::Right, rest @ ..]) => resolve_steps(r, rest),
        (GraphExpr::Copies(k, inner), [Step::Copy(i), rest @ ..]) => {
            index_ok(*k, i) && resolve_steps(inner, rest)
        }
        (GraphExpr::JoinVertex { label, .. }, [Step::Label(l)]) if l == label => true,
        (GraphExpr::JoinVertex { base, .. }, _) => resolve_steps(base, s),
        (GraphExpr::AddEdge { base, .. }, _) => resolve_steps(base, s),
        _ => false,
    }
}

/// Follows a region path from `e`, consuming the address steps it contributes.
/// Returns the sub-expression and the remaining (local) address.
pub fn descend<'a, 'b>(
    e: &'a GraphExpr,
    path: &RegionPath,
    addr: &'b [Step],
) -> Option<(&'a GraphExpr, &'b [Step])> {
    let mut cur = e;
    let mut rest = addr;
    for step in &path.0 {
        match (cur, step) {
            (GraphExpr::WithTops { base, .. }, ExprStep::Base)
            | (GraphExpr::JoinVertex { base, .. }, ExprStep::Base)
            | (GraphExpr::AddEdge { base, .. }, ExprStep::Base) => cur = base,
            (GraphExpr::Union(l, _), ExprStep::Left) => {
                rest = rest.strip_prefix(&[Step::Left])?;
                cur = l;
            }
            (GraphExpr::Union(_, r), ExprStep::Right) => {
                rest = rest.strip_prefix(&[Step::Right])?;
                cur = r;
            }
            (GraphExpr::Copies(k, inner), ExprStep::Copy(i)) => {
                match rest.first() {
                    Some(Step::Copy(j)) if j == i && index_ok(*k, j) => {}
                    _ => return None,
                }
                rest = &rest[1..];
                cur = inner;
            }
            (GraphExpr::Copies(k, inner), ExprStep::AllCopies) => {
                match rest.first() {
                    Some(Step::Copy(j)) if index_ok(*k, j) => {}
                    _ => return None,
                }
                rest = &rest[1..];
                cur = inner;
            }
            _ => return None,
        }
    }
    Some((cur, rest))
}

/// Position of a vertex along a line of `e`, if it lies on it.
pub fn line_position(e: &GraphExpr, kind: &LineKind, s: &[Step]) -> Option<u64> {
    match (e, kind, s) {
        (GraphExpr::Ray | GraphExpr::Comb(_), LineKind::Spine, [Step::R(n)]) => Some(*n),
        (GraphExpr::Complete(k), LineKind::Clique, [Step::K(Index::Nat(n))]) => {
            index_ok(*k, &Index::Nat(*n)).then_some(*n)
        }
        (GraphExpr::Tree(k), LineKind::Branch(p), [Step::Node(t)]) => {
            let on = t.iter().all(|i| index_ok(*k, i))
                && t.iter().enumerate().all(|(j, i)| match p.get(j) {
                    Some(q) => q == i,
                    None => *i == Index::Nat(0),
                });
            on.then_some(t.len() as u64)
        }
        _ => None,
    }
}

/// Address (local to the line's constructor) of line position `n`.
pub fn line_vertex(kind: &LineKind, n: u64) -> Step {
    match kind {
        LineKind::Spine => Step::R(n),
        LineKind::Clique => Step::K(Index::Nat(n)),
        LineKind::Branch(p) => Step::Node(
            (0..n as usize).map(|j| p.get(j).cloned().unwrap_or(Index::Nat(0))).collect(),
        ),
    }
}

fn is_center(e: &GraphExpr, s: &[Step]) -> bool {
    match e {
        GraphExpr::Finite { vertices, .. } => {
            matches!(s, [Step::Label(l)] if Some(l) == vertices.first())
        }
        GraphExpr::Ray | GraphExpr::Comb(_) => s == [Step::R(0)],
        GraphExpr::Star(_) => s == [Step::Center],
        GraphExpr::Tree(_) | GraphExpr::WithTops { .. } => s == [Step::Node(vec![])],
        GraphExpr::Complete(k) => !k.is_zero() && s == [Step::K(Index::Nat(0))],
        GraphExpr::Union(l, r) => match s {
            [Step::Left, rest @ ..] => is_center(l, rest),
            [Step::Right, rest @ ..] => is_center(r, rest),
            _ => false,
        },
        GraphExpr::Copies(k, inner) => match s {
            [Step::Copy(i), rest @ ..] => index_ok(*k, i) && is_center(inner, rest),
            _ => false,
        },
        GraphExpr::JoinVertex { label, .. } => matches!(s, [Step::Label(l)] if l == label),
        GraphExpr::AddEdge { base, .. } => is_center(base, s),
    }
}

fn is_leaf(e: &GraphExpr, s: &[Step]) -> bool {
    match e {
        GraphExpr::Star(k) => matches!(s, [Step::Leaf(i)] if index_ok(*k, i)),
        GraphExpr::Comb(len) => *len >= 1 && matches!(s, [Step::Tooth(_, t)] if t == len),
        GraphExpr::Union(l, r) => match s {
            [Step::Left, rest @ ..] => is_leaf(l, rest),
            [Step::Right, rest @ ..] => is_leaf(r, rest),
            _ => false,
        },
        GraphExpr::Copies(k, inner) => match s {
            [Step::Copy(i), rest @ ..] => index_ok(*k, i) && is_leaf(inner, rest),
            _ => false,
        },
        GraphExpr::JoinVertex { base, .. } | GraphExpr::AddEdge { base, .. } => is_leaf(base, s),
        _ => false,
    }
}

fn top_through(e: &GraphExpr, s: &[Step], through: Option<&[Index]>) -> bool {
    match e {
        GraphExpr::WithTops { base, adjacency } => match (&**base, s) {
            (GraphExpr::Tree(k), [Step::Top(p)]) if top_ok(*k, p) => match through {
                None => true,
                Some(q) => {
                    adjacency.joins_depth(q.len())
                        && q.iter().enumerate().all(|(j, i)| match p.get(j) {
                            Some(x) => x == i,
                            None => *i == Index::Nat(0),
                        })
                }
            },
            _ => false,
        },
        GraphExpr::Union(l, r) => match s {
            [Step::Left, rest @ ..] => top_through(l, rest, through),
            [Step::Right, rest @ ..] => top_through(r, rest, through),
            _ => false,
        },
        GraphExpr::Copies(k, inner) => match s {
            [Step::Copy(i), rest @ ..] => index_ok(*k, i) && top_through(inner, rest, through),
            _ => false,
        },
        GraphExpr::JoinVertex { base, .. } | GraphExpr::AddEdge { base, .. } => {
            top_through(base, s, through)
        }
        _ => false,
    }
}

/// Membership of a concrete address in a descriptor interpreted in `e`.
pub fn contains(e: &GraphExpr, d: &VertexSet, addr: &Address) -> bool {
    match d {
        VertexSet::Explicit(v) => v.contains(addr) && resolve(e, addr),
        VertexSet::Union(v) => v.iter().any(|x| contains(e, x, addr)),
        VertexSet::Minus(a, b) => contains(e, a, addr) && !contains(e, b, addr),
        _ => {
            let path = d.region().expect("region descriptor");
            let Some((sub, rest)) = descend(e, path, &addr.0) else {
                return false;
            };
            match d {
                VertexSet::All(_) => resolve_steps(sub, rest),
                VertexSet::Level(_, k) => matches!((sub, rest), (GraphExpr::Tree(_), [Step::Node(t)])
                    if t.len() as u64 == *k && resolve_steps(sub, rest)),
                VertexSet::Children(_, s) => matches!((sub, rest), (GraphExpr::Tree(_), [Step::Node(t)])
                    if t.len() == s.len() + 1 && t.starts_with(s) && resolve_steps(sub, rest)),
                VertexSet::Line { kind, start, step, .. } => match line_position(sub, kind, rest) {
                    Some(n) => n >= *start && (n - start) % step == 0,
                    None => false,
                },
                VertexSet::Centers(_) => is_center(sub, rest),
                VertexSet::Leaves(_) => is_leaf(sub, rest),
                VertexSet::Tops(_) => top_through(sub, rest, None),
                VertexSet::TopsThrough(_, q) => top_through(sub, rest, Some(q)),
                _ => unreachable!(),
            }
        }
    }
}

/// Number of vertices.
pub fn vertices_card(e: &GraphExpr) -> Cardinality {
    use Cardinality::*;
    match e {
        GraphExpr::Finite { vertices, .. } => Finite(vertices.len() as u64),
        GraphExpr::Ray | GraphExpr::Comb(_) => Aleph0,
        GraphExpr::Star(k) => Cardinality::ONE.sum(*k),
        GraphExpr::Tree(k) => match k {
            Finite(0) => Cardinality::ONE,
            Finite(_) => Aleph0,
            k => *k,
        },
        GraphExpr::Complete(k) => *k,
        GraphExpr::WithTops { base, .. } => match **base {
            GraphExpr::Tree(k) => vertices_card(base).sum(k.branches()),
            _ => vertices_card(base),
        },
        GraphExpr::Union(l, r) => vertices_card(l).sum(vertices_card(r)),
        GraphExpr::Copies(k, inner) => k.product(vertices_card(inner)),
        GraphExpr::JoinVertex { base, .. } => vertices_card(base).sum(Cardinality::ONE),
        GraphExpr::AddEdge { base, .. } => vertices_card(base),
    }
}

fn centers_card(e: &GraphExpr) -> Cardinality {
    match e {
        GraphExpr::Finite { vertices, .. } => Cardinality::Finite(vertices.len().min(1) as u64),
        GraphExpr::Complete(k) if k.is_zero() => Cardinality::ZERO,
        GraphExpr::Union(l, r) => centers_card(l).sum(centers_card(r)),
        GraphExpr::Copies(k, inner) => k.product(centers_card(inner)),
        GraphExpr::AddEdge { base, .. } => centers_card(base),
        _ => Cardinality::ONE,
    }
}

fn leaves_card(e: &GraphExpr) -> Cardinality {
    match e {
        GraphExpr::Star(k) => *k,
        GraphExpr::Comb(len) if *len >= 1 => Cardinality::Aleph0,
        GraphExpr::Union(l, r) => leaves_card(l).sum(leaves_card(r)),
        GraphExpr::Copies(k, inner) => k.product(leaves_card(inner)),
        GraphExpr::JoinVertex { base, .. } | GraphExpr::AddEdge { base, .. } => leaves_card(base),
        _ => Cardinality::ZERO,
    }
}

fn tops_card(e: &GraphExpr) -> Cardinality {
    match e {
        GraphExpr::WithTops { base, .. } => match **base {
            GraphExpr::Tree(k) => k.branches(),
            _ => Cardinality::ZERO,
        },
        GraphExpr::Union(l, r) => tops_card(l).sum(tops_card(r)),
        GraphExpr::Copies(k, inner) => k.product(tops_card(inner)),
        GraphExpr::JoinVertex { base, .. } | GraphExpr::AddEdge { base, .. } => tops_card(base),
        _ => Cardinality::ZERO,
    }
}

/// Cardinality of a descriptor. Exact for single catalog descriptors; for
/// unions of overlapping parts and for differences it is an upper bound that
/// is still exact on the finite/countable/uncountable trichotomy whenever the
/// subtracted part is smaller.
pub fn desc_card(e: &GraphExpr, d: &VertexSet) -> Cardinality {
    match d {
        VertexSet::Explicit(v) => {
            let mut v: Vec<&Address> = v.iter().filter(|a| resolve(e, a)).collect();
            v.sort();
            v.dedup();
            Cardinality::Finite(v.len() as u64)
        }
        VertexSet::Union(v) => v.iter().fold(Cardinality::ZERO, |acc, x| acc.sum(desc_card(e, x))),
        VertexSet::Minus(a, b) => {
            let ca = desc_card(e, a);
            match (ca, &**b) {
                (Cardinality::Finite(n), VertexSet::Explicit(bv)) => {
                    let removed = bv.iter().filter(|x| contains(e, a, x)).count() as u64;
                    Cardinality::Finite(n.saturating_sub(removed))
                }
                _ => ca,
            }
        }
        _ => {
            let path = d.region().expect("region descriptor");
            let mut mult = Cardinality::ONE;
            let mut cur = e;
            for step in &path.0 {
                if let (GraphExpr::Copies(k, _), ExprStep::AllCopies) = (cur, step) {
                    mult = mult.product(*k);
                }
                match cur.child(step) {
                    Some(c) => cur = c,
                    None => return Cardinality::ZERO,
                }
            }
            let one = match (d, cur) {
                (VertexSet::All(_), _) => vertices_card(cur),
                (VertexSet::Level(_, k), GraphExpr::Tree(kk)) => match kk {
                    Cardinality::Finite(n) => u32::try_from(*k)
                        .ok()
                        .and_then(|k| n.checked_pow(k))
                        .map_or(Cardinality::Aleph0, Cardinality::Finite),
                    _ if *k == 0 => Cardinality::ONE,
                    kk => *kk,
                },
                (VertexSet::Children(_, _), GraphExpr::Tree(kk)) => *kk,
                (VertexSet::Line { kind: LineKind::Clique, start, step, .. }, GraphExpr::Complete(k)) => {
                    match k {
                        Cardinality::Finite(n) if *start >= *n => Cardinality::ZERO,
                        Cardinality::Finite(n) => Cardinality::Finite((n - 1 - start) / step + 1),
                        _ => Cardinality::Aleph0,
                    }
                }
                (VertexSet::Line { .. }, _) => Cardinality::Aleph0,
                (VertexSet::Centers(_), _) => centers_card(cur),
                (VertexSet::Leaves(_), _) => leaves_card(cur),
                (VertexSet::Tops(_), _) => tops_card(cur),
                (VertexSet::TopsThrough(_, q), GraphExpr::WithTops { adjacency, .. }) => {
                    if adjacency.joins_depth(q.len()) {
                        tops_card(cur)
                    } else {
                        Cardinality::ZERO
                    }
                }
                _ => Cardinality::ZERO,
            };
            mult.product(one)
        }
    }
}

/// Concrete center addresses of an expression without infinite copy families.
pub fn centers(e: &GraphExpr) -> Result<Vec<Address>, DslError> {
    let one = |s: Step| Ok(vec![Address::single(s)]);
    match e {
        GraphExpr::Finite { vertices, .. } => {
            Ok(vertices.first().map(|l| Address::single(Step::Label(l.clone()))).into_iter().collect())
        }
        GraphExpr::Ray | GraphExpr::Comb(_) => one(Step::R(0)),
        GraphExpr::Star(_) => one(Step::Center),
        GraphExpr::Tree(_) | GraphExpr::WithTops { .. } => one(Step::Node(vec![])),
        GraphExpr::Complete(k) if k.is_zero() => Ok(vec![]),
        GraphExpr::Complete(_) => one(Step::K(Index::Nat(0))),
        GraphExpr::Union(l, r) => {
            let mut v: Vec<Address> = centers(l)?.iter().map(|a| a.prefixed(&[Step::Left])).collect();
            v.extend(centers(r)?.iter().map(|a| a.prefixed(&[Step::Right])));
            Ok(v)
        }
        GraphExpr::Copies(Cardinality::Finite(n), inner) => {
            let c = centers(inner)?;
            Ok((0..*n)
                .flat_map(|i| c.iter().map(move |a| a.prefixed(&[Step::Copy(Index::Nat(i))])))
                .collect())
        }
        GraphExpr::Copies(..) => Err(DslError::unsupported("centers of infinitely many copies")),
        GraphExpr::JoinVertex { label, .. } => one(Step::Label(label.clone())),
        GraphExpr::AddEdge { base, .. } => centers(base),
    }
}

/// Adjacency oracle.
pub fn has_edge(e: &GraphExpr, a: &Address, b: &Address) -> bool {
    a != b && resolve(e, a) && resolve(e, b) && edge_steps(e, &a.0, &b.0)
}

fn edge_steps(e: &GraphExpr, a: &[Step], b: &[Step]) -> bool {
    match e {
        GraphExpr::Finite { edges, .. } => match (a, b) {
            ([Step::Label(x)], [Step::Label(y)]) => {
                edges.iter().any(|(p, q)| (p == x && q == y) || (p == y && q == x))
            }
            _ => false,
        },
        GraphExpr::Ray => matches!((a, b), ([Step::R(x)], [Step::R(y)]) if x.abs_diff(*y) == 1),
        GraphExpr::Comb(_) => {
            let one = |a: &[Step], b: &[Step]| match (a, b) {
                ([Step::R(x)], [Step::R(y)]) => x + 1 == *y,
                ([Step::R(x)], [Step::Tooth(n, 1)]) => x == n,
                ([Step::Tooth(n, k)], [Step::Tooth(m, j)]) => n == m && k + 1 == *j,
                _ => false,
            };
            one(a, b) || one(b, a)
        }
        GraphExpr::Star(_) => matches!(
            (a, b),
            ([Step::Center], [Step::Leaf(_)]) | ([Step::Leaf(_)], [Step::Center])
        ),
        GraphExpr::Tree(_) => match (a, b) {
            ([Step::Node(s)], [Step::Node(t)]) => {
                (t.len() == s.len() + 1 && t.starts_with(s)) || (s.len() == t.len() + 1 && s.starts_with(t))
            }
            _ => false,
        },
        GraphExpr::Complete(_) => true,
        GraphExpr::WithTops { base, adjacency } => {
            let tops = |a: &[Step], b: &[Step]| match (a, b) {
                ([Step::Top(p)], [Step::Node(q)]) => {
                    adjacency.joins_depth(q.len())
                        && q.iter().enumerate().all(|(j, i)| match p.get(j) {
                            Some(x) => x == i,
                            None => *i == Index::Nat(0),
                        })
                }
                _ => false,
            };
            match (a, b) {
                ([Step::Top(_)], [Step::Top(_)]) => false,
                ([Step::Top(_)], _) => tops(a, b),
                (_, [Step::Top(_)]) => tops(b, a),
                _ => edge_steps(base, a, b),
            }
        }
        GraphExpr::Union(l, r) => match (a, b) {
            ([Step::Left, x @ ..], [Step::Left, y @ ..]) => edge_steps(l, x, y),
            ([Step::Right, x @ ..], [Step::Right, y @ ..]) => edge_steps(r, x, y),
            _ => false,
        },
        GraphExpr::Copies(_, inner) => match (a, b) {
            ([Step::Copy(i), x @ ..], [Step::Copy(j), y @ ..]) => i == j && edge_steps(inner, x, y),
            _ => false,
        },
        GraphExpr::JoinVertex { base, label, attach } => {
            let is_new = |s: &[Step]| matches!(s, [Step::Label(l)] if l == label);
            match (is_new(a), is_new(b)) {
                (true, false) => contains(base, attach, &Address(b.to_vec())),
                (false, true) => contains(base, attach, &Address(a.to_vec())),
                (false, false) => edge_steps(base, a, b),
                (true, true) => false,
            }
        }
        GraphExpr::AddEdge { base, a: x, b: y } => {
            (a == x.steps() && b == y.steps()) || (a == y.steps() && b == x.steps()) || edge_steps(base, a, b)
        }
    }
}

/// Neighbourhood of a vertex: finitely many explicit neighbours plus finitely
/// many descriptor families (interpreted in the queried expression). The vertex
/// itself never counts as its own neighbour even when a family contains it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Neighborhood {
    pub vertex: Address,
    pub explicit: Vec<Address>,
    pub families: Vec<VertexSet>,
}

impl Neighborhood {
    pub fn contains(&self, e: &GraphExpr, u: &Address) -> bool {
        *u != self.vertex
            && (self.explicit.contains(u) || self.families.iter().any(|d| contains(e, d, u)))
    }

    fn lift(mut self, path: ExprStep, addr: &[Step]) -> Self {
        let p = RegionPath(vec![path]);
        self.vertex = self.vertex.prefixed(addr);
        self.explicit = self.explicit.iter().map(|a| a.prefixed(addr)).collect();
        self.families = self.families.iter().map(|d| d.lifted(&p, addr)).collect();
        self
    }
}

pub fn neighbors(e: &GraphExpr, v: &Address) -> Result<Neighborhood, DslError> {
    if !resolve(e, v) {
        return Err(DslError::Unresolvable(v.to_string()));
    }
    Ok(nbrs(e, &v.0))
}

fn nbrs(e: &GraphExpr, s: &[Step]) -> Neighborhood {
    let mut n = Neighborhood { vertex: Address(s.to_vec()), ..Default::default() };
    let here = RegionPath::root();
    let single = |st: Step| Address::single(st);
    match (e, s) {
        (GraphExpr::Finite { edges, .. }, [Step::Label(x)]) => {
            for (p, q) in edges {
                if p == x {
                    n.explicit.push(single(Step::Label(q.clone())));
                } else if q == x {
                    n.explicit.push(single(Step::Label(p.clone())));
                }
            }
        }
        (GraphExpr::Ray, [Step::R(i)]) => {
            if *i > 0 {
                n.explicit.push(single(Step::R(i - 1)));
            }
            n.explicit.push(single(Step::R(i + 1)));
        }
        (GraphExpr::Comb(len), [Step::R(i)]) => {
            if *i > 0 {
                n.explicit.push(single(Step::R(i - 1)));
            }
            n.explicit.push(single(Step::R(i + 1)));
            if *len >= 1 {
                n.explicit.push(single(Step::Tooth(*i, 1)));
            }
        }
        (GraphExpr::Comb(len), [Step::Tooth(i, k)]) => {
            n.explicit.push(single(if *k == 1 { Step::R(*i) } else { Step::Tooth(*i, k - 1) }));
            if k < len {
                n.explicit.push(single(Step::Tooth(*i, k + 1)));
            }
        }
        (GraphExpr::Star(k), [Step::Center]) => {
            if !k.is_zero() {
                n.families.push(VertexSet::Leaves(here));
            }
        }
        (GraphExpr::Star(_), [Step::Leaf(_)]) => n.explicit.push(single(Step::Center)),
        (GraphExpr::Tree(k), [Step::Node(t)]) => {
            if let Some((_, parent)) = t.split_last() {
                n.explicit.push(single(Step::Node(parent.to_vec())));
            }
            if !k.is_zero() {
                n.families.push(VertexSet::Children(here, t.clone()));
            }
        }
        (GraphExpr::Complete(_), [Step::K(_)]) => n.families.push(VertexSet::All(here)),
        (GraphExpr::WithTops { adjacency, .. }, [Step::Top(p)]) => {
            n.families.push(VertexSet::Line {
                region: RegionPath(vec![ExprStep::Base]),
                kind: LineKind::Branch(p.clone()),
                start: 0,
                step: adjacency.step(),
            });
        }
        (GraphExpr::WithTops { base, adjacency }, [Step::Node(t)]) => {
            let mut b = nbrs(base, s).lift(ExprStep::Base, &[]);
            if adjacency.joins_depth(t.len()) {
                b.families.push(VertexSet::TopsThrough(here, t.clone()));
            }
            return b;
        }
        (GraphExpr::Union(l, _), [Step::Left, rest @ ..]) => {
            return nbrs(l, rest).lift(ExprStep::Left, &[Step::Left])
        }
        (GraphExpr::Union(_, r), [Step::Right, rest @ ..]) => {
            return nbrs(r, rest).lift(ExprStep::Right, &[Step::Right])
        }
        (GraphExpr::Copies(_, inner), [Step::Copy(i), rest @ ..]) => {
            return nbrs(inner, rest).lift(ExprStep::Copy(i.clone()), &[Step::Copy(i.clone())])
        }
        (GraphExpr::JoinVertex { label, attach, .. }, [Step::Label(l)]) if l == label => {
            n.families.push(attach.lifted(&RegionPath(vec![ExprStep::Base]), &[]));
        }
        (GraphExpr::JoinVertex { base, label, attach }, _) => {
            let mut b = nbrs(base, s).lift(ExprStep::Base, &[]);
            if contains(base, attach, &Address(s.to_vec())) {
                b.explicit.push(single(Step::Label(label.clone())));
            }
            return b;
        }
        (GraphExpr::AddEdge { base, a, b: bb }, _) => {
            let mut b = nbrs(base, s).lift(ExprStep::Base, &[]);
            if a.steps() == s {
                b.explicit.push(bb.clone());
            } else if bb.steps() == s {
                b.explicit.push(a.clone());
            }
            return b;
        }
        _ => {}
    }
    n
}

/// Normalizes an arbitrary branch prefix to the address of its top.
pub fn top_of(prefix: &[Index]) -> Step {
    let mut p = prefix.to_vec();
    while p.last() == Some(&Index::Nat(0)) {
        p.pop();
    }
    Step::Top(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn a(s: &str) -> Address {
        s.parse().unwrap()
    }

    #[test]
    fn cardinalities() {
        assert_eq!(vertices_card(&GraphExpr::Ray), Cardinality::Aleph0);
        assert_eq!(vertices_card(&GraphExpr::Tree(Cardinality::Aleph1)), Cardinality::Aleph1);
        assert_eq!(vertices_card(&GraphExpr::Complete(Cardinality::Finite(5))), Cardinality::Finite(5));
        let wt = parse("with_tops(tree(aleph1), all, whole_ray)").unwrap();
        assert_eq!(vertices_card(&wt), Cardinality::Uncountable);
        assert_eq!(desc_card(&wt, &"all(base)".parse().unwrap()), Cardinality::Aleph1);
        assert_eq!(desc_card(&wt, &"tops(.)".parse().unwrap()), Cardinality::Uncountable);
        let t3 = parse("tree(3)").unwrap();
        assert_eq!(desc_card(&t3, &"level(., 2)".parse().unwrap()), Cardinality::Finite(9));
        let k5 = parse("complete(5)").unwrap();
        assert_eq!(desc_card(&k5, &"prog(clique(.), 1, 2)".parse().unwrap()), Cardinality::Finite(2));
    }

    #[test]
    fn adjacency_examples() {
        let n = neighbors(&GraphExpr::Ray, &a("r3")).unwrap();
        assert_eq!(n.explicit, vec![a("r2"), a("r4")]);
        assert!(n.families.is_empty());
        let n = neighbors(&GraphExpr::Star(Cardinality::Aleph0), &a("center")).unwrap();
        assert_eq!(n.families, vec!["leaves(.)".parse().unwrap()]);
        let wt = parse("with_tops(tree(aleph1), all, whole_ray)").unwrap();
        let n = neighbors(&wt, &a("top:b1")).unwrap();
        assert_eq!(n.families, vec!["branch(base, v:b1)".parse().unwrap()]);
        assert!(n.contains(&wt, &a("v:b1.0.0")));
        assert!(!n.contains(&wt, &a("v:b1.1")));
    }

    #[test]
    fn tops_and_branches() {
        let wt = parse("with_tops(tree(aleph1), all, every_2nd)").unwrap();
        assert!(has_edge(&wt, &a("top:b1"), &a("v")));
        assert!(!has_edge(&wt, &a("top:b1"), &a("v:b1")));
        assert!(has_edge(&wt, &a("top:b1"), &a("v:b1.0")));
        assert!(contains(&wt, &"tops_through(., v:b1.0)".parse().unwrap(), &a("top:b1")));
        assert!(!contains(&wt, &"tops_through(., v:b1)".parse().unwrap(), &a("top:b1")));
    }

    #[test]
    fn joins_and_copies() {
        let e = parse("join_vertex(copies(aleph0, star(aleph0)), root, centers(.))").unwrap();
        assert!(has_edge(&e, &a("root"), &a("copy:4/center")));
        assert!(!has_edge(&e, &a("root"), &a("copy:4/leaf:1")));
        assert!(has_edge(&e, &a("copy:4/leaf:1"), &a("copy:4/center")));
        assert!(!has_edge(&e, &a("copy:3/leaf:1"), &a("copy:4/center")));
        assert!(contains(&e, &"all(base/copy:*)".parse().unwrap(), &a("copy:9/leaf:2")));
        assert!(contains(&e, &"centers(.)".parse().unwrap(), &a("root")));
        let two = parse("add_edge(union(ray, ray), left/r0, right/r0)").unwrap();
        assert!(has_edge(&two, &a("left/r0"), &a("right/r0")));
        assert!(!has_edge(&two, &a("left/r1"), &a("right/r1")));
    }

    #[test]
    fn top_normalization() {
        assert_eq!(top_of(&[Index::Nat(1), Index::Nat(0)]), Step::Top(vec![Index::Nat(1)]));
    }
}
