//! Finite induced subgraphs at bounded depth and width.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use super::{
    contains, has_edge, line_vertex, neighbors, top_of, Address, Cardinality, GraphExpr, Index, Step, VertexSet,
};
use crate::par;

/// Rules: ray/spine vertices of index `< d` (with all their teeth), tree nodes of
/// depth `< d`, one top per retained depth-`d-1` branch, `max(d, w)` clique
/// vertices, all finite-graph vertices. Every infinite index set is
/// instantiated by `w` indices; uncountable ones use the branch tokens named in
/// the expression first, then naturals.
#[derive(Debug, Clone)]
pub struct FiniteTruncation {
    pub d: u64,
    pub w: u64,
    pub vertices: Vec<Address>,
    pub adj: Vec<Vec<usize>>,
    index: BTreeMap<Address, usize>,
}

impl FiniteTruncation {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, a: &Address) -> Option<usize> {
        self.index.get(a).copied()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.adj.iter().enumerate() {
            out.extend(row.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Components of the subgraph induced on the vertices with `keep[i]`.
    pub fn components(&self, keep: &[bool]) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in 0..self.len() {
            if !keep[s] || seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut k = 0;
            while k < comp.len() {
                let v = comp[k];
                k += 1;
                for &u in &self.adj[v] {
                    if keep[u] && !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        !self.is_empty() && self.components(&vec![true; self.len()]).len() == 1
    }
}

/// Tokens mentioned anywhere in the expression.
pub fn mentioned_tokens(e: &GraphExpr) -> BTreeSet<u32> {
    let seen = RefCell::new(BTreeSet::new());
    e.rename_tokens(&|t| {
        seen.borrow_mut().insert(t);
        t
    });
    seen.into_inner()
}

struct Ctx {
    d: u64,
    w: u64,
    tokens: Vec<u32>,
}

impl Ctx {
    fn indices(&self, k: Cardinality) -> Vec<Index> {
        match k {
            Cardinality::Finite(n) => (0..n).map(Index::Nat).collect(),
            Cardinality::Aleph0 => (0..self.w).map(Index::Nat).collect(),
            _ => {
                let mut v: Vec<Index> = self.tokens.iter().map(|&t| Index::Tok(t)).collect();
                let mut n = 0;
                while (v.len() as u64) < self.w {
                    v.push(Index::Nat(n));
                    n += 1;
                }
                v
            }
        }
    }

    fn tree_nodes(&self, k: Cardinality) -> Vec<Vec<Index>> {
        let idx = self.indices(k);
        let mut out = Vec::new();
        if self.d == 0 {
            return out;
        }
        let mut layer = vec![Vec::new()];
        for depth in 0..self.d {
            out.extend(layer.iter().cloned());
            if depth + 1 == self.d {
                break;
            }
            layer = layer
                .iter()
                .flat_map(|p| {
                    idx.iter().map(move |i| {
                        let mut q: Vec<Index> = p.clone();
                        q.push(i.clone());
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn collect(&self, e: &GraphExpr, prefix: &mut Vec<Step>, out: &mut Vec<Address>) {
        let mut push = |s: Step, prefix: &Vec<Step>| {
            let mut v = prefix.clone();
            v.push(s);
            out.push(Address(v));
        };
        match e {
            GraphExpr::Finite { vertices, .. } => {
                for l in vertices {
                    push(Step::Label(l.clone()), prefix);
                }
            }
            GraphExpr::Ray => (0..self.d).for_each(|n| push(Step::R(n), prefix)),
            GraphExpr::Comb(len) => {
                for n in 0..self.d {
                    push(Step::R(n), prefix);
                    for k in 1..=*len {
                        push(Step::Tooth(n, k), prefix);
                    }
                }
            }
            GraphExpr::Star(k) => {
                push(Step::Center, prefix);
                for i in self.indices(*k) {
                    push(Step::Leaf(i), prefix);
                }
            }
            GraphExpr::Tree(k) => {
                for t in self.tree_nodes(*k) {
                    push(Step::Node(t), prefix);
                }
            }
            GraphExpr::Complete(k) => {
                let n = match k {
                    Cardinality::Finite(n) => *n,
                    _ => self.d.max(self.w),
                };
                for i in 0..n {
                    push(Step::K(Index::Nat(i)), prefix);
                }
            }
            GraphExpr::WithTops { base, .. } => {
                let GraphExpr::Tree(k) = **base else { return };
                for t in self.tree_nodes(k) {
                    let leaf = t.len() as u64 + 1 == self.d;
                    if leaf {
                        push(top_of(&t), prefix);
                    }
                    push(Step::Node(t), prefix);
                }
            }
            GraphExpr::Union(l, r) => {
                prefix.push(Step::Left);
                self.collect(l, prefix, out);
                prefix.pop();
                prefix.push(Step::Right);
                self.collect(r, prefix, out);
                prefix.pop();
            }
            GraphExpr::Copies(k, inner) => {
                for i in self.indices(*k) {
                    prefix.push(Step::Copy(i));
                    self.collect(inner, prefix, out);
                    prefix.pop();
                }
            }
            GraphExpr::JoinVertex { base, label, .. } => {
                self.collect(base, prefix, out);
                let mut v = prefix.clone();
                v.push(Step::Label(label.clone()));
                out.push(Address(v));
            }
            GraphExpr::AddEdge { base, .. } => self.collect(base, prefix, out),
        }
    }
}

pub fn truncate(e: &GraphExpr, d: u64, w: u64) -> FiniteTruncation {
    let ctx = Ctx { d, w, tokens: mentioned_tokens(e).into_iter().collect() };
    let mut vertices = Vec::new();
    ctx.collect(e, &mut Vec::new(), &mut vertices);
    vertices.sort();
    vertices.dedup();
    let n = vertices.len();
    let index: BTreeMap<Address, usize> = vertices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    let bound = d.max(w) + 1;
    let one_sided = par::map_range(n, |i| {
        let Ok(nb) = neighbors(e, &vertices[i]) else {
            return (0..n).filter(|&j| j != i && has_edge(e, &vertices[i], &vertices[j])).collect::<Vec<_>>();
        };
        let mut out: Vec<usize> = nb.explicit.iter().filter_map(|u| index.get(u).copied()).collect();
        for f in &nb.families {
            match f {
                // the other endpoint lists these explicitly, or as a line
                VertexSet::Leaves(_) | VertexSet::Children(..) | VertexSet::TopsThrough(..) => {}
                VertexSet::Line { region, kind, start, step } if region.address_prefix().is_some() => {
                    let prefix = region.address_prefix().unwrap_or_default();
                    let mut pos = *start;
                    while pos <= bound {
                        let mut a = prefix.clone();
                        a.push(line_vertex(kind, pos));
                        out.extend(index.get(&Address(a)));
                        pos += (*step).max(1);
                    }
                }
                _ => out.extend((0..n).filter(|&j| contains(e, f, &vertices[j]))),
            }
        }
        out
    });
    let mut adj = vec![Vec::new(); n];
    for (i, row) in one_sided.into_iter().enumerate() {
        for j in row {
            if j != i {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for row in &mut adj {
        row.sort_unstable();
        row.dedup();
    }
    FiniteTruncation { d, w, vertices, adj, index }
}

/// All-pairs construction, kept as the reference for the adjacency above.
#[cfg(test)]
fn truncate_all_pairs(e: &GraphExpr, d: u64, w: u64) -> Vec<Vec<usize>> {
    let t = truncate(e, d, w);
    let n = t.len();
    (0..n).map(|i| (0..n).filter(|&j| j != i && has_edge(e, &t.vertices[i], &t.vertices[j])).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn ray_path() {
        let t = truncate(&GraphExpr::Ray, 4, 1);
        assert_eq!(t.len(), 4);
        assert_eq!(t.edge_count(), 3);
        assert!(t.is_connected());
    }

    #[test]
    fn tree_counts_follow_depth_rule() {
        let e = GraphExpr::Tree(Cardinality::Aleph1);
        assert_eq!(truncate(&e, 2, 3).len(), 4);
        assert_eq!(truncate(&e, 3, 3).len(), 13);
    }

    #[test]
    fn tops_join_their_prefix() {
        let e = parse("with_tops(tree(aleph1), all, whole_ray)").unwrap();
        let t = truncate(&e, 3, 2);
        // 7 tree nodes, 4 tops, 6 tree edges, 3 edges per top
        assert_eq!(t.len(), 11);
        assert_eq!(t.edge_count(), 6 + 4 * 3);
    }

    #[test]
    fn adjacency_matches_all_pairs() {
        for src in [
            "ray",
            "comb(2)",
            "star(aleph0)",
            "tree(aleph1)",
            "complete(aleph0)",
            "with_tops(tree(aleph1), all, whole_ray)",
            "with_tops(tree(aleph1), all, every_2nd)",
            "join_vertex(comb(1), d, spine(.))",
            "join_vertex(copies(aleph0, star(aleph0)), root, centers(.))",
            "join_vertex(copies(aleph1, with_tops(tree(aleph1), all, whole_ray)), root, centers(.))",
            "add_edge(union(ray, ray), left/r0, right/r0)",
            "finite{v[a, b, c], e[a-b, b-c]}",
        ] {
            let e = parse(src).unwrap();
            for (d, w) in [(1, 1), (2, 3), (3, 2), (4, 3)] {
                assert_eq!(truncate(&e, d, w).adj, truncate_all_pairs(&e, d, w), "{src} at ({d}, {w})");
            }
        }
    }

    #[test]
    fn named_tokens_are_instantiated() {
        let e = parse("add_edge(tree(aleph1), v:b7, v:b9)").unwrap();
        let t = truncate(&e, 2, 3);
        assert!(t.index_of(&"v:b7".parse().unwrap()).is_some());
        assert!(t.index_of(&"v:0".parse().unwrap()).is_some());
        assert_eq!(t.len(), 4);
        assert!(t.adjacent(
            t.index_of(&"v:b7".parse().unwrap()).unwrap(),
            t.index_of(&"v:b9".parse().unwrap()).unwrap()
        ));
    }
}
