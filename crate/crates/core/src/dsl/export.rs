//! DOT and JSON renderings of truncations.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::FiniteTruncation;

#[derive(Debug, Serialize, Deserialize)]
pub struct TruncationDoc {
    pub schema: u32,
    pub d: u64,
    pub w: u64,
    pub vertices: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    /// Edges of an overlaid tree, when one was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_edges: Option<Vec<(usize, usize)>>,
}

pub fn to_json_doc(t: &FiniteTruncation, tree: Option<&[(usize, usize)]>) -> TruncationDoc {
    TruncationDoc {
        schema: 1,
        d: t.d,
        w: t.w,
        vertices: t.vertices.iter().map(ToString::to_string).collect(),
        edges: t.edges(),
        tree_edges: tree.map(|e| {
            let mut v: Vec<_> = e.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            v.sort_unstable();
            v
        }),
    }
}

/// Undirected DOT; overlaid tree edges are drawn bold and red.
pub fn to_dot(t: &FiniteTruncation, tree: Option<&[(usize, usize)]>) -> String {
    let tree: BTreeSet<(usize, usize)> = tree
        .unwrap_or(&[])
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    let mut s = String::new();
    writeln!(s, "graph truncation {{").unwrap();
    writeln!(s, "  // d={} w={}", t.d, t.w).unwrap();
    for (i, v) in t.vertices.iter().enumerate() {
        writeln!(s, "  n{i} [label=\"{v}\"];").unwrap();
    }
    for (a, b) in t.edges() {
        if tree.contains(&(a, b)) {
            writeln!(s, "  n{a} -- n{b} [color=red, penwidth=2];").unwrap();
        } else {
            writeln!(s, "  n{a} -- n{b};").unwrap();
        }
    }
    writeln!(s, "}}").unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{truncate, GraphExpr};

    #[test]
    fn ray_dot() {
        let t = truncate(&GraphExpr::Ray, 5, 1);
        let dot = to_dot(&t, None);
        assert_eq!(dot.matches(" -- ").count(), 4);
        assert_eq!(dot.matches("[label=").count(), 5);
        let doc = serde_json::to_value(to_json_doc(&t, None)).unwrap();
        assert_eq!(doc["schema"], 1);
        assert_eq!(doc["vertices"][0], "r0");
    }
}
