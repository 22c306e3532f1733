//! Text form of graph expressions and descriptors.
//!
//! ```text
//! expr  := finite{v:[a, b, ...], e:[a-b, ...]} | ray | comb(L) | star(k) | tree(k)
//!        | complete(k) | with_tops(expr, all, whole_ray|every_2nd) | union(expr, expr)
//!        | copies(k, expr) | join_vertex(expr, label, desc) | add_edge(expr, addr, addr)
//! k     := 0 | 1 | ... | aleph0 | aleph1
//! desc  := {addr, ...} | all(P) | level(P, n) | children(P, node) | line | prog(line, a, d)
//!        | centers(P) | leaves(P) | tops(P) | tops_through(P, node) | union(desc, ...)
//!        | minus(desc, desc)
//! line  := spine(P) | clique(P) | branch(P, node)
//! ```
//! `#` starts a comment running to the end of the line.

use std::fmt;

use super::semantics::{resolve, subexpr};
use super::{
    is_valid_label, parse_node, Address, Cardinality, DslError, GraphExpr, LineKind,
    RegionPath, TopAdjacency, VertexSet,
};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '.' | '/' | '*')
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = &self.src[self.pos..];
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                let end = trimmed.find('\n').unwrap_or(trimmed.len());
                self.pos += end;
            } else {
                break;
            }
        }
    }

    fn mark(&mut self) -> usize {
        self.skip_ws();
        self.pos
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), DslError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    /// A maximal run of identifier/address characters.
    fn word(&mut self) -> Result<&'a str, DslError> {
        self.skip_ws();
        let start = self.pos;
        let len: usize = self.src[start..]
            .chars()
            .take_while(|&c| is_word_char(c))
            .map(char::len_utf8)
            .sum();
        if len == 0 {
            return self.err("expected a name");
        }
        self.pos += len;
        Ok(&self.src[start..start + len])
    }

    fn at<T>(&self, start: usize, r: Result<T, DslError>) -> Result<T, DslError> {
        r.map_err(|e| match e {
            DslError::Syntax { .. } => e,
            other => DslError::Syntax { pos: start, msg: other.to_string() },
        })
    }

    /// `uncountable` is only allowed where the exact cardinal does not matter
    /// (copy counts, as in the number of tops of `T_ℵ₁`).
    fn cardinality(&mut self, uncountable: bool) -> Result<Cardinality, DslError> {
        let start = self.mark();
        let w = self.word()?;
        match w.parse::<Cardinality>() {
            Ok(Cardinality::Uncountable) if uncountable => Ok(Cardinality::Uncountable),
            Ok(Cardinality::Uncountable) | Err(_) => {
                Err(DslError::Syntax { pos: start, msg: format!("expected a cardinality, got `{w}`") })
            }
            Ok(k) => Ok(k),
        }
    }

    fn number(&mut self) -> Result<u64, DslError> {
        let start = self.mark();
        let w = self.word()?;
        w.parse().map_err(|_| DslError::Syntax { pos: start, msg: format!("expected a number, got `{w}`") })
    }

    fn label(&mut self) -> Result<String, DslError> {
        let start = self.mark();
        let w = self.word()?;
        if is_valid_label(w) {
            Ok(w.to_string())
        } else {
            Err(DslError::Syntax { pos: start, msg: format!("`{w}` is not a valid vertex label") })
        }
    }

    fn address(&mut self) -> Result<Address, DslError> {
        let start = self.mark();
        let w = self.word()?;
        self.at(start, w.parse())
    }

    fn region(&mut self) -> Result<RegionPath, DslError> {
        let start = self.mark();
        let w = self.word()?;
        self.at(start, w.parse())
    }

    fn node(&mut self) -> Result<Vec<super::Index>, DslError> {
        let start = self.mark();
        let w = self.word()?;
        self.at(start, parse_node(w))
    }

    fn expr(&mut self) -> Result<GraphExpr, DslError> {
        let start = self.mark();
        let head = self.word()?;
        let e = match head {
            "ray" => GraphExpr::Ray,
            "finite" => {
                self.expect('{')?;
                self.keyword("v")?;
                self.expect('[')?;
                let mut vertices = Vec::new();
                while !self.eat(']') {
                    if !vertices.is_empty() {
                        self.expect(',')?;
                    }
                    vertices.push(self.label()?);
                }
                self.expect(',')?;
                self.keyword("e")?;
                self.expect('[')?;
                let mut edges = Vec::new();
                while !self.eat(']') {
                    if !edges.is_empty() {
                        self.expect(',')?;
                    }
                    let a = self.label()?;
                    self.expect('-')?;
                    let b = self.label()?;
                    edges.push((a, b));
                }
                self.expect('}')?;
                GraphExpr::Finite { vertices, edges }
            }
            "comb" => {
                self.expect('(')?;
                let n = self.number()?;
                self.expect(')')?;
                GraphExpr::Comb(n)
            }
            "star" | "tree" | "complete" => {
                self.expect('(')?;
                let k = self.cardinality(false)?;
                self.expect(')')?;
                match head {
                    "star" => GraphExpr::Star(k),
                    "tree" => GraphExpr::Tree(k),
                    _ => GraphExpr::Complete(k),
                }
            }
            "with_tops" => {
                self.expect('(')?;
                let base = self.expr()?;
                self.expect(',')?;
                self.keyword("all")?;
                self.expect(',')?;
                let adjacency = match self.word()? {
                    "whole_ray" => TopAdjacency::WholeRay,
                    "every_2nd" => TopAdjacency::Every2nd,
                    other => return self.err(format!("unknown top adjacency `{other}`")),
                };
                self.expect(')')?;
                GraphExpr::WithTops { base: Box::new(base), adjacency }
            }
            "union" => {
                self.expect('(')?;
                let l = self.expr()?;
                self.expect(',')?;
                let r = self.expr()?;
                self.expect(')')?;
                GraphExpr::union(l, r)
            }
            "copies" => {
                self.expect('(')?;
                let k = self.cardinality(true)?;
                self.expect(',')?;
                let e = self.expr()?;
                self.expect(')')?;
                GraphExpr::copies(k, e)
            }
            "join_vertex" => {
                self.expect('(')?;
                let base = self.expr()?;
                self.expect(',')?;
                let label = self.label()?;
                self.expect(',')?;
                let attach = self.descriptor()?;
                self.expect(')')?;
                GraphExpr::JoinVertex { base: Box::new(base), label, attach }
            }
            "add_edge" => {
                self.expect('(')?;
                let base = self.expr()?;
                self.expect(',')?;
                let a = self.address()?;
                self.expect(',')?;
                let b = self.address()?;
                self.expect(')')?;
                GraphExpr::AddEdge { base: Box::new(base), a, b }
            }
            other => {
                return Err(DslError::Syntax { pos: start, msg: format!("unknown constructor `{other}`") })
            }
        };
        let checked = check(&e);
        self.at(start, checked.map(|()| e))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DslError> {
        let start = self.mark();
        let w = self.word()?;
        let w = w.strip_suffix(':').unwrap_or(w);
        if w != kw {
            return Err(DslError::Syntax { pos: start, msg: format!("expected `{kw}`") });
        }
        self.eat(':');
        Ok(())
    }

    fn line(&mut self) -> Result<VertexSet, DslError> {
        let start = self.mark();
        let head = self.word()?;
        self.expect('(')?;
        let region = self.region()?;
        let kind = match head {
            "spine" => LineKind::Spine,
            "clique" => LineKind::Clique,
            "branch" => {
                self.expect(',')?;
                LineKind::Branch(self.node()?)
            }
            other => {
                return Err(DslError::Syntax { pos: start, msg: format!("expected a line, got `{other}`") })
            }
        };
        self.expect(')')?;
        Ok(VertexSet::Line { region, kind, start: 0, step: 1 })
    }

    fn descriptor(&mut self) -> Result<VertexSet, DslError> {
        if self.eat('{') {
            let mut v = Vec::new();
            while !self.eat('}') {
                if !v.is_empty() {
                    self.expect(',')?;
                }
                v.push(self.address()?);
            }
            return Ok(VertexSet::Explicit(v));
        }
        let save = self.pos;
        let start = self.mark();
        let head = self.word()?;
        match head {
            "spine" | "clique" | "branch" => {
                self.pos = save;
                return self.line();
            }
            _ => {}
        }
        self.expect('(')?;
        let d = match head {
            "all" => VertexSet::All(self.region()?),
            "centers" => VertexSet::Centers(self.region()?),
            "leaves" => VertexSet::Leaves(self.region()?),
            "tops" => VertexSet::Tops(self.region()?),
            "level" => {
                let p = self.region()?;
                self.expect(',')?;
                VertexSet::Level(p, self.number()?)
            }
            "children" => {
                let p = self.region()?;
                self.expect(',')?;
                VertexSet::Children(p, self.node()?)
            }
            "tops_through" => {
                let p = self.region()?;
                self.expect(',')?;
                VertexSet::TopsThrough(p, self.node()?)
            }
            "prog" => {
                let VertexSet::Line { region, kind, .. } = self.line()? else { unreachable!() };
                self.expect(',')?;
                let a = self.number()?;
                self.expect(',')?;
                let d = self.number()?;
                if d == 0 {
                    return self.err("progression step must be positive");
                }
                VertexSet::Line { region, kind, start: a, step: d }
            }
            "union" => {
                let mut v = vec![self.descriptor()?];
                while self.eat(',') {
                    v.push(self.descriptor()?);
                }
                VertexSet::Union(v)
            }
            "minus" => {
                let a = self.descriptor()?;
                self.expect(',')?;
                let b = self.descriptor()?;
                VertexSet::Minus(Box::new(a), Box::new(b))
            }
            other => {
                return Err(DslError::Syntax { pos: start, msg: format!("unknown descriptor `{other}`") })
            }
        };
        self.expect(')')?;
        Ok(d)
    }

    fn finish(&mut self) -> Result<(), DslError> {
        if self.peek().is_some() {
            self.err("trailing input")
        } else {
            Ok(())
        }
    }
}

pub fn parse(text: &str) -> Result<GraphExpr, DslError> {
    let mut p = Parser::new(text);
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub(crate) fn parse_descriptor(text: &str) -> Result<VertexSet, DslError> {
    let mut p = Parser::new(text);
    let d = p.descriptor()?;
    p.finish()?;
    Ok(d)
}

/// Descriptor well-formedness against the expression it is interpreted in.
pub(crate) fn check_descriptor(e: &GraphExpr, d: &VertexSet) -> Result<(), DslError> {
    match d {
        VertexSet::Explicit(v) => {
            for a in v {
                if !resolve(e, a) {
                    return Err(DslError::Unresolvable(a.to_string()));
                }
            }
            Ok(())
        }
        VertexSet::Union(v) => v.iter().try_for_each(|x| check_descriptor(e, x)),
        VertexSet::Minus(a, b) => {
            check_descriptor(e, a)?;
            check_descriptor(e, b)
        }
        _ => {
            let p = d.region().expect("region descriptor");
            let sub = subexpr(e, p)
                .ok_or_else(|| DslError::IllFormed(format!("region `{p}` does not exist in `{e}`")))?;
            let ok = match (d, sub) {
                (VertexSet::Level(..) | VertexSet::Children(..), GraphExpr::Tree(_)) => true,
                (VertexSet::Line { kind: LineKind::Spine, .. }, GraphExpr::Ray | GraphExpr::Comb(_)) => true,
                (VertexSet::Line { kind: LineKind::Clique, .. }, GraphExpr::Complete(_)) => true,
                (VertexSet::Line { kind: LineKind::Branch(_), .. }, GraphExpr::Tree(_)) => true,
                (VertexSet::Level(..) | VertexSet::Children(..) | VertexSet::Line { .. }, _) => false,
                _ => true,
            };
            if ok {
                Ok(())
            } else {
                Err(DslError::IllFormed(format!("`{d}` does not apply to `{sub}`")))
            }
        }
    }
}

/// One-level well-formedness check (children were checked when parsed).
pub(crate) fn check(e: &GraphExpr) -> Result<(), DslError> {
    match e {
        GraphExpr::Finite { vertices, edges } => {
            let mut seen = std::collections::BTreeSet::new();
            for v in vertices {
                if !seen.insert(v) {
                    return Err(DslError::IllFormed(format!("duplicate vertex `{v}`")));
                }
            }
            for (a, b) in edges {
                if !seen.contains(a) || !seen.contains(b) {
                    return Err(DslError::IllFormed(format!("edge {a}-{b} uses an unknown vertex")));
                }
                if a == b {
                    return Err(DslError::IllFormed(format!("loop at `{a}`")));
                }
            }
            Ok(())
        }
        GraphExpr::WithTops { base, .. } => {
            if **base == GraphExpr::Tree(Cardinality::Aleph1) {
                Ok(())
            } else {
                Err(DslError::IllFormed("with_tops applies only to tree(aleph1)".into()))
            }
        }
        GraphExpr::JoinVertex { base, label, attach } => {
            if resolve(base, &Address::single(super::Step::Label(label.clone()))) {
                return Err(DslError::IllFormed(format!("label `{label}` already used")));
            }
            check_descriptor(base, attach)
        }
        GraphExpr::AddEdge { base, a, b } => {
            for x in [a, b] {
                if !resolve(base, x) {
                    return Err(DslError::Unresolvable(x.to_string()));
                }
            }
            if a == b {
                return Err(DslError::IllFormed("add_edge endpoints coincide".into()));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

pub(crate) fn render(e: &GraphExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        GraphExpr::Finite { vertices, edges } => {
            write!(f, "finite{{v:[{}], e:[", vertices.join(", "))?;
            for (i, (a, b)) in edges.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}-{b}")?;
            }
            write!(f, "]}}")
        }
        GraphExpr::Ray => write!(f, "ray"),
        GraphExpr::Comb(n) => write!(f, "comb({n})"),
        GraphExpr::Star(k) => write!(f, "star({k})"),
        GraphExpr::Tree(k) => write!(f, "tree({k})"),
        GraphExpr::Complete(k) => write!(f, "complete({k})"),
        GraphExpr::WithTops { base, adjacency } => {
            let adj = match adjacency {
                TopAdjacency::WholeRay => "whole_ray",
                TopAdjacency::Every2nd => "every_2nd",
            };
            write!(f, "with_tops({base}, all, {adj})")
        }
        GraphExpr::Union(l, r) => write!(f, "union({l}, {r})"),
        GraphExpr::Copies(k, e) => write!(f, "copies({k}, {e})"),
        GraphExpr::JoinVertex { base, label, attach } => {
            write!(f, "join_vertex({base}, {label}, {attach})")
        }
        GraphExpr::AddEdge { base, a, b } => write!(f, "add_edge({base}, {a}, {b})"),
    }
}
