//! Symbolic vertex sets.

use std::fmt;

use super::{serde_via_string, Address, DslError, ExprStep, Index, NodeDisplay, RegionPath, Step};

/// A line is an indexed sequence of vertices `x_0, x_1, …` along which
/// consecutive vertices are adjacent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    /// `r0, r1, …` of a ray or comb.
    Spine,
    /// `k:0, k:1, …` of a complete graph (any two are adjacent).
    Clique,
    /// The tree branch `p·0·0·…`, position `n` being its node of depth `n`.
    Branch(Vec<Index>),
}

/// Descriptor of a (possibly infinite) vertex set. Region paths are relative to
/// the expression the descriptor is interpreted in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexSet {
    Explicit(Vec<Address>),
    All(RegionPath),
    /// Tree nodes of the given depth.
    Level(RegionPath, u64),
    /// Children of one tree node.
    Children(RegionPath, Vec<Index>),
    /// Line positions `start, start + step, …`.
    Line { region: RegionPath, kind: LineKind, start: u64, step: u64 },
    /// The distinguished vertex of every constructor instance in the region:
    /// star center, tree root, `r0`, `k:0`, a join vertex.
    Centers(RegionPath),
    /// Star leaves and the tips of comb teeth.
    Leaves(RegionPath),
    Tops(RegionPath),
    /// Tops whose branch passes through the given tree node.
    TopsThrough(RegionPath, Vec<Index>),
    Union(Vec<VertexSet>),
    Minus(Box<VertexSet>, Box<VertexSet>),
}

impl VertexSet {
    pub fn empty() -> Self {
        VertexSet::Explicit(Vec::new())
    }

    pub fn all() -> Self {
        VertexSet::All(RegionPath::root())
    }

    pub fn explicit(addrs: impl IntoIterator<Item = Address>) -> Self {
        let mut v: Vec<Address> = addrs.into_iter().collect();
        v.sort();
        v.dedup();
        VertexSet::Explicit(v)
    }

    pub fn spine(region: RegionPath) -> Self {
        VertexSet::Line { region, kind: LineKind::Spine, start: 0, step: 1 }
    }

    pub fn is_syntactically_empty(&self) -> bool {
        match self {
            VertexSet::Explicit(v) => v.is_empty(),
            VertexSet::Union(v) => v.iter().all(VertexSet::is_syntactically_empty),
            _ => false,
        }
    }

    /// Flattens nested unions, merges explicit parts and drops empty parts.
    pub fn normalized(&self) -> VertexSet {
        let mut parts = Vec::new();
        let mut explicit = Vec::new();
        fn walk(d: &VertexSet, parts: &mut Vec<VertexSet>, explicit: &mut Vec<Address>) {
            match d {
                VertexSet::Union(v) => v.iter().for_each(|x| walk(x, parts, explicit)),
                VertexSet::Explicit(v) => explicit.extend(v.iter().cloned()),
                VertexSet::Minus(a, b) => {
                    let a = a.normalized();
                    let b = b.normalized();
                    if b.is_syntactically_empty() {
                        walk(&a, parts, explicit)
                    } else if !a.is_syntactically_empty() {
                        parts.push(VertexSet::Minus(Box::new(a), Box::new(b)))
                    }
                }
                other => parts.push(other.clone()),
            }
        }
        walk(self, &mut parts, &mut explicit);
        explicit.sort();
        explicit.dedup();
        parts.sort();
        parts.dedup();
        if !explicit.is_empty() || parts.is_empty() {
            parts.insert(0, VertexSet::Explicit(explicit));
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            VertexSet::Union(parts)
        }
    }

    /// The top-level union members (a non-union is its own single member).
    pub fn members(&self) -> Vec<VertexSet> {
        match self.normalized() {
            VertexSet::Union(v) => v,
            d if d.is_syntactically_empty() => Vec::new(),
            d => vec![d],
        }
    }

    pub fn region(&self) -> Option<&RegionPath> {
        match self {
            VertexSet::All(p)
            | VertexSet::Level(p, _)
            | VertexSet::Children(p, _)
            | VertexSet::Line { region: p, .. }
            | VertexSet::Centers(p)
            | VertexSet::Leaves(p)
            | VertexSet::Tops(p)
            | VertexSet::TopsThrough(p, _) => Some(p),
            _ => None,
        }
    }

    fn with_region(&self, p: RegionPath) -> VertexSet {
        match self {
            VertexSet::All(_) => VertexSet::All(p),
            VertexSet::Level(_, k) => VertexSet::Level(p, *k),
            VertexSet::Children(_, s) => VertexSet::Children(p, s.clone()),
            VertexSet::Line { kind, start, step, .. } => {
                VertexSet::Line { region: p, kind: kind.clone(), start: *start, step: *step }
            }
            VertexSet::Centers(_) => VertexSet::Centers(p),
            VertexSet::Leaves(_) => VertexSet::Leaves(p),
            VertexSet::Tops(_) => VertexSet::Tops(p),
            VertexSet::TopsThrough(_, s) => VertexSet::TopsThrough(p, s.clone()),
            other => other.clone(),
        }
    }

    /// Re-expresses a descriptor written inside the sub-expression at `path`
    /// (whose addresses carry `addr` as prefix) in the coordinates of the
    /// enclosing expression.
    pub fn lifted(&self, path: &RegionPath, addr: &[Step]) -> VertexSet {
        match self {
            VertexSet::Explicit(v) => VertexSet::Explicit(v.iter().map(|a| a.prefixed(addr)).collect()),
            VertexSet::Union(v) => VertexSet::Union(v.iter().map(|d| d.lifted(path, addr)).collect()),
            VertexSet::Minus(a, b) => VertexSet::Minus(
                Box::new(a.lifted(path, addr)),
                Box::new(b.lifted(path, addr)),
            ),
            d => d.with_region(path.join(d.region().expect("region descriptor"))),
        }
    }

    /// Pushes the descriptor through one expression step when its region path
    /// starts with that step. `copy:*` matches any concrete copy.
    pub fn strip_step(&self, step: &ExprStep) -> Option<VertexSet> {
        let p = self.region()?;
        let first = p.0.first()?;
        let ok = first == step
            || matches!((first, step), (ExprStep::AllCopies, ExprStep::Copy(_)))
            || matches!((first, step), (ExprStep::AllCopies, ExprStep::AllCopies));
        ok.then(|| self.with_region(RegionPath(p.0[1..].to_vec())))
    }

    pub fn rename_tokens(&self, f: &impl Fn(u32) -> u32) -> VertexSet {
        let ren_seq = |s: &[Index]| -> Vec<Index> {
            s.iter()
                .map(|i| match i {
                    Index::Tok(t) => Index::Tok(f(*t)),
                    n => n.clone(),
                })
                .collect()
        };
        let ren_path = |p: &RegionPath| {
            RegionPath(
                p.0.iter()
                    .map(|s| match s {
                        ExprStep::Copy(Index::Tok(t)) => ExprStep::Copy(Index::Tok(f(*t))),
                        o => o.clone(),
                    })
                    .collect(),
            )
        };
        match self {
            VertexSet::Explicit(v) => VertexSet::Explicit(v.iter().map(|a| a.rename_tokens(f)).collect()),
            VertexSet::Union(v) => VertexSet::Union(v.iter().map(|d| d.rename_tokens(f)).collect()),
            VertexSet::Minus(a, b) => {
                VertexSet::Minus(Box::new(a.rename_tokens(f)), Box::new(b.rename_tokens(f)))
            }
            VertexSet::Children(p, s) => VertexSet::Children(ren_path(p), ren_seq(s)),
            VertexSet::TopsThrough(p, s) => VertexSet::TopsThrough(ren_path(p), ren_seq(s)),
            VertexSet::Line { region, kind, start, step } => VertexSet::Line {
                region: ren_path(region),
                kind: match kind {
                    LineKind::Branch(s) => LineKind::Branch(ren_seq(s)),
                    k => k.clone(),
                },
                start: *start,
                step: *step,
            },
            d => d.with_region(ren_path(d.region().expect("region descriptor"))),
        }
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexSet::Explicit(v) => {
                write!(f, "{{")?;
                for (i, a) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "}}")
            }
            VertexSet::All(p) => write!(f, "all({p})"),
            VertexSet::Level(p, k) => write!(f, "level({p}, {k})"),
            VertexSet::Children(p, s) => write!(f, "children({p}, {})", NodeDisplay(s)),
            VertexSet::Line { region, kind, start, step } => {
                let base = match kind {
                    LineKind::Spine => format!("spine({region})"),
                    LineKind::Clique => format!("clique({region})"),
                    LineKind::Branch(s) => format!("branch({region}, {})", NodeDisplay(s)),
                };
                if *start == 0 && *step == 1 {
                    write!(f, "{base}")
                } else {
                    write!(f, "prog({base}, {start}, {step})")
                }
            }
            VertexSet::Centers(p) => write!(f, "centers({p})"),
            VertexSet::Leaves(p) => write!(f, "leaves({p})"),
            VertexSet::Tops(p) => write!(f, "tops({p})"),
            VertexSet::TopsThrough(p, s) => write!(f, "tops_through({p}, {})", NodeDisplay(s)),
            VertexSet::Union(v) => {
                write!(f, "union(")?;
                for (i, d) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{d}")?;
                }
                write!(f, ")")
            }
            VertexSet::Minus(a, b) => write!(f, "minus({a}, {b})"),
        }
    }
}

impl std::str::FromStr for VertexSet {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        super::parse::parse_descriptor(s)
    }
}

serde_via_string!(VertexSet);
