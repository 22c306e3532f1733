#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use graphrank::dsl::{
    components_after_deletion, contains, parse, truncate, Address, FiniteTruncation, GraphExpr, LineKind, RegionPath,
    VertexSet,
};
use graphrank::ends::{closure_ends, end_space, RaySchema, Selection};
use graphrank::ordinal::{compare, Ordinal};
use graphrank::rank::{ideal_rank, Ideal, RankResult};
use graphrank::spanning::{
    check_on_truncation, induced_with_attachment, normal_spanning_tree, normal_tree_containing, rank_transfer_bound,
    reflects_check, reroute_with_ray, tree_edges, tree_ends, CheckOpts, Parent, TreeDescriptor, TreeKind, TreeRule,
};

pub type Outcome = Result<(), String>;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// The fixture catalog, sorted by name.
pub fn fixtures() -> Vec<(String, GraphExpr)> {
    let mut out: Vec<(String, GraphExpr)> = std::fs::read_dir(fixture_dir())
        .expect("fixture dir")
        .filter_map(|f| {
            let p = f.ok()?.path();
            (p.extension()? == "graph").then_some(p)
        })
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&p).unwrap();
            let e = parse(&text).unwrap_or_else(|err| panic!("{name}: {err}"));
            (name, e)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn fixture(name: &str) -> GraphExpr {
    let text = std::fs::read_to_string(fixture_dir().join(format!("{name}.graph"))).unwrap();
    parse(&text).unwrap()
}

pub fn p(src: &str) -> GraphExpr {
    parse(src).unwrap_or_else(|err| panic!("{src}: {err}"))
}

pub fn set(src: &str) -> VertexSet {
    src.parse().unwrap_or_else(|err| panic!("{src}: {err:?}"))
}

pub fn addr(src: &str) -> Address {
    src.parse().unwrap_or_else(|err| panic!("{src}: {err:?}"))
}

pub fn le(a: &Ordinal, b: &Ordinal) -> bool {
    compare(a, b) != std::cmp::Ordering::Greater
}

fn non_none(e: &GraphExpr, d: &VertexSet) -> Result<Vec<(String, Selection)>, String> {
    let c = closure_ends(e, d).map_err(|err| err.to_string())?;
    Ok(c.classes.into_iter().filter(|(_, s)| !s.is_none()).collect())
}

/// One named instance of a property and its outcome.
pub struct Instance {
    pub name: String,
    pub outcome: Outcome,
}

fn run(name: String, f: impl FnOnce() -> Outcome) -> Instance {
    Instance { name, outcome: f() }
}

/// Every vertex of `t` in `v` has a vertex of `u` in `big` above it in the tree.
fn cofinal_on(e: &GraphExpr, rule: &TreeRule, v: &VertexSet, u: &VertexSet, t: &FiniteTruncation, big: &FiniteTruncation) -> Outcome {
    let chains: Vec<Vec<Address>> = big
        .vertices
        .iter()
        .filter(|x| contains(e, u, x))
        .map(|x| graphrank::spanning::ancestors(rule, e, x).map_err(|err| err.to_string()))
        .collect::<Result<_, _>>()?;
    let below: BTreeSet<&Address> = chains.iter().flatten().collect();
    match t.vertices.iter().filter(|x| contains(e, v, x)).find(|x| !below.contains(x)) {
        Some(x) => Err(format!("{x} has no vertex of the set above it")),
        None => Ok(()),
    }
}

/// A rooted tree containing `U` cofinally has the end closure of `U`.
pub fn cofinal_closure() -> Vec<Instance> {
    let cases = [
        ("ray", TreeRule::Structural, "all(.)", "prog(spine(.), 0, 2)"),
        ("comb(2)", TreeRule::Structural, "all(.)", "leaves(.)"),
        ("tree(aleph1)", TreeRule::Structural, "all(.)", "minus(all(.), level(., 0))"),
        ("tree(aleph0)", TreeRule::Structural, "all(.)", "minus(all(.), centers(.))"),
        ("complete(aleph0)", TreeRule::CliqueLine, "all(.)", "prog(clique(.), 1, 3)"),
        (
            "with_tops(tree(aleph1), all, whole_ray)",
            TreeRule::Base { inner: TreeRule::Structural.boxed() },
            "all(base)",
            "minus(all(base), level(base, 0))",
        ),
    ];
    cases
        .into_iter()
        .map(|(src, rule, v, u)| {
            run(format!("{src} with U = {u}"), || {
                let e = p(src);
                let (v, u) = (set(v), set(u));
                cofinal_on(&e, &rule, &v, &u, &truncate(&e, 3, 2), &truncate(&e, 5, 4))?;
                let (cv, cu) = (non_none(&e, &v)?, non_none(&e, &u)?);
                if cv.is_empty() {
                    return Err("tree closure is empty; instance is vacuous".into());
                }
                if cv != cu {
                    return Err(format!("closure of V(T) {cv:?} differs from closure of U {cu:?}"));
                }
                Ok(())
            })
        })
        .collect()
}

fn image_matches_closure(desc: &TreeDescriptor, span: &VertexSet) -> Outcome {
    let image = tree_ends(&desc.rule, &desc.host).map_err(|err| err.to_string())?;
    if !image.injective {
        return Err("ends of the tree are not mapped injectively".into());
    }
    let closure = closure_ends(&desc.host, span).map_err(|err| err.to_string())?;
    for (id, sel) in &closure.classes {
        let got = image.image.iter().find(|(i, _)| i == id).map(|(_, s)| s).unwrap_or(&Selection::None);
        if got != sel {
            return Err(format!("class {id}: tree reaches {got:?}, closure is {sel:?}"));
        }
    }
    Ok(())
}

/// Normal trees reach exactly the ends in their closure, injectively; spanning
/// ones also pass the truncation evidence.
pub fn normal_trees_reflect() -> Vec<Instance> {
    let spanning = ["ray", "comb(1)", "comb(3)", "tree(aleph0)", "tree(aleph1)", "complete(aleph0)"];
    let mut out: Vec<Instance> = spanning
        .iter()
        .map(|src| {
            run(format!("normal spanning tree of {src}"), || {
                let (desc, _) = normal_spanning_tree(&p(src)).map_err(|err| err.to_string())?;
                image_matches_closure(&desc, &VertexSet::all())?;
                for c in reflects_check(&desc, 4, 3) {
                    if !c.ok {
                        return Err(format!("{}: {}", c.name, c.detail));
                    }
                }
                Ok(())
            })
        })
        .collect();
    let partial = [
        ("with_tops(tree(aleph1), all, whole_ray)", "all(base)"),
        ("with_tops(tree(aleph1), all, every_2nd)", "all(base)"),
        ("join_vertex(comb(1), d, spine(.))", "spine(base)"),
        ("add_edge(union(ray, ray), left/r0, right/r0)", "all(base/left)"),
    ];
    out.extend(partial.into_iter().map(|(src, x)| {
        run(format!("normal tree around {x} in {src}"), || {
            let e = p(src);
            let (rule, span) = normal_tree_containing(&e, &set(x)).map_err(|err| err.to_string())?;
            image_matches_closure(&TreeDescriptor::new(TreeKind::Partial, e, rule), &span)
        })
    }));
    out
}

/// Deletion instances `(e, X)` for the component-closure properties.
pub const DELETIONS: &[(&str, &str)] = &[
    ("ray", "{r3}"),
    ("ray", "{r0, r3}"),
    ("comb(1)", "centers(.)"),
    ("tree(aleph1)", "centers(.)"),
    ("with_tops(tree(aleph1), all, whole_ray)", "all(base)"),
    ("join_vertex(copies(aleph0, star(aleph0)), root, centers(.))", "{root}"),
    ("add_edge(union(ray, ray), left/r0, right/r0)", "{left/r2}"),
    ("complete(aleph0)", "{k:0, k:1}"),
    ("join_vertex(comb(1), d, spine(.))", "{d}"),
    ("join_vertex(comb(1), d, spine(.))", "spine(base)"),
    ("comb(1)", "spine(.)"),
    ("join_vertex(union(ray, ray), d, all(.))", "{d}"),
];

struct Closures {
    x: Vec<(String, Selection)>,
    regions: Vec<Vec<(String, Selection)>>,
}

fn closures(e: &GraphExpr, x: &VertexSet) -> Result<Closures, String> {
    let cx = closure_ends(e, x).map_err(|err| err.to_string())?.classes;
    let mut regions = Vec::new();
    for r in components_after_deletion(e, x).map_err(|err| err.to_string())? {
        let m = r.members.ok_or_else(|| format!("members of {} not expressible", r.expr))?;
        regions.push(closure_ends(e, &m).map_err(|err| err.to_string())?.classes);
    }
    Ok(Closures { x: cx, regions })
}

/// Each end class lies in the closure of `X` or in the closure of a region.
pub fn ends_in_x_or_a_region() -> Vec<Instance> {
    DELETIONS
        .iter()
        .map(|(src, x)| {
            run(format!("{src} minus {x}"), || {
                let e = p(src);
                let c = closures(&e, &set(x))?;
                let space = end_space(&e).map_err(|err| err.to_string())?;
                for class in &space.classes {
                    let in_x = c.x.iter().find(|(i, _)| *i == class.id).map(|(_, s)| s.clone());
                    if in_x == Some(Selection::All) {
                        continue;
                    }
                    let hits = c.regions.iter().filter(|r| r.iter().any(|(i, s)| *i == class.id && !s.is_none()));
                    if hits.count() == 0 {
                        return Err(format!("class {} is in no closure", class.id));
                    }
                }
                Ok(())
            })
        })
        .collect()
}

/// A single end in the closure of two regions is in the closure of `X`.
pub fn shared_ends_touch_x() -> Vec<Instance> {
    DELETIONS
        .iter()
        .map(|(src, x)| {
            run(format!("{src} minus {x}"), || {
                let e = p(src);
                let c = closures(&e, &set(x))?;
                let space = end_space(&e).map_err(|err| err.to_string())?;
                for class in &space.classes {
                    let sels: Vec<&Selection> = c
                        .regions
                        .iter()
                        .filter_map(|r| r.iter().find(|(i, _)| *i == class.id).map(|(_, s)| s))
                        .collect();
                    let single = class.count == graphrank::dsl::Cardinality::ONE && !class.branches;
                    let shared = if single {
                        sels.iter().filter(|s| !s.is_none()).count() >= 2
                    } else {
                        sels.iter().filter(|s| **s == &Selection::All).count() >= 2
                    };
                    let in_x = c.x.iter().find(|(i, _)| *i == class.id).map(|(_, s)| s.clone()).unwrap_or(Selection::None);
                    if shared && in_x.is_none() {
                        return Err(format!("class {} is shared by two regions but not in the closure of X", class.id));
                    }
                }
                Ok(())
            })
        })
        .collect()
}

/// Rank-transfer instances `(e, X, ideal)`.
pub fn transfers() -> Vec<(&'static str, &'static str, Ideal)> {
    vec![
        ("ray", "{r3}", Ideal::NormallySpanned),
        ("comb(2)", "centers(.)", Ideal::NormallySpanned),
        ("complete(aleph0)", "{k:0}", Ideal::NormallySpanned),
        ("with_tops(tree(aleph1), all, whole_ray)", "all(base)", Ideal::NormallySpanned),
        ("add_edge(union(ray, ray), left/r0, right/r0)", "{left/r0}", Ideal::NormallySpanned),
        ("join_vertex(copies(aleph0, star(aleph0)), root, centers(.))", "{root}", Ideal::FiniteSets),
    ]
}

/// The transferred bound is at least the rank of `G[C ∪ X]` computed directly;
/// countable members get 0.
pub fn rank_transfer() -> Vec<Instance> {
    let mut out = Vec::new();
    for (src, x, ideal) in transfers() {
        let e = p(src);
        let x = set(x);
        let regions = match components_after_deletion(&e, &x) {
            Ok(r) => r,
            Err(err) => {
                out.push(run(format!("{src} minus {x}"), || Err(err.to_string())));
                continue;
            }
        };
        for r in regions {
            out.push(run(format!("{src} minus {x}, member {}", r.expr), || {
                let bound = rank_transfer_bound(&e, &x, &r, &ideal).map_err(|err| err.to_string())?;
                if ideal == Ideal::NormallySpanned && graphrank::dsl::vertices_card(&r.expr).is_countable() && !bound.is_zero() {
                    return Err(format!("countable member got bound {bound}"));
                }
                let g = induced_with_attachment(&e, &x, &r).ok_or("no induced expression")?;
                match ideal_rank(&g, &ideal) {
                    RankResult::Ranked { rank, .. } if le(&rank, &bound) => Ok(()),
                    RankResult::Ranked { rank, .. } => Err(format!("direct rank {rank} of {g} exceeds bound {bound}")),
                    other => Err(format!("direct rank of {g}: {}", other.short())),
                }
            }));
        }
    }
    out
}

/// A reroute instance: host, base tree, ray and a descriptor covering every
/// vertex whose tree edges may change.
pub struct Reroute {
    pub host: &'static str,
    pub base: TreeRule,
    pub ray: RaySchema,
    pub delta: &'static str,
}

pub fn reroutes() -> Vec<Reroute> {
    let line = |region: &str, kind: LineKind, start, step| RaySchema {
        region: region.parse::<RegionPath>().unwrap(),
        addr: region.parse::<RegionPath>().unwrap().address_prefix().unwrap(),
        kind,
        start,
        step,
    };
    vec![
        Reroute {
            host: "complete(aleph0)",
            base: TreeRule::CliqueLine,
            ray: line(".", LineKind::Clique, 0, 2),
            delta: "all(.)",
        },
        Reroute {
            host: "complete(aleph0)",
            base: TreeRule::CliqueLine,
            ray: line(".", LineKind::Clique, 1, 2),
            delta: "all(.)",
        },
        Reroute {
            host: "complete(aleph0)",
            base: TreeRule::CliqueLine,
            ray: line(".", LineKind::Clique, 0, 3),
            delta: "all(.)",
        },
        Reroute {
            host: "add_edge(union(complete(aleph0), ray), left/k:0, right/r0)",
            base: TreeRule::Graft {
                base: TreeRule::Union { left: TreeRule::CliqueLine.boxed(), right: TreeRule::Structural.boxed() }.boxed(),
                below: addr("left/k:0"),
                root: addr("right/r0"),
            },
            ray: line("base/left", LineKind::Clique, 0, 2),
            delta: "all(base/left)",
        },
        Reroute { host: "comb(1)", base: TreeRule::Structural, ray: line(".", LineKind::Spine, 0, 1), delta: "{}" },
    ]
}

fn edge_set(desc: &TreeDescriptor, t: &FiniteTruncation) -> BTreeSet<(usize, usize)> {
    tree_edges(desc, t).into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect()
}

/// Rerouting keeps a tree, contains the ray, reflects the ends, and only
/// changes edges whose closure is the end of the ray. Checked for `d ≤ dmax`.
pub fn reroute_postconditions(dmax: u64) -> Vec<Instance> {
    reroutes()
        .into_iter()
        .map(|r| {
            run(format!("{} along {}", r.host, r.ray.descriptor()), || {
                let e = p(r.host);
                let rule = reroute_with_ray(&e, &r.base, &r.ray).map_err(|err| err.to_string())?;
                let old = TreeDescriptor::new(TreeKind::NormalSpanning, e.clone(), r.base.clone());
                let new = TreeDescriptor::new(TreeKind::EndFaithful, e.clone(), rule);
                let delta = set(r.delta);
                let ray_ends = non_none(&e, &r.ray.descriptor())?;
                if ray_ends.len() != 1 {
                    return Err(format!("ray closure {ray_ends:?} is not one class"));
                }
                for (id, _) in non_none(&e, &delta)? {
                    if id != ray_ends[0].0 {
                        return Err(format!("changed edges reach class {id}"));
                    }
                }
                let opts = CheckOpts { spanning: true, normal: false, covers: None };
                for d in 1..=dmax {
                    let w = d.min(4);
                    for c in check_on_truncation(&new, d, w, &opts) {
                        if !c.ok {
                            return Err(format!("({d}, {w}) {}: {}", c.name, c.detail));
                        }
                    }
                    let t = truncate(&e, d, w);
                    for n in 0.. {
                        let (a, b) = (r.ray.vertex(n), r.ray.vertex(n + 1));
                        if t.index_of(&b).is_none() {
                            break;
                        }
                        if new.parent(&b).map_err(|err| err.to_string())? != Parent::Of(a.clone()) {
                            return Err(format!("({d}, {w}) ray edge {a}–{b} is not a tree edge"));
                        }
                    }
                    let (eo, en) = (edge_set(&old, &t), edge_set(&new, &t));
                    for &(a, b) in eo.symmetric_difference(&en) {
                        for v in [a, b] {
                            if !contains(&e, &delta, &t.vertices[v]) {
                                return Err(format!("({d}, {w}) changed edge at {} outside {delta}", t.vertices[v]));
                            }
                        }
                    }
                }
                for c in reflects_check(&new, 4, 3) {
                    if !c.ok {
                        return Err(format!("{}: {}", c.name, c.detail));
                    }
                }
                Ok(())
            })
        })
        .collect()
}

/// Exhaustive finite-`X` oracle for the rank of finite sets, read off a pair
/// of nested truncations: a vertex set is finite when it does not grow from
/// the small truncation to the large one. Deletion sets range over the
/// finite catalog candidates and every set of at most two vertices.
pub struct SchmidtOracle {
    e: GraphExpr,
    small: FiniteTruncation,
    large: FiniteTruncation,
}

impl SchmidtOracle {
    pub fn new(e: &GraphExpr, small: (u64, u64), large: (u64, u64)) -> Self {
        SchmidtOracle { e: e.clone(), small: truncate(e, small.0, small.1), large: truncate(e, large.0, large.1) }
    }

    pub fn rank(&self, bound: u64) -> Option<u64> {
        let all = |t: &FiniteTruncation| t.vertices.iter().cloned().collect::<BTreeSet<Address>>();
        let extra: Vec<BTreeSet<Address>> = graphrank::rank::catalog(&self.e)
            .iter()
            .filter(|d| graphrank::dsl::desc_card(&self.e, d).is_finite())
            .map(|d| self.large.vertices.iter().filter(|v| contains(&self.e, d, v)).cloned().collect())
            .collect();
        self.rank_of(&all(&self.small), &all(&self.large), &extra, bound)
    }

    fn component(&self, t: &FiniteTruncation, within: &BTreeSet<Address>, seed: &Address) -> BTreeSet<Address> {
        let keep: Vec<bool> = t.vertices.iter().map(|v| within.contains(v)).collect();
        let i = t.index_of(seed).expect("seed in truncation");
        t.components(&keep)
            .into_iter()
            .find(|c| c.contains(&i))
            .map(|c| c.into_iter().map(|j| t.vertices[j].clone()).collect())
            .unwrap_or_default()
    }

    fn rank_of(&self, k0: &BTreeSet<Address>, k1: &BTreeSet<Address>, extra: &[BTreeSet<Address>], bound: u64) -> Option<u64> {
        if k0 == k1 {
            return Some(0);
        }
        if bound == 0 {
            return None;
        }
        let verts: Vec<&Address> = k0.iter().collect();
        let mut xs: Vec<BTreeSet<Address>> = extra.iter().filter(|x| !x.is_empty() && x.is_subset(k1)).cloned().collect();
        for i in 0..verts.len() {
            xs.push([verts[i].clone()].into());
            for j in i + 1..verts.len() {
                xs.push([verts[i].clone(), verts[j].clone()].into());
            }
        }
        let mut best: Option<u64> = None;
        for x in xs {
            let r0: BTreeSet<Address> = k0.difference(&x).cloned().collect();
            let r1: BTreeSet<Address> = k1.difference(&x).cloned().collect();
            // members that miss the small truncation are copies of members
            // that meet it
            let mut worst = Some(0);
            let mut seen: BTreeSet<Address> = BTreeSet::new();
            for seed in &r0 {
                if seen.contains(seed) {
                    continue;
                }
                let c0 = self.component(&self.small, &r0, seed);
                let c1 = self.component(&self.large, &r1, seed);
                seen.extend(c0.iter().cloned());
                match self.rank_of(&c0, &c1, &[], bound - 1) {
                    Some(r) => worst = worst.map(|w: u64| w.max(r)),
                    None => {
                        worst = None;
                        break;
                    }
                }
            }
            if let Some(w) = worst {
                best = Some(best.map_or(w + 1, |b| b.min(w + 1)));
            }
        }
        best
    }
}

/// Ranks of one ideal on the fixture catalog.
pub fn ranked_fixtures(ideal: &Ideal) -> Vec<(String, GraphExpr, Ordinal, graphrank::rank::PeelingTree)> {
    fixtures()
        .into_iter()
        .filter_map(|(n, e)| match ideal_rank(&e, ideal) {
            RankResult::Ranked { rank, witness } => Some((n, e, rank, witness)),
            _ => None,
        })
        .collect()
}

pub fn ideals() -> Vec<Ideal> {
    vec![Ideal::NormallySpanned, Ideal::FiniteSets, Ideal::SetsBelow(graphrank::dsl::Cardinality::Aleph1)]
}

/// Rank to decomposition and back on every ranked fixture and ideal: the
/// decomposition verifies on small truncations and gives back the rank.
pub fn round_trips() -> Vec<Instance> {
    use graphrank::rank::{decomposition_to_rank, rank_to_decomposition, verify_decomposition};
    let mut out = Vec::new();
    for ideal in ideals() {
        for (name, e, rank, w) in ranked_fixtures(&ideal) {
            out.push(run(format!("{name} under {ideal:?}"), || {
                let td = rank_to_decomposition(&e, &ideal, &w).map_err(|err| err.to_string())?;
                verify_decomposition(&td, &[(2, 2), (3, 2), (3, 3)]).map_err(|f| format!("{f:?}"))?;
                let b = decomposition_to_rank(&td, &ideal)?;
                if !le(&b.bound, &rank) {
                    return Err(format!("decomposition bound {} exceeds rank {rank}", b.bound));
                }
                if b.bound != rank {
                    return Err(format!("least decomposition bound {} differs from rank {rank}", b.bound));
                }
                Ok(())
            }));
        }
    }
    out
}

pub fn cli(args: &[&str]) -> graphrank::cli::Outcome {
    use clap::Parser;
    let cli = graphrank::cli::Cli::try_parse_from(std::iter::once("graphrank").chain(args.iter().copied()))
        .unwrap_or_else(|err| panic!("{args:?}: {err}"));
    graphrank::cli::run(&cli)
}

/// `analyze`, every `build` target and `verify` of each built artifact over
/// the fixture catalog, as one report. Artifacts go to `dir`.
pub fn catalog_reports(dir: &std::path::Path, d: u64, w: u64) -> String {
    let (d, w) = (d.to_string(), w.to_string());
    let mut out = String::new();
    for (name, _) in fixtures() {
        let input = fixture_dir().join(format!("{name}.graph"));
        let input = input.to_str().unwrap();
        let a = cli(&["analyze", input]);
        out.push_str(&format!("== {name} analyze {}\n{}\n", a.code, a.body));
        for target in ["nst", "efst", "rayless", "tdecomp"] {
            let b = cli(&["build", target, input]);
            out.push_str(&format!("== {name} build {target} {}\n{}\n", b.code, b.body));
            if b.code != 0 {
                continue;
            }
            let artifact = dir.join(format!("{name}.{target}.json"));
            std::fs::write(&artifact, &b.body).unwrap();
            let v = cli(&["verify", input, artifact.to_str().unwrap(), "--d", &d, "--w", &w]);
            out.push_str(&format!("== {name} verify {target} {}\n{}\n", v.code, v.body));
        }
    }
    out
}
