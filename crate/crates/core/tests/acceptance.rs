//! One line per acceptance criterion. Run with `cargo test --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fixture, fixtures, Instance, SchmidtOracle};
use graphrank::dsl::{Cardinality, GraphExpr, Verdict};
use graphrank::ends::end_space;
use graphrank::ordinal::Ordinal;
use graphrank::rank::{kappa_rank, normal_rank, schmidt_rank, Certificate, PeelingTree, RankResult};
use graphrank::spanning::{
    check_on_truncation, end_faithful_spanning_tree, is_rayless, rayless_spanning_tree, reflects_check, CheckOpts,
    SpanError,
};

type Verdict1 = Result<String, String>;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, n: u32, what: &str, limit: Option<Duration>, f: impl FnOnce() -> Verdict1) {
        let start = Instant::now();
        let r = f();
        let took = start.elapsed();
        let timing = match limit {
            Some(l) => format!("{:.3}s, limit {:.0}s", took.as_secs_f64(), l.as_secs_f64()),
            None => format!("{:.3}s", took.as_secs_f64()),
        };
        let r = match (r, limit) {
            (Ok(_), Some(l)) if took > l => Err("over the time limit".to_string()),
            (r, _) => r,
        };
        match r {
            Ok(detail) => println!("PASS {n:>2} {what} ({timing}): {detail}"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL {n:>2} {what} ({timing}): {detail}")
            }
        }
    }
}

fn suite(instances: Vec<Instance>, min: usize) -> Verdict1 {
    let failed: Vec<String> = instances
        .iter()
        .filter_map(|i| i.outcome.as_ref().err().map(|err| format!("{}: {err}", i.name)))
        .collect();
    if !failed.is_empty() {
        return Err(failed.join(" | "));
    }
    if instances.len() < min {
        return Err(format!("{} instances, need {min}", instances.len()));
    }
    Ok(format!("{} instances", instances.len()))
}

fn normal_rank_of_tops() -> Verdict1 {
    let e = fixture("withtops_all");
    let r = normal_rank(&e).map_err(|err| err.to_string())?;
    let RankResult::Ranked { rank, witness: PeelingTree::Peel { x, children, .. } } = &r else {
        return Err(format!("got {}", r.short()));
    };
    if *rank != Ordinal::finite(1) {
        return Err(format!("rank {rank}"));
    }
    if x.to_string() != "all(base)" {
        return Err(format!("peels {x}"));
    }
    let isolated = children.iter().all(|c| {
        matches!(&c.region.expr, GraphExpr::Finite { vertices, edges } if vertices.len() == 1 && edges.is_empty())
            && c.witness == PeelingTree::Base
    });
    if !isolated {
        return Err("members are not isolated vertices".into());
    }
    Ok("rank 1, X = all(base), isolated tops".into())
}

fn no_aleph1_rank() -> Verdict1 {
    match kappa_rank(&fixture("withtops_all"), Cardinality::Aleph1) {
        RankResult::NoRank { certificate: c @ Certificate::ContainsTree { .. } } => Ok(format!("{c:?}")),
        other => Err(format!("got {other:?}")),
    }
}

fn cliques() -> Verdict1 {
    let big = normal_rank(&fixture("k_aleph1")).map_err(|err| err.to_string())?;
    if !matches!(big, RankResult::NoRank { certificate: Certificate::UncountableClique { .. } }) {
        return Err(format!("complete(aleph1): {big:?}"));
    }
    let small = normal_rank(&fixture("complete_aleph0")).map_err(|err| err.to_string())?;
    if small.rank() != Some(&Ordinal::zero()) {
        return Err(format!("complete(aleph0): {}", small.short()));
    }
    Ok("complete(aleph1) no rank, complete(aleph0) rank 0".into())
}

fn efst_catalog() -> Verdict1 {
    let opts = CheckOpts { spanning: true, normal: false, covers: None };
    let mut built = Vec::new();
    for (name, e) in fixtures() {
        if !matches!(normal_rank(&e), Ok(RankResult::Ranked { .. })) {
            continue;
        }
        let desc = end_faithful_spanning_tree(&e).map_err(|err| format!("{name}: {err}"))?;
        for d in 1..=4 {
            for w in 1..=4 {
                let checks = check_on_truncation(&desc, d, w, &opts).into_iter().chain(reflects_check(&desc, d, w));
                if let Some(c) = checks.into_iter().find(|c| !c.ok) {
                    return Err(format!("{name} at ({d}, {w}) {}: {}", c.name, c.detail));
                }
            }
        }
        built.push(name);
    }
    Ok(format!("{} fixtures: {}", built.len(), built.join(", ")))
}

fn rayless_equivalence() -> Verdict1 {
    let (mut undominated, mut spanned) = (Vec::new(), Vec::new());
    for (name, e) in fixtures() {
        if !matches!(normal_rank(&e), Ok(RankResult::Ranked { .. })) {
            continue;
        }
        let dominated = end_space(&e).map_err(|err| err.to_string())?.all_dominated();
        match (dominated, rayless_spanning_tree(&e)) {
            (Verdict::No, Err(SpanError::NotAllDominated(_))) => undominated.push(name),
            (Verdict::Yes, Ok(t)) if is_rayless(&t.rule, &e) == Verdict::Yes => spanned.push(name),
            (v, r) => return Err(format!("{name}: domination {v:?}, got {r:?}")),
        }
    }
    Ok(format!("not all dominated: {}; rayless trees: {}", undominated.join(", "), spanned.join(", ")))
}

fn property_suites() -> Verdict1 {
    let suites = [
        ("cofinal closure", common::cofinal_closure()),
        ("normal trees reflect", common::normal_trees_reflect()),
        ("ends near X or in a region", common::ends_in_x_or_a_region()),
        ("shared ends touch X", common::shared_ends_touch_x()),
        ("rank transfer", common::rank_transfer()),
    ];
    let mut out = Vec::new();
    for (name, s) in suites {
        out.push(format!("{name} {}", suite(s, 5).map_err(|err| format!("{name}: {err}"))?));
    }
    Ok(out.join("; "))
}

fn reroutes() -> Verdict1 {
    let first = &common::reroutes()[0];
    if first.host != "complete(aleph0)" || first.ray.step != 2 || first.ray.start != 0 {
        return Err("the even ray in complete(aleph0) is not covered".into());
    }
    suite(common::reroute_postconditions(12), 3).map(|s| format!("{s}, d ≤ 12"))
}

fn schmidt_oracle() -> Verdict1 {
    let mut out = Vec::new();
    for (name, want) in [("star_aleph0", 1), ("star_of_stars", 2)] {
        let e = fixture(name);
        let engine = schmidt_rank(&e).map_err(|err| err.to_string())?;
        let oracle = SchmidtOracle::new(&e, (3, 3), (4, 4)).rank(3);
        if engine.rank().and_then(|r| r.as_finite()) != Some(want) || oracle != Some(want) {
            return Err(format!("{name}: engine {}, oracle {oracle:?}, expected {want}", engine.short()));
        }
        out.push(format!("{name} = {want}"));
    }
    Ok(out.join(", "))
}

fn determinism() -> Verdict1 {
    let dir = tempfile::tempdir().map_err(|err| err.to_string())?;
    let a = common::catalog_reports(dir.path(), 3, 3);
    let b = common::catalog_reports(dir.path(), 3, 3);
    if a != b {
        return Err("reports differ between runs".into());
    }
    Ok(format!("{} report sections, {} bytes", a.matches("\n== ").count() + 1, a.len()))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut r = Report { failed: 0 };
    r.line(1, "normal rank of T_aleph1 with tops", Some(secs(1)), normal_rank_of_tops);
    r.line(2, "no aleph1-rank for T_aleph1 with tops", None, no_aleph1_rank);
    r.line(3, "complete graphs", None, cliques);
    r.line(4, "rank / decomposition round trip", Some(secs(10)), || suite(common::round_trips(), 1));
    r.line(5, "end-faithful spanning trees on ranked fixtures", Some(secs(30)), efst_catalog);
    r.line(6, "rayless spanning tree iff all ends dominated", None, rayless_equivalence);
    r.line(7, "property suites", None, property_suites);
    r.line(8, "rerouting along a ray", None, reroutes);
    r.line(9, "Schmidt ranks against the finite-set oracle", Some(secs(5)), schmidt_oracle);
    r.line(10, "deterministic reports", None, determinism);
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", r.failed);
        ExitCode::FAILURE
    }
}
