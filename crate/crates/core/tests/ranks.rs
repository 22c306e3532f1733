mod common;

use common::{fixtures, ideals, le};
use graphrank::dsl::{Cardinality, ExprStep, GraphExpr, RegionPath, Verdict, VertexSet};
use graphrank::rank::{
    catalog, check_certificate, ideal_rank, ideal_rank_in, ideal_rank_with, kappa_rank, normal_rank, RankOptions,
    RankResult,
};
use proptest::prelude::*;

#[test]
fn decompositions_give_back_the_rank() {
    let suite = common::round_trips();
    let failed: Vec<String> =
        suite.iter().filter_map(|i| i.outcome.as_ref().err().map(|err| format!("{}: {err}", i.name))).collect();
    assert!(failed.is_empty(), "{}", failed.join("\n"));
    assert!(suite.len() >= 10, "{} round trips", suite.len());
}

#[test]
fn no_rank_survives_search_without_certificates() {
    let opts = RankOptions { certificates: false, ..RankOptions::default() };
    let mut seen = 0;
    for (name, e) in fixtures() {
        for ideal in ideals() {
            let RankResult::NoRank { certificate } = ideal_rank(&e, &ideal) else { continue };
            seen += 1;
            check_certificate(&e, &ideal, &certificate).unwrap_or_else(|err| panic!("{name} {ideal:?}: {err}"));
            let searched = ideal_rank_with(&e, &ideal, opts);
            assert!(!matches!(searched, RankResult::Ranked { .. }), "{name} {ideal:?}: {searched:?}");
        }
    }
    assert!(seen >= 4, "{seen} no-rank verdicts");
}

#[test]
fn normal_rank_is_at_most_the_aleph1_rank() {
    let mut compared = 0;
    for (name, e) in fixtures() {
        let RankResult::Ranked { rank: a, .. } = kappa_rank(&e, Cardinality::Aleph1) else { continue };
        let Ok(RankResult::Ranked { rank: b, .. }) = normal_rank(&e) else { panic!("{name}: no normal rank") };
        assert!(le(&b, &a), "{name}: normal rank {b} above aleph1 rank {a}");
        compared += 1;
    }
    assert!(compared >= 5);
}

fn paths(e: &GraphExpr, at: RegionPath, out: &mut Vec<RegionPath>) {
    out.push(at.clone());
    let steps: &[ExprStep] = match e {
        GraphExpr::WithTops { .. } | GraphExpr::JoinVertex { .. } | GraphExpr::AddEdge { .. } => &[ExprStep::Base],
        GraphExpr::Union(..) => &[ExprStep::Left, ExprStep::Right],
        GraphExpr::Copies(..) => &[ExprStep::AllCopies],
        _ => &[],
    };
    for s in steps {
        let child = e.child(&s.clone()).or_else(|| e.child(&ExprStep::Copy(graphrank::dsl::Index::Nat(0))));
        if let Some(c) = child {
            paths(c, at.child(s.clone()), out);
        }
    }
}

#[test]
fn in_host_ranks_are_monotone() {
    let mut compared = 0;
    for (name, g) in fixtures() {
        let mut ps = Vec::new();
        paths(&g, RegionPath::root(), &mut ps);
        for outer in &ps {
            for inner in ps.iter().filter(|q| q.0.len() > outer.0.len() && q.0.starts_with(&outer.0)) {
                let ideal = graphrank::rank::Ideal::NormallySpanned;
                let (Some(h), Some(hp)) = (
                    ideal_rank_in(&g, inner, &ideal).rank().cloned(),
                    ideal_rank_in(&g, outer, &ideal).rank().cloned(),
                ) else {
                    continue;
                };
                assert!(le(&h, &hp), "{name}: {inner} has rank {h} above {outer} with {hp}");
                let sub = graphrank::dsl::subexpr(&g, &outer.instantiate(&graphrank::dsl::Index::Nat(0))).unwrap();
                let rel = RegionPath(inner.0[outer.0.len()..].to_vec());
                if let Some(local) = ideal_rank_in(sub, &rel, &ideal).rank() {
                    assert!(le(local, &h), "{name}: {inner} has rank {local} in {outer} above {h} in the host");
                }
                compared += 1;
            }
        }
    }
    assert!(compared >= 5, "{compared} pairs");
}

fn descriptor_pool(e: &GraphExpr) -> Vec<VertexSet> {
    let mut pool = vec![VertexSet::empty(), VertexSet::all()];
    pool.extend(catalog(e));
    pool
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ideal_laws(f in 0usize..64, i in 0usize..64, j in 0usize..64, k in 0usize..3) {
        let fx = fixtures();
        let (_, e) = &fx[f % fx.len()];
        let ideal = &ideals()[k];
        let pool = descriptor_pool(e);
        let (a, b) = (&pool[i % pool.len()], &pool[j % pool.len()]);
        prop_assert_eq!(ideal.contains(e, &VertexSet::empty()), Verdict::Yes);
        let (ya, yb) = (ideal.contains(e, a), ideal.contains(e, b));
        let union = VertexSet::Union(vec![a.clone(), b.clone()]);
        if ya == Verdict::Yes && yb == Verdict::Yes {
            prop_assert_ne!(ideal.contains(e, &union), Verdict::No, "union of {} and {}", a, b);
        }
        if ya == Verdict::Yes {
            let sub = VertexSet::Minus(Box::new(a.clone()), Box::new(b.clone()));
            prop_assert_ne!(ideal.contains(e, &sub), Verdict::No, "{} inside {}", sub, a);
        }
        if ideal.contains(e, &union) == Verdict::Yes {
            prop_assert_ne!(ya, Verdict::No, "{} inside the union", a);
        }
    }
}
