//! Parallel vs sequential: truncation, rank search and the tree check sweep.
//! Without the `parallel` feature both arms take the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graphrank::dsl::{parse, truncate, GraphExpr};
use graphrank::par;
use graphrank::rank::{ideal_rank, normal_rank, Ideal};
use graphrank::spanning::{check_on_truncation, end_faithful_spanning_tree, reflects_check, CheckOpts};

const MODES: [(&str, bool); 2] = [("parallel", false), ("sequential", true)];

fn host(src: &str) -> GraphExpr {
    parse(src).expect("fixture parses")
}

fn truncation(c: &mut Criterion) {
    let mut g = c.benchmark_group("truncate");
    for (src, d, w) in [("tree(aleph1)", 5, 5), ("with_tops(tree(aleph1), all, whole_ray)", 5, 4)] {
        let e = host(src);
        for (mode, seq) in MODES {
            par::set_sequential(seq);
            g.bench_with_input(BenchmarkId::new(mode, format!("{src} ({d},{w})")), &e, |b, e| {
                b.iter(|| truncate(e, d, w).len())
            });
        }
    }
    par::set_sequential(false);
    g.finish();
}

fn ranks(c: &mut Criterion) {
    let mut g = c.benchmark_group("rank");
    let sos = host("join_vertex(copies(aleph0, star(aleph0)), root, centers(.))");
    let tops = host("with_tops(tree(aleph1), all, whole_ray)");
    for (mode, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new(mode, "schmidt star_of_stars"), |b| {
            b.iter(|| ideal_rank(&sos, &Ideal::FiniteSets).short())
        });
        g.bench_function(BenchmarkId::new(mode, "normal withtops"), |b| b.iter(|| normal_rank(&tops).is_ok()));
    }
    par::set_sequential(false);
    g.finish();
}

fn tree_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("efst_sweep");
    g.sample_size(10);
    let e = host("with_tops(tree(aleph1), all, whole_ray)");
    let desc = end_faithful_spanning_tree(&e).expect("efst");
    let opts = CheckOpts { spanning: true, normal: false, covers: None };
    for (mode, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new(mode, "withtops d,w<=4"), |b| {
            b.iter(|| {
                let mut ok = true;
                for d in 1..=4 {
                    for w in 1..=4 {
                        ok &= check_on_truncation(&desc, d, w, &opts).iter().all(|c| c.ok);
                        ok &= reflects_check(&desc, d, w).iter().all(|c| c.ok);
                    }
                }
                assert!(ok);
            })
        });
    }
    par::set_sequential(false);
    g.finish();
}

criterion_group!(benches, truncation, ranks, tree_sweep);
criterion_main!(benches);
