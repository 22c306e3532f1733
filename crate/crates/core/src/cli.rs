//! Command-line front end. `run` returns the exit code and the report body so
//! that tests can drive it in-process.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dsl::{export, parse, truncate, vertices_card, Cardinality, GraphExpr, Verdict};
use crate::ends::end_space;
use crate::rank::{
    ideal_rank, normal_rank, rank_to_decomposition, schmidt_rank, Ideal, RankResult, TreeDecomposition,
};
use crate::spanning::{
    check_on_truncation, end_faithful_spanning_tree, is_rayless, normal_spanning_tree, rayless_spanning_tree,
    reflects_check, tree_edges, CheckOpts, SpanError, TreeDescriptor, TreeKind,
};

pub const EXIT_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_NOT_POSSIBLE: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

/// Hard cap on sweep bounds; `GRAPHRANK_MAX_SWEEP` may only lower it.
pub const HARD_SWEEP_CAP: u64 = 8;

#[derive(Debug, Parser)]
#[command(name = "graphrank", version, about = "Ranks and spanning trees of finitely presented infinite graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Largest truncation depth in sweeps.
    #[arg(long, global = true, default_value_t = 4)]
    pub d: u64,
    /// Largest truncation width in sweeps.
    #[arg(long, global = true, default_value_t = 4)]
    pub w: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Connectivity, ends and the three ranks.
    Analyze { input: PathBuf },
    /// Build a spanning tree or tree-decomposition artifact.
    Build { target: Target, input: PathBuf },
    /// Check an artifact against its host over the truncation sweep.
    Verify { input: PathBuf, artifact: PathBuf },
    /// Truncation at depth `--d`, width `--w`, optionally with a tree overlay.
    Export {
        input: PathBuf,
        #[arg(long)]
        tree: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Nst,
    Efst,
    Rayless,
    Tdecomp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "artifact", rename_all = "snake_case")]
pub enum Artifact {
    Tree(TreeDescriptor),
    Decomposition(TreeDecomposition),
}

impl Artifact {
    fn host(&self) -> &GraphExpr {
        match self {
            Artifact::Tree(t) => &t.host,
            Artifact::Decomposition(td) => &td.host,
        }
    }
}

pub struct Outcome {
    pub code: i32,
    pub body: String,
}

fn outcome(code: i32, v: &Value) -> Outcome {
    Outcome { code, body: serde_json::to_string_pretty(v).expect("json") + "\n" }
}

fn failure(code: i32, status: &str, message: impl ToString) -> Outcome {
    outcome(code, &json!({ "schema": 1, "status": status, "message": message.to_string() }))
}

/// Sweep cap from `GRAPHRANK_MAX_SWEEP`, never above the hard cap.
pub fn sweep_cap() -> u64 {
    std::env::var("GRAPHRANK_MAX_SWEEP")
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .map_or(HARD_SWEEP_CAP, |c| c.clamp(1, HARD_SWEEP_CAP))
}

fn read_graph(path: &Path) -> Result<GraphExpr, Outcome> {
    let src = std::fs::read_to_string(path).map_err(|e| failure(EXIT_PARSE, "io_error", format!("{}: {e}", path.display())))?;
    parse(src.trim()).map_err(|e| failure(EXIT_PARSE, "parse_error", e))
}

fn rank_json(r: &RankResult) -> Value {
    serde_json::to_value(r).expect("json")
}

fn analyze(e: &GraphExpr) -> Value {
    let ends = match end_space(e) {
        Ok(s) => s
            .classes
            .iter()
            .map(|c| json!({ "id": c.id, "count": c.count.to_string(), "dominated": c.dominated }))
            .collect(),
        Err(err) => vec![json!({ "error": err.to_string() })],
    };
    let normal = match normal_rank(e) {
        Ok(r) => rank_json(&r),
        Err(err) => json!({ "result": "error", "message": err.to_string() }),
    };
    let schmidt = match schmidt_rank(e) {
        Ok(r) => rank_json(&r),
        Err(err) => json!({ "result": "error", "message": err.to_string() }),
    };
    let mut report = BTreeMap::new();
    report.insert("schema", json!(1));
    report.insert("expr", json!(e.to_string()));
    report.insert("connected", json!(crate::dsl::is_connected(e)));
    report.insert("vertices", json!(vertices_card(e).to_string()));
    report.insert("ends", Value::Array(ends));
    report.insert("normal_rank", normal);
    report.insert("aleph1_rank", rank_json(&ideal_rank(e, &Ideal::SetsBelow(Cardinality::Aleph1))));
    report.insert("schmidt_rank", schmidt);
    serde_json::to_value(report).expect("json")
}

fn analyze_text(v: &Value) -> String {
    let short = |r: &Value| match r["result"].as_str() {
        Some("ranked") => r["rank"].as_str().unwrap_or("?").to_string(),
        Some("no_rank") => "no rank".into(),
        Some("error") => format!("error: {}", r["message"].as_str().unwrap_or("")),
        _ => "unknown".into(),
    };
    let mut s = format!("graph: {}\n", v["expr"].as_str().unwrap_or(""));
    let text = |x: &Value| x.as_str().unwrap_or("?").to_string();
    s += &format!("connected: {}\nvertices: {}\n", text(&v["connected"]), text(&v["vertices"]));
    for c in v["ends"].as_array().into_iter().flatten() {
        s += &format!("end {} ×{} dominated: {}\n", text(&c["id"]), text(&c["count"]), text(&c["dominated"]));
    }
    s += &format!("normal rank: {}\n", short(&v["normal_rank"]));
    s += &format!("aleph1 rank: {}\n", short(&v["aleph1_rank"]));
    s += &format!("schmidt rank: {}\n", short(&v["schmidt_rank"]));
    s
}

fn span_failure(err: SpanError) -> Outcome {
    let status = match &err {
        SpanError::NotAllDominated(_) => "not_all_dominated",
        SpanError::Nonexistent(_) => "none",
        SpanError::NoRank(_) => "no_rank",
        SpanError::Unknown(_) => "unknown",
        SpanError::Dsl(_) | SpanError::Invalid(_) => return failure(EXIT_INVARIANT, "invariant", err),
    };
    failure(EXIT_NOT_POSSIBLE, status, err)
}

fn build(e: &GraphExpr, target: Target) -> Result<Artifact, Outcome> {
    let tree = match target {
        Target::Nst => normal_spanning_tree(e).map(|(t, _)| t),
        Target::Efst => end_faithful_spanning_tree(e),
        Target::Rayless => rayless_spanning_tree(e),
        Target::Tdecomp => {
            // finite parts when the host is rayless, else normally spanned parts
            let (ideal, r) = match schmidt_rank(e) {
                Ok(r @ RankResult::Ranked { .. }) => (Ideal::FiniteSets, r),
                _ => match normal_rank(e) {
                    Ok(r) => (Ideal::NormallySpanned, r),
                    Err(err) => return Err(failure(EXIT_NOT_POSSIBLE, "no_rank", err)),
                },
            };
            let Some(w) = r.witness() else {
                return Err(failure(EXIT_NOT_POSSIBLE, "no_rank", format!("normal rank: {}", r.short())));
            };
            let td = rank_to_decomposition(e, &ideal, w).map_err(|err| failure(EXIT_INVARIANT, "invariant", err))?;
            return Ok(Artifact::Decomposition(td));
        }
    };
    tree.map(Artifact::Tree).map_err(span_failure)
}

fn sweep(dmax: u64, wmax: u64) -> Vec<(u64, u64)> {
    (1..=dmax).flat_map(|d| (1..=wmax).map(move |w| (d, w))).collect()
}

fn verify(a: &Artifact, dmax: u64, wmax: u64) -> (bool, Value) {
    let mut cells = Vec::new();
    let mut all = true;
    let mut global = Vec::new();
    match a {
        Artifact::Tree(t) => {
            if t.kind == TreeKind::Rayless {
                let ok = is_rayless(&t.rule, &t.host) == Verdict::Yes;
                all &= ok;
                global.push(json!({ "name": "rayless", "ok": ok }));
            }
            let opts = CheckOpts { spanning: t.spans(), normal: t.kind == TreeKind::NormalSpanning, covers: None };
            let results = crate::par::map(&sweep(dmax, wmax), |&(d, w)| {
                let mut checks = check_on_truncation(t, d, w, &opts);
                if t.kind == TreeKind::EndFaithful {
                    checks.extend(reflects_check(t, d, w));
                }
                (d, w, checks)
            });
            for (d, w, checks) in results {
                all &= checks.iter().all(|c| c.ok);
                cells.push(json!({ "d": d, "w": w, "checks": checks }));
            }
        }
        Artifact::Decomposition(td) => {
            let ok = end_space(&td.shape).map(|s| s.is_empty()).unwrap_or(false);
            all &= ok;
            global.push(json!({ "name": "rayless", "ok": ok }));
            let results = crate::par::map(&sweep(dmax, wmax), |&(d, w)| (d, w, td.check(d, w)));
            for (d, w, r) in results {
                all &= r.is_ok();
                let failure = r.err().map(|f| json!({ "axiom": f.axiom, "witness": f.witness }));
                cells.push(json!({ "d": d, "w": w, "ok": failure.is_none(), "failure": failure }));
            }
        }
    }
    let report = json!({
        "schema": 1,
        "status": if all { "pass" } else { "fail" },
        "global": global,
        "sweep": { "d": dmax, "w": wmax },
        "cells": cells,
    });
    (all, report)
}

pub fn run(cli: &Cli) -> Outcome {
    let cap = sweep_cap();
    let (dmax, wmax) = (cli.d.clamp(1, cap), cli.w.clamp(1, cap));
    match &cli.command {
        Command::Analyze { input } => {
            let e = match read_graph(input) {
                Ok(e) => e,
                Err(o) => return o,
            };
            let v = analyze(&e);
            match cli.format {
                Format::Text => Outcome { code: 0, body: analyze_text(&v) },
                _ => outcome(0, &v),
            }
        }
        Command::Build { target, input } => {
            let e = match read_graph(input) {
                Ok(e) => e,
                Err(o) => return o,
            };
            match build(&e, *target) {
                Ok(a) => outcome(0, &serde_json::to_value(&a).expect("json")),
                Err(o) => o,
            }
        }
        Command::Verify { input, artifact } => {
            let e = match read_graph(input) {
                Ok(e) => e,
                Err(o) => return o,
            };
            let a: Artifact = match std::fs::read_to_string(artifact).map_err(|e| e.to_string()).and_then(|s| {
                serde_json::from_str(&s).map_err(|e| e.to_string())
            }) {
                Ok(a) => a,
                Err(err) => return failure(EXIT_MISMATCH, "bad_artifact", err),
            };
            if *a.host() != e {
                return failure(EXIT_MISMATCH, "mismatch", format!("artifact is for `{}`, not `{e}`", a.host()));
            }
            let (ok, report) = verify(&a, dmax, wmax);
            outcome(if ok { 0 } else { EXIT_FAILED }, &report)
        }
        Command::Export { input, tree } => {
            let e = match read_graph(input) {
                Ok(e) => e,
                Err(o) => return o,
            };
            let desc = match tree {
                None => None,
                Some(p) => match std::fs::read_to_string(p).ok().and_then(|s| serde_json::from_str::<Artifact>(&s).ok()) {
                    Some(Artifact::Tree(t)) if t.host == e => Some(t),
                    _ => return failure(EXIT_MISMATCH, "mismatch", format!("{} is not a tree of `{e}`", p.display())),
                },
            };
            let t = truncate(&e, dmax, wmax);
            let edges = desc.as_ref().map(|d| tree_edges(d, &t));
            match cli.format {
                Format::Dot | Format::Text => Outcome { code: 0, body: export::to_dot(&t, edges.as_deref()) },
                Format::Json => outcome(0, &serde_json::to_value(export::to_json_doc(&t, edges.as_deref())).expect("json")),
            }
        }
    }
}
