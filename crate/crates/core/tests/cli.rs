mod common;

use common::{addr, catalog_reports, cli, fixture, fixture_dir};
use graphrank::cli::{Artifact, EXIT_FAILED, EXIT_MISMATCH, EXIT_NOT_POSSIBLE, EXIT_PARSE};
use graphrank::dsl::export::TruncationDoc;
use graphrank::spanning::{TreeDescriptor, TreeKind, TreeRule};
use serde_json::Value;

fn fx(name: &str) -> String {
    fixture_dir().join(format!("{name}.graph")).to_str().unwrap().to_string()
}

#[test]
fn reports_are_byte_identical_across_runs_and_modes() {
    let dir = tempfile::tempdir().unwrap();
    let first = catalog_reports(dir.path(), 2, 2);
    let second = catalog_reports(dir.path(), 2, 2);
    assert_eq!(first, second);
    graphrank::par::set_sequential(true);
    let sequential = catalog_reports(dir.path(), 2, 2);
    graphrank::par::set_sequential(false);
    assert_eq!(first, sequential);
}

#[test]
fn built_artifacts_verify() {
    let dir = tempfile::tempdir().unwrap();
    for (name, target) in [("withtops_all", "efst"), ("comb_dominated", "rayless"), ("star_of_stars", "tdecomp")] {
        let b = cli(&["build", target, &fx(name)]);
        assert_eq!(b.code, 0, "{name} {target}: {}", b.body);
        let path = dir.path().join("artifact.json");
        std::fs::write(&path, &b.body).unwrap();
        let v = cli(&["verify", &fx(name), path.to_str().unwrap(), "--d", "3", "--w", "3"]);
        assert_eq!(v.code, 0, "{name} {target}: {}", v.body);
        let report: Value = serde_json::from_str(&v.body).unwrap();
        assert_eq!(report["status"], "pass");
    }
}

#[test]
fn a_cycle_fails_acyclicity() {
    let dir = tempfile::tempdir().unwrap();
    let rule = TreeRule::Override { base: TreeRule::Structural.boxed(), entries: vec![(addr("r0"), Some(addr("r2")))] };
    let tampered = Artifact::Tree(TreeDescriptor::new(TreeKind::NormalSpanning, fixture("ray"), rule));
    let path = dir.path().join("tampered.json");
    std::fs::write(&path, serde_json::to_string(&tampered).unwrap()).unwrap();
    let v = cli(&["verify", &fx("ray"), path.to_str().unwrap(), "--d", "4", "--w", "1"]);
    assert_eq!(v.code, EXIT_FAILED);
    let report: Value = serde_json::from_str(&v.body).unwrap();
    let acyclic_failures = report["cells"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|c| c["checks"].as_array().unwrap())
        .filter(|c| c["name"] == "acyclic" && c["ok"] == false)
        .count();
    assert!(acyclic_failures > 0, "{}", v.body);
}

#[test]
fn artifacts_for_another_host_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let b = cli(&["build", "nst", &fx("ray")]);
    let path = dir.path().join("ray.json");
    std::fs::write(&path, &b.body).unwrap();
    assert_eq!(cli(&["verify", &fx("comb1"), path.to_str().unwrap()]).code, EXIT_MISMATCH);
    std::fs::write(&path, "{not json").unwrap();
    assert_eq!(cli(&["verify", &fx("ray"), path.to_str().unwrap()]).code, EXIT_MISMATCH);
}

#[test]
fn exit_codes_for_bad_input_and_impossible_builds() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.graph");
    std::fs::write(&bad, "ray(").unwrap();
    assert_eq!(cli(&["analyze", bad.to_str().unwrap()]).code, EXIT_PARSE);
    assert_eq!(cli(&["build", "nst", &fx("k_aleph1")]).code, EXIT_NOT_POSSIBLE);
    assert_eq!(cli(&["build", "nst", &fx("withtops_all")]).code, EXIT_NOT_POSSIBLE);
    let r = cli(&["build", "rayless", &fx("ray")]);
    assert_eq!(r.code, EXIT_NOT_POSSIBLE);
    assert!(r.body.contains("dominated"), "{}", r.body);
}

#[test]
fn export_of_a_ray_is_a_path() {
    let out = cli(&["export", &fx("ray"), "--d", "5", "--w", "1"]);
    let doc: TruncationDoc = serde_json::from_str(&out.body).unwrap();
    assert_eq!(doc.vertices.len(), 5);
    assert_eq!(doc.edges.len(), 4);
}

#[test]
fn export_of_a_clique_as_dot() {
    let dir = tempfile::tempdir().unwrap();
    let k6 = dir.path().join("k6.graph");
    std::fs::write(&k6, "complete(6)").unwrap();
    let out = cli(&["export", k6.to_str().unwrap(), "--format", "dot", "--d", "6", "--w", "6"]);
    assert_eq!(out.code, 0);
    assert!(out.body.starts_with("graph"), "{}", out.body);
    assert_eq!(out.body.matches(" -- ").count(), 15, "{}", out.body);
}

#[test]
fn export_overlays_a_tree() {
    let dir = tempfile::tempdir().unwrap();
    let b = cli(&["build", "efst", &fx("withtops_all")]);
    let path = dir.path().join("efst.json");
    std::fs::write(&path, &b.body).unwrap();
    let out = cli(&["export", &fx("withtops_all"), "--tree", path.to_str().unwrap(), "--d", "3", "--w", "2"]);
    let doc: TruncationDoc = serde_json::from_str(&out.body).unwrap();
    let tree = doc.tree_edges.expect("overlay");
    assert_eq!(tree.len(), doc.vertices.len() - 1);
    assert!(tree.iter().all(|e| doc.edges.contains(e) || doc.edges.contains(&(e.1, e.0))));
}
