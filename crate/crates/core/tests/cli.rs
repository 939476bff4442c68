use std::path::Path;
use std::process::{Command, Output};

fn regionkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regionkit")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) {
    let out = regionkit(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn full_workflow_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.to_str().unwrap();
    ok(&["synth", "--seed", "2", "--days", "21", "--out", out]);
    ok(&["segment", "--geometry", &p(d, "geometry.geojson"), "--out", out]);
    ok(&[
        "optimize",
        "--elements",
        &p(d, "elements.geojson"),
        "--records",
        &p(d, "records.csv"),
        "--geometry",
        &p(d, "geometry.geojson"),
        "--w",
        "0.5",
        "--eps",
        "2000",
        "--out",
        out,
    ]);
    ok(&[
        "evaluate",
        "--regions",
        &p(d, "regions.geojson"),
        "--records",
        &p(d, "records.csv"),
        "--geometry",
        &p(d, "geometry.geojson"),
        "--out",
        out,
    ]);
    ok(&["export", "--regions", &p(d, "regions.geojson"), "--out", out]);
    ok(&["scalability", "--sizes", "100", "--eps", "500", "--out", out]);
    for name in [
        "geometry.geojson",
        "records.csv",
        "elements.geojson",
        "regions.geojson",
        "regions_specificity.geojson",
        "pareto.json",
        "trace.csv",
        "metrics.csv",
        "metrics_grid.csv",
        "comparison.csv",
        "regions_lookup.geojson",
        "scalability.csv",
    ] {
        let text = std::fs::read_to_string(d.join(name)).unwrap();
        assert!(!text.is_empty(), "{name} is empty");
    }
    let comparison = std::fs::read_to_string(d.join("comparison.csv")).unwrap();
    assert_eq!(comparison.lines().count(), 3);
    let trace = std::fs::read_to_string(d.join("trace.csv")).unwrap();
    assert!(trace.starts_with("epoch,"));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), "w = 2.0\n").unwrap();
    let out = regionkit(&["scalability", "--config", &p(d, "bad.toml"), "--sizes", "100", "--out", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    ok(&["scalability", "--config", &p(d, "bad.toml"), "--w", "0.5", "--sizes", "100", "--eps", "200", "--out", d.to_str().unwrap()]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = regionkit(&["segment", "--geometry", "/nonexistent/geometry.geojson", "--out", out]);
    assert_eq!(missing.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
    let bad_w = regionkit(&["scalability", "--w", "3", "--out", out]);
    assert_eq!(bad_w.status.code(), Some(2));
    let usage = regionkit(&["optimize"]);
    assert!(!usage.status.success());
}
