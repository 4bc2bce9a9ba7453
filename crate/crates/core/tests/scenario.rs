use std::path::{Path, PathBuf};
use std::process::Command;

use hetclass::graph::{is_eulerian, strongly_connected, HeteroclinicGraph};
use hetclass::scenario::{
    canonical_graph_json, load_graph_spec, load_scenario, parse_scenario, run, write_output, Analysis, Scenario,
    ScenarioError, Status,
};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn result(s: &Scenario, i: usize) -> Value {
    let out = run(s);
    let o = &out.report.results[i];
    assert_eq!(o.status, Status::Ok, "{:?}", o.error);
    o.result.clone().unwrap()
}

#[test]
fn minimal_scenario_loads() {
    let s = parse_scenario(
        r#"{"matrices": {"A": [[[2, 1], [1, 1]]]}, "analyses": [{"kind": "analyze_cocycle", "matrix": "A"}]}"#,
    )
    .unwrap();
    assert_eq!(s.matrices.len(), 1);
    assert_eq!(s.analyses.len(), 1);
    assert_eq!(s.digest.len(), 64);
}

#[test]
fn parse_errors_carry_position() {
    let err = parse_scenario("{\n  \"matrices\": {\n    \"A\": [[[1, 0], [0, 2]]],\n  }\n}").unwrap_err();
    match err {
        ScenarioError::Parse { line, column, .. } => assert_eq!((line, column), (4, 3)),
        other => panic!("{other:?}"),
    }
    assert_eq!(err_code(r#"{"bogus": 1}"#), 3);
}

fn err_code(text: &str) -> i32 {
    parse_scenario(text).unwrap_err().exit_code()
}

#[test]
fn dangling_edge_is_named() {
    let text = r#"{"graph": {"dim": 2, "nodes": [{"id": "P", "index": 1}],
        "edges": [{"id": "lost", "src": "P", "dst": "Q"}]}}"#;
    let err = parse_scenario(text).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let msg = err.to_string();
    assert!(msg.contains("edge `lost`") && msg.contains("`Q`"), "{msg}");
}

#[test]
fn invariant_violations_name_type_and_field() {
    let singular = r#"{"matrices": {"S": [[[1, 2], [2, 4]]]}}"#;
    let msg = parse_scenario(singular).unwrap_err().to_string();
    assert!(msg.contains("matrix `S` (MatrixWord)"), "{msg}");

    let bad_tangency = r#"{"graph": {"dim": 2, "nodes": [{"id": "P", "index": 1}],
        "edges": [{"id": "h", "src": "P", "dst": "P", "tangency": {"i_alpha": 1, "i_omega": 1, "d_t": 2}}]}}"#;
    let msg = parse_scenario(bad_tangency).unwrap_err().to_string();
    assert!(msg.contains("edge `h` (HeteroclinicEdge)") && msg.contains("d_T <="), "{msg}");

    let unknown_matrix = r#"{"graph": {"dim": 2, "nodes": [{"id": "P", "index": 1, "matrix": "M"}]}}"#;
    assert!(parse_scenario(unknown_matrix).unwrap_err().to_string().contains("unknown matrix `M`"));

    let wrong_index = r#"{"matrices": {"M": [[[0.5, 0], [0, 0.25]]]},
        "graph": {"dim": 2, "nodes": [{"id": "P", "index": 1, "matrix": "M"}]}}"#;
    assert!(parse_scenario(wrong_index).unwrap_err().to_string().contains("node `P` (BasicSetNode)"));

    let bad_map = r#"{"maps": {"h": {"kind": "henon", "a": 1.4, "b": 0}}}"#;
    assert!(parse_scenario(bad_map).unwrap_err().to_string().contains("map `h` (MapModel)"));
}

#[test]
fn analysis_references_are_checked_eagerly() {
    let cases = [
        (r#"{"analyses": [{"kind": "analyze_cocycle", "matrix": "nope"}]}"#, "unknown matrix `nope`"),
        (r#"{"analyses": [{"kind": "graph_check"}]}"#, "needs a graph"),
        (
            r#"{"analyses": [{"kind": "polytope", "sigma": {"exponents": [-1, 1]}, "pinned": [0, 2], "samples": 3}]}"#,
            "no seed",
        ),
        (
            r#"{"analyses": [{"kind": "find_periodic", "map": "m", "period": 1, "lo": [0], "hi": [1]}]}"#,
            "unknown map `m`",
        ),
    ];
    for (text, needle) in cases {
        let err = parse_scenario(text).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains(needle), "{err}");
    }
}

#[test]
fn counterexample_fixture() {
    let s = load_scenario(fixture("non_eulerian")).unwrap();
    let g = s.graph.as_ref().unwrap();
    assert!(strongly_connected(g));
    assert!(!is_eulerian(g));
    let r = result(&s, 0);
    assert_eq!(r["eulerian"], false);
    assert_eq!(r["strongly_connected"], true);
    assert_eq!(r["mechanical_indices"]["P"], serde_json::json!([1, 2]));
    for i in [1, 2] {
        let r = result(&s, i);
        let e: Vec<f64> = serde_json::from_value(r["exponents"].clone()).unwrap();
        assert!(e[0] + e[1] < 0.0 && e[1] + e[2] > 0.0);
        assert_eq!(r["sectional_dissipativity"]["forward"], false);
        assert_eq!(r["sectional_dissipativity"]["backward"], false);
    }
}

#[test]
fn tangency_fixture_graph_check() {
    let s = load_scenario(fixture("tangency_loop")).unwrap();
    let r = result(&s, 0);
    assert_eq!(r["eulerian"], true);
    assert_eq!(r["strongly_connected"], true);
    assert_eq!(result(&s, 2)["indices"], serde_json::json!([1, 2]));
    let cycle = load_scenario(fixture("hetero_cycle")).unwrap();
    assert_eq!(result(&cycle, 0)["eulerian"], true);
    let three = load_scenario(fixture("three_cycle")).unwrap();
    assert_eq!(result(&three, 0)["eulerian_circuit"], serde_json::json!(["e12", "e23", "e31"]));
}

#[test]
fn every_fixture_runs_cleanly_and_deterministically() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut names: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    assert!(names.len() >= 9);
    for path in names {
        let s = load_scenario(&path).unwrap();
        let a = run(&s);
        assert!(!a.report.has_errors(), "{}: {}", path.display(), a.report.to_json());
        let b = run(&load_scenario(&path).unwrap());
        assert_eq!(a.report.to_json(), b.report.to_json());
        assert_eq!(a.artifacts, b.artifacts);
    }
}

#[test]
fn rewritten_graph_reloads_identically() {
    let s = load_scenario(fixture("gathering")).unwrap();
    let out = run(&s);
    let dir = tempfile::tempdir().unwrap();
    write_output(&out, dir.path()).unwrap();
    let artifact = &out.report.results[1].artifacts[0];
    let path = dir.path().join(artifact);
    let spec = load_graph_spec(&path).unwrap();
    // the canonical file is itself a valid graph section of a scenario
    let data = hetclass::scenario::ScenarioData {
        graph: Some(spec),
        ..Default::default()
    };
    let reloaded = Scenario::from_data(data, String::new()).unwrap();
    let g = reloaded.graph.unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(canonical_graph_json(&g), text);
    let direct: HeteroclinicGraph = serde_json::from_str(&text).unwrap();
    assert_eq!(direct, g);
    assert_eq!(g.edges().len(), 2);
    let gathered = g.edge("gather1").unwrap();
    assert_eq!(gathered.obstructions(5).unwrap().into_iter().collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(g.node("K2").unwrap().declared_obstructions.contains(&4));
}

#[test]
fn reports_embed_digest_and_requests() {
    let path = fixture("polytope_d5");
    let s = load_scenario(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let r = run(&s).report;
    assert_eq!(r.input_digest, hetclass::scenario::digest(&bytes));
    assert_eq!(r.tool, "hetclass");
    assert_eq!(r.results[0].request["kind"], "polytope");
    assert!(matches!(s.analyses[0], Analysis::Polytope { .. }));
}

#[test]
fn failing_analysis_is_recorded_not_fatal() {
    let s = parse_scenario(
        r#"{"matrices": {"A": [[[2, 1], [1, 1]]]}, "analyses": [
            {"kind": "analyze_cocycle", "matrix": "A", "splitting": [2]},
            {"kind": "analyze_cocycle", "matrix": "A"}]}"#,
    )
    .unwrap();
    let r = run(&s).report;
    assert!(r.has_errors());
    assert_eq!(r.results[0].status, Status::Error);
    assert!(r.results[0].error.as_ref().unwrap().contains("invalid splitting"));
    assert_eq!(r.results[1].status, Status::Ok);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hetclass"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["run", "--scenario"])
        .arg(fixture("tangency_loop"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("report.json").exists());
    assert!(dir.path().join("03_rewrite_graph.json").exists());

    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let parse = write("parse.json", "{ \"matrices\": ");
    assert_eq!(cli().args(["run", "--scenario"]).arg(&parse).output().unwrap().status.code(), Some(3));
    let invalid = write("invalid.json", r#"{"analyses": [{"kind": "graph_check"}]}"#);
    assert_eq!(cli().args(["run", "--scenario"]).arg(&invalid).output().unwrap().status.code(), Some(4));
    let failing = write(
        "failing.json",
        r#"{"matrices": {"A": [[[2, 1], [1, 1]]]}, "analyses": [{"kind": "analyze_cocycle", "matrix": "A", "splitting": [2]}]}"#,
    );
    assert_eq!(cli().args(["run", "--scenario"]).arg(&failing).output().unwrap().status.code(), Some(5));
    let missing = dir.path().join("missing.json");
    assert_eq!(cli().args(["run", "--scenario"]).arg(&missing).output().unwrap().status.code(), Some(6));
}

#[test]
fn cli_subcommands_with_flags() {
    let out = cli()
        .args(["polytope", "--exponents", "-1,1", "--pinned", "0,2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["results"][0]["result"]["vertices"].as_array().unwrap().len(), 2);

    let out = cli()
        .args(["graph-check", "--scenario"])
        .arg(fixture("non_eulerian"))
        .args(["--node", "P"])
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["results"][0]["result"]["mechanical_indices"]["P"], serde_json::json!([1, 2]));

    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["trace", "--scenario"])
        .arg(fixture("henon"))
        .args(["--map", "henon", "--point", "0.63,0.19", "--length", "2", "--step", "0.01", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("00_trace_polyline.csv")).unwrap();
    assert!(csv.starts_with("x,y,arclength\n"));

    // rewrite output feeds back in through --graph
    let out = cli()
        .args(["rewrite", "--scenario"])
        .arg(fixture("gathering"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = cli()
        .args(["graph-check", "--graph"])
        .arg(dir.path().join("00_rewrite_graph.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["results"][0]["result"]["tangency_indices"]["gather1"], serde_json::json!([1, 2, 3]));

    let seeded = |seed: &str| {
        cli()
            .args(["run", "--scenario"])
            .arg(fixture("polytope_d5"))
            .args(["--seed", seed])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(seeded("3"), seeded("3"));
    assert_ne!(seeded("3"), seeded("4"));
}
