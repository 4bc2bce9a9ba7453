use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use hetclass_ffi::*;

fn last_error() -> String {
    let p = hc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn cat_word() -> *mut HcMatrixWord {
    let data = [2.0, 1.0, 1.0, 1.0];
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { hc_word_new(2, 1, data.as_ptr(), &mut w) }, HcStatus::Ok);
    w
}

#[test]
fn cat_word_spectrum_and_domination() {
    let w = cat_word();
    unsafe {
        assert_eq!(hc_word_dim(w), 2);
        assert_eq!(hc_word_period(w), 1);
        let mut buf = [0.0; 2];
        let mut len = 0;
        assert_eq!(hc_word_exponents(w, buf.as_mut_ptr(), 2, &mut len), HcStatus::Ok);
        let g = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert_eq!(len, 2);
        assert!((buf[0] + g).abs() < 1e-9 && (buf[1] - g).abs() < 1e-9);

        let mut map = [0.0; 3];
        assert_eq!(hc_word_lyapunov_map(w, map.as_mut_ptr(), 3, &mut len), HcStatus::Ok);
        assert_eq!(len, 3);
        assert!(map[0] == 0.0 && (map[1] + g).abs() < 1e-9 && map[2].abs() < 1e-9);

        let (mut verdict, mut gap) = (HcVerdict::Inconclusive, 0.0);
        assert_eq!(
            hc_word_domination(w, 1, 32, 2f64.powf(0.125), &mut verdict, &mut gap),
            HcStatus::Ok
        );
        assert_eq!(verdict, HcVerdict::Dominated);
        assert!(gap > 0.0);

        let mut class = HcClass {
            kind: HcClassKind::Neutral,
            index: 0,
        };
        assert_eq!(hc_word_classify(w, 1e-9, &mut class), HcStatus::Ok);
        assert_eq!(class.kind, HcClassKind::Saddle);
        assert_eq!(class.index, 1);

        let blocks = [1usize, 1];
        let mut vh = false;
        assert_eq!(
            hc_word_volume_hyperbolic(w, blocks.as_ptr(), 2, 2f64.powf(0.125), 32, &mut vh),
            HcStatus::Ok
        );
        assert!(vh);
        hc_word_free(w);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let w = cat_word();
        let mut buf = [0.0; 1];
        let mut len = 0;
        assert_eq!(hc_word_exponents(w, buf.as_mut_ptr(), 1, &mut len), HcStatus::BufferTooSmall);
        assert_eq!(len, 2);
        assert!(last_error().contains("2 needed"));

        let (mut verdict, mut gap) = (HcVerdict::Inconclusive, 0.0);
        assert_eq!(hc_word_domination(w, 2, 32, 1.1, &mut verdict, &mut gap), HcStatus::InvalidArgument);
        assert!(last_error().contains("index 2"));
        assert_eq!(hc_word_dim(w), 2);
        hc_word_free(w);

        assert_eq!(hc_word_exponents(ptr::null(), buf.as_mut_ptr(), 1, &mut len), HcStatus::NullPointer);
        let mut out = ptr::null_mut();
        let singular = [1.0, 2.0, 2.0, 4.0];
        assert_eq!(hc_word_new(2, 1, singular.as_ptr(), &mut out), HcStatus::InvalidArgument);
        assert!(out.is_null());
        assert_eq!(hc_word_new(0, 1, singular.as_ptr(), &mut out), HcStatus::InvalidArgument);

        // success clears the message
        let w = cat_word();
        assert!(hc_last_error_message().is_null());
        hc_word_free(w);
    }
}

#[test]
fn tangency_index_arithmetic() {
    let mut buf = [0usize; 4];
    let mut len = 0;
    unsafe {
        assert_eq!(hc_tangency_indices(3, 2, 1, 1, buf.as_mut_ptr(), 4, &mut len), HcStatus::Ok);
        assert_eq!(&buf[..len], &[1, 2]);
        assert_eq!(hc_tangency_indices(2, 1, 1, 1, buf.as_mut_ptr(), 4, &mut len), HcStatus::Ok);
        assert_eq!(&buf[..len], &[1]);
        assert_eq!(hc_tangency_indices(2, 1, 1, 0, buf.as_mut_ptr(), 4, &mut len), HcStatus::InvalidArgument);
        assert!(last_error().contains("d_T >= 1"));
    }
}

const COUNTEREXAMPLE: &str = include_str!("../../core/fixtures/non_eulerian.json");

#[test]
fn graph_queries_and_round_trip() {
    let scenario: serde_json::Value = serde_json::from_str(COUNTEREXAMPLE).unwrap();
    // inline the node words so the graph section stands alone
    let mut graph = scenario["graph"].clone();
    for node in graph["nodes"].as_array_mut().unwrap() {
        let name = node["matrix"].as_str().unwrap().to_string();
        node.as_object_mut().unwrap().remove("matrix");
        node["word"] = scenario["matrices"][&name].clone();
    }
    let text = CString::new(graph.to_string()).unwrap();
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(hc_graph_from_json(text.as_ptr(), &mut g), HcStatus::Ok);
        let mut b = true;
        assert_eq!(hc_graph_is_eulerian(g, &mut b), HcStatus::Ok);
        assert!(!b);
        assert_eq!(hc_graph_strongly_connected(g, &mut b), HcStatus::Ok);
        assert!(b);
        let (mut inf, mut level) = (true, 0);
        assert_eq!(hc_graph_edge_connectivity(g, &mut inf, &mut level), HcStatus::Ok);
        assert!(!inf);
        assert_eq!(level, 1);

        let mut buf = [0usize; 3];
        let mut len = 0;
        let p = CString::new("P").unwrap();
        assert_eq!(hc_graph_mechanical_indices(g, p.as_ptr(), buf.as_mut_ptr(), 3, &mut len), HcStatus::Ok);
        assert_eq!(&buf[..len], &[1, 2]);
        let missing = CString::new("Z").unwrap();
        assert_eq!(
            hc_graph_mechanical_indices(g, missing.as_ptr(), buf.as_mut_ptr(), 3, &mut len),
            HcStatus::InvalidArgument
        );
        assert!(last_error().contains("Z"));

        let mut json = ptr::null_mut();
        assert_eq!(hc_graph_to_json(g, &mut json), HcStatus::Ok);
        let mut g2 = ptr::null_mut();
        assert_eq!(hc_graph_from_json(json, &mut g2), HcStatus::Ok);
        let mut json2 = ptr::null_mut();
        assert_eq!(hc_graph_to_json(g2, &mut json2), HcStatus::Ok);
        assert_eq!(CStr::from_ptr(json), CStr::from_ptr(json2));
        hc_string_free(json);
        hc_string_free(json2);
        hc_graph_free(g);
        hc_graph_free(g2);

        let bad = CString::new("{\"dim\": 3, \"nodes\": [").unwrap();
        let mut g3 = ptr::null_mut();
        assert_eq!(hc_graph_from_json(bad.as_ptr(), &mut g3), HcStatus::ParseError);
        let dangling = CString::new(r#"{"dim": 2, "edges": [{"id": "e", "src": "A", "dst": "B"}]}"#).unwrap();
        assert_eq!(hc_graph_from_json(dangling.as_ptr(), &mut g3), HcStatus::ValidationError);
        assert!(g3.is_null());
    }
}

#[test]
fn scenario_runs_through_the_abi() {
    let text = CString::new(COUNTEREXAMPLE).unwrap();
    unsafe {
        let mut report = ptr::null_mut();
        assert_eq!(hc_run_scenario(text.as_ptr(), &mut report), HcStatus::Ok);
        let r: serde_json::Value = serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        hc_string_free(report);
        assert_eq!(r["results"][0]["result"]["mechanical_indices"]["P"], serde_json::json!([1, 2]));

        let broken = CString::new("{\"analyses\": [}").unwrap();
        assert_eq!(hc_run_scenario(broken.as_ptr(), &mut report), HcStatus::ParseError);
        assert!(report.is_null());
        assert!(last_error().contains("line 1"));

        let failing = CString::new(
            r#"{"analyses": [{"kind": "polytope", "sigma": {"values": [0, 1, 0]}, "pinned": [0, 2]}]}"#,
        )
        .unwrap();
        assert_eq!(hc_run_scenario(failing.as_ptr(), &mut report), HcStatus::AnalysisError);
        assert!(!report.is_null());
        hc_string_free(report);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(hc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_generated_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hetclass.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["hc_word_new", "hc_graph_from_json", "hc_run_scenario", "hc_last_error_message", "HC_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let probe = std::env::temp_dir().join(format!("hetclass_header_{}.c", std::process::id()));
    std::fs::write(&probe, format!("#include \"{}\"\nint main(void) {{ return HC_STATUS_OK; }}\n", header.display()))
        .unwrap();
    // a C compiler is optional on the test host
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror"]).arg(&probe).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let _ = std::fs::remove_file(probe);
}
