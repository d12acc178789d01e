//! End-to-end runs of the `pipcalc` binary.

use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn pipcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipcalc")).args(args).env("NO_COLOR", "1").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn may_check_separates_the_guarded_pair() {
    let v = json(&pipcalc(&["check", "--may", "a(x).a!b.0", "a(x).[x!=c]tau.a!b.0"]));
    assert_eq!(v["holds"], false);
    assert_eq!(v["relation"], "may");
    assert_eq!(v["witness"]["kind"], "characteristic-formula");
    let back = json(&pipcalc(&["check", "--may", "a(x).[x!=c]tau.a!b.0", "a(x).a!b.0"]));
    assert_eq!(back["holds"], true);
    assert!(back["witness"]["certificate"]["point"].is_array());
}

#[test]
fn success_alone_passes_with_certainty() {
    let v = json(&pipcalc(&["apply", "--test", "w1.0", "--proc", "0"]));
    assert_eq!(v["outcomes"], serde_json::json!(["1"]));
    assert_eq!(v["max"], "1");
    assert_eq!(v["min"], "1");
}

#[test]
fn vector_outcomes_follow_the_requested_order() {
    let v = json(&pipcalc(&["apply-vec", "--test", "w1.0 (+1/3) w2.0", "--proc", "0", "--omega", "w2,w1"]));
    assert_eq!(v["omega_order"], serde_json::json!(["w2", "w1"]));
    assert_eq!(v["vertices"], serde_json::json!([["2/3", "1/3"]]));
}

#[test]
fn bundled_regression_passes() {
    let out = pipcalc(&["regress"]);
    let v = json(&out);
    assert_eq!(v["failed"], 0);
}

#[test]
fn regression_mismatch_exits_with_one() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "p := a(x).0\nexpect may p 0 true").unwrap();
    let out = pipcalc(&["regress", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["failed"], 1);
}

#[test]
fn file_definitions_stand_in_for_terms() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# pair\np := a(x).a!b.0\nsuccess ok\nt := a!c.a(y).ok").unwrap();
    let path = f.path().to_str().unwrap();
    let v = json(&pipcalc(&["--file", path, "apply", "--test", "t", "--proc", "p"]));
    assert_eq!(v["outcomes"], serde_json::json!(["1"]));
    let v = json(&pipcalc(&["--file", path, "parse", "p"]));
    assert_eq!(v["free_names"], serde_json::json!(["a", "b"]));
}

#[test]
fn characteristic_formula_test_and_satisfaction() {
    let phi = json(&pipcalc(&["char-formula", "--logic", "l", "a(x).0"]));
    let formula = phi["formula"].as_str().unwrap().to_string();
    let ct = json(&pipcalc(&["char-test", &formula, "--names", "a,n0"]));
    let omega = ct["omega_order"].as_array().unwrap().len();
    assert_eq!(ct["target"].as_array().unwrap().len(), omega);
    let sat = json(&pipcalc(&["sat", "a(x).0", &formula]));
    assert_eq!(sat["structural"], "true");
    assert_eq!(sat["via_test"], true);
    let unsat = json(&pipcalc(&["sat", "0", &formula]));
    assert_eq!(unsat["via_test"], false);
}

#[test]
fn transition_graph_and_distribution() {
    let lts = json(&pipcalc(&["lts", "a(x).x!b.0"]));
    assert_eq!(lts["states"].as_array().unwrap().len(), 3);
    assert_eq!(lts["transitions"].as_array().unwrap().len(), 2);
    let d = json(&pipcalc(&["interp", "a!b.0 (+1/4) c!b.0"]));
    assert_eq!(d["distribution"][0]["weight"], "1/4");
}

#[test]
fn errors_exit_with_two() {
    for args in [
        &["parse", "a(x."][..],
        &["bogus"],
        &["check", "a(x).0", "0"],
        &["check", "--may", "w.0", "0"],
        &["apply", "--test", "w1.w2.0", "--proc", "0"],
        &["--file", "/nonexistent/terms.pi", "parse", "0"],
        &["sat", "0", "<a(x)"],
    ] {
        let out = pipcalc(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn fuzz_is_clean_and_repeatable() {
    let args = ["fuzz", "--seed", "5", "--count", "8", "--size", "6"];
    let a = pipcalc(&args);
    let v = json(&a);
    assert_eq!(v["failures"], serde_json::json!([]));
    assert_eq!(a.stdout, pipcalc(&args).stdout);
}

#[test]
fn pretty_output_is_plain_text() {
    let out = pipcalc(&["--pretty", "apply", "--test", "w1.0", "--proc", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("outcomes: [1]"), "{text}");
    assert!(!text.contains('\x1b'));
}
