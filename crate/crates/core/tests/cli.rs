mod common;

use std::path::PathBuf;
use std::process::Command;

use common::schema;
use dtcausal::cli::model::parse_model;
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models").join(name).display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dtcausal")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let (code, out, err) = run(&a);
    let v: Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}\n{err}"));
    (code, v)
}

fn report_schema() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn charlie_identification() {
    let (code, out, _) = run(&["identify", "--model", &fixture("charlie.cm"), "--query", "P(L=1|do(E=1))"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next().unwrap(), "sum_a[ P(L=1|A=a) * P(A=a|E=1) ]");
}

#[test]
fn identification_check_agrees_with_do_probability() {
    let (code, out, _) =
        run(&["identify", "--model", &fixture("charlie.cm"), "--query", "P(L=1 | do(E=1))", "--check"]);
    assert_eq!(code, 0);
    assert!(out.contains("consistent: true"));
    // μ_e(l) = Σ_a μ(l|a) μ(a|e) with the fixture tables: 0.1*0.3 + 0.75*0.7.
    let (_, v) = run_json(&["eval", "--model", &fixture("charlie.cm"), "--query", "P(L=1 | do(E=1))"]);
    assert!((v["result"]["value"].as_f64().unwrap() - (0.1 * 0.3 + 0.75 * 0.7)).abs() < 1e-12);
}

#[test]
fn blake_passes_every_axiom() {
    let (code, out, _) = run(&["axioms", "--model", &fixture("blake.cm")]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("axiom 4: pass"));
    assert!(out.trim_end().ends_with("all checks pass"));
}

#[test]
fn dsep_parents_screen() {
    let (code, out, _) = run(&["dsep", "--model", &fixture("fig7.cm"), "--sets", "i;a,b;w,j"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "d-separated: true");
    let (code, out, _) = run(&["dsep", "--model", &fixture("fig7.cm"), "--sets", "i;a,b;w"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "d-separated: false");
}

#[test]
fn checked_failures_exit_1() {
    assert_eq!(run(&["discover", "--model", &fixture("cyclic.cm")]).0, 1);
    let (code, out, _) = run(&["axioms", "--model", &fixture("cyclic.cm")]);
    assert_eq!(code, 1);
    assert!(out.contains("axiom 2: FAIL"));
    let (code, out, _) = run(&["axioms", "--model", &fixture("mismatched.cm")]);
    assert_eq!(code, 1);
    assert!(out.contains("axiom 6: FAIL"), "{out}");
    assert_eq!(run(&["represent", "--model", &fixture("mismatched.cm")]).0, 1);
    assert_eq!(run(&["export-dot", "--model", &fixture("cyclic.cm"), "--causal"]).0, 1);
}

#[test]
fn family_level_representation() {
    let (code, out, _) = run(&["represent", "--model", &fixture("eq1.cm")]);
    assert_eq!(code, 0);
    assert!(out.contains("represents: true"));
    assert!(out.contains("causal graph equals model graph: true"));
}

#[test]
fn malformed_files_exit_2_with_positions() {
    let cases = [
        ("malformed/row_sum.cm", "10:3:", "sums to"),
        ("malformed/unknown_var.cm", "5:11:", "unknown variable `Z`"),
        ("malformed/syntax.cm", "3:7:", "expected `:`"),
        ("malformed/cycle.cm", "6:1:", "cycle"),
        ("malformed/missing_policy.cm", "7:1:", "no belief block for do(X=1)"),
    ];
    for (file, pos, msg) in cases {
        let path = fixture(file);
        let (code, out, err) = run(&["validate", "--model", &path]);
        assert_eq!(code, 2, "{file}");
        assert!(out.is_empty());
        assert!(err.contains(&format!("{path}:{pos}")), "{file}: {err}");
        assert!(err.contains(msg), "{file}: {err}");
        let (code, v) = run_json(&["validate", "--model", &path]);
        assert_eq!(code, 2);
        assert_eq!(v["error"]["kind"], "parse");
        assert!(v["error"]["line"].as_u64().unwrap() >= 1);
        schema::validate(&report_schema(), &v).unwrap();
    }
}

#[test]
fn malformed_queries_exit_2_with_positions() {
    let (code, _, err) = run(&["identify", "--model", &fixture("charlie.cm"), "--query", "P(L=1 | do(L=0))"]);
    assert_eq!(code, 2);
    assert!(err.contains("--query:1:12:"), "{err}");
    let (code, _, err) = run(&["eval", "--model", &fixture("charlie.cm"), "--query", "P(L=1 | do(E=1)"]);
    assert_eq!(code, 2);
    assert!(err.contains("--query:1:16:"), "{err}");
    let (code, _, err) = run(&["dsep", "--model", &fixture("charlie.cm"), "--sets", "L;Q;"]);
    assert_eq!(code, 2);
    assert!(err.contains("--sets:1:3:"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).0, 2);
    assert_eq!(run(&["identify", "--model", &fixture("charlie.cm")]).0, 2);
    assert_eq!(run(&["axioms", "--model", &fixture("blake.cm"), "--format", "yaml"]).0, 2);
    assert_eq!(run(&["axioms", "--model", &fixture("fig10.cm")]).0, 2);
    assert_eq!(run(&["axioms", "--model", &fixture("fig10.cm"), "--seed", "4"]).0, 0);
    assert_eq!(run(&["axioms", "--model", &fixture("blake.cm"), "--tol", "-1"]).0, 2);
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn dot_export() {
    let (code, out, _) = run(&["export-dot", "--model", &fixture("fig10.cm")]);
    assert_eq!(code, 0);
    assert_eq!(out, "digraph {\n  I;\n  J0;\n  J1;\n  K;\n  J0 -> I;\n  J1 -> I;\n  J1 -> K;\n  K -> J0;\n}\n");
    let (_, model, _) = run(&["export-dot", "--model", &fixture("charlie.cm")]);
    let (_, causal, _) = run(&["export-dot", "--model", &fixture("charlie.cm"), "--causal"]);
    assert_eq!(model, causal);
}

#[test]
fn json_reports_validate_and_match_text() {
    let s = report_schema();
    let runs: Vec<Vec<String>> = vec![
        vec!["validate".into(), "--model".into(), fixture("cyclic.cm")],
        vec!["validate".into(), "--model".into(), fixture("charlie.cm")],
        vec!["dsep".into(), "--model".into(), fixture("fig7.cm"), "--sets".into(), "i;a,b;w,j".into()],
        vec!["axioms".into(), "--model".into(), fixture("blake.cm")],
        vec!["axioms".into(), "--model".into(), fixture("cyclic.cm")],
        vec!["axioms".into(), "--model".into(), fixture("mismatched.cm")],
        vec!["discover".into(), "--model".into(), fixture("blake.cm")],
        vec!["discover".into(), "--model".into(), fixture("cyclic.cm")],
        vec!["represent".into(), "--model".into(), fixture("eq1.cm")],
        vec!["represent".into(), "--model".into(), fixture("mismatched.cm")],
        vec!["identify".into(), "--model".into(), fixture("charlie.cm"), "--query".into(), "P(L=1|do(E=1))".into(), "--check".into()],
        vec!["identify".into(), "--model".into(), fixture("blake.cm"), "--query".into(), "P(L=0|do(A=1,E=0))".into()],
        vec!["identify".into(), "--model".into(), fixture("fig9.cm"), "--query".into(), "P(C=1|do(A=0))".into(), "--depth".into(), "0".into()],
        vec!["eval".into(), "--model".into(), fixture("cyclic.cm"), "--query".into(), "P(Y=1|do(X=0))".into()],
        vec!["export-dot".into(), "--model".into(), fixture("blake.cm"), "--causal".into()],
        vec!["export-dot".into(), "--model".into(), fixture("cyclic.cm"), "--causal".into()],
        vec!["eval".into(), "--model".into(), fixture("charlie.cm"), "--query".into(), "P(L=1|do(L=0))".into()],
    ];
    for args in runs {
        let a: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        let (text_code, _, _) = run(&a);
        let (json_code, v) = run_json(&a);
        assert_eq!(text_code, json_code, "{a:?}");
        schema::validate(&s, &v).unwrap_or_else(|e| panic!("{a:?}: {e}\n{v:#}"));
        assert_eq!(v["ok"], Value::Bool(json_code == 0), "{a:?}");
    }
}

#[test]
fn not_identified_within_budget_exits_1() {
    let (code, v) =
        run_json(&["identify", "--model", &fixture("fig9.cm"), "--query", "P(C=1|do(A=0))", "--depth", "0"]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["identified"], false);
}

#[test]
fn fixtures_round_trip_through_the_printer() {
    for name in ["charlie.cm", "blake.cm", "fig7.cm", "fig9.cm", "fig10.cm", "eq1.cm", "cyclic.cm", "mismatched.cm"] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let m = parse_model(&text).unwrap();
        let printed = m.print();
        assert_eq!(parse_model(&printed).unwrap(), m, "{name}");
        assert_eq!(parse_model(&printed).unwrap().print(), printed);
    }
}

#[test]
fn charlie_fixture_structure() {
    let m = parse_model(&std::fs::read_to_string(fixture("charlie.cm")).unwrap()).unwrap();
    assert_eq!(m.cpts.len(), 3);
    let g = m.graph();
    let e: Vec<(String, String)> =
        g.edges().into_iter().map(|(a, b)| (g.name(a).to_string(), g.name(b).to_string())).collect();
    assert_eq!(e, [("E".to_string(), "A".to_string()), ("A".to_string(), "L".to_string())]);
}

#[test]
fn schema_validator_keywords() {
    use serde_json::json;
    let s = json!({
        "type": "object",
        "required": ["a"],
        "properties": {"a": {"type": "integer", "minimum": 1}, "b": {"enum": ["x"]}},
        "additionalProperties": false
    });
    assert!(schema::validate(&s, &json!({"a": 2})).is_ok());
    assert!(schema::validate(&s, &json!({"a": 0})).is_err());
    assert!(schema::validate(&s, &json!({"a": 1.5})).is_err());
    assert!(schema::validate(&s, &json!({"b": "x"})).is_err());
    assert!(schema::validate(&s, &json!({"a": 1, "c": 1})).is_err());
    let one = json!({"oneOf": [{"type": "number"}, {"type": "integer"}]});
    assert!(schema::validate(&one, &json!(1.5)).is_ok());
    assert!(schema::validate(&one, &json!(1)).is_err());
}
