//! Drives the binary on the committed fixtures.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;

use serde_json::{json, Value};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

struct Run {
    code: i32,
    json: Value,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_toposlos"))
        .args(args)
        .env_remove("TOPOSLOS_MAX_ENUM")
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    Run { code: out.status.code().unwrap(), json, stdout, stderr: String::from_utf8(out.stderr).unwrap() }
}

fn demo(args: &[&str]) -> Run {
    let w = fixture("graphs.demo.json");
    let mut all = vec!["-w", w.as_str()];
    all.extend_from_slice(args);
    run(&all)
}

fn bits(args: &[&str]) -> Run {
    let w = fixture("bits.json");
    let mut all = vec!["-w", w.as_str()];
    all.extend_from_slice(args);
    run(&all)
}

#[test]
fn check_summarises_the_demo_workspace() {
    let r = demo(&["check"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    // counted by hand from the fixture
    let expected = json!({
        "edge": { "carriers": { "s": { "V": 2, "E": 1 } }, "relations": { "r": 1, "e": 1 } },
        "loop": { "carriers": { "s": { "V": 1, "E": 1 } }, "relations": { "r": 2, "e": 0 } },
        "pair": { "carriers": { "s": { "V": 2, "E": 1 } }, "relations": { "r": 1, "e": 2 } },
    });
    assert_eq!(r.json["models"], expected);
    assert_eq!(r.json["base"]["objects"], json!(["V", "E"]));
    assert_eq!(r.json["filters"]["ultra-1"]["ultrafilter"], json!(true));
    assert_eq!(r.json["filters"]["pair-12"]["ultrafilter"], json!(false));
    assert_eq!(r.json["filters"]["trivial"]["ultrafilter"], json!(false));
}

#[test]
fn minimal_workspace_loads() {
    let r = run(&["check", &fixture("minimal.json")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["models"]["one"]["carriers"]["s"]["pt"], json!(1));
}

#[test]
fn nonassociative_base_is_rejected_with_the_triple() {
    let r = run(&["-w", &fixture("nonassociative.json"), "check"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.json["error"]["code"], json!("ValidationError"));
    assert_eq!(r.json["error"]["location"], json!("base"));
    assert!(r.json["error"]["message"].as_str().unwrap().contains("(f∘f)∘f ≠ f∘(f∘f)"));
}

/// Tuples over `{0,1}^3` identified when they agree on the first two
/// coordinates, listed without going through the library.
fn quotient_by_first_two() -> Vec<Vec<String>> {
    let mut classes = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            classes.push((0..2).map(|c| format!("({a},{b},{c})")).collect());
        }
    }
    classes
}

#[test]
fn product_class_table_matches_the_quotient() {
    let r = bits(&["product", "-M", "a,b,c", "--filter", "J12"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let table = &r.json["sorts"]["s"]["classes"]["pt"];
    let got: BTreeSet<Vec<String>> = table["classes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["members"].as_array().unwrap().iter().map(|m| m.as_str().unwrap().to_string()).collect())
        .collect();
    let want: BTreeSet<Vec<String>> = quotient_by_first_two().into_iter().collect();
    assert_eq!(got, want);
    assert_eq!(table["count"], json!(4));
    // p holds at 1 in a and everywhere in b, so on classes with first coordinate 1
    assert_eq!(r.json["relations"]["p"]["pt"], json!(["([(1,0,0)])", "([(1,1,0)])"]));
}

#[test]
fn los_on_the_first_ultrafilter() {
    let r = demo(&["los", "--instance", "ultra-at-1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["verdict"], json!("pass"));
    let rows = r.json["report"]["rows"].as_array().unwrap();
    // canonical generators of edge × loop: two points, the vertex pair, the edge
    assert_eq!(rows.len(), 4);
    for row in rows {
        // the filter is principal at index 1, so truth is truth in `edge`
        assert_eq!(row["lhs"], row["members"][0], "{row}");
        assert_eq!(row["lhs"], row["rhs"], "{row}");
    }
    let holding: Vec<&str> =
        rows.iter().filter(|r| r["lhs"] == json!(true)).map(|r| r["generator"].as_str().unwrap()).collect();
    assert_eq!(holding, ["E:{} V:{((a,v))}"]);
}

#[test]
fn los_on_a_sentence_reports_the_corollary() {
    let r = bits(&["los", "--instance", "bits-u2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["sentence"]["verdict"]["status"], json!("pass"));
    // over the graph base `r` is marked on vertices only, so the truth value
    // in `edge` is the global element picking out V
    let g = demo(&["los", "--instance", "sentence"]);
    assert_eq!(g.code, 0, "{}", g.stderr);
    assert_eq!(g.json["sentence"]["verdict"]["status"], json!("skipped"));
}

#[test]
fn non_ultrafilter_needs_force() {
    let r = demo(&["los", "--instance", "not-ultra"]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json["error"]["code"], json!("HypothesesNotMet"));
    let forced = demo(&["los", "--instance", "not-ultra", "--force"]);
    assert_eq!(forced.json["report"]["forced"], json!(true));
    // positive formula: the forward direction holds on every generator
    for row in forced.json["report"]["rows"].as_array().unwrap() {
        assert!(row["lhs"] != json!(true) || row["rhs"] == json!(true), "{row}");
    }
}

#[test]
fn conditions_can_be_restricted() {
    let r = demo(&["conditions", "--instance", "ultra-at-1", "--only", "finiteness"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let names: Vec<&str> =
        r.json["conditions"].as_array().unwrap().iter().map(|c| c["condition"].as_str().unwrap()).collect();
    assert_eq!(names, ["finiteness"]);
    let bad = demo(&["conditions", "--instance", "ultra-at-1", "--only", "nonsense"]);
    assert_eq!(bad.code, 2);
}

#[test]
fn eval_of_top_is_the_whole_context() {
    let r = demo(&["eval", "-m", "edge", "-f", "[x:s]. top"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["top"], json!(true));
    assert_eq!(r.json["subobject"], json!({ "V": ["(a)", "(b)"], "E": ["(ab)"] }));
    let named = demo(&["eval", "-m", "edge", "-f", "marked"]);
    assert_eq!(named.json["subobject"], json!({ "V": ["(a)"], "E": [] }));
}

#[test]
fn exit_codes() {
    assert_eq!(demo(&["eval", "-m", "edge", "-f", "[x:s]. r(x) and"]).code, 2);
    assert_eq!(demo(&["eval", "-m", "nobody", "-f", "marked"]).code, 2);
    assert_eq!(run(&["-w", "/nonexistent.json", "check"]).code, 2);
    let big = demo(&["--max-enum", "1", "los", "--instance", "ultra-at-1"]);
    assert_eq!(big.code, 3);
    assert_eq!(big.json["error"]["code"], json!("SearchSpaceTooLarge"));
}

#[test]
fn syntax_errors_carry_the_column() {
    let r = demo(&["eval", "-m", "edge", "-f", "[x:s]. r(x) and"]);
    assert_eq!(r.json["error"]["location"], json!("column 16"));
}

#[test]
fn human_format() {
    let r = demo(&["--format", "human", "los", "--instance", "ultra-at-1"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("command: los\n"), "{}", r.stdout);
    assert!(serde_json::from_str::<Value>(&r.stdout).is_err());
}

#[test]
fn oracle_commands_agree() {
    for args in [
        &["oracle", "eval", "-m", "a", "-f", "excluded_middle"][..],
        &["oracle", "classes", "-M", "a,b,c", "--filter", "J12"],
        &["oracle", "modal", "-c", "cycle"],
    ] {
        let r = bits(args);
        assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
        assert_eq!(r.json["agree"], json!(true), "{args:?}");
    }
    let h = demo(&["oracle", "heyting", "-m", "edge", "-s", "s"]);
    assert_eq!(h.json["report"]["verdict"]["status"], json!("pass"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = demo(&["conditions", "--instance", "sentence"]);
    let b = demo(&["conditions", "--instance", "sentence"]);
    assert_eq!(a.stdout, b.stdout);
}
