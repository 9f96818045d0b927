use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    root.to_string_lossy().into_owned()
}

fn psolve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psolve"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let o = psolve(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn umbrella_limit_is_one_half() {
    let v = json(&["analyze", &data("umbrella.psl"), "--goal", "R", "--limit"]);
    assert_eq!(v["exact"], "1/2");
    assert_eq!(v["closed_form"], "1/2 + 1/2*(2/5)^n");
}

#[test]
fn analyze_at_a_fixed_step() {
    let v = json(&["analyze", &data("umbrella.psl"), "--goal", "R", "--at", "2"]);
    assert_eq!(v["exact"], "29/50");
    assert_eq!(v["decimal"], "0.58");
}

#[test]
fn alarm_conditional_text_output() {
    let o = psolve(&[
        "query",
        &data("alarm.json"),
        "--spec",
        r#"{"query":"conditional","target":{"B":1},"evidence":{"J":1,"M":1}}"#,
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("decimal: 0.284172"), "{}", stdout(&o));
}

#[test]
fn parameters_bind_after_solving() {
    let v = json(&[
        "query",
        &data("alarm_symbolic.json"),
        "--param",
        "b=1/1000",
        "--param",
        "q=1/500",
        "--spec",
        r#"{"query":"conditional","target":{"B":1},"evidence":{"J":1,"M":1}}"#,
    ]);
    assert_eq!(v["decimal"], "0.284172");
}

#[test]
fn compile_bn_prints_a_parseable_program() {
    let o = psolve(&["compile-bn", &data("umbrella.json")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("R := bern(7/10)*R + bern(3/10)*(1 - R);"), "{text}");
}

#[test]
fn compile_bn_writes_a_file() {
    let out = std::env::temp_dir().join(format!("psolve-cli-{}.psl", std::process::id()));
    let o = psolve(&["compile-bn", &data("alarm.json"), "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    std::fs::remove_file(&out).ok();
    assert!(text.contains("while true"));
}

#[test]
fn cyclic_network_is_an_input_error() {
    let o = psolve(&["compile-bn", &data("bad_cycle.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cycle"));
}

#[test]
fn missing_file_is_an_input_error() {
    let o = psolve(&["query", "/nonexistent.json", "--spec", "{}"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_goal_is_an_input_error() {
    let o = psolve(&["analyze", &data("umbrella.psl"), "--goal", "Z", "--limit"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn degree_cap_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_psolve"))
        .args(["analyze", &data("umbrella.psl"), "--goal", "R", "--limit"])
        .env("PSOLVE_DEGREE_CAP", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn expected_samples_by_both_routes() {
    let v = json(&["samples", &data("alarm.json"), "--evidence", "J=1,M=1", "--n", "1000000"]);
    assert_eq!(v["exact"], "1000000000000/2084100239");
    assert_eq!(v["monitor"]["exact"], v["exact"]);
    assert_eq!(v["routes_agree"], true);
    assert_eq!(v["positives"]["exact"], "2084100239/1000000");
}

#[test]
fn filtering_infers_the_hidden_and_observed_nodes() {
    let v = json(&["filter", &data("umbrella_prior_half.json"), "--obs", "1,1"]);
    assert_eq!(v["posteriors"][0][1]["exact"], "9/11");
    assert_eq!(v["posteriors"][1][1]["exact"], "621/703");
}

#[test]
fn check_agrees_with_the_oracles() {
    let v = json(&["check", &data("asia.json"), "--mc", "20000", "--seed", "7"]);
    assert_eq!(v["passed"], true);
    let v = json(&["check", &data("rats.json")]);
    assert_eq!(v["passed"], true);
}

#[test]
fn check_needs_bound_parameters() {
    let o = psolve(&["check", &data("grass_symbolic.json")]);
    assert_eq!(o.status.code(), Some(1));
}
