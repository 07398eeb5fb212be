use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn react(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_react")).args(args).output().expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn strip_runtime(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(a, _)| a).to_string()).collect()
}

#[test]
fn bad_arguments_and_missing_files_exit_1() {
    assert_eq!(react(&["powerflow"]).status.code(), Some(1));
    assert_eq!(react(&["nonsense"]).status.code(), Some(1));
    assert_eq!(react(&["powerflow", "--grid", "/does/not/exist.json"]).status.code(), Some(1));
    assert_eq!(react(&["--help"]).status.code(), Some(0));
}

#[test]
fn powerflow_writes_angles_and_flows() {
    let out = react(&["powerflow", "--grid", s(&data("synth118.json"))]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("element,id,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.iter().filter(|r| r.starts_with("theta,")).count(), 118);
    assert!(rows.iter().filter(|r| r.starts_with("flow,")).count() > 118);
}

#[test]
fn attack_then_detect() {
    let dir = tempfile::tempdir().unwrap();
    let grid = data("synth118.json");
    let sc = dir.path().join("scenario.json");
    let obs = dir.path().join("obs.json");
    let truth = dir.path().join("truth.json");
    let outcome = dir.path().join("outcome.json");

    // no failures and no distortion: nothing to find
    std::fs::write(&sc, r#"{"H":[17,30,32],"F":[],"kind":"distortion","param":0.0}"#).unwrap();
    let a = react(&["attack", "--grid", s(&grid), "--scenario", s(&sc), "--out", s(&obs), "--truth", s(&truth)]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let d = react(&["detect", "--grid", s(&grid), "--observation", s(&obs), "--out", s(&outcome)]);
    assert!(d.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&outcome).unwrap()).unwrap();
    assert_eq!(v["success"], true);
    assert_eq!(v["H"].as_array().unwrap().len(), 0);
    assert_eq!(v["F"].as_array().unwrap().len(), 0);

    // a line outside the area is rejected as bad input
    std::fs::write(&sc, r#"{"H":[17],"F":[0],"kind":"distortion"}"#).unwrap();
    assert_eq!(react(&["attack", "--grid", s(&grid), "--scenario", s(&sc)]).status.code(), Some(1));
}

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let body = format!(
        r#"{{"grid":{:?},"area":[17,30,32,36,41,42,44,59,68,74,80,88,97,101,110],"k":[1,2],"samples":4,"seed":5}}"#,
        s(&data("synth118.json"))
    );
    std::fs::write(&cfg, body).unwrap();
    let run = |jobs: &str, name: &str| {
        let out = dir.path().join(name);
        let summary = dir.path().join(format!("{name}.summary"));
        let r = react(&["experiment", "--config", s(&cfg), "--jobs", jobs, "--out", s(&out), "--summary", s(&summary)]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        assert!(std::fs::read_to_string(&summary).unwrap().lines().count() == 3);
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("4", "a.csv");
    let b = run("4", "b.csv");
    let c = run("1", "c.csv");
    assert_eq!(a.lines().count(), 9);
    assert_eq!(strip_runtime(&a), strip_runtime(&b));
    assert_eq!(strip_runtime(&a), strip_runtime(&c));
}

#[test]
fn verify_weight_suite_passes() {
    let out = react(&["verify", "--lemma", "16", "--m", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
    assert_eq!(react(&["verify", "--suite", "bogus"]).status.code(), Some(1));
}

#[test]
fn synth_and_convert_produce_grids() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    assert!(react(&["synth", "--nodes", "30", "--seed", "3", "--out", s(&g)]).status.success());
    assert!(react(&["powerflow", "--grid", s(&g)]).status.success());

    let case = dir.path().join("case3.m");
    std::fs::write(
        &case,
        "mpc.baseMVA = 100;\nmpc.bus = [\n1 3 0 0;\n2 1 60 0;\n3 1 40 0;\n];\nmpc.gen = [\n1 100 0 0 0 1 100 1;\n];\nmpc.branch = [\n1 2 0 0.1 0 0 0 0 0 0 1;\n2 3 0 0.1 0 0 0 0 0 0 1;\n1 3 0 0.2 0 0 0 0 0 0 1;\n];\n",
    )
    .unwrap();
    let out = react(&["convert", "--matpower", s(&case)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(v["edges"].as_array().unwrap().len(), 3);
    assert_eq!(v["reference"], 1);
}
