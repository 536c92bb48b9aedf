use std::path::Path;
use std::process::{Command, Output};

fn bulkjl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bulkjl")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decompose_json_lists_every_edge() {
    let out = bulkjl(&["decompose", "--n", "9", "--format", "json"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["schema_version"], 1);
    let edges: usize = v["subgraphs"].as_array().unwrap().iter().map(|s| s["edges"].as_array().unwrap().len()).sum();
    assert_eq!(edges, 36);
}

#[test]
fn decompose_dot() {
    let out = bulkjl(&["decompose", "--n", "6", "--format", "dot"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("graph"));
}

#[test]
fn target_dim_simplex_value() {
    let out =
        bulkjl(&["target-dim", "--theorem", "simplex", "--params", r#"{"d":1024,"eta":0.1,"eps":0.5,"delta":0.05}"#]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["k"], 56);
}

#[test]
fn exit_code_two_on_bad_input() {
    assert_eq!(bulkjl(&["decompose", "--n", "1"]).status.code(), Some(2));
    assert_eq!(bulkjl(&["target-dim", "--theorem", "simplex", "--params", "{"]).status.code(), Some(2));
    let out = bulkjl(&[
        "target-dim",
        "--theorem",
        "simplex",
        "--params",
        r#"{"d":16,"eta":0.1,"eps":0.5,"delta":0.05,"bogus":1}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(bulkjl(&["estimate-rhat", "--input", "/nonexistent.bjld"]).status.code(), Some(2));
}

#[test]
fn exit_code_three_on_infeasible_theorem() {
    let params = r#"{"n":512,"d":128,"eta":0.1,"zeta":0.25,"eps":0.5,"delta":0.05,"alpha":2.0,"r_hat":40.0}"#;
    let out = bulkjl(&["target-dim", "--theorem", "unit-sphere", "--params", params]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn format_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bjld");
    std::fs::write(&bad, b"NOPE0000000000000000000000").unwrap();
    let out = bulkjl(&["estimate-rhat", "--input", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}

#[test]
fn synth_project_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.bjld");
    let proj = dir.path().join("proj.csv");
    let out =
        bulkjl(&["--seed", "4", "synth", "--kind", "iid-gaussian", "--n", "30", "--d", "12", "--out", path_str(&data)]);
    assert!(out.status.success());
    let out = bulkjl(&[
        "--seed",
        "4",
        "--json",
        "project",
        "--input",
        path_str(&data),
        "--k",
        "5",
        "--gamma-from-eps",
        "0.5",
        "--out",
        path_str(&proj),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!((v["gamma"].as_f64().unwrap() - 1.0784271247461903).abs() < 1e-12);
    let text = std::fs::read_to_string(&proj).unwrap();
    assert_eq!(text.lines().count(), 30);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 5);
}

#[test]
fn seed_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bjld");
    let b = dir.path().join("b.bjld");
    let status = Command::new(env!("CARGO_BIN_EXE_bulkjl"))
        .env("BULKJL_SEED", "11")
        .args(["synth", "--kind", "iid-rademacher", "--n", "10", "--d", "3", "--out", path_str(&a)])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(bulkjl(&[
        "--seed",
        "11",
        "synth",
        "--kind",
        "iid-rademacher",
        "--n",
        "10",
        "--d",
        "3",
        "--out",
        path_str(&b)
    ])
    .status
    .success());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn verify_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let report = dir.path().join("report.json");
    let csv = dir.path().join("batches.csv");
    std::fs::write(
        &cfg,
        r#"{"data":{"source":"synthetic","kind":"simplex","params":{"n":0,"d":32},"seed":0},
            "theorem":"simplex","eta":0.1,"eps":0.5,"delta":0.05,"trials":4,"master_seed":7}"#,
    )
    .unwrap();
    let out = bulkjl(&["verify", "--config", path_str(&cfg), "--out", path_str(&report), "--csv", path_str(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["fractions"].as_array().unwrap().len(), 4);
    let header = std::fs::read_to_string(csv).unwrap().lines().next().unwrap().to_string();
    assert!(header.contains("order_stat_eta_m_minus_1"));
}

#[test]
fn tailcheck_json() {
    let out = bulkjl(&[
        "--json",
        "--seed",
        "2",
        "tailcheck",
        "--spectrum",
        "1,1,1,1",
        "--k",
        "8",
        "--eps",
        "0.5",
        "--trials",
        "10000",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["upper"]["trials"], 10000);
    assert_eq!(bulkjl(&["tailcheck", "--spectrum", "1,x", "--k", "8", "--eps", "0.5"]).status.code(), Some(2));
}
