use std::process::Command;

fn hypomult() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypomult"))
}

#[test]
fn preset_run_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypomult()
        .args(["run", "preset:full-rank-Q", "--output-dir"])
        .arg(dir.path())
        .env("HYPOMULT_WORKERS", "1")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().take(5).collect();
    assert_eq!(lines[0], "kalman: ok");
    assert_eq!(lines[4], "verify-spectral: ok");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["kalman"]["r"], 0);
    assert!(dir.path().join("cert_target_estimate.csv").exists());
}

#[test]
fn config_file_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let shown = hypomult().args(["presets", "show", "kinetic-autonomous"]).output().unwrap();
    assert!(shown.status.success());
    let path = dir.path().join("kinetic.json");
    std::fs::write(&path, &shown.stdout).unwrap();
    let out = hypomult()
        .arg("run")
        .arg(&path)
        .args(["--tasks", "exponents", "--output-dir"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("kalman: ok"));
    assert!(stdout.contains("exponents: ok"));
    assert!(!stdout.contains("build:"));
}

#[test]
fn invalid_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name": "bad"}"#).unwrap();
    let out = hypomult().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = hypomult().args(["run", "preset:nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn uncontrollable_operator_exits_with_dedicated_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stuck.json");
    let cfg = r#"{
        "name": "stuck",
        "operator": {"b": [[0.0, 0.0], [0.0, 0.0]], "q": [[1.0, 0.0], [0.0, 0.0]], "time_dependent": false},
        "exponents": {"lambda0": 1.0, "r": 1, "q": [0.0], "s": [0.0]},
        "tasks": ["kalman"]
    }"#;
    std::fs::write(&path, cfg).unwrap();
    let out = hypomult()
        .arg("run")
        .arg(&path)
        .arg("--output-dir")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn presets_list_names_every_preset() {
    let out = hypomult().args(["presets", "list"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in hypomult::presets::preset_names() {
        assert!(stdout.lines().any(|l| l == *name), "{name} missing");
    }
}
