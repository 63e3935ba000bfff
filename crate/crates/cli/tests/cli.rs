use std::path::Path;
use std::process::{Command, Output};

fn tvgs(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvgs")).args(args).current_dir(cwd).output().expect("failed to spawn tvgs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

const SMALL: &str = r#""synthetic": {"n_nodes": 30, "n_times": 12},
    "timegnn": {"epochs": 40, "trials": 1},
    "gcn": {"epochs": 40, "trials": 0}"#;

#[test]
fn generate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(&tvgs(&["generate", "--seed", "7", "--out", out], dir.path()));
    }
    ok(&tvgs(&["generate", "--seed", "8", "--out", "c"], dir.path()));
    for f in ["nodes.csv", "signals.csv", "manifest.json"] {
        assert_eq!(read(&dir.path().join("a").join(f)), read(&dir.path().join("b").join(f)), "{f}");
    }
    assert_ne!(read(&dir.path().join("a/signals.csv")), read(&dir.path().join("c/signals.csv")));
    let header = read(&dir.path().join("a/nodes.csv")).lines().next().unwrap().to_string();
    assert_eq!(header, "node_id,x,y");
}

#[test]
fn benchmark_single_cell_then_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"methods": ["timegnn", "gcn", "tgsr", "graphtrss", "mean"], "densities": [0.4], "repetitions": 1, "output_dir": "res", {SMALL}}}"#
    );
    std::fs::write(dir.path().join("exp.json"), cfg).unwrap();
    let out = tvgs(&["benchmark", "--config", "exp.json"], dir.path());
    ok(&out);
    let records = read(&dir.path().join("res/records.csv"));
    let lines: Vec<&str> = records.lines().collect();
    assert_eq!(lines[0], "method,dataset,density,repetition,rmse,mae,mape,wall_time_seconds,converged,mask_hash");
    assert_eq!(lines.len(), 6);
    let methods: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["gcn", "graphtrss", "mean", "tgsr", "timegnn"]);
    let hashes: Vec<&str> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
    assert!(hashes.iter().all(|h| *h == hashes[0]));

    ok(&tvgs(&["report", "--records", "res/records.csv", "--out", "rep"], dir.path()));
    assert_eq!(read(&dir.path().join("rep/summary.csv")), read(&dir.path().join("res/summary.csv")));
    assert_eq!(read(&dir.path().join("rep/curve.csv")), read(&dir.path().join("res/curve.csv")));
    assert_eq!(read(&dir.path().join("res/curve.csv")).lines().count(), 1 + 5);
}

#[test]
fn benchmark_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"methods": ["tgsr", "timegnn"], "densities": [0.3, 0.7], "repetitions": 3, {SMALL}}}"#);
    std::fs::write(dir.path().join("exp.json"), cfg).unwrap();
    ok(&tvgs(&["benchmark", "--config", "exp.json", "--out", "one", "--threads", "1"], dir.path()));
    ok(&tvgs(&["benchmark", "--config", "exp.json", "--out", "two", "--threads", "4"], dir.path()));
    assert_eq!(read(&dir.path().join("one/records.csv")), read(&dir.path().join("two/records.csv")));
    ok(&tvgs(&["benchmark", "--config", "exp.json", "--out", "seeded", "--seed", "5"], dir.path()));
    assert_ne!(read(&dir.path().join("one/records.csv")), read(&dir.path().join("seeded/records.csv")));
}

#[test]
fn reconstruct_writes_completed_matrix() {
    let dir = tempfile::tempdir().unwrap();
    ok(&tvgs(&["generate", "--seed", "3", "--out", "d"], dir.path()));
    let out = tvgs(
        &["reconstruct", "--dataset", "d/manifest.json", "--method", "graphtrss", "--density", "0.5", "--seed", "1", "--out", "x.csv"],
        dir.path(),
    );
    ok(&out);
    let x = read(&dir.path().join("x.csv"));
    assert_eq!(x.lines().count(), 101);
    assert_eq!(x.lines().next().unwrap().split(',').count(), 201);
    let line: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(line["rmse_unsampled"].as_f64().unwrap() < 1.0);
}

#[test]
fn errors_are_single_json_lines_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"repetitions": 0}"#).unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["benchmark", "--config", "bad.json"], "config"),
        (&["benchmark", "--config", "missing.json"], "parse"),
        (&["reconstruct", "--method", "nni", "--density", "0.5", "--out", "x.csv"], "usage"),
        (&["reconstruct", "--method", "tgsr", "--density", "1.5", "--out", "x.csv"], "config"),
    ];
    for (args, kind) in cases {
        let out = tvgs(args, dir.path());
        assert!(!out.status.success(), "{args:?}");
        let stderr = String::from_utf8(out.stderr).unwrap();
        let last = stderr.lines().last().unwrap();
        let v: serde_json::Value = serde_json::from_str(last).unwrap_or_else(|_| panic!("not JSON: {last}"));
        assert_eq!(v["error"], kind, "{args:?}: {last}");
    }
    let out = tvgs(&["benchmark", "--config", "bad.json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["field"], "repetitions");
}
