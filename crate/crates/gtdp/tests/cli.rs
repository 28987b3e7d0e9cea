use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn gtdp(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtdp"))
        .args(args)
        .env("GTDP_CACHE_DIR", cache)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn value_json_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = gtdp(
        &[
            "value", "--proc", "r3", "--q", "0.9999", "--n", "6765", "--format", "json",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    let mut want = [
        "procedure",
        "q",
        "n",
        "expected_tests",
        "first_test",
        "info_bound",
        "from_cache",
        "elapsed_ms",
    ];
    want.sort();
    let mut keys = keys;
    keys.sort();
    assert_eq!(keys, want);
    assert_eq!(v["procedure"], "r3");
    assert_eq!(v["first_test"], 6765);
    assert_eq!(v["from_cache"], false);
    assert!((v["expected_tests"].as_f64().unwrap() - 12.94809).abs() <= 1e-5);

    let again = gtdp(
        &["value", "--q", "0.9999", "--n", "6765", "--format", "json"],
        dir.path(),
    );
    let v: Value = serde_json::from_slice(&again.stdout).unwrap();
    assert_eq!(v["from_cache"], true);
}

#[test]
fn value_human_prints_five_decimals_and_empty_population() {
    let dir = tempfile::tempdir().unwrap();
    let o = gtdp(
        &["value", "--q", "0.9999", "--n", "10000", "--no-cache"],
        dir.path(),
    );
    assert!(
        stdout(&o).contains("expected tests 19.20284\n"),
        "{}",
        stdout(&o)
    );
    let o = gtdp(
        &[
            "value",
            "--q",
            "0.9999",
            "--n",
            "0",
            "--format",
            "json",
            "--no-cache",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["expected_tests"], 0.0);
    assert_eq!(v["first_test"], Value::Null);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = gtdp(
        &[
            "table",
            "--q",
            "0.5",
            "--from",
            "1",
            "--to",
            "10",
            "--no-cache",
        ],
        dir.path(),
    );
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,expected_tests,first_test"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 10);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(*row, format!("{},{},1", i + 1, i + 1));
    }

    let o = gtdp(
        &[
            "table", "--q", "0.5", "--from", "9", "--to", "3", "--format", "json",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(
        serde_json::from_slice::<Value>(&o.stdout).unwrap(),
        Value::Array(vec![])
    );

    let o = gtdp(
        &[
            "table",
            "--q",
            "0.9999",
            "--from",
            "10000",
            "--to",
            "10000",
            "--format",
            "json",
            "--no-cache",
        ],
        dir.path(),
    );
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v[0]["expected_tests"].as_f64().unwrap() - 19.20284).abs() <= 1e-5);
    assert_eq!(v[0]["first_test"], 10_000);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| gtdp(args, dir.path()).status.code();
    assert_eq!(code(&["value", "--q", "1.0", "--n", "3"]), Some(2));
    assert_eq!(code(&["value", "--q", "nan", "--n", "3"]), Some(2));
    assert_eq!(code(&["value", "--q", "0.9"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(
        code(&[
            "value",
            "--proc",
            "r1",
            "--q",
            "0.9",
            "--n",
            "5000",
            "--memory-budget-mib",
            "16",
            "--no-cache"
        ]),
        Some(3)
    );
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["bounds", "--q", "0.9999", "--n", "6765"]), Some(0));
}

#[test]
fn bounds_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = gtdp(
        &["bounds", "--q", "0.9999", "--n", "6765", "--format", "json"],
        dir.path(),
    );
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_max"], 92_099);
    assert!((v["info_bound"].as_f64().unwrap() - 9.9650718191391).abs() < 1e-9);
}

#[test]
fn simulate_reports_zero_misclassified() {
    let dir = tempfile::tempdir().unwrap();
    let o = gtdp(
        &[
            "simulate",
            "--proc",
            "r1",
            "--q",
            "0.9",
            "--n",
            "20",
            "--trials",
            "5000",
            "--seed",
            "1",
            "--format",
            "json",
            "--no-cache",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["misclassified"], 0);
    assert!(v["z"].as_f64().unwrap().abs() < 5.0);
}

#[test]
fn session_over_stdin_and_script() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_gtdp"))
        .args(["session", "--q", "0.9999", "--n", "10000", "--no-cache"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"maybe\n-\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    let text = stdout(&o);
    assert!(o.status.success());
    assert!(text.contains("test 1: 10000 unit(s): u1-u10000"), "{text}");
    assert!(text.contains("unrecognized input \"maybe\""));
    assert!(text.contains("complete after 1 test(s); defective: (none)"));

    let script = dir.path().join("outcomes.txt");
    std::fs::write(&script, "# one unit, defective\n+\n").unwrap();
    let o = gtdp(
        &[
            "session",
            "--q",
            "0.5",
            "--n",
            "1",
            "--no-cache",
            "--script",
            script.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(
        stdout(&o).contains("complete after 1 test(s); defective: u1"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn verify_negative_control_fails_claim_by_claim() {
    let dir = tempfile::tempdir().unwrap();
    // a windowed nested build at 6765 takes a few seconds in optimized builds
    let o = gtdp(
        &[
            "verify",
            "--q",
            "0.99",
            "--windowed",
            "--format",
            "json",
            "--no-cache",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let claims: Value = serde_json::from_slice(&o.stdout).unwrap();
    let claims = claims.as_array().unwrap();
    assert!(claims.len() >= 10);
    assert!(claims.iter().any(|c| c["pass"] == false));
    assert!(claims
        .iter()
        .any(|c| c["id"] == "n-max" && c["pass"] == false));
    for c in claims {
        assert!(c["computed"].is_number() && c["elapsed_ms"].is_number());
    }
}
