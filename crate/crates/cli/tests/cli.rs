//! Exit codes and report shapes of the binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockassoc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn report(dir: &Path, args: &[&str]) -> (i32, Value) {
    let mut a = args.to_vec();
    a.extend(["--format", "json", "--output", "out.json"]);
    let o = run(dir, &a);
    let text = std::fs::read_to_string(dir.join("out.json")).expect("report written");
    (code(&o), serde_json::from_str(&text).unwrap())
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["mc-test", "--help"]] {
        assert_eq!(code(&run(dir.path(), args)), 0, "{args:?}");
    }
    let help = String::from_utf8(run(dir.path(), &["--help"]).stdout).unwrap();
    assert!(help.contains("BLOCKASSOC_THREADS"));
}

#[test]
fn usage_and_input_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["no-such-command"])), 3);
    assert_eq!(code(&run(d, &["check-gaussian"])), 3);
    assert_eq!(code(&run(d, &["check-gaussian", "--sigma", "missing.json"])), 3);
    // not positive semidefinite
    write(d, "bad.json", "[[1,2],[2,1]]");
    let o = run(d, &["check-gaussian", "--sigma", "bad.json"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    // blocks of the wrong size
    write(d, "ok.json", "[[1,0],[0,1]]");
    assert_eq!(code(&run(d, &["check-gaussian", "--sigma", "ok.json", "--blocks", "[[1,2,3]]"])), 3);
}

#[test]
fn verdicts_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "pos.json", "[[1,0.3],[0.3,1]]");
    write(d, "neg.json", "[[1,-0.3],[-0.3,1]]");
    let (c, r) = report(d, &["check-gaussian", "--sigma", "pos.json"]);
    assert_eq!((c, r["status"].as_str()), (0, Some("PASS")));
    let (c, r) = report(d, &["check-gaussian", "--sigma", "neg.json"]);
    assert_eq!((c, r["status"].as_str()), (1, Some("VIOLATION")));
    assert_eq!(r["result"]["witness"]["value"].as_f64(), Some(-0.3));
    // one block has no cross pairs
    assert_eq!(report(d, &["check-gaussian", "--sigma", "neg.json", "--blocks", "whole"]).0, 0);

    // an atom outside the support set fails the sufficient condition only
    write(d, "t.json", r#"{"drift":[0,0],"sigma":[[0,0],[0,0]],"levy":{"atoms":[{"x":[1,-1],"mass":1}]}}"#);
    let (c, r) = report(d, &["check-id", "--triplet", "t.json"]);
    assert_eq!((c, r["status"].as_str()), (2, Some("INCONCLUSIVE")));
}

#[test]
fn reports_carry_the_common_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "law.json", r#"{"support":[[0,1],[1,0]],"probs":[0.5,0.5]}"#);
    let (c, r) = report(d, &["oracle", "--dist", "law.json"]);
    assert_eq!(c, 1);
    for key in ["tool", "version", "subcommand", "status", "config", "result", "metadata"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["subcommand"], "oracle");
    assert!((r["result"]["worst_covariance"].as_f64().unwrap() + 0.25).abs() < 1e-12);
    assert!(r["metadata"]["generated_at"].is_string());
}

#[test]
fn replay_of_a_violation_reproduces_and_a_pass_has_nothing_to_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["mc-test", "--source", "brownian-antithetic", "--n", "20000", "--pairs", "50"];
    let (c, r) = report(d, &args);
    assert_eq!(c, 1);
    std::fs::rename(d.join("out.json"), d.join("violation.json")).unwrap();
    let (c, replayed) = report(d, &["replay", "--witness", "violation.json"]);
    assert_eq!(c, 1);
    assert_eq!(replayed["result"]["witness"]["estimate"], r["result"]["witness"]["estimate"]);

    write(d, "pos.json", "[[1,0.3],[0.3,1]]");
    report(d, &["check-gaussian", "--sigma", "pos.json"]);
    std::fs::rename(d.join("out.json"), d.join("pass.json")).unwrap();
    let o = run(d, &["replay", "--witness", "pass.json"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn simulate_writes_a_batch_and_its_lineage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["simulate", "--source", "brownian-antithetic", "--n", "2000", "--batch", "b.csv"];
    assert_eq!(report(d, &args).0, 0);
    let csv = std::fs::read_to_string(d.join("b.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).collect();
    assert!(rows.len() == 2000 || rows.len() == 2001, "{} lines", rows.len());
    assert!(d.join("b.csv.meta.json").exists());
    // the written batch is a valid source
    let (c, _) = report(d, &["mc-test", "--source", "b.csv", "--pairs", "20"]);
    assert!(c == 0 || c == 1, "exit {c}");
}
