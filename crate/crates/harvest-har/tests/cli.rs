//! End-to-end command-line checks: every stage runs from its on-disk
//! inputs, help/usage behave, and exit codes follow the contract
//! (0 success, 2 usage error, 1 runtime failure).

use std::path::Path;
use std::process::{Command, Output};

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_harvest-har")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(exe()).args(args).current_dir(dir).output().expect("spawn harvest-har")
}

#[test]
fn help_exits_zero_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["generate", "preprocess", "label", "train", "evaluate", "report"] {
        let out = run_in(dir.path(), &[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help failed");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("Usage"), "{sub} --help printed no usage");
    }
    let out = run_in(dir.path(), &["--help"]);
    assert!(out.status.success());
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["generate", "--events", "1", "--out", "x", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.to_lowercase().contains("usage"), "no usage text: {text}");
}

#[test]
fn missing_input_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["preprocess", "--in", "absent.csv", "--out", "out.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("error"), "no diagnostic: {text}");
}

#[test]
fn invalid_config_value_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["generate", "--events", "1", "--out", "g", "--set", "filter.low=banana"],
    );
    assert_eq!(out.status.code(), Some(1));
    let out =
        run_in(dir.path(), &["generate", "--events", "1", "--out", "g", "--set", "no.such=1"]);
    assert_eq!(out.status.code(), Some(1));
}

/// The pipeline of the worked example: generate, preprocess, label, train,
/// evaluate, report, end to end at a small scale.
#[test]
fn pipeline_end_to_end_rcnn() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let out = run_in(d, args);
        assert!(
            out.status.success(),
            "{args:?} failed:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    };

    ok(&["generate", "--events", "8", "--seed", "7", "--out", "d"]);
    assert!(d.join("d/data.csv").exists());
    assert!(d.join("d/data.events.csv").exists());

    ok(&[
        "preprocess", "--in", "d/data.csv", "--out", "fused.csv", "--low", "0.3", "--high", "20",
    ]);
    ok(&["label", "--in", "fused.csv", "--events", "d/data.events.csv", "--out", "labeled.csv"]);

    // Tiny RCNN so the smoke run stays fast.
    let small_rcnn: &[&str] = &[
        "--set", "rcnn.epochs=2",
        "--set", "rcnn.conv1_filters=4",
        "--set", "rcnn.conv2_filters=4",
        "--set", "rcnn.dense=8",
        "--set", "rcnn.lstm_hidden=8",
    ];
    let mut train_args =
        vec!["train", "--model", "rcnn", "--in", "labeled.csv", "--out", "model.txt", "--seed", "7"];
    train_args.extend_from_slice(small_rcnn);
    ok(&train_args);
    assert!(d.join("model.txt").exists());

    let mut eval_args = vec![
        "evaluate", "--in", "labeled.csv", "--model", "rcnn", "--labels", "learned", "--seed",
        "7", "--out", "report",
    ];
    eval_args.extend_from_slice(small_rcnn);
    ok(&eval_args);
    for fold in 0..6 {
        assert!(d.join(format!("report/trace_fold{fold}.csv")).exists());
    }
    assert!(d.join("report/metrics.csv").exists());
    assert!(d.join("report/summary.csv").exists());

    ok(&["report", "--trace-dir", "report", "--data", "labeled.csv", "--out", "plots"]);
    let svg = std::fs::read_to_string(d.join("plots/summary_box.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(d.join("plots/fold0.svg").exists());
}

#[test]
fn evaluate_supports_all_label_sources() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let out = run_in(d, args);
        assert!(
            out.status.success(),
            "{args:?} failed:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    ok(&["generate", "--events", "8", "--seed", "3", "--out", "d"]);
    ok(&["preprocess", "--in", "d/data.csv", "--out", "fused.csv"]);
    for source in ["manual", "predefined", "learned"] {
        ok(&[
            "evaluate",
            "--in",
            "fused.csv",
            "--model",
            "ensemble",
            "--labels",
            source,
            "--seed",
            "3",
            "--out",
            &format!("report_{source}"),
            "--set",
            "ensemble.epochs=2",
            "--set",
            "ensemble.hidden=16",
        ]);
    }
    let out = run_in(
        d,
        &["evaluate", "--in", "fused.csv", "--model", "ensemble", "--labels", "nonsense", "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(1));
}
