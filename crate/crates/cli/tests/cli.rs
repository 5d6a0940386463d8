//! End-to-end tests of the `m4c` binary: every subcommand, the exit-code
//! contract (0 success, 2 config error, 3 data error), and byte-level
//! reproducibility of seeded runs.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn m4c(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_m4c"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Generates a small corpus into `dir` and returns the follower/actions paths.
fn generate_small(dir: &Path, seed: &str) -> (String, String) {
    let out = m4c(&[
        "generate",
        "--seed",
        seed,
        "--user-count",
        "800",
        "--cascades-per-class",
        "120",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    (
        dir.join("follower.tsv").to_str().unwrap().into(),
        dir.join("actions.jsonl").to_str().unwrap().into(),
    )
}

#[test]
fn generate_writes_corpus_and_is_byte_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    generate_small(a.path(), "5");
    generate_small(b.path(), "5");
    generate_small(c.path(), "6");
    for file in ["follower.tsv", "actions.jsonl", "labels.csv"] {
        let bytes_a = std::fs::read(a.path().join(file)).unwrap();
        let bytes_b = std::fs::read(b.path().join(file)).unwrap();
        assert!(!bytes_a.is_empty(), "{file} is empty");
        assert_eq!(bytes_a, bytes_b, "{file} differs across same-seed runs");
    }
    assert_ne!(
        std::fs::read(a.path().join("actions.jsonl")).unwrap(),
        std::fs::read(c.path().join("actions.jsonl")).unwrap(),
        "different seeds must differ"
    );
}

#[test]
fn construct_encode_fit_features_export_flow() {
    let dir = TempDir::new().unwrap();
    let (follower, actions) = generate_small(dir.path(), "5");
    let input = ["--follower", &follower, "--actions", &actions];

    let out = m4c(&[&["construct"], &input[..]].concat());
    assert_ok(&out);
    let text = stdout(&out);
    assert_eq!(
        text.lines().next(),
        Some("cascade_id\troot\tnodes\tedges"),
        "construct header"
    );
    let first = text.lines().nth(1).expect("summary rows");
    assert_eq!(first.split('\t').count(), 4, "id, root, nodes, edges");

    let out = m4c(&[&["encode", "--tau1", "10"], &input[..]].concat());
    assert_ok(&out);
    let text = stdout(&out);
    let row = text.lines().next().expect("encode rows");
    let fields: Vec<&str> = row.split('\t').collect();
    assert_eq!(fields.len(), 3, "id, code, runs");
    assert!(fields[1].chars().all(|c| c == '0' || c == '1'));

    let chain_path = dir.path().join("chain.json");
    let out = m4c(&[
        &["fit", "--tau1", "10", "--out", chain_path.to_str().unwrap()],
        &input[..],
    ]
    .concat());
    assert_ok(&out);
    let chain: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&chain_path).unwrap()).unwrap();
    assert!(chain.get("order").is_some(), "chain JSON has an order field");

    let feat_dir = dir.path().join("features");
    let out = m4c(&[
        &[
            "features",
            "--top-k",
            "20",
            "--realization-count",
            "50",
            "--out-dir",
            feat_dir.to_str().unwrap(),
        ],
        &input[..],
    ]
    .concat());
    assert_ok(&out);
    let csv = std::fs::read_to_string(feat_dir.join("features.csv")).unwrap();
    assert!(csv.starts_with("cascade_id,label,"));
    assert!(feat_dir.join("features_selected.json").exists());

    let id = first.split('\t').next().unwrap();
    let dot_dir = dir.path().join("dot");
    let out = m4c(&[
        &[
            "export-dot",
            "--cascade-id",
            id,
            "--out-dir",
            dot_dir.to_str().unwrap(),
        ],
        &input[..],
    ]
    .concat());
    assert_ok(&out);
    let dot = std::fs::read_to_string(dot_dir.join(format!("{id}.dot"))).unwrap();
    assert!(dot.starts_with("digraph cascade {"));
}

#[test]
fn evaluate_runs_and_reports_both_arms() {
    let dir = TempDir::new().unwrap();
    let (follower, actions) = generate_small(dir.path(), "5");
    let run_dir = dir.path().join("run");
    let out = m4c(&[
        "evaluate",
        "--follower",
        &follower,
        "--actions",
        &actions,
        "--seed",
        "1",
        "--top-k",
        "30",
        "--realization-count",
        "50",
        "--out-dir",
        run_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("m4c: accuracy"), "stdout: {text}");
    assert!(text.contains("baseline: accuracy"), "stdout: {text}");
    for file in [
        "metrics_m4c.json",
        "roc_m4c.csv",
        "metrics_baseline.json",
        "roc_baseline.csv",
        "features_selected.json",
        "report.json",
    ] {
        assert!(run_dir.join(file).exists(), "missing {file}");
    }
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = m4c(&["generate", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let (follower, actions) = generate_small(dir.path(), "5");
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let out = m4c(&[
        "evaluate",
        "--follower",
        &follower,
        "--actions",
        &actions,
        "--seed",
        "1",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_thresholds_are_a_config_error() {
    let dir = TempDir::new().unwrap();
    let (follower, actions) = generate_small(dir.path(), "5");
    let out = m4c(&[
        "evaluate",
        "--follower",
        &follower,
        "--actions",
        &actions,
        "--seed",
        "1",
        "--tau1",
        "20",
        "--tau2",
        "10",
        "--out-dir",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_file_is_a_data_error() {
    let out = m4c(&[
        "construct",
        "--follower",
        "/nonexistent/follower.tsv",
        "--actions",
        "/nonexistent/actions.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_action_log_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let follower = dir.path().join("follower.tsv");
    let actions = dir.path().join("actions.jsonl");
    std::fs::write(&follower, "a\tb\n").unwrap();
    std::fs::write(&actions, "not json\n").unwrap();
    let out = m4c(&[
        "construct",
        "--follower",
        follower.to_str().unwrap(),
        "--actions",
        actions.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
