use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn zkfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zkfl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"{
  "seed": 3,
  "n_nodes": 10,
  "rows_per_node": 20,
  "test_rows": 500,
  "rounds": 3,
  "timings": false
}"#;

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, SMALL).unwrap();
    p
}

#[test]
fn gen_data_writes_the_requested_rows_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = zkfl(&[
            "gen-data",
            "--rows",
            "2000",
            "--seed",
            "7",
            "--out",
            path(p),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 2000);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn missing_out_is_a_usage_error() {
    let out = zkfl(&["gen-data", "--rows", "10", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
    assert_eq!(zkfl(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(zkfl(&["run", "--defense", "maybe"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_1_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"n_nodes": 5, "bogus": 1}"#, "bogus"),
        (r#"{"byzantine_fraction": 1.0}"#, "byzantine_fraction"),
        ("{\n  \"seed\": \"x\"\n}", "line 2"),
    ];
    for (text, needle) in cases {
        let p = dir.path().join("bad.json");
        std::fs::write(&p, text).unwrap();
        let out = zkfl(&["run", "--config", path(&p)]);
        assert_eq!(out.status.code(), Some(1), "{text}");
        assert!(stderr(&out).contains(needle), "{text}: {}", stderr(&out));
    }
    let out = zkfl(&["run", "--byzantine-fraction", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("byzantine_fraction"));
}

#[test]
fn run_all_reports_three_defenses_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut summaries = Vec::new();
    for name in ["s1.json", "s2.json"] {
        let summary = dir.path().join(name);
        let rounds = dir.path().join("rounds.csv");
        let out = zkfl(&[
            "run",
            "--config",
            path(&cfg),
            "--defense",
            "all",
            "--summary-json",
            path(&summary),
            "--rounds-csv",
            path(&rounds),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let table = stdout(&out);
        let order: Vec<&str> = table
            .lines()
            .filter_map(|l| l.split_whitespace().next())
            .filter(|w| ["none", "median", "zkp"].contains(w))
            .collect();
        assert_eq!(order, ["none", "median", "zkp"]);
        let csv = std::fs::read_to_string(&rounds).unwrap();
        assert!(csv.starts_with("round,defense,accepted,rejected,accuracy,agg_ms\n"));
        assert_eq!(csv.lines().count(), 1 + 3 * 3);
        summaries.push(std::fs::read(&summary).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);

    let json: Value = serde_json::from_slice(&summaries[0]).unwrap();
    let records = json["records"].as_array().unwrap();
    assert_eq!(records[0]["defense"], "none");
    assert_eq!(records[0]["poison_success"], 1.0);
    assert_eq!(records[2]["defense"], "zkp");
    assert_eq!(records[2]["poison_success"], 0.0);
    for r in records {
        for key in ["final_accuracy", "mean_agg_ms", "poison_success"] {
            assert!(r.get(key).is_some(), "{key} missing");
        }
    }
}

#[test]
fn zkp_without_attackers_accepts_everyone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let rounds = dir.path().join("rounds.csv");
    let out = zkfl(&[
        "run",
        "--config",
        path(&cfg),
        "--defense",
        "zkp",
        "--byzantine-fraction",
        "0",
        "--threads",
        "1",
        "--rounds-csv",
        path(&rounds),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&rounds).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!((cols[2], cols[3]), ("10", "0"), "{line}");
    }
}

#[test]
fn run_reads_a_csv_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let out = zkfl(&[
        "gen-data",
        "--rows",
        "800",
        "--seed",
        "2",
        "--out",
        path(&data),
        "--features",
        "4",
    ]);
    assert!(out.status.success());
    let cfg = small_config(dir.path());
    let out = zkfl(&[
        "run",
        "--config",
        path(&cfg),
        "--defense",
        "none",
        "--data",
        path(&data),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("none"));

    let missing = dir.path().join("nope.csv");
    let out = zkfl(&["run", "--config", path(&cfg), "--data", path(&missing)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_emits_one_row_per_size() {
    let out = zkfl(&["bench", "--iterations", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n_instances,prove_ms,verify_ms"));
    let rows: Vec<(usize, f64, f64)> = lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (
                c[0].parse().unwrap(),
                c[1].parse().unwrap(),
                c[2].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), [8, 16, 32]);
    for &(n, prove, verify) in &rows {
        assert!(
            verify < prove / 5.0,
            "n = {n}: prove {prove} verify {verify}"
        );
    }
    for w in rows.windows(2) {
        assert!(w[1].1 > w[0].1, "prove time fell from {w:?}");
    }
}

#[test]
fn report_prints_a_saved_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let summary = dir.path().join("s.json");
    let out = zkfl(&[
        "run",
        "--config",
        path(&cfg),
        "--defense",
        "median",
        "--summary-json",
        path(&summary),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = zkfl(&["report", path(&summary)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("seed 3, 10 nodes (1 byzantine), 3 rounds"),
        "{text}"
    );
    assert!(
        text.contains("median") && text.contains("(infl.)"),
        "{text}"
    );

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "[1, 2]").unwrap();
    assert_eq!(zkfl(&["report", path(&junk)]).status.code(), Some(1));
}
