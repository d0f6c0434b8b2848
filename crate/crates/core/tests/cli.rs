//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spreadsim")).args(args).output().expect("spawn binary")
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("out");
    let run = || {
        let o = bin(&["run", "--nodes", "400", "--trials", "3", "--tf", "20", "--seed", "9", "--out", a.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        ["csv", "json"].map(|ext| read(&a.with_extension(ext)))
    };
    let first = run();
    assert!(first == run(), "outputs differ between identical runs");
    let csv = String::from_utf8(read(&a.with_extension("csv"))).unwrap();
    assert!(csv.starts_with("t,S,E,I,R\n"));
    assert_eq!(csv.lines().count(), 502);
}

#[test]
fn generated_graph_feeds_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("ba.fspg");
    let o = bin(&["generate", "--gen", "ba", "--nodes", "500", "--m", "3", "--seed", "4", "--out", g.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(&read(&g)[..4], b"FSPG");
    let o = bin(&["run", "--graph", g.to_str().unwrap(), "--model", "sir", "--engine", "markov", "--tf", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["num_nodes"], 500);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "t_final = 5.0\ntrials = 2\n[graph]\nnodes = 300\n[renewal]\nepsilon = 0.05\n").unwrap();
    let base = bin(&["run", "--config", cfg.to_str().unwrap()]);
    let over = bin(&["run", "--config", cfg.to_str().unwrap(), "--seed", "77"]);
    assert!(base.status.success() && over.status.success());
    assert_ne!(base.stdout, over.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    assert_eq!(bin(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bin(&["run", "--trials", "0"]).status.code(), Some(2));

    let missing = dir.path().join("missing.fspg");
    let o = bin(&["run", "--graph", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(o.stderr.trim_ascii()).expect("json error record");
    assert!(err.get("error").is_some());

    let o = bin(&["run", "--engine", "exact", "--transmission", "age-dependent", "--nodes", "100", "--tf", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(bin(&["run", "--gen", "fixed", "--nodes", "101", "--degree", "3"]).status.code(), Some(4));
}

#[test]
fn parity_subcommand_reports_identical() {
    let o = bin(&["parity", "--gen", "ba", "--nodes", "2000", "--steps", "30", "--flags"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let cmp = v["comparisons"].as_array().unwrap();
    assert_eq!(cmp.len(), 4);
    for c in cmp {
        assert_eq!(c["report"]["state_mismatches"], 0, "{c}");
        assert_eq!(c["report"]["count_mismatches"], 0, "{c}");
    }
}
