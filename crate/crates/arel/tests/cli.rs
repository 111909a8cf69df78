//! End-to-end runs of every subcommand on a tiny corpus.

use std::fs;
use std::path::Path;
use std::process::Command;

fn arel(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_arel")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "arel {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// Runs the whole pipeline in `dir` and returns every file it wrote.
fn pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let data = p(dir, "data");
    arel(&["gen-data", "--out-dir", &data, "--seed", "4", "--train", "24", "--val", "6", "--test", "6", "--d-img", "8"]);
    let train = format!("{data}/train.tsv");
    let test = format!("{data}/test.tsv");
    arel(&["build-vocab", "--data", &train, "--out", &p(dir, "vocab.txt")]);
    let common = ["--no-wall-clock", "--seed", "7", "--batch-size", "4"];
    let run = |extra: &[&str]| {
        let mut args = vec!["train", "--data", train.as_str()];
        args.extend_from_slice(&common);
        args.extend_from_slice(extra);
        arel(&args)
    };
    run(&["--mode", "xe-ss", "--vocab", &p(dir, "vocab.txt"), "--epochs", "2", "--out", &p(dir, "xe")]);
    run(&["--mode", "arel", "--init-from", &p(dir, "xe"), "--episodes", "4", "--alt-period", "2", "--out", &p(dir, "arel")]);
    run(&["--mode", "gan2", "--init-from", &p(dir, "xe"), "--episodes", "2", "--alt-period", "1", "--out", &p(dir, "gan")]);
    run(&["--mode", "metric-rl", "--metric", "cider", "--init-from", &p(dir, "xe"), "--episodes", "2", "--out", &p(dir, "rl")]);
    arel(&["eval", "--checkpoint", &p(dir, "arel"), "--data", &test, "--out-dir", &p(dir, "eval")]);
    arel(&["sample", "--checkpoint", &p(dir, "arel"), "--data", &test, "--out", &p(dir, "samples.tsv"), "--limit", "3"]);
    arel(&[
        "reward-report", "--checkpoint", &p(dir, "arel"), "--data", &test, "--out", &p(dir, "rr.csv"),
        "--generator", "sample", "--untrained-policy", "--seed", "3",
    ]);
    arel(&["attack", "--data", &test, "--metric", "rouge-l", "--budget", "50", "--seed", "2", "--out", &p(dir, "attack.txt")]);
    let ratio = arel(&["stats", "--data", &train, "--set-a", "he", "--set-b", "she"]);
    assert!(ratio.starts_with("ratio="));
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn same_seed_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = pipeline(a.path());
    let fb = pipeline(b.path());
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    for want in ["arel/policy.bin", "arel/reward.bin", "arel.log", "eval/metrics.csv", "rr.csv", "attack.txt", "xe.log"] {
        assert!(names.contains(&want), "missing {want} in {names:?}");
    }
    assert_eq!(fa.len(), fb.len());
    for ((na, da), (nb, db)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert!(da == db, "{na} differs between runs");
    }
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_arel"))
        .args(["train", "--mode", "arel", "--data", "/nonexistent.tsv", "--out", "/tmp/x"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    let out = Command::new(env!("CARGO_BIN_EXE_arel")).args(["attack", "--metric", "spice"]).output().unwrap();
    assert!(!out.status.success());
}
