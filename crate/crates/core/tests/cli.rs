use std::path::Path;
use std::process::{Command, Output};

fn surgery(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surgery")).current_dir(dir).args(args).output().unwrap()
}

fn edit_json(path: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(surgery(d, &["build", "hgp", "--b", "hamming3", "--d", "hamming3T", "--out", "code.json"])
        .status
        .success());
    let run = surgery(d, &["--seed", "1", "surger", "--code", "code.json", "--rows", "0", "--out-dir", "out"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(surgery(d, &["verify", "--diagram", "out/diagram.json"]).status.code(), Some(0));

    std::fs::copy(d.join("out/diagram.json"), d.join("bad.json")).unwrap();
    edit_json(&d.join("bad.json"), |v| {
        let row = v["gamma0"]["rows"][0].as_array_mut().unwrap();
        if row.first().and_then(|x| x.as_u64()) == Some(0) {
            row.remove(0);
        } else {
            row.insert(0, 0.into());
        }
    });
    let bad = surgery(d, &["verify", "--diagram", "bad.json"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("commutation violations: [(0,"));

    std::fs::copy(d.join("out/diagram.json"), d.join("missing.json")).unwrap();
    edit_json(&d.join("missing.json"), |v| {
        v.as_object_mut().unwrap().remove("gamma1");
    });
    assert_eq!(surgery(d, &["verify", "--diagram", "missing.json"]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        surgery(d, &["build", "hgp", "--b", "nonsense", "--d", "rep3", "--out", "x.json"]).status.code(),
        Some(2)
    );
    assert_eq!(surgery(d, &["report", "--params", "144,12"]).status.code(), Some(2));
    assert_eq!(surgery(d, &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn report_from_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = surgery(dir.path(), &["report", "--params", "144,12,12,288", "--t", "9", "--csv", "t.csv"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(4).unwrap().starts_with("high_rate,144,12,12,9,432,1,"));
}

#[test]
fn resuming_a_finished_run_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(surgery(d, &["build", "hgp", "--b", "hamming3", "--d", "hamming3T", "--out", "code.json"])
        .status
        .success());
    assert!(surgery(d, &["--seed", "2", "surger", "--code", "code.json", "--random", "3", "--out-dir", "a"])
        .status
        .success());
    let resumed = surgery(
        d,
        &["surger", "--code", "code.json", "--random", "3", "--resume", "a/checkpoint.json", "--out-dir", "b"],
    );
    assert!(resumed.status.success());
    for f in ["diagram.json", "merged.json", "report.json", "checkpoint.json"] {
        assert_eq!(std::fs::read(d.join("a").join(f)).unwrap(), std::fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    let other_seed = surgery(
        d,
        &[
            "--seed",
            "3",
            "surger",
            "--code",
            "code.json",
            "--random",
            "3",
            "--resume",
            "a/checkpoint.json",
            "--out-dir",
            "c",
        ],
    );
    assert_eq!(other_seed.status.code(), Some(2));
}
