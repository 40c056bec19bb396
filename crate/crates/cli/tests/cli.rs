use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ctrlz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctrlz"))
        .args(args)
        .env_remove("CTRLZ_SEED")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn compare(a: &str, b: &str) -> String {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (write(dir.path(), "a.txt", a), write(dir.path(), "b.txt", b));
    let out = ctrlz(&["compare", &a, &b, "--comparator", "mann_whitney"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

#[test]
fn compare_examples() {
    assert_eq!(compare("3\n4\n5\n", "0\n1\n2\n"), "1.000000");
    assert_eq!(compare("5\n5\n5\n", "5\n5\n5\n"), "0.000000");
    // Identical but non-constant files still win the off-diagonal pairs.
    assert_eq!(compare("1\n2\n3\n", "1\n2\n3\n"), "0.333333");
    assert_eq!(compare("2\n0\n", "1\n3\n"), "0.250000");
}

#[test]
fn compare_other_comparators() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.txt", "1\n2\n3\n");
    let b = write(dir.path(), "b.txt", "0\n2\n4\n");
    let out = ctrlz(&["compare", &a, &b, "--comparator", "gaussian"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0.500000");
    let out = ctrlz(&["compare", &a, &b, "--comparator", "mean"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1.000000");
}

#[test]
fn unparseable_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.txt", "1\nabc\n");
    let b = write(dir.path(), "b.txt", "1\n");
    assert_eq!(ctrlz(&["compare", &a, &b]).status.code(), Some(2));
    let empty = write(dir.path(), "e.txt", "\n");
    assert_eq!(ctrlz(&["compare", &empty, &b]).status.code(), Some(2));
    assert_eq!(ctrlz(&["compare", &b, &b, "--comparator", "median"]).status.code(), Some(2));
    assert_eq!(ctrlz(&["run", "--threshold", "1.5"]).status.code(), Some(2));
    assert_eq!(ctrlz(&["run", "--seeds", "9..2"]).status.code(), Some(2));
    assert_eq!(ctrlz(&["frobnicate"]).status.code(), Some(2));
    let cfg = write(dir.path(), "c.cfg", "colour = blue\n");
    assert_eq!(ctrlz(&["run", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn run_writes_artifacts_and_repeats_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let go = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = ctrlz(&[
            "run",
            "--env",
            "scripted",
            "--seeds",
            "0..2",
            "--total-episodes",
            "180",
            "--with-baseline",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        ["cycles.csv", "baseline_cycles.csv", "summary.json"].map(|f| fs::read(out_dir.join(f)).unwrap())
    };
    let a = go("a");
    assert_eq!(a, go("b"));
    let csv = String::from_utf8(a[0].clone()).unwrap();
    assert!(csv.starts_with("run_id,seed,threshold,comparator,cycle,phase,episode_index,episode_return"));
    // 3 seeds x 6 cycles x (30 train + 20 eval) rows plus the header.
    assert_eq!(csv.lines().count(), 1 + 3 * 6 * 50);
    let summary: serde_json::Value = serde_json::from_slice(&a[2]).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 3);
    assert_eq!(summary["baseline"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let cfg = write(
        dir.path(),
        "exp.cfg",
        "# scripted smoke run\nenv = scripted\nseeds = 4\ntotal_episodes = 60\nthreshold = 0.3\n",
    );
    let out = ctrlz(&["baseline", "--config", &cfg, "--total-episodes", "90", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    let run = &summary["baseline"][0];
    assert_eq!(run["seed"], 4);
    assert_eq!(run["cycles"], 3);
    assert_eq!(run["revert_count"], 0);
}

#[test]
fn sweep_and_hist() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("s");
    let out = ctrlz(&[
        "sweep",
        "--env",
        "scripted",
        "--seeds",
        "0..1",
        "--total-episodes",
        "240",
        "--thresholds",
        "0,0.1,0.5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);

    let csv = out_dir.join("cycles.csv");
    let csv = csv.to_str().unwrap();
    // Three thresholds share run id s0, so the threshold must be given.
    assert_eq!(ctrlz(&["hist", "--csv", csv, "--run-id", "s0", "--cycles", "1"]).status.code(), Some(2));
    let out = ctrlz(&["hist", "--csv", csv, "--run-id", "s0", "--threshold", "0.1", "--cycles", "1,2", "--bins", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let counts: u64 = report["cycles"][0]["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(counts, 20);
    let missing = ctrlz(&["hist", "--csv", csv, "--run-id", "s0", "--threshold", "0.1", "--cycles", "99"]);
    assert_eq!(missing.status.code(), Some(2));
}
