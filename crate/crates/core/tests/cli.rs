//! The `gflame` binary: configuration errors, exit codes and reproducible
//! artifacts.

use std::fs;
use std::path::Path;
use std::process::Command;

fn gflame(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gflame"))
        .args(args)
        .env_remove("SEED")
        .output()
        .expect("binary runs")
}

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"subcommand": "mintime", "field": "zero", "h": 0.02, "L": 2, "stepsize": 3}"#).unwrap();
    let o = gflame(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stepsize"), "{}", stderr(&o));
}

#[test]
fn grid_invariant_and_domain_of_dependence_exit_2() {
    let o = gflame(&["mintime", "--h", "0.1", "--L", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid invariant"), "{}", stderr(&o));
    let o = gflame(&["mintime", "--field", "cellular", "--A", "2", "--h", "0.02", "--L", "2", "--T", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("domain of dependence"), "{}", stderr(&o));
}

#[test]
fn bad_seed_variable_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_gflame"))
        .args(["mintime", "--h", "0.05", "--L", "1"])
        .env("SEED", "minus one")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SEED"));
}

#[test]
fn mintime_passes_and_embeds_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gflame(&["mintime", "--field", "zero", "--h", "0.05", "--L", "1", "--seed", "7", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let all = files(dir.path());
    assert!(!all.is_empty());
    for (name, bytes) in all {
        let s = String::from_utf8_lossy(&bytes);
        assert!(s.contains("config_hash") && s.contains("seed") && s.contains("gflame "), "{name}");
        if name.ends_with(".csv") {
            assert!(s.starts_with("# config_hash="), "{name}");
            let data: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
            let cols = data[0].split(',').count();
            assert!(data.iter().all(|l| l.split(',').count() == cols), "{name}: ragged rows");
        }
    }
}

#[test]
fn reruns_are_bit_identical_for_any_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |out: &str, threads: &str| {
        vec![
            "timeconst".to_string(),
            "--field".into(),
            "random_phase".into(),
            "--A".into(),
            "0.5".into(),
            "--directions".into(),
            "8".into(),
            "--radii".into(),
            "2,3".into(),
            "--h".into(),
            "0.0625".into(),
            "--seed".into(),
            "11".into(),
            "--threads".into(),
            threads.into(),
            "--out".into(),
            out.into(),
        ]
    };
    let run = |out: &str, threads: &str| {
        let v = args(out, threads);
        let r: Vec<&str> = v.iter().map(|s| s.as_str()).collect();
        let o = gflame(&r);
        assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", stderr(&o));
    };
    run(a.path().to_str().unwrap(), "1");
    run(b.path().to_str().unwrap(), "2");
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.iter().map(|f| &f.0).collect::<Vec<_>>(), fb.iter().map(|f| &f.0).collect::<Vec<_>>());
    // neither the thread count nor the output directory enters the config hash
    assert!(fa == fb, "artifacts differ between runs");
    run(a.path().to_str().unwrap(), "1");
    assert!(files(a.path()) == fa, "rerun did not overwrite identically");
}

#[test]
fn failing_verdicts_exit_1() {
    // a single 10-sample counterexample run cannot show the growth of the running mean
    let dir = tempfile::tempdir().unwrap();
    let o = gflame(&["counterexample", "--n", "10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
