use std::path::Path;
use std::process::Command;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use cutlab_cli::run::MANIFEST;
use cutlab_cli::{run_experiment, run_experiment_with_cancel, validate_config_with, ExperimentConfig, Overrides, RunError, RunManifest};

fn config(raw: &str, out: &Path, workers: usize) -> ExperimentConfig {
    let over = Overrides {
        out: Some(out.to_path_buf()),
        workers: Some(workers),
        ..Overrides::default()
    };
    validate_config_with(raw, &over).unwrap_or_else(|e| panic!("{e}"))
}

fn leftovers(dir: &Path) -> Vec<String> {
    std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect()
}

const RUIN: &str = "kind = \"ruin\"\nd = 2\nseed = 11\ntrials = 100000\n[ruin]\nk = [2]\nl = [2]\n";

#[test]
fn ruin_row_carries_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ruin");
    let m = run_experiment(&config(RUIN, &out, 2)).unwrap();
    let csv = std::fs::read_to_string(out.join("ruin.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# cutlab.ruin.v1"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("p_formula").parse::<f64>().unwrap(), 0.5);
    assert_eq!(col("trials"), "100000");
    assert!(col("z_score").parse::<f64>().unwrap().abs() < 4.0);
    assert!(m.verify(&out).unwrap().is_empty());
    let on_disk: RunManifest = serde_json::from_slice(&std::fs::read(out.join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(on_disk, m);
}

#[test]
fn repeated_and_parallel_runs_match() {
    let raw = "kind = \"moments\"\nd = 2\nseed = 5\ntrials = 600\n[moments]\nscales = [8, 16, 32]\n";
    let tmp = tempfile::tempdir().unwrap();
    let a = run_experiment(&config(raw, &tmp.path().join("a"), 1)).unwrap();
    let b = run_experiment(&config(raw, &tmp.path().join("b"), 1)).unwrap();
    let c = run_experiment(&config(raw, &tmp.path().join("c"), 8)).unwrap();
    assert_eq!(a.digests(), b.digests());
    assert_eq!(a.digests(), c.digests());
    assert_eq!(a.rows, c.rows);
    assert_eq!(c.workers, 8);
}

#[test]
fn existing_output_is_not_touched() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("taken");
    std::fs::create_dir(&out).unwrap();
    std::fs::write(out.join("keep.txt"), "x").unwrap();
    let err = run_experiment(&config(RUIN, &out, 1)).unwrap_err();
    assert!(matches!(err, RunError::OutputExists(_)));
    assert_eq!(leftovers(&out), ["keep.txt"]);
}

#[test]
fn runtime_failure_leaves_nothing() {
    // The cut ball at scale s = 1 around this point contains the origin.
    let raw = "kind = \"cutball\"\nd = 2\nseed = 1\ntrials = 10\n[cutball]\nscales = [1]\npoints = [[0.1, 0.0]]\n";
    let tmp = tempfile::tempdir().unwrap();
    let err = run_experiment(&config(raw, &tmp.path().join("cb"), 2)).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(leftovers(tmp.path()).is_empty());
}

#[test]
fn cancelled_run_leaves_nothing() {
    let raw = "kind = \"moments\"\nd = 3\nseed = 1\ntrials = 100000\n[moments]\nscales = [64]\n";
    let tmp = tempfile::tempdir().unwrap();
    let flag = Arc::new(AtomicBool::new(true));
    let err = run_experiment_with_cancel(&config(raw, &tmp.path().join("m"), 2), Some(flag)).unwrap_err();
    assert!(matches!(err, RunError::Simulation(cutlab_core::Error::Cancelled)));
    assert!(leftovers(tmp.path()).is_empty());
}

fn cutlab(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cutlab")).args(args).current_dir(dir).env_remove("CUTLAB_WORKERS").output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("empty.toml"), "").unwrap();
    std::fs::write(dir.join("ruin.toml"), RUIN.replace("100000", "2000")).unwrap();
    std::fs::write(
        dir.join("bad.toml"),
        "kind = \"cutball\"\nd = 2\nseed = 1\ntrials = 10\n[cutball]\nscales = [1]\npoints = [[0.1, 0.0]]\n",
    )
    .unwrap();

    let o = cutlab(&["ruin", "--config", "empty.toml"], dir);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`d`") && err.contains("`seed`"), "{err}");

    let o = cutlab(&["xi", "--config", "ruin.toml"], dir);
    assert_eq!(o.status.code(), Some(2));

    let o = cutlab(&["cutball", "--config", "bad.toml", "--out", "cb"], dir);
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.join("cb").exists());

    let o = cutlab(&["ruin", "--config", "ruin.toml", "--out", "r", "--workers", "3", "--seed", "9"], dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m: RunManifest = serde_json::from_slice(&std::fs::read(dir.join("r").join(MANIFEST)).unwrap()).unwrap();
    assert_eq!((m.seed, m.workers), (9, 3));

    let o = Command::new(env!("CARGO_BIN_EXE_cutlab"))
        .args(["ruin", "--config", "ruin.toml", "--check"])
        .current_dir(dir)
        .env("CUTLAB_WORKERS", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let cfg: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cfg["workers"], 5);
}
