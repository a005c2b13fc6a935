use std::fs;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::thread::sleep;
use std::time::{Duration, Instant};

use wipelab::config::{Preset, RunConfig};

fn wipelab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wipelab"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    wipelab().args(args).output().unwrap()
}

fn tiny_config(dir: &Path, budget: u64) -> std::path::PathBuf {
    let mut c = RunConfig::for_preset(Preset::BoundedLlmCurr);
    c.seeds = vec![3];
    c.train.total_steps = budget;
    c.train.rollout_length = 512;
    c.train.minibatches = 4;
    c.train.epochs = 4;
    c.train.hidden = vec![16, 16];
    c.curriculum.warmup_steps = 2048;
    c.curriculum.cadence_steps = 1024;
    c.curriculum.eval_episodes = 6;
    c.final_eval_episodes = 4;
    let path = dir.join("tiny.json");
    fs::write(&path, c.to_json().unwrap()).unwrap();
    path
}

fn metrics_lines(run: &Path) -> usize {
    fs::read_to_string(run.join("seed-3/metrics.jsonl"))
        .map(|t| t.lines().count())
        .unwrap_or(0)
}

#[test]
fn invalid_feasibility_input_is_a_config_error() {
    let out = run(&["analyze-feasibility", "--poor-ratio", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["analyze-feasibility", "--t1", "30", "--t2", "25"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn feasibility_text_report() {
    let out = run(&["analyze-feasibility"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dominant Dominant(Forever)"));
    assert!(text.contains("naive intersection empty: true"));
}

#[test]
fn missing_checkpoint_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("none.bin");
    let out = run(&["evaluate", "--checkpoint", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["train", "--bogus"]).status.code(), Some(2));
}

#[test]
fn train_refuses_to_overwrite_and_force_replaces() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), 4096);
    let dir = tmp.path().join("run");
    let args = ["train", "--config", cfg.to_str().unwrap(), "--run-dir", dir.to_str().unwrap()];
    let first = run(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    for f in ["config.json", "summary.json", "summary.txt", "seed-3/final.json", "seed-3/checkpoints/final.bin"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let before = fs::read(dir.join("seed-3/metrics.jsonl")).unwrap();

    let again = run(&args);
    assert_eq!(again.status.code(), Some(2));
    assert_eq!(fs::read(dir.join("seed-3/metrics.jsonl")).unwrap(), before);

    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(run(&forced).status.success());
    assert_eq!(fs::read(dir.join("seed-3/metrics.jsonl")).unwrap(), before);

    // the saved policy evaluates through the CLI
    let ck = dir.join("seed-3/checkpoints/final.bin");
    let out = run(&["evaluate", "--checkpoint", ck.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--episodes", "2"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_episodes"], 2);
}

#[test]
fn interrupted_run_resumes_to_the_same_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), 32_768);
    let whole = tmp.path().join("whole");
    let out = run(&["train", "--config", cfg.to_str().unwrap(), "--run-dir", whole.to_str().unwrap()]);
    assert!(out.status.success());

    let cut = tmp.path().join("cut");
    let mut child = wipelab()
        .args(["train", "--config", cfg.to_str().unwrap(), "--run-dir", cut.to_str().unwrap()])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let started = Instant::now();
    while metrics_lines(&cut) < 3 && started.elapsed() < Duration::from_secs(120) {
        sleep(Duration::from_millis(20));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(!cut.join("seed-3/final.json").exists(), "run finished before it could be interrupted");

    let out = run(&["train", "--resume", "--run-dir", cut.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["seed-3/metrics.jsonl", "seed-3/weights.jsonl", "seed-3/final.json"] {
        assert_eq!(fs::read(whole.join(f)).unwrap(), fs::read(cut.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn advise_replays_a_logged_iteration() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), 6144);
    let dir = tmp.path().join("run");
    assert!(run(&["train", "--config", cfg.to_str().unwrap(), "--run-dir", dir.to_str().unwrap()]).status.success());
    let metrics = dir.join("seed-3/metrics.jsonl");
    let out = run(&["advise", "--history", metrics.to_str().unwrap(), "--iteration", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["iteration"], 2);
    assert_eq!(v["matches_recorded"], true);
}

#[test]
fn replay_and_plot_write_svgs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), 4096);
    let dir = tmp.path().join("run");
    assert!(run(&["train", "--config", cfg.to_str().unwrap(), "--run-dir", dir.to_str().unwrap()]).status.success());
    let trace = dir.join("seed-3/traces/final-000.csv");
    let out_dir = tmp.path().join("replay");
    let out = run(&["replay", "--trace", trace.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(fs::read_to_string(out_dir.join("final-000-path.svg")).unwrap().starts_with("<svg"));
    let out = run(&["plot", "--run-dir", dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains(".svg"));
}
