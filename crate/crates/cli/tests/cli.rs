use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use landing_core::sim::{io, SimResult, Verdict};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args)
        .output()
        .expect("spawn sim")
}

fn ok(args: &[&str]) -> String {
    let out = sim(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn repo_file(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> (PathBuf, String) {
    let p = dir.path().join(name);
    let s = p.to_string_lossy().into_owned();
    (p, s)
}

#[test]
fn run_then_replay_reproduces_events() {
    let dir = tempfile::tempdir().unwrap();
    let (_, det) = tmp(&dir, "det.jsonl");
    let (res_p, res) = tmp(&dir, "result.json");
    let (ev_p, ev) = tmp(&dir, "events.jsonl");
    let (traj_p, traj) = tmp(&dir, "traj.csv");
    let stdout = ok(&[
        "run",
        "--scenario",
        &repo_file("baseline.json"),
        "--seed",
        "3",
        "--record-detections",
        &det,
        "--out",
        &res,
        "--trajectory-csv",
        &traj,
    ]);
    assert!(stdout.starts_with("verdict=SAFE_LANDED"));
    let result: SimResult =
        serde_json::from_str(&std::fs::read_to_string(&res_p).unwrap()).unwrap();
    assert_eq!(result.verdict, Verdict::SafeLanded);
    assert!(std::fs::read_to_string(traj_p)
        .unwrap()
        .starts_with("t,l1_x,l1_y,l1_z,l2_x,l2_y,l2_z,separation_m,mode\n"));

    ok(&[
        "replay",
        "--log",
        &det,
        "--monitor",
        &repo_file("monitor.json"),
        "--out",
        &ev,
    ]);
    let events =
        io::read_event_log(std::io::BufReader::new(std::fs::File::open(ev_p).unwrap())).unwrap();
    assert_eq!(events, result.events);
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let (a_p, a) = tmp(&dir, "a.json");
    let (b_p, b) = tmp(&dir, "b.json");
    ok(&[
        "run",
        "--scenario",
        &repo_file("baseline.json"),
        "--seed",
        "5",
        "--out",
        &a,
    ]);
    ok(&[
        "run",
        "--scenario",
        &repo_file("baseline.json"),
        "--seed",
        "5",
        "--out",
        &b,
    ]);
    assert_eq!(std::fs::read(a_p).unwrap(), std::fs::read(b_p).unwrap());
}

#[test]
fn calibrate_recovers_intrinsics() {
    let dir = tempfile::tempdir().unwrap();
    let (_, views) = tmp(&dir, "views.jsonl");
    let (k_p, k) = tmp(&dir, "k.json");
    ok(&[
        "synth-views",
        "--intrinsics",
        &repo_file("intrinsics.json"),
        "--count",
        "4",
        "--out",
        &views,
    ]);
    ok(&["calibrate", "--views", &views, "--out", &k]);
    let est: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(k_p).unwrap()).unwrap();
    for (key, want) in [("fx", 1000.0), ("fy", 1000.0), ("cx", 640.0), ("cy", 480.0)] {
        let got = est[key].as_f64().unwrap();
        assert!((got - want).abs() / want < 1e-6, "{key}: {got}");
    }
}

#[test]
fn sweep_writes_one_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (csv_p, csv) = tmp(&dir, "sweep.csv");
    let stdout = ok(&[
        "sweep",
        "--scenario",
        &repo_file("baseline.json"),
        "--seeds",
        "4",
        "--out",
        &csv,
    ]);
    assert_eq!(stdout.trim(), "4/4 SAFE_LANDED");
    let text = std::fs::read_to_string(csv_p).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with(
        "seed,verdict,min_separation,wait_start,landing_detected_t,level2_touchdown_t\n"
    ));
}

#[test]
fn ablation_reports_collision() {
    let stdout = ok(&["run", "--scenario", &repo_file("crossing_ablation.json")]);
    assert!(stdout.starts_with("verdict=COLLISION"), "{stdout}");
}

#[test]
fn bad_inputs_fail_cleanly() {
    let out = sim(&["run", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: opening"));

    let dir = tempfile::tempdir().unwrap();
    let (log_p, log) = tmp(&dir, "log.jsonl");
    std::fs::write(log_p, "{\"t\":2.0,\"dets\":[]}\n{\"t\":1.0,\"dets\":[]}\n").unwrap();
    let (_, ev) = tmp(&dir, "ev.jsonl");
    let out = sim(&[
        "replay",
        "--log",
        &log,
        "--monitor",
        &repo_file("monitor.json"),
        "--out",
        &ev,
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = sim(&[
        "sweep",
        "--scenario",
        &repo_file("baseline.json"),
        "--seeds",
        "0",
        "--out",
        &ev,
    ]);
    assert_eq!(out.status.code(), Some(1));
}
