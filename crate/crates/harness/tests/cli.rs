use std::fs;
use std::process::{Command, Output};

fn deepc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deepc")).args(args).output().unwrap()
}

const TINY: &str = "
strategies = [\"pm\", \"au\"]
excitation_bound = 0.25
episode_length = 20
runs = 2

[reference]
ramp_up = 0.05
hold = 0.05
ramp_down = 0.05
";

#[test]
fn collect_then_rank_scan() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    let out = deepc(&["collect", "--steps", "55", "--bound", "0.25", "--out", csv.to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("trajectory_id,u1,u2,y1,y2"));
    assert_eq!(text.lines().count(), 56);

    let out = deepc(&["rank-scan", "--data", csv.to_str().unwrap(), "--rank", "32"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = stdout.lines().collect();
    assert_eq!(rows[0], "index,singular_value");
    // 56 x 42 data matrix.
    assert_eq!(rows.len(), 43);
    let values: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
    assert!(String::from_utf8(out.stderr).unwrap().contains("rank 32"));
}

#[test]
fn run_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, TINY).unwrap();
    let out_dir = dir.path().join("out");
    let out = deepc(&[
        "run", "--config", cfg.to_str().unwrap(), "--strategy", "pm", "--runs", "1", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().nth(1).unwrap().starts_with("pm,1,0,"));
    assert!(out_dir.join("episodes/pm_0000.jsonl").is_file());
    assert_eq!(fs::read_to_string(out_dir.join("costs.csv")).unwrap().lines().count(), 2);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[controller]\nhorizon = 3\n").unwrap();
    let out = deepc(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = deepc(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    // A strategy list without au must not carry an excitation bound.
    fs::write(&cfg, "strategies = [\"pm\"]\nexcitation_bound = 0.1\n").unwrap();
    assert_eq!(deepc(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = deepc(&["rank-scan", "--data", dir.path().join("none.csv").to_str().unwrap(), "--rank", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let csv = dir.path().join("short.csv");
    fs::write(&csv, "trajectory_id,u1,y1\n0,1,2\n0,2,3\n").unwrap();
    let out = deepc(&["rank-scan", "--data", csv.to_str().unwrap(), "--rank", "1", "--depth", "5"]);
    assert_eq!(out.status.code(), Some(2));
}
