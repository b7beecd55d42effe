use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use relayfair::experiments::{CSV_HEADER, ORACLE_CSV_HEADER};
use relayfair::model::NetworkInstance;

fn relayfair(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relayfair"))
        .args(args)
        .current_dir(cwd)
        .env("RELAYFAIR_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Few users so every run is feasible.
const LIGHT: &str = r#"{"n_gnbs": 2, "relays_per_gnb": 2, "n_users": 40}"#;

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LIGHT);
    let out = relayfair(
        &["sweep", "--config", &cfg, "--kind", "relays", "--range", "1..2", "--runs", "3", "--seed", "4", "--out", "r.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    // 2 points x 3 runs x 2 allocators.
    assert_eq!(lines.count(), 12);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["sweep", "--kind", "relays", "--range", "1..2", "--runs", "1", "--out", "r.csv"];

    let missing = [&base[..], &["--config", "nope.json"]].concat();
    assert_eq!(relayfair(&missing, dir.path()).status.code(), Some(1));

    let cfg = write_config(dir.path(), "{not json");
    let broken = [&base[..], &["--config", &cfg]].concat();
    assert_eq!(relayfair(&broken, dir.path()).status.code(), Some(1));

    let cfg = write_config(dir.path(), r#"{"n_gnbs": 0}"#);
    let invalid = [&base[..], &["--config", &cfg]].concat();
    assert_eq!(relayfair(&invalid, dir.path()).status.code(), Some(1));

    let bad_kind = ["sweep", "--kind", "users", "--range", "1..2", "--out", "r.csv"];
    assert_eq!(relayfair(&bad_kind, dir.path()).status.code(), Some(1));

    let bad_range = ["sweep", "--kind", "gnbs", "--range", "5..2", "--out", "r.csv"];
    assert_eq!(relayfair(&bad_range, dir.path()).status.code(), Some(1));

    assert_eq!(relayfair(&["sweep"], dir.path()).status.code(), Some(1));
}

#[test]
fn strict_exits_two_on_infeasible_runs() {
    let dir = tempfile::tempdir().unwrap();
    // 600 users on one gNB with no relays cannot all get the 180 kHz floor.
    let cfg = write_config(dir.path(), r#"{"n_gnbs": 1, "relays_per_gnb": 0, "n_users": 600}"#);
    let args = ["sweep", "--config", &cfg, "--kind", "gnbs", "--range", "1..1", "--runs", "2", "--out", "r.csv"];
    assert_eq!(relayfair(&args, dir.path()).status.code(), Some(0));
    let strict = [&args[..], &["--strict"]].concat();
    assert_eq!(relayfair(&strict, dir.path()).status.code(), Some(2));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.trim_end(), CSV_HEADER);
}

#[test]
fn dump_instances_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LIGHT);
    let out = relayfair(
        &["sweep", "--config", &cfg, "--kind", "gnbs", "--range", "2..2", "--runs", "2", "--out", "r.csv", "--dump-instances", "inst"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = fs::read_dir(dir.path().join("inst"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["v2_run0_gnb0.json", "v2_run0_gnb1.json", "v2_run1_gnb0.json", "v2_run1_gnb1.json"]);
    // Relays pick the strongest gNB, so only the run total is fixed.
    let relays: usize = names[..2]
        .iter()
        .map(|n| {
            let text = fs::read_to_string(dir.path().join("inst").join(n)).unwrap();
            serde_json::from_str::<NetworkInstance>(&text).unwrap().relays.len()
        })
        .sum();
    assert_eq!(relays, 4);
}

#[test]
fn oracle_writes_companion_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_gnbs": 2, "relays_per_gnb": 2, "n_users": 10}"#);
    let out = relayfair(
        &["sweep", "--config", &cfg, "--kind", "relays", "--range", "1..2", "--runs", "2", "--out", "r.csv", "--oracle", "--oracle-points", "50"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let oracle = fs::read_to_string(dir.path().join("r_oracle.csv")).unwrap();
    let mut lines = oracle.lines();
    assert_eq!(lines.next(), Some(ORACLE_CSV_HEADER));
    assert!(lines.all(|l| l.ends_with(",true")), "{oracle}");
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = relayfair(&["sweep", "--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--dump-instances"));
}
