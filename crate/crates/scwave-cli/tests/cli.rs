use std::path::Path;
use std::process::{Command, Output};

use scwave_cli::config::RunConfig;

fn scwave(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scwave"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn thresholds_writes_csv_and_meta() {
    let tmp = tempfile::tempdir().unwrap();
    let out = scwave(tmp.path(), &["thresholds", "--ensemble", "3,6", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(tmp.path(), "o/thresholds.csv");
    assert!(csv.lines().count() >= 2);
    let meta: serde_json::Value = serde_json::from_str(&read(tmp.path(), "o/meta.json")).unwrap();
    assert_eq!(meta["tool"], "scwave");
    assert_eq!(meta["config"]["command"], "thresholds");
    assert!(meta["outputs"].as_array().unwrap().iter().any(|f| f == "thresholds.csv"));
}

#[test]
fn meta_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = scwave(tmp.path(), &["velocity", "--eps", "0.46", "--w", "5", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_str(&read(tmp.path(), "o/meta.json")).unwrap();
    let text = serde_json::to_string(&meta["config"]).unwrap();
    let cfg = RunConfig::from_canonical(&text).unwrap();
    assert_eq!(cfg.args.w, 5);
    assert_eq!(RunConfig::from_canonical(&cfg.canonical()).unwrap().canonical(), cfg.canonical());
}

#[test]
fn bad_arguments_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(scwave(tmp.path(), &["velocity", "--eps", "1.5"]).status.code(), Some(2));
    assert_eq!(scwave(tmp.path(), &["velocity", "--hz", "0.3"]).status.code(), Some(2));
    assert_eq!(scwave(tmp.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(scwave(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn velocity_summary_reports_wave_speed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = scwave(tmp.path(), &["velocity", "--eps", "0.46", "--out", "o"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("v="), "{text}");
    let shape = read(tmp.path(), "o/shape.csv");
    assert!(shape.lines().count() > 100);
}
