use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("canheights-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canheights")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn read(dir: &Path, file: &str) -> Vec<u8> {
    std::fs::read(dir.join(file)).unwrap()
}

#[test]
fn malformed_system_exits_2_with_field() {
    let dir = scratch("bad");
    let bad = dir.join("bad.json");
    let text = std::fs::read_to_string(fixture("e3.json")).unwrap().replace("\"iters\": 8", "\"iters\": 0");
    assert!(text.contains("\"iters\": 0"), "fixture layout changed");
    std::fs::write(&bad, text).unwrap();
    let out = run(&["--out", dir.join("run").to_str().unwrap(), "characters", "--system", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["error"], "config");
    assert_eq!(v["field"], "iters");
}

#[test]
fn bad_flag_value_exits_2() {
    let out = run(&["height", "--curve", fixture("e3.json").to_str().unwrap(), "--point", "-1,2", "--iters", "many"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["field"], "iters");
}

#[test]
fn point_off_curve_is_a_config_error() {
    let dir = scratch("curve");
    let curve = dir.join("curve.json");
    std::fs::write(&curve, r#"{"curve": ["0", "0", "1", "-1", "0"]}"#).unwrap();
    let out = run(&["--out", dir.join("run").to_str().unwrap(), "height", "--curve", curve.to_str().unwrap(), "--point", "1,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["field"], "point");
}

#[test]
fn same_out_dir_gives_identical_files() {
    let dir = scratch("repeat");
    let out_dir = dir.join("run");
    let system = fixture("e3.json");
    let args = ["--out", out_dir.to_str().unwrap(), "--seed", "3", "alpha", "--system", system.to_str().unwrap(), "--g", "A", "--point", "P_mixed"];
    assert!(run(&args).status.success());
    let first: Vec<Vec<u8>> = ["manifest.json", "result.json", "table.csv"].iter().map(|f| read(&out_dir, f)).collect();
    assert!(run(&args).status.success());
    let second: Vec<Vec<u8>> = ["manifest.json", "result.json", "table.csv"].iter().map(|f| read(&out_dir, f)).collect();
    assert_eq!(first, second);
    let result: Value = serde_json::from_slice(&first[1]).unwrap();
    assert_eq!(result["seed"], 3);
}

#[test]
fn surface_orbit_and_enumeration() {
    let dir = scratch("surface");
    let out = run(&["--out", dir.join("orbit").to_str().unwrap(), "orbit", "--surface", fixture("wehler.json").to_str().unwrap(), "--point", "1,1,0;3,-1,-1", "--steps", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let out = run(&["--out", dir.join("enum").to_str().unwrap(), "enumerate", "--surface", fixture("wehler.json").to_str().unwrap(), "--bound", "2"]);
    assert!(out.status.success());
    let csv = String::from_utf8(read(&dir.join("enum"), "table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10, "{csv}");
}

#[test]
fn verify_passes_on_both_fixtures() {
    for name in ["e3.json", "wehler.json"] {
        let dir = scratch(&format!("verify-{name}"));
        let out = run(&["--out", dir.to_str().unwrap(), "verify", "--system", fixture(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}
