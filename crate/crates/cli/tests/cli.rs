use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn hqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hqe")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hqe-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &PathBuf, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const DECAY: &str = "kind = \"decay-fit\"\nid = \"slopes\"\n\n[grid]\nn = [0]\n";

#[test]
fn validate_prints_the_hash() {
    let dir = scratch("validate");
    let cfg = write(&dir, "ok.toml", DECAY);
    let out = hqe(&["validate", &cfg]);
    assert!(out.status.success());
    let line = String::from_utf8(out.stdout).unwrap();
    assert!(line.starts_with("ok slopes kind=decay-fit hash="), "{line}");

    let bad = write(&dir, "bad.toml", "kind = \"decay-fit\"\n[grid]\nrr = [1.0]\n");
    let out = hqe(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("grid.rr"));
}

#[test]
fn run_then_report() {
    let dir = scratch("run");
    let cfg = write(&dir, "decay.toml", DECAY);
    let json = dir.join("out/report.json");
    let csv = dir.join("out/report.csv");
    let out = hqe(&["run", &cfg, "--json", json.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stderr).unwrap().contains("slopes: 2/2 records pass"));
    let written = fs::read_to_string(&csv).unwrap();
    assert!(written.starts_with("experiment_id,params_json,metric,value,tolerance,pass\n"));

    let out = hqe(&["report", json.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), written);

    let out = hqe(&["report", json.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["experiment_id"], "slopes");
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn failing_assertions_exit_one() {
    let dir = scratch("fail");
    // a zero tolerance on a fitted slope cannot pass
    let cfg = write(&dir, "strict.toml", &format!("{DECAY}\n[tolerances]\nslope-deviation = 0.0\n"));
    let json = dir.join("strict.json");
    let out = hqe(&["run", &cfg, "--json", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("FAIL"));
    let out = hqe(&["report", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unusable_input_exits_two() {
    let dir = scratch("unusable");
    let missing = dir.join("nope.toml");
    assert_eq!(hqe(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
    let junk = write(&dir, "junk.json", "{\"schema_version\": 1}");
    assert_eq!(hqe(&["report", &junk]).status.code(), Some(2));
    assert_eq!(hqe(&["bogus"]).status.code(), Some(2));
}
