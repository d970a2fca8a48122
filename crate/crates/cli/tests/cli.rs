use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn core_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn blens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blens"))
        .args(args)
        .env_remove("BLENS_SEED")
        .output()
        .expect("run blens")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn without_clock(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_clock_ms");
    v
}

#[test]
fn sprinkler_inference() {
    let path = core_fixture("sprinkler.blens");
    let out = blens(&["infer", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "{rain: 9/13, dry: 4/13}");

    let out = blens(&["infer", path.to_str().unwrap(), "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["results"][0]["result"]["posterior"]["masses"]["rain"], "9/13");

    let out = blens(&["infer", path.to_str().unwrap(), "--numeric", "float"]);
    assert!(stdout(&out).starts_with("{rain: 0.692307692307"), "{}", stdout(&out));
}

#[test]
fn query_selection_is_one_based() {
    let path = core_fixture("chain.blens");
    let out = blens(&["infer", path.to_str().unwrap(), "--query", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "{rain: 17/29, dry: 12/29}");
    let out = blens(&["infer", path.to_str().unwrap(), "--query", "9"]);
    assert_eq!(out.status.code(), Some(2));
    let all = blens(&["infer", path.to_str().unwrap()]);
    assert_eq!(stdout(&all).matches('[').count(), 5);
}

#[test]
fn exit_codes_follow_the_contract() {
    let run = |name: &str| blens(&["check", fixture(name).to_str().unwrap()]);
    let syntax = run("malformed.blens");
    assert_eq!(syntax.status.code(), Some(1));
    assert!(stderr(&syntax).contains("malformed.blens:2:9: syntax error"), "{}", stderr(&syntax));

    let invalid = run("unnormalized.blens");
    assert_eq!(invalid.status.code(), Some(2));
    assert!(stderr(&invalid).contains("2:7"), "{}", stderr(&invalid));

    let mismatch = run("mismatch.blens");
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(stderr(&mismatch).contains("4:11"), "{}", stderr(&mismatch));

    let zero = blens(&["infer", fixture("zero_mass.blens").to_str().unwrap()]);
    assert_eq!(zero.status.code(), Some(3));
    assert!(stderr(&zero).contains("{heads: 1}"), "{}", stderr(&zero));

    let missing = blens(&["check", "no/such/file.blens"]);
    assert_eq!(missing.status.code(), Some(2));

    let ok = blens(&["check", core_fixture("chain.blens").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("OK: 4 spaces, 2 priors, 4 channels, 5 queries"));
}

#[test]
fn verify_reports_and_reproduces() {
    let args = ["verify", "--trials", "16", "--format", "json"];
    let a = blens(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let va = json(&a);
    assert_eq!(va["command"], "verify");
    assert_eq!(va["config"]["seed"], 42);
    assert_eq!(va["checks"][0]["passed"], 16);
    assert_eq!(va["checks"][0]["max_gap"], "0");
    assert!(va.get("wall_clock_ms").is_some());

    let serial = blens(&["verify", "--trials", "16", "--format", "json", "--serial"]);
    assert_eq!(without_clock(va.clone()), without_clock(json(&serial)));

    let seeded = Command::new(env!("CARGO_BIN_EXE_blens"))
        .args(args)
        .env("BLENS_SEED", "7")
        .output()
        .unwrap();
    let vs = json(&seeded);
    assert_eq!(vs["config"]["seed"], 7);
    assert_ne!(without_clock(vs), without_clock(va));

    let float = blens(&["verify", "--trials", "16", "--numeric", "float"]);
    assert_eq!(float.status.code(), Some(0));
    assert!(stdout(&float).contains("numeric=float"));
}

#[test]
fn laws_command() {
    let out = blens(&["laws", "--trials", "40", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    let check = |name: &str| {
        v["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == name)
            .unwrap()
            .clone()
    };
    assert_eq!(check("getput")["passed"], 40);
    assert_eq!(check("putput_counterexample")["failed"], 1);

    let det = blens(&["laws", "--trials", "40", "--deterministic"]);
    assert_eq!(det.status.code(), Some(0));
    assert!(stdout(&det).contains("\"NotFound\""), "{}", stdout(&det));

    let file = blens(&["laws", core_fixture("chain.blens").to_str().unwrap()]);
    assert_eq!(file.status.code(), Some(0));
    assert!(stdout(&file).contains("GetPut: holds"));
}

#[test]
fn export_formats() {
    let path = core_fixture("chain.blens");
    let out = blens(&["export", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["spaces"]["Sky"][0], "(rain,rain)");
    assert_eq!(v["channels"]["commute"]["dom"], serde_json::json!(["rain", "dry"]));

    let text = blens(&["export", path.to_str().unwrap()]);
    let printed = stdout(&text);
    assert!(printed.starts_with("# `c >> d` runs c first"));
    assert!(printed.contains("space Sky = Weather * Weather"));
}

#[test]
fn config_is_validated() {
    assert_eq!(blens(&["verify", "--max-dim", "1"]).status.code(), Some(2));
    assert_eq!(blens(&["verify", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(blens(&["verify", "--numeric", "decimal"]).status.code(), Some(2));
}
