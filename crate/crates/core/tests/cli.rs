use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use firesite::instance::InstanceFile;
use firesite::io::{read_json, sha256_hex};
use firesite::pipeline::Manifest;

const FAST: &str = "seed = 3
calibration_runs = 2

[macro_ea]
population = 60
generations = 40

[micro_ea]
population = 60
generations = 40
";

fn demo_instance() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("demo/instance.json")
}

fn firesite(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_firesite")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn fast_config(dir: &Path) -> String {
    let p = dir.join("fast.toml");
    std::fs::write(&p, FAST).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let o = firesite(&["synth", "--tiny", "--seed", "9", "--out", s(dir.path()), "--name", name]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    let inst: InstanceFile = serde_json::from_slice(&a).unwrap();
    assert_eq!(inst.demand.len(), 12);
}

#[test]
fn size_prints_macro_radius() {
    let o = firesite(&["size"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["macro_radius"].as_f64().unwrap() - 1.746).abs() < 5e-4);
}

#[test]
fn zero_demand_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.json");
    std::fs::write(&p, r#"{"schema_version": 1, "demand": []}"#).unwrap();
    let o = firesite(&["pipeline", "--instance", s(&p), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"schema_version": 1, "demand": [{"id": "c0", "x": 0, "y": 0, "colour": 1}]}"#).unwrap();
    let o = firesite(&["solve-macro", "--instance", s(&p), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn oracle_guard_on_paper_scale() {
    let dir = tempfile::tempdir().unwrap();
    let o = firesite(&["synth", "--seed", "1", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let inst = dir.path().join("instance.json");
    let o = firesite(&["oracle", "--tier", "macro", "--instance", s(&inst), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn pipeline_stages_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path());
    let full = dir.path().join("full");
    let o = firesite(&["pipeline", "--config", &cfg, "--instance", s(&demo_instance()), "--out", s(&full)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let manifest: Manifest = read_json(&full.join("manifest.json")).unwrap();
    for (name, hash) in &manifest.outputs {
        assert_eq!(&sha256_hex(&std::fs::read(full.join(name)).unwrap()), hash, "{name}");
    }

    // solve-micro alone, from copies of its upstream outputs
    let staged = dir.path().join("staged");
    std::fs::create_dir(&staged).unwrap();
    for f in ["macro_plan.json", "calibration.json"] {
        std::fs::copy(full.join(f), staged.join(f)).unwrap();
    }
    let o = firesite(&["solve-micro", "--config", &cfg, "--instance", s(&demo_instance()), "--out", s(&staged)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["micro_archive.csv", "micro_fronts.csv"] {
        assert_eq!(std::fs::read(full.join(f)).unwrap(), std::fs::read(staged.join(f)).unwrap(), "{f}");
    }

    // the persisted config and instance reproduce the run
    let replay = dir.path().join("replay");
    let o = firesite(&[
        "pipeline",
        "--config",
        s(&full.join("config.json")),
        "--instance",
        s(&full.join("instance.json")),
        "--out",
        s(&replay),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let again: Manifest = read_json(&replay.join("manifest.json")).unwrap();
    assert_eq!(again.outputs, manifest.outputs);
}
