use std::path::Path;
use std::process::{Command, Output};

fn tputml(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tputml")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const CONFIG: &str = r#"{
  "ingest": {"resample_period_s": 30, "synthetic": {"duration_s": 10800, "seed": 3}},
  "train": {"units": 6, "max_epochs": 4, "patience": 2},
  "search": {"budget": 2, "candidate_epochs": 1, "final_epochs": 2, "final_patience": 1},
  "space": {"lstm_units": [4, 8], "encoder_layers": [1, 2], "decoder_layers": [1, 1], "dense_layers": [0, 1], "dense_units": [4, 8]},
  "monitor": {"check_period": 300, "window_size": 300}
}"#;

fn setup() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("cfg.json"), CONFIG).unwrap();
    d
}

fn chain(dir: &Path, out: &str, cmds: &[&str]) {
    for c in cmds {
        let mut args = vec!["--config", "cfg.json", "--out", out, "--seed", "5"];
        args.extend(c.split_whitespace());
        let o = tputml(dir, &args);
        assert_eq!(code(&o), 0, "{c}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn version_reports_schema() {
    let d = tempfile::tempdir().unwrap();
    let o = tputml(d.path(), &["--version"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains(env!("CARGO_PKG_VERSION")) && s.contains("config schema 1"), "{s}");
}

#[test]
fn evaluate_without_model_is_missing_artifact() {
    let d = setup();
    chain(d.path(), "art", &["ingest", "preprocess", "select-features"]);
    let o = tputml(d.path(), &["--config", "cfg.json", "--out", "art", "--seed", "5", "evaluate"]);
    assert_eq!(code(&o), 3);
    let last = String::from_utf8(o.stderr).unwrap();
    let ev: serde_json::Value = serde_json::from_str(last.lines().last().unwrap()).unwrap();
    assert_eq!(ev["event"], "error");
    assert!(ev["message"].as_str().unwrap().contains("model.json"));
}

#[test]
fn invalid_config_exits_2() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("bad.json"), r#"{"windows": {"fractions": {"train": 0.9, "val": 0.2, "test": 0.1}}}"#).unwrap();
    let o = tputml(d.path(), &["--config", "bad.json", "ingest"]);
    assert_eq!(code(&o), 2);
    let o = tputml(d.path(), &["--config", "nope.json", "ingest"]);
    assert_eq!(code(&o), 2);
    let o = tputml(d.path(), &["--set", "windows.look_back=0", "ingest"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn stale_upstream_refused_unless_forced() {
    let d = setup();
    chain(d.path(), "art", &["ingest"]);
    // a different seed is a different config
    let o = tputml(d.path(), &["--config", "cfg.json", "--out", "art", "--seed", "6", "preprocess"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let o = tputml(d.path(), &["--config", "cfg.json", "--out", "art", "--seed", "6", "--force", "preprocess"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn every_output_carries_the_hash() {
    let d = setup();
    chain(d.path(), "art", &["ingest", "preprocess", "select-features", "train", "evaluate"]);
    let art = d.path().join("art");
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(art.join("manifest_evaluate.json")).unwrap()).unwrap();
    let hash = m["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    assert_eq!(m["seed"], 5);
    for name in ["dataset.json", "plan.json", "frame.json", "features.json", "model.json", "model_meta.json", "metrics.json"] {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(art.join(name)).unwrap()).unwrap();
        assert_eq!(v["config_hash"], hash.as_str(), "{name}");
    }
    for name in ["dataset.csv", "metrics.csv", "train_trace.csv"] {
        let text = std::fs::read_to_string(art.join(name)).unwrap();
        assert_eq!(text.lines().next().unwrap(), format!("# config_hash: {hash}"), "{name}");
    }
}

#[test]
fn repeated_chain_is_byte_identical() {
    let d = setup();
    let cmds = ["ingest", "preprocess", "select-features", "search", "evaluate", "monitor --inject scale=0.5,start=5m"];
    chain(d.path(), "a", &cmds);
    chain(d.path(), "b", &cmds);
    for name in ["metrics.csv", "metrics.json", "model.json", "search_trace.csv", "monitor_report.csv", "model_adapted.json"] {
        let a = std::fs::read(d.path().join("a").join(name)).unwrap();
        let b = std::fs::read(d.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn select_features_prints_ranked_table() {
    let d = setup();
    chain(d.path(), "art", &["ingest", "preprocess"]);
    let o = tputml(d.path(), &["--config", "cfg.json", "--out", "art", "--seed", "5", "select-features"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.lines().count() > 2, "{s}");
}

#[test]
fn inject_spec_errors_are_config_errors() {
    let d = setup();
    chain(d.path(), "art", &["ingest"]);
    let o = tputml(d.path(), &["--config", "cfg.json", "--out", "art", "--seed", "5", "inject-drift", "--spec", "scale=0.5"]);
    assert_eq!(code(&o), 2);
    let o = tputml(d.path(), &["--config", "cfg.json", "--out", "art", "--seed", "5", "inject-drift", "--spec", "scale=0.5,start=900m"]);
    assert_eq!(code(&o), 4);
}
