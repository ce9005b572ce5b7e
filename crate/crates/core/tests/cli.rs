use std::path::Path;
use std::process::{Command, Output};

fn crowdflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdflow"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CROWDFLOW_OUT")
        .output()
        .expect("binary runs")
}

#[test]
fn default_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = crowdflow(&["default-config"], dir.path());
    assert!(out.status.success());
    let cfg: crowdflow::pipeline::PipelineConfig = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg, crowdflow::pipeline::PipelineConfig::default());
}

#[test]
fn pipeline_then_single_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = crowdflow(&["pipeline", "--preset", "line", "--seed", "7", "-o", "run"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("d_avg"), "{summary}");
    assert!(dir.path().join("run/manifest.json").exists());

    let cfg = r#"{ "inputs": { "flow": "run/flow/final.csv" } }"#;
    std::fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let out = crowdflow(&["semantics", "-c", "cfg.json", "-o", "sem", "-q"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("sem/semantics/divergence.csv").exists());
}

#[test]
fn stage_flags_select_stages() {
    let dir = tempfile::tempdir().unwrap();
    let out = crowdflow(
        &["pipeline", "--preset", "counterflow", "--stage", "simulate", "--stage", "flow", "-o", "o", "-q"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/flow/final.csv").exists());
    assert!(!dir.path().join("o/graph").exists());
}

#[test]
fn failures_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = crowdflow(&["graph", "-o", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("o/error.json").exists());

    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let out = crowdflow(&["pipeline", "-c", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = crowdflow(&["pipeline", "--stage", "bogus"], dir.path());
    assert!(!out.status.success());
}
