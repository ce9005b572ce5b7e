use std::path::Path;

use crowdflow::frontend::RadarConfig;
use crowdflow::grid::Vec2;
use crowdflow::io;
use crowdflow::pipeline::{
    run_pipeline, ErrorRecord, Manifest, PipelineConfig, StageName, StageToggles, ERROR_FILE, MANIFEST_FILE,
};
use crowdflow::synth::presets;

fn preset(name: &str) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed: Some(42),
        ..PipelineConfig::default()
    };
    cfg.simulate.preset = Some(name.into());
    cfg
}

fn read_error(dir: &Path) -> ErrorRecord {
    serde_json::from_str(&std::fs::read_to_string(dir.join(ERROR_FILE)).unwrap()).unwrap()
}

#[test]
fn no_stages_gives_an_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        stages: StageToggles::none(),
        ..PipelineConfig::default()
    };
    let summary = run_pipeline(&cfg, dir.path()).unwrap();
    assert!(summary.manifest.artifacts.is_empty());
    assert!(summary.eval.is_none());
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(m, summary.manifest);
}

#[test]
fn missing_input_fails_before_any_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig {
        stages: StageToggles::only(&[StageName::Graph]),
        ..PipelineConfig::default()
    };
    cfg.inputs.flow = Some(dir.path().join("nope.csv"));
    cfg.inputs.clouds = Some(dir.path().join("nope.jsonl"));
    let failure = run_pipeline(&cfg, dir.path()).unwrap_err();
    assert_eq!(failure.stage, "validate");
    assert_eq!(failure.error.kind(), "missing_input");
    let rec = read_error(dir.path());
    assert_eq!(rec.stage, "validate");
    assert_eq!(rec.kind, "missing_input");
    assert!(!dir.path().join("graph").exists());
}

#[test]
fn stage_without_producer_or_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        stages: StageToggles::only(&[StageName::Flow]),
        ..PipelineConfig::default()
    };
    let failure = run_pipeline(&cfg, dir.path()).unwrap_err();
    assert_eq!(failure.error.kind(), "config");
}

#[test]
fn unknown_preset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let failure = run_pipeline(&preset("zigzag"), dir.path()).unwrap_err();
    assert_eq!((failure.stage.as_str(), failure.error.kind()), ("validate", "config"));
}

#[test]
fn line_scenario_recovers_one_edge() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_pipeline(&preset("line"), dir.path()).unwrap();
    let r = summary.eval.unwrap();
    assert_eq!((r.est_vertices, r.est_edges), (2, 1));
    assert!(r.d_avg <= 0.5, "{}", r.d_avg);
    let g = io::read_graph(&dir.path().join("graph/graph.json")).unwrap();
    let e = &g.edges[0];
    // walked from -x to +x
    assert!(e.chord().dot(Vec2::new(1.0, 0.0)) > 0.0);
    for a in &summary.manifest.artifacts {
        let bytes = std::fs::read(dir.path().join(&a.path)).unwrap();
        assert_eq!(bytes.len() as u64, a.bytes, "{}", a.path);
    }
}

#[test]
fn stages_rerun_from_saved_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    run_pipeline(&preset("y_split"), &full).unwrap();

    let mut cfg = PipelineConfig {
        stages: StageToggles::only(&[StageName::Graph, StageName::Eval]),
        ..PipelineConfig::default()
    };
    cfg.inputs.flow = Some(full.join("flow/final.csv"));
    cfg.inputs.clouds = Some(full.join("simulate/clouds.jsonl"));
    cfg.inputs.truth = Some(full.join("simulate/truth_graph.json"));
    let part = dir.path().join("part");
    let summary = run_pipeline(&cfg, &part).unwrap();
    assert!(summary.eval.is_some());
    assert_eq!(
        std::fs::read(full.join("graph/graph.json")).unwrap(),
        std::fs::read(part.join("graph/graph.json")).unwrap()
    );
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_pipeline(&preset("x_cross"), &dir.path().join("a")).unwrap();
    let b = run_pipeline(&preset("x_cross"), &dir.path().join("b")).unwrap();
    assert_eq!(a.manifest, b.manifest);
}

#[test]
fn simulated_recording_goes_through_the_frontend() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = presets::line();
    spec.duration = 1.6;
    let mut cfg = PipelineConfig {
        stages: StageToggles::only(&[StageName::Simulate, StageName::Frontend, StageName::Flow]),
        radar: RadarConfig {
            n_chirps: 16 * 8,
            window: 8,
            ..RadarConfig::default()
        },
        ..PipelineConfig::default()
    };
    cfg.simulate.scenario = Some(spec);
    cfg.simulate.render_adc = true;
    let summary = run_pipeline(&cfg, dir.path()).unwrap();
    let paths: Vec<&str> = summary.manifest.artifacts.iter().map(|a| a.path.as_str()).collect();
    for want in ["simulate/adc.bin", "frontend/detections.json", "frontend/clouds.jsonl", "flow/final.csv"] {
        assert!(paths.contains(&want), "{want} missing from {paths:?}");
    }
    let clouds = io::read_clouds(&dir.path().join("frontend/clouds.jsonl"), 16).unwrap();
    assert_eq!(clouds.len(), 16);
    assert!(clouds.total_points() > 0);
}

#[test]
fn too_short_recording_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("line");
    cfg.simulate.render_adc = true;
    let failure = run_pipeline(&cfg, dir.path()).unwrap_err();
    assert_eq!((failure.stage.as_str(), failure.error.kind()), ("validate", "config"));
}
