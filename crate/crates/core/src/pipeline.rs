//! Configuration-driven end-to-end runs: stage wiring, artifact files, the
//! run manifest and machine-readable error records.
//!
//! Every stage writes into its own subdirectory of the output directory.
//! A stage whose predecessor is disabled reads the predecessor's product
//! from the path given under `inputs`.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{flow_stage, graph_stage, semantics_stage, FlowMode, GraphParams, SemanticParams};
use crate::cloud::PointCloudSequence;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalParams, EvalReport};
use crate::flowfield::FlowParams;
use crate::frontend::{run_frontend, RadarConfig, DEFAULT_K_MAD};
use crate::graph::{normalize_field, FlowGraph};
use crate::grid::{BinaryGrid, FlowField, GridSpec, ScalarField};
use crate::io;
use crate::semantics::{extremum_regions, gaussian_lowpass, ridge_line, Polarity};
use crate::synth::{presets, render_adc, render_point_clouds, simulate_agents, AdcNoise, ScenarioSpec, SensorModel, Target, Trajectories};

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "CROWDFLOW_OUT";

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ERROR_FILE: &str = "error.json";

/// Standard deviation of the display low-pass applied to exported
/// curl/divergence heatmaps, meters.
const DISPLAY_SIGMA: f64 = 0.5;
const TOP_EXTREMA: usize = 3;
const RIDGE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageName {
    Simulate,
    Frontend,
    Flow,
    Graph,
    Semantics,
    Eval,
}

impl StageName {
    pub const ALL: [StageName; 6] = [
        StageName::Simulate,
        StageName::Frontend,
        StageName::Flow,
        StageName::Graph,
        StageName::Semantics,
        StageName::Eval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageName::Simulate => "simulate",
            StageName::Frontend => "frontend",
            StageName::Flow => "flow",
            StageName::Graph => "graph",
            StageName::Semantics => "semantics",
            StageName::Eval => "eval",
        }
    }
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StageName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown stage '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageToggles {
    pub simulate: bool,
    pub frontend: bool,
    pub flow: bool,
    pub graph: bool,
    pub semantics: bool,
    pub eval: bool,
}

impl Default for StageToggles {
    /// Everything except the frontend, which needs an ADC recording.
    fn default() -> Self {
        Self {
            simulate: true,
            frontend: false,
            flow: true,
            graph: true,
            semantics: true,
            eval: true,
        }
    }
}

impl StageToggles {
    pub fn none() -> Self {
        Self {
            simulate: false,
            frontend: false,
            flow: false,
            graph: false,
            semantics: false,
            eval: false,
        }
    }

    pub fn only(stages: &[StageName]) -> Self {
        let mut t = Self::none();
        for &s in stages {
            t.set(s, true);
        }
        t
    }

    pub fn get(&self, s: StageName) -> bool {
        match s {
            StageName::Simulate => self.simulate,
            StageName::Frontend => self.frontend,
            StageName::Flow => self.flow,
            StageName::Graph => self.graph,
            StageName::Semantics => self.semantics,
            StageName::Eval => self.eval,
        }
    }

    pub fn set(&mut self, s: StageName, on: bool) {
        let slot = match s {
            StageName::Simulate => &mut self.simulate,
            StageName::Frontend => &mut self.frontend,
            StageName::Flow => &mut self.flow,
            StageName::Graph => &mut self.graph,
            StageName::Semantics => &mut self.semantics,
            StageName::Eval => &mut self.eval,
        };
        *slot = on;
    }

    pub fn enabled(&self) -> Vec<StageName> {
        StageName::ALL.into_iter().filter(|&s| self.get(s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    /// Name of a built-in scenario, used when `scenario` is absent.
    pub preset: Option<String>,
    pub scenario: Option<ScenarioSpec>,
    pub sensor: SensorModel,
    /// Also synthesize an ADC recording of the agents for the frontend.
    pub render_adc: bool,
    /// Receiver noise standard deviation of the synthesized recording.
    pub adc_noise_std: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            preset: None,
            scenario: None,
            sensor: presets::noisy_sensor(),
            render_adc: false,
            adc_noise_std: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontendParams {
    pub k_mad: f64,
}

impl Default for FrontendParams {
    fn default() -> Self {
        Self { k_mad: DEFAULT_K_MAD }
    }
}

/// Files consumed by stages whose producer is not part of the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Inputs {
    pub adc: Option<PathBuf>,
    pub clouds: Option<PathBuf>,
    /// FINAL flow field CSV (with its JSON sidecar).
    pub flow: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub stages: StageToggles,
    pub mode: FlowMode,
    pub grid: GridSpec,
    pub flow: FlowParams,
    pub graph: GraphParams,
    pub semantics: SemanticParams,
    pub frontend: FrontendParams,
    pub radar: RadarConfig,
    pub eval: EvalParams,
    pub simulate: SimulateConfig,
    /// Overrides the scenario seed; sensor and ADC noise seeds derive from it.
    pub seed: Option<u64>,
    pub inputs: Inputs,
    pub out: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            stages: StageToggles::default(),
            mode: FlowMode::Structured,
            grid: GridSpec::default(),
            flow: FlowParams::default(),
            graph: GraphParams::default(),
            semantics: SemanticParams::default(),
            frontend: FrontendParams::default(),
            radar: RadarConfig::default(),
            eval: EvalParams::default(),
            simulate: SimulateConfig::default(),
            seed: None,
            inputs: Inputs::default(),
            out: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    /// Scenario to simulate, with the seed override applied.
    pub fn scenario(&self) -> Result<ScenarioSpec> {
        let mut spec = match (&self.simulate.scenario, &self.simulate.preset) {
            (Some(s), _) => s.clone(),
            (None, Some(name)) => {
                presets::by_name(name).ok_or_else(|| Error::config(format!("unknown preset '{name}'")))?
            }
            (None, None) => return Err(Error::config("simulate needs a scenario or a preset")),
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        Ok(spec)
    }

    /// Output directory: `override_dir`, then the environment, then the
    /// config, then `./out`.
    pub fn resolve_out(&self, override_dir: Option<&Path>) -> PathBuf {
        if let Some(d) = override_dir {
            return d.to_path_buf();
        }
        if let Some(d) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(d);
        }
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Parameter checks and input availability, before anything runs.
    pub fn validate(&self) -> Result<()> {
        let on = |s| self.stages.get(s);
        self.grid.validate()?;
        self.flow.validate()?;
        if !(self.graph.proximity >= 0.0) || !(self.graph.ratio_width > 0.0) {
            return Err(Error::config("graph proximity must be >= 0 and ratio width > 0"));
        }
        if !(self.semantics.window_area > 0.0) {
            return Err(Error::config("semantic window area must be positive"));
        }
        if !(self.eval.gate > 0.0) || !(self.eval.sample_step > 0.0) {
            return Err(Error::config("eval gate and sample step must be positive"));
        }
        if on(StageName::Simulate) {
            self.scenario()?.validate()?;
            self.simulate.sensor.validate()?;
            if !(self.simulate.adc_noise_std >= 0.0) {
                return Err(Error::config("adc noise must be non-negative"));
            }
        }
        let sim_adc = on(StageName::Simulate) && self.simulate.render_adc;
        if on(StageName::Frontend) || sim_adc {
            self.radar.validate()?;
            if !(self.frontend.k_mad > 0.0) {
                return Err(Error::config("k_mad must be positive"));
            }
        }
        if sim_adc {
            let need = self.scenario()?.n_windows();
            if need > self.radar.n_windows() {
                return Err(Error::config(format!(
                    "scenario has {need} windows but the radar records only {}",
                    self.radar.n_windows()
                )));
            }
        }

        let require = |stage: StageName, produced: bool, path: &Option<PathBuf>, what: &str| -> Result<()> {
            if produced {
                return Ok(());
            }
            match path {
                Some(p) if p.exists() => Ok(()),
                Some(p) => Err(Error::MissingInput(p.clone())),
                None => Err(Error::config(format!("stage {stage} needs {what}: enable its producer or set inputs"))),
            }
        };
        if on(StageName::Frontend) {
            require(StageName::Frontend, sim_adc, &self.inputs.adc, "an ADC recording (inputs.adc)")?;
        }
        let clouds_made = on(StageName::Simulate) || on(StageName::Frontend);
        if on(StageName::Flow) {
            require(StageName::Flow, clouds_made, &self.inputs.clouds, "point clouds (inputs.clouds)")?;
        }
        let flow_made = on(StageName::Flow);
        if on(StageName::Graph) {
            require(StageName::Graph, flow_made, &self.inputs.flow, "a flow field (inputs.flow)")?;
            require(StageName::Graph, clouds_made, &self.inputs.clouds, "point clouds (inputs.clouds)")?;
        }
        if on(StageName::Semantics) {
            require(StageName::Semantics, flow_made, &self.inputs.flow, "a flow field (inputs.flow)")?;
        }
        if on(StageName::Eval) {
            require(StageName::Eval, on(StageName::Graph), &self.inputs.graph, "a flow graph (inputs.graph)")?;
            require(StageName::Eval, on(StageName::Simulate), &self.inputs.truth, "a truth graph (inputs.truth)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Artifacts of one run, sorted by path. Contains no timestamps, so
/// identical runs give identical manifests.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: Vec<StageName>,
    pub artifacts: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub stage: String,
    pub kind: String,
    pub message: String,
}

/// A failed run: the stage (or `validate`) and its error.
#[derive(Debug)]
pub struct RunFailure {
    pub stage: String,
    pub error: Error,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: PathBuf,
    pub manifest: Manifest,
    pub eval: Option<EvalReport>,
}

#[derive(Debug, Clone, Serialize)]
struct ExtremumRecord {
    x: f64,
    y: f64,
    value: f64,
    region_cells: usize,
}

#[derive(Debug, Clone, Serialize)]
struct RidgeRecord {
    point: [f64; 2],
    direction: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
struct SemanticSummary {
    divergence_max: Vec<ExtremumRecord>,
    divergence_min: Vec<ExtremumRecord>,
    curl_max: Vec<ExtremumRecord>,
    curl_min: Vec<ExtremumRecord>,
    curl_ridge: Option<RidgeRecord>,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: PathBuf,
    written: BTreeSet<PathBuf>,
    truth: Option<FlowGraph>,
    adc: Option<(RadarConfig, crate::frontend::AdcCube)>,
    clouds: Option<PointCloudSequence>,
    final_field: Option<FlowField>,
    unit: Option<FlowField>,
    graph: Option<FlowGraph>,
    report: Option<EvalReport>,
}

impl Run<'_> {
    fn path(&mut self, rel: &str) -> PathBuf {
        let p = self.out.join(rel);
        self.written.insert(p.clone());
        p
    }

    fn json<T: Serialize + ?Sized>(&mut self, rel: &str, v: &T) -> Result<()> {
        let p = self.path(rel);
        io::write_json(&p, v)
    }

    fn flow_csv(&mut self, rel: &str, f: &FlowField) -> Result<()> {
        let p = self.path(rel);
        self.written.insert(io::sidecar_path(&p));
        io::write_flow(&p, f, true)
    }

    fn scalar(&mut self, stem: &str, sf: &ScalarField, display: Option<&ScalarField>) -> Result<()> {
        let csv = self.path(&format!("{stem}.csv"));
        io::write_scalar_csv(&csv, sf)?;
        let pgm = self.path(&format!("{stem}.pgm"));
        io::write_scalar_pgm(&pgm, display.unwrap_or(sf))
    }

    fn clouds(&mut self) -> Result<PointCloudSequence> {
        if let Some(c) = &self.clouds {
            return Ok(c.clone());
        }
        let path = self.cfg.inputs.clouds.clone().ok_or_else(|| Error::config("no point clouds available"))?;
        let c = io::read_clouds(&path, 0)?;
        self.clouds = Some(c.clone());
        Ok(c)
    }

    fn final_field(&mut self) -> Result<FlowField> {
        if let Some(f) = &self.final_field {
            return Ok(f.clone());
        }
        let path = self.cfg.inputs.flow.clone().ok_or_else(|| Error::config("no flow field available"))?;
        let f = io::read_flow(&path)?;
        self.final_field = Some(f.clone());
        Ok(f)
    }

    fn simulate(&mut self) -> Result<()> {
        let spec = self.cfg.scenario()?;
        let sensor_seed = spec.seed.wrapping_add(1);
        let traj = simulate_agents(&spec)?;
        let clouds = render_point_clouds(&traj, &self.cfg.simulate.sensor, sensor_seed)?;
        self.json("simulate/scenario.json", &spec)?;
        self.json("simulate/sensor.json", &self.cfg.simulate.sensor)?;
        let p = self.path("simulate/trajectories.jsonl");
        io::write_trajectories(&p, &traj)?;
        let p = self.path("simulate/truth_graph.json");
        io::write_graph(&p, &spec.truth_graph)?;
        let p = self.path("simulate/clouds.jsonl");
        io::write_clouds(&p, &clouds)?;
        if self.cfg.simulate.render_adc {
            let radar = &self.cfg.radar;
            let targets = adc_targets(&traj, radar);
            let noise = (self.cfg.simulate.adc_noise_std > 0.0).then(|| AdcNoise {
                std: self.cfg.simulate.adc_noise_std,
                seed: spec.seed.wrapping_add(2),
            });
            let cube = render_adc(&targets, radar, noise)?;
            let p = self.path("simulate/adc.bin");
            io::write_adc(&p, &cube, radar)?;
            self.adc = Some((radar.clone(), cube));
        }
        self.truth = Some(spec.truth_graph.clone());
        self.clouds = Some(clouds);
        Ok(())
    }

    fn frontend(&mut self) -> Result<()> {
        let (radar, cube) = match self.adc.take() {
            Some(v) => v,
            None => {
                let path = self.cfg.inputs.adc.clone().ok_or_else(|| Error::config("no ADC recording"))?;
                io::read_adc(&path)?
            }
        };
        let fo = run_frontend(&cube, &radar, self.cfg.frontend.k_mad)?;
        self.json("frontend/detections.json", &fo.detections)?;
        if let Some(b) = &fo.trace_map.binary {
            let g = BinaryGrid::from_fn(b.cols(), b.rows(), |c| b[(c.iy, c.ix)]);
            let p = self.path("frontend/trace_map.pgm");
            io::write_mask_pgm(&p, &g)?;
        }
        let p = self.path("frontend/clouds.jsonl");
        io::write_clouds(&p, &fo.clouds)?;
        self.clouds = Some(fo.clouds);
        Ok(())
    }

    fn flow(&mut self) -> Result<()> {
        let clouds = self.clouds()?;
        let fs = flow_stage(&clouds, &self.cfg.grid, &self.cfg.flow, self.cfg.mode)?;
        self.flow_csv("flow/taf.csv", &fs.taf)?;
        self.flow_csv("flow/dff.csv", &fs.dff)?;
        self.flow_csv("flow/pruned.csv", &fs.pruned)?;
        self.flow_csv("flow/final.csv", &fs.final_field)?;
        let p = self.path("flow/pvalues.csv");
        io::write_scalar_csv(&p, &fs.pvalues)?;
        let p = self.path("flow/support.pgm");
        io::write_mask_pgm(&p, &fs.final_field.support())?;
        self.final_field = Some(fs.final_field);
        Ok(())
    }

    fn graph(&mut self) -> Result<()> {
        let final_field = self.final_field()?;
        let clouds = self.clouds()?;
        let gs = graph_stage(&final_field, &clouds, &self.cfg.graph)?;
        let p = self.path("graph/skeleton.pgm");
        io::write_mask_pgm(&p, &gs.skeleton.cells)?;
        let p = self.path("graph/graph.json");
        io::write_graph(&p, &gs.graph)?;
        self.json("graph/split.json", &gs.split)?;
        self.unit = Some(gs.unit);
        self.graph = Some(gs.graph);
        Ok(())
    }

    fn semantics(&mut self) -> Result<()> {
        let final_field = self.final_field()?;
        let maps = semantics_stage(&final_field, &self.cfg.semantics)?;
        let div_display = gaussian_lowpass(&maps.divergence, DISPLAY_SIGMA);
        let curl_display = gaussian_lowpass(&maps.curl, DISPLAY_SIGMA);
        self.scalar("semantics/divergence", &maps.divergence, Some(&div_display))?;
        self.scalar("semantics/curl", &maps.curl, Some(&curl_display))?;
        let records = |sf: &ScalarField, pol| -> Vec<ExtremumRecord> {
            extremum_regions(sf, pol, TOP_EXTREMA)
                .into_iter()
                .map(|e| ExtremumRecord {
                    x: e.pos.x,
                    y: e.pos.y,
                    value: e.value,
                    region_cells: e.region.count_ones(),
                })
                .collect()
        };
        let summary = SemanticSummary {
            divergence_max: records(&maps.divergence, Polarity::Max),
            divergence_min: records(&maps.divergence, Polarity::Min),
            curl_max: records(&maps.curl, Polarity::Max),
            curl_min: records(&maps.curl, Polarity::Min),
            curl_ridge: ridge_line(&maps.curl, RIDGE_FRACTION).map(|r| RidgeRecord {
                point: [r.point.x, r.point.y],
                direction: [r.direction.x, r.direction.y],
            }),
        };
        self.json("semantics/extrema.json", &summary)?;
        if self.unit.is_none() {
            self.unit = Some(normalize_field(&final_field));
        }
        Ok(())
    }

    fn eval(&mut self) -> Result<()> {
        let est = match &self.graph {
            Some(g) => g.clone(),
            None => io::read_graph(self.cfg.inputs.graph.as_deref().ok_or_else(|| Error::config("no graph"))?)?,
        };
        let truth = match &self.truth {
            Some(g) => g.clone(),
            None => io::read_graph(self.cfg.inputs.truth.as_deref().ok_or_else(|| Error::config("no truth graph"))?)?,
        };
        if self.unit.is_none() {
            if let Some(f) = &self.final_field {
                self.unit = Some(normalize_field(f));
            }
        }
        let report = evaluate(&est, &truth, self.unit.as_ref(), &self.cfg.eval)?;
        self.json("eval/report.json", &report)?;
        let p = self.path("eval/summary.txt");
        io::write_bytes(&p, report.summary().as_bytes())?;
        self.report = Some(report);
        Ok(())
    }

    fn manifest(&self) -> Result<Manifest> {
        let mut artifacts = Vec::with_capacity(self.written.len());
        for p in &self.written {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            let rel = p.strip_prefix(&self.out).unwrap_or(p);
            artifacts.push(ManifestEntry {
                path: rel.to_string_lossy().replace('\\', "/"),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len() as u64,
            });
        }
        Ok(Manifest {
            stages: self.cfg.stages.enabled(),
            artifacts,
        })
    }
}

/// One point target per agent and window, seen from the radar at the
/// origin; agents outside the unambiguous range or the front half-plane are
/// left out.
fn adc_targets(traj: &Trajectories, radar: &RadarConfig) -> Vec<Vec<Target>> {
    let max_range = radar.max_range();
    (0..traj.n_windows())
        .map(|w| {
            traj.positions
                .iter()
                .filter_map(|track| {
                    let p = track[w];
                    let range = p.norm();
                    if range <= 0.0 || range >= max_range || p.y <= 0.0 {
                        return None;
                    }
                    let next = track.get(w + 1).copied().unwrap_or(p);
                    let velocity = (next - p).dot(p * (1.0 / range)) / traj.dt;
                    Some(Target {
                        range,
                        azimuth: p.x.atan2(p.y),
                        amplitude: 1.0,
                        velocity,
                    })
                })
                .collect()
        })
        .collect()
}

fn write_error(out: &Path, stage: &str, e: &Error) {
    let rec = ErrorRecord {
        stage: stage.to_string(),
        kind: e.kind().to_string(),
        message: e.to_string(),
    };
    if let Err(w) = io::write_json(&out.join(ERROR_FILE), &rec) {
        log::error!("could not write error record: {w}");
    }
}

/// Validate, then run the enabled stages in order.
///
/// On success the manifest is written to `out/manifest.json`. On failure
/// the artifacts written so far are kept and listed in the manifest, and
/// `out/error.json` describes the failing stage.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> std::result::Result<RunSummary, RunFailure> {
    let fail = |stage: &str, error: Error| {
        write_error(out, stage, &error);
        RunFailure {
            stage: stage.to_string(),
            error,
        }
    };
    cfg.validate().map_err(|e| fail("validate", e))?;
    let stale = out.join(ERROR_FILE);
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| fail("validate", Error::io(&stale, e)))?;
    }

    let mut run = Run {
        cfg,
        out: out.to_path_buf(),
        written: BTreeSet::new(),
        truth: None,
        adc: None,
        clouds: None,
        final_field: None,
        unit: None,
        graph: None,
        report: None,
    };
    for stage in cfg.stages.enabled() {
        log::info!("stage {stage}");
        let res = match stage {
            StageName::Simulate => run.simulate(),
            StageName::Frontend => run.frontend(),
            StageName::Flow => run.flow(),
            StageName::Graph => run.graph(),
            StageName::Semantics => run.semantics(),
            StageName::Eval => run.eval(),
        };
        if let Err(e) = res {
            if let Ok(m) = run.manifest() {
                let _ = io::write_json(&out.join(MANIFEST_FILE), &m);
            }
            return Err(fail(stage.as_str(), e));
        }
    }
    let manifest = run.manifest().map_err(|e| fail("manifest", e))?;
    io::write_json(&out.join(MANIFEST_FILE), &manifest).map_err(|e| fail("manifest", e))?;
    Ok(RunSummary {
        out: out.to_path_buf(),
        manifest,
        eval: run.report,
    })
}
