//! Ground-truth crowd scenarios: agents walking a known flow graph or a
//! diffuse pattern, rendered into noisy point clouds or raw ADC cubes.

mod adc;
mod agents;
pub mod presets;
mod sensor;

pub use adc::{render_adc, AdcNoise, Target};
pub use agents::{simulate_agents, RouteLog, Trajectories, TrajectoryRecord};
pub use sensor::{render_point_clouds, ClutterSite, Rect, SensorModel, DEFAULT_OCCLUSION_ANGLE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FlowGraph;
use crate::grid::Vec2;

const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRatio {
    pub edge: usize,
    pub ratio: f64,
}

/// Branch probabilities at `vertex`. With `from_edge` set the rule applies
/// only to agents arriving on that edge and takes precedence over a rule
/// without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub vertex: usize,
    #[serde(default)]
    pub from_edge: Option<usize>,
    pub ratios: Vec<BranchRatio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MotionMode {
    /// Agents walk source-to-sink routes of the truth graph.
    Structured,
    /// Agents leave `anchor` on straight headings and respawn once past `radius`.
    RadialOut { anchor: Vec2, radius: f64 },
    /// Agents walk from `radius` towards `anchor` and respawn on arrival.
    RadialIn { anchor: Vec2, radius: f64 },
    /// Two opposing lanes on either side of the `start`-`end` line, each
    /// `half_width` wide.
    Counterflow { start: Vec2, end: Vec2, half_width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub truth_graph: FlowGraph,
    #[serde(default)]
    pub split_spec: Vec<SplitRule>,
    pub agent_count: usize,
    /// m/s
    pub speed_mean: f64,
    pub speed_std: f64,
    /// Stationary std of the lateral offset, m.
    pub waypoint_jitter: f64,
    /// s
    pub duration: f64,
    /// Seconds per window.
    pub dt: f64,
    pub mode: MotionMode,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn n_windows(&self) -> usize {
        (self.duration / self.dt).round().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::scenario(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.agent_count == 0 {
            return Err(Error::scenario("agent_count must be at least 1"));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::scenario(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.speed_mean > 0.0) || !(self.speed_std >= 0.0) || !(self.waypoint_jitter >= 0.0) {
            return Err(Error::scenario("speeds must be positive and jitter non-negative"));
        }
        match &self.mode {
            MotionMode::Structured => self.validate_structured(),
            MotionMode::RadialOut { radius, .. } | MotionMode::RadialIn { radius, .. } => {
                if !(*radius > 1.0) {
                    return Err(Error::scenario(format!("radial radius must exceed 1 m, got {radius}")));
                }
                Ok(())
            }
            MotionMode::Counterflow { start, end, half_width } => {
                if start.dist(*end) < 1.0 {
                    return Err(Error::scenario("counterflow boundary shorter than 1 m"));
                }
                if !(*half_width > 0.5) {
                    return Err(Error::scenario(format!("counterflow half_width must exceed 0.5 m, got {half_width}")));
                }
                Ok(())
            }
        }
    }

    fn validate_structured(&self) -> Result<()> {
        let g = &self.truth_graph;
        g.validate()?;
        if g.sources().is_empty() {
            return Err(Error::scenario("truth graph has no source vertex"));
        }
        for rule in &self.split_spec {
            if g.vertex(rule.vertex).is_none() {
                return Err(Error::scenario(format!("split rule for unknown vertex {}", rule.vertex)));
            }
            if let Some(from) = rule.from_edge {
                if !g.in_edges(rule.vertex).any(|e| e.id == from) {
                    return Err(Error::scenario(format!(
                        "edge {from} does not enter vertex {}",
                        rule.vertex
                    )));
                }
            }
            let mut sum = 0.0;
            for br in &rule.ratios {
                if !g.out_edges(rule.vertex).any(|e| e.id == br.edge) {
                    return Err(Error::scenario(format!(
                        "edge {} does not leave vertex {}",
                        br.edge, rule.vertex
                    )));
                }
                if !(0.0..=1.0).contains(&br.ratio) {
                    return Err(Error::scenario(format!("ratio {} outside [0, 1]", br.ratio)));
                }
                sum += br.ratio;
            }
            if (sum - 1.0).abs() > RATIO_TOL {
                return Err(Error::scenario(format!(
                    "ratios at vertex {} sum to {sum}, not 1",
                    rule.vertex
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in presets::structured_all() {
            s.validate().unwrap();
        }
        for s in [presets::radial_out(), presets::radial_in(), presets::counterflow()] {
            s.validate().unwrap();
        }
    }

    #[test]
    fn ratio_sum_checked() {
        let mut s = presets::y_split(0.5);
        s.split_spec[0].ratios[0].ratio = 0.6;
        assert!(matches!(s.validate(), Err(Error::Scenario(_))));
        s.split_spec[0].ratios[0].ratio = 0.5 + 0.5e-9;
        s.validate().unwrap();
    }

    #[test]
    fn bad_scalars_rejected() {
        let mut s = presets::line();
        s.dt = 0.0;
        assert!(s.validate().is_err());
        let mut s = presets::line();
        s.agent_count = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn no_source_is_a_scenario_error() {
        let mut s = presets::loop_merge();
        // close the loop: every vertex gets an incoming edge
        let last = s.truth_graph.edges.last().unwrap().clone();
        s.truth_graph.edges.push(crate::graph::Edge {
            id: 99,
            tail: last.head,
            head: s.truth_graph.edges[0].tail,
            polyline: vec![last.polyline[last.polyline.len() - 1], s.truth_graph.edges[0].polyline[0]],
            lambda: None,
        });
        assert!(matches!(s.validate(), Err(Error::Scenario(_))));
    }

    #[test]
    fn rule_edge_must_leave_vertex() {
        let mut s = presets::y_split(0.5);
        s.split_spec[0].ratios[0].edge = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let s = presets::x_cross();
        let back: ScenarioSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let c = presets::counterflow();
        let text = serde_json::to_string(&c.mode).unwrap();
        assert!(text.contains("\"kind\":\"counterflow\""));
    }
}
