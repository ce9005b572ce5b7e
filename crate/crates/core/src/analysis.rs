//! In-memory chain from point clouds to flow graph and semantic maps.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloudSequence;
use crate::error::{Error, Result};
use crate::flowfield::{estimate_flow, FlowParams, FlowStages};
use crate::graph::{
    build_graph, extract_traces, normalize_field, skeletonize, split_ratios, BuildParams, FlowGraph, RatioSide,
    Skeleton, SplitReport, Trace,
};
use crate::grid::{FlowField, GridSpec};
use crate::semantics::{semantic_maps, SemanticMaps};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    /// Walkways: KS masking at the configured threshold.
    #[default]
    Structured,
    /// Diffuse crowds: every cell with flow is kept (`p_th = 1`).
    Diffuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphParams {
    /// Vertex-trace proximity distance, m.
    pub proximity: f64,
    /// Total width of the corridor counted for split ratios, m.
    pub ratio_width: f64,
    pub ratio_side: RatioSide,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            proximity: 1.0,
            ratio_width: 1.0,
            ratio_side: RatioSide::Outgoing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemanticParams {
    /// Area of the Jacobian fitting window, m².
    pub window_area: f64,
}

impl Default for SemanticParams {
    fn default() -> Self {
        Self { window_area: 0.25 }
    }
}

/// Flow parameters with the mode applied.
pub fn effective_flow_params(p: &FlowParams, mode: FlowMode) -> FlowParams {
    match mode {
        FlowMode::Structured => *p,
        FlowMode::Diffuse => FlowParams { p_th: 1.0, ..*p },
    }
}

pub struct GraphStages {
    pub unit: FlowField,
    pub skeleton: Skeleton,
    pub traces: Vec<Trace>,
    pub graph: FlowGraph,
    pub split: SplitReport,
}

pub fn flow_stage(clouds: &PointCloudSequence, gs: &GridSpec, p: &FlowParams, mode: FlowMode) -> Result<FlowStages> {
    estimate_flow(clouds, gs, &effective_flow_params(p, mode))
}

/// Skeleton, traces, vertices and edges of the final field, then split
/// ratios from the clouds.
pub fn graph_stage(final_field: &FlowField, clouds: &PointCloudSequence, p: &GraphParams) -> Result<GraphStages> {
    if final_field.nonzero_count() == 0 {
        return Err(Error::InsufficientData("final flow field is empty".into()));
    }
    let unit = normalize_field(final_field);
    let skeleton = skeletonize(&unit.support());
    let traces = extract_traces(&skeleton, &unit.spec);
    let bp = BuildParams::for_cell(unit.spec.cell, p.proximity);
    let raw = build_graph(&traces, &unit, &bp)?;
    let (graph, split) = split_ratios(&raw, clouds, p.ratio_width, p.ratio_side)?;
    Ok(GraphStages {
        unit,
        skeleton,
        traces,
        graph,
        split,
    })
}

pub fn semantics_stage(final_field: &FlowField, p: &SemanticParams) -> Result<SemanticMaps> {
    if !(p.window_area > 0.0) {
        return Err(Error::config("semantic window area must be positive"));
    }
    Ok(semantic_maps(&normalize_field(final_field), p.window_area))
}
