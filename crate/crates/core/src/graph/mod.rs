//! Flow field to directed geometric graph: skeleton, traces, vertices with
//! proximity splitting and direction validation, then per-edge split ratios.

mod build;
mod skeleton;
mod split;
mod traces;

pub use build::{build_graph, edge_flow_cosine, BuildParams};
pub use skeleton::{has_thick_block, skeletonize, Skeleton, SkeletonClass};
pub use split::{split_ratios, RatioSide, SplitReport};
pub use traces::{extract_traces, Trace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::polyline_length;
use crate::grid::{FlowField, Stage, Vec2};

/// Scale every non-zero vector to unit length.
pub fn normalize_field(f: &FlowField) -> FlowField {
    FlowField {
        spec: f.spec,
        stage: Stage::Unit,
        data: f.data.map(|_, v| v.normalized()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    #[serde(flatten)]
    pub pos: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub tail: usize,
    pub head: usize,
    #[serde(with = "xy_pairs")]
    pub polyline: Vec<Vec2>,
    pub lambda: Option<f64>,
}

impl Edge {
    pub fn length(&self) -> f64 {
        polyline_length(&self.polyline)
    }

    /// Straight vector from the first to the last polyline point.
    pub fn chord(&self) -> Vec2 {
        match (self.polyline.first(), self.polyline.last()) {
            (Some(&a), Some(&b)) => b - a,
            _ => Vec2::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexRole {
    Source,
    Sink,
    Junction,
    Isolated,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

impl FlowGraph {
    pub fn vertex(&self, id: usize) -> Option<&Vertex> {
        self.vertices.iter().find(|v| v.id == id)
    }

    pub fn edge(&self, id: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.tail == v)
    }

    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.head == v)
    }

    pub fn role(&self, v: usize) -> VertexRole {
        match (self.in_edges(v).count(), self.out_edges(v).count()) {
            (0, 0) => VertexRole::Isolated,
            (0, _) => VertexRole::Source,
            (_, 0) => VertexRole::Sink,
            _ => VertexRole::Junction,
        }
    }

    pub fn sources(&self) -> Vec<usize> {
        self.vertices
            .iter()
            .map(|v| v.id)
            .filter(|&id| self.role(id) == VertexRole::Source)
            .collect()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(Edge::length).sum()
    }

    /// Check ids, references, polylines and ratio normalization.
    pub fn validate(&self) -> Result<()> {
        let mut ids: Vec<usize> = self.vertices.iter().map(|v| v.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::format("graph", "duplicate vertex id"));
        }
        let mut eids: Vec<usize> = self.edges.iter().map(|e| e.id).collect();
        eids.sort_unstable();
        if eids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::format("graph", "duplicate edge id"));
        }
        for e in &self.edges {
            if self.vertex(e.tail).is_none() || self.vertex(e.head).is_none() {
                return Err(Error::format("graph", format!("edge {} references a missing vertex", e.id)));
            }
            if e.polyline.len() < 2 || e.polyline.iter().any(|p| !p.is_finite()) {
                return Err(Error::format("graph", format!("edge {} needs a finite polyline", e.id)));
            }
            if let Some(l) = e.lambda {
                if !(0.0..=1.0 + 1e-9).contains(&l) {
                    return Err(Error::format("graph", format!("edge {} ratio {l} outside [0, 1]", e.id)));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: FlowGraph = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }
}

mod xy_pairs {
    use super::Vec2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(pts: &[Vec2], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = pts.iter().map(|p| [p.x, p.y]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec2>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[x, y]| Vec2::new(x, y)).collect())
    }
}
