use serde::{Deserialize, Serialize};

use super::FlowGraph;
use crate::cloud::PointCloudSequence;
use crate::error::{Error, Result};
use crate::geometry::{simplify, Buffer};

/// Which vertex an edge's ratio is normalized at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioSide {
    /// Share of the tail vertex's outgoing flow.
    #[default]
    Outgoing,
    /// Share of the head vertex's incoming flow.
    Incoming,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SplitReport {
    /// Points inside each edge's buffer, by edge position.
    pub counts: Vec<usize>,
    /// Points per square meter of buffer, by edge position.
    pub weights: Vec<f64>,
    /// Vertices whose edges carry no points at all; their ratios stay unset.
    pub undefined: Vec<usize>,
}

/// Estimate split ratios from point density inside a corridor of total
/// width `rho` around each edge.
///
/// Polylines are simplified (tolerance `rho / 8`) before buffering so the
/// analytic corridor area is not inflated by cell-scale zigzags.
pub fn split_ratios(
    g: &FlowGraph,
    clouds: &PointCloudSequence,
    rho: f64,
    side: RatioSide,
) -> Result<(FlowGraph, SplitReport)> {
    if !(rho > 0.0) {
        return Err(Error::config(format!("buffer width must be positive, got {rho}")));
    }
    let radius = rho / 2.0;
    let buffers: Vec<Buffer> = g
        .edges
        .iter()
        .map(|e| Buffer::new(simplify(&e.polyline, rho / 8.0), radius))
        .collect();
    let mut counts = vec![0usize; buffers.len()];
    for p in clouds.all_points() {
        for (k, b) in buffers.iter().enumerate() {
            if b.contains(p) {
                counts[k] += 1;
            }
        }
    }
    let weights: Vec<f64> = buffers
        .iter()
        .zip(&counts)
        .map(|(b, &n)| {
            let area = b.area();
            if area > 0.0 {
                n as f64 / area
            } else {
                0.0
            }
        })
        .collect();

    let anchor = |k: usize| match side {
        RatioSide::Outgoing => g.edges[k].tail,
        RatioSide::Incoming => g.edges[k].head,
    };
    let mut out = g.clone();
    let mut undefined = Vec::new();
    for v in &g.vertices {
        let members: Vec<usize> = (0..g.edges.len()).filter(|&k| anchor(k) == v.id).collect();
        if members.is_empty() {
            continue;
        }
        let total: f64 = members.iter().map(|&k| weights[k]).sum();
        for &k in &members {
            out.edges[k].lambda = (total > 0.0).then(|| weights[k] / total);
        }
        if total <= 0.0 {
            log::warn!("vertex {}: no points near its edges, ratios left undefined", v.id);
            undefined.push(v.id);
        }
    }
    Ok((
        out,
        SplitReport {
            counts,
            weights,
            undefined,
        },
    ))
}
