//! Point-cloud sequence to denoised flow field: block-matching flow between
//! consecutive occupancy grids, time averaging, directional-uniformity
//! masking, component pruning and median smoothing.

mod ks;
mod morph;
mod pairwise;

pub use ks::{kolmogorov_ccdf, ks_pvalue, ks_statistic};
pub use morph::{
    label_components, median_round_nonzero, median_round_standard, median_smooth, prune_components,
};
pub use pairwise::{pairwise_flow, rasterize, PairwiseFlow};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloudSequence;
use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Cell, FlowField, Grid, GridSpec, ScalarField, ScalarKind, Stage, Vec2};

pub type OccupancyGrid = BinaryGrid;

/// All pairwise flows observed at each cell over the recording.
#[derive(Debug, Clone, PartialEq)]
pub struct PwfField {
    pub spec: GridSpec,
    pub samples: Grid<Vec<Vec2>>,
}

impl PwfField {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            samples: Grid::filled(spec.nx(), spec.ny(), Vec::new()),
        }
    }

    pub fn push(&mut self, f: PairwiseFlow) {
        self.samples[f.cell].push(f.flow);
    }

    pub fn total(&self) -> usize {
        self.samples.values().iter().map(Vec::len).sum()
    }

    /// Angles of the non-zero flows at `c`.
    pub fn angles(&self, c: Cell) -> Vec<f64> {
        self.samples[c]
            .iter()
            .filter(|v| !v.is_zero())
            .map(|v| v.angle())
            .collect()
    }
}

/// Parameters of the flow-field stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    /// Side of the square matching neighborhood, meters.
    pub neighborhood: f64,
    pub p_th: f64,
    /// Minimum component area kept by pruning, m².
    pub min_component_area: f64,
    /// Median filter window area, m².
    pub median_area: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            neighborhood: 2.0,
            p_th: 0.15,
            min_component_area: 2.0,
            median_area: 0.25,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.neighborhood > 0.0) {
            return Err(Error::config("matching neighborhood must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_th) {
            return Err(Error::config(format!("p_th must lie in [0, 1], got {}", self.p_th)));
        }
        if !(self.min_component_area >= 0.0) || !(self.median_area >= 0.0) {
            return Err(Error::config("areas must be non-negative"));
        }
        Ok(())
    }

    /// Half-width of the matching window in cells.
    pub fn half_width(&self, cell: f64) -> usize {
        ((self.neighborhood / cell / 2.0).floor() as usize).max(1)
    }
}

/// Pairwise flows for every consecutive window pair, accumulated per cell.
/// Window pairs run in parallel; accumulation follows window order.
pub fn pairwise_field(clouds: &PointCloudSequence, gs: &GridSpec, half: usize) -> PwfField {
    let rasters: Vec<BinaryGrid> = clouds.windows.iter().map(|pts| rasterize(pts, gs).0).collect();
    let per_pair: Vec<Vec<PairwiseFlow>> = (0..rasters.len().saturating_sub(1))
        .into_par_iter()
        .map(|w| {
            let cells: Vec<Cell> = rasters[w].iter().filter(|(_, &v)| v).map(|(c, _)| c).collect();
            pairwise_flow(&rasters[w], &rasters[w + 1], &cells, half, gs.cell)
        })
        .collect();
    let mut pwf = PwfField::new(*gs);
    for f in per_pair.into_iter().flatten() {
        pwf.push(f);
    }
    pwf
}

/// Per-cell mean of the accumulated flows; zero where nothing was observed.
pub fn time_averaged_flow(pwf: &PwfField) -> FlowField {
    let data = pwf.samples.map(|_, s| {
        if s.is_empty() {
            Vec2::ZERO
        } else {
            let sum = s.iter().fold(Vec2::ZERO, |a, &b| a + b);
            sum * (1.0 / s.len() as f64)
        }
    });
    FlowField {
        spec: pwf.spec,
        stage: Stage::Taf,
        data,
    }
}

/// Per-cell uniformity p-values of the flow angles.
pub fn pvalue_field(pwf: &PwfField) -> ScalarField {
    ScalarField {
        spec: pwf.spec,
        kind: ScalarKind::Pvalue,
        data: pwf.samples.map(|c, s| (!s.is_empty()).then(|| ks_pvalue(&pwf.angles(c)))),
    }
}

/// Keep the time-averaged flow only where the angle distribution is
/// significantly non-uniform (`p <= p_th`).
pub fn ks_mask_apply(taf: &FlowField, pwf: &PwfField, p_th: f64) -> FlowField {
    let data = taf.data.map(|c, &v| {
        if ks_pvalue(&pwf.angles(c)) <= p_th {
            v
        } else {
            Vec2::ZERO
        }
    });
    FlowField {
        spec: taf.spec,
        stage: Stage::Dff,
        data,
    }
}

/// Intermediate and final products of the flow stages.
#[derive(Debug, Clone)]
pub struct FlowStages {
    pub pwf: PwfField,
    pub taf: FlowField,
    pub pvalues: ScalarField,
    pub dff: FlowField,
    pub pruned: FlowField,
    pub final_field: FlowField,
}

pub fn estimate_flow(clouds: &PointCloudSequence, gs: &GridSpec, params: &FlowParams) -> Result<FlowStages> {
    gs.validate()?;
    params.validate()?;
    if clouds.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} windows, need at least 2 for pairwise flow",
            clouds.len()
        )));
    }
    let pwf = pairwise_field(clouds, gs, params.half_width(gs.cell));
    let taf = time_averaged_flow(&pwf);
    let pvalues = pvalue_field(&pwf);
    let dff = ks_mask_apply(&taf, &pwf, params.p_th);
    let pruned = prune_components(&dff, params.min_component_area);
    let final_field = median_smooth(&pruned, params.median_area);
    Ok(FlowStages {
        pwf,
        taf,
        pvalues,
        dff,
        pruned,
        final_field,
    })
}
