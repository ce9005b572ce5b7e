//! Per-window point clouds, the interchange format between the radar
//! frontend (or the simulator) and flow estimation.

use serde::{Deserialize, Serialize};

use crate::grid::Vec2;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloudSequence {
    /// `windows[w]` holds the Cartesian points of window `w`, in meters.
    pub windows: Vec<Vec<Vec2>>,
}

/// One JSON Lines record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub w: usize,
    pub x: f64,
    pub y: f64,
}

impl PointCloudSequence {
    pub fn with_windows(n: usize) -> Self {
        Self {
            windows: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn total_points(&self) -> usize {
        self.windows.iter().map(Vec::len).sum()
    }

    pub fn all_points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.windows.iter().flatten().copied()
    }

    pub fn records(&self) -> impl Iterator<Item = PointRecord> + '_ {
        self.windows
            .iter()
            .enumerate()
            .flat_map(|(w, pts)| pts.iter().map(move |p| PointRecord { w, x: p.x, y: p.y }))
    }

    /// Rebuild from records; `n_windows` pads trailing empty windows.
    pub fn from_records(records: impl IntoIterator<Item = PointRecord>, n_windows: usize) -> Self {
        let mut seq = Self::with_windows(n_windows);
        for r in records {
            if r.w >= seq.windows.len() {
                seq.windows.resize(r.w + 1, Vec::new());
            }
            seq.windows[r.w].push(Vec2::new(r.x, r.y));
        }
        seq
    }
}
