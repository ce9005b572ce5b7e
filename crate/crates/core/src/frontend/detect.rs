use serde::{Deserialize, Serialize};

use super::{Matrix, RadarConfig, TraceMap};
use crate::error::{Error, Result};
use crate::grid::Vec2;
use crate::stats::{median, percentile};

pub const DEFAULT_K_MAD: f64 = 5.0;

const MIN_WINDOWS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub range_bin: usize,
    /// Azimuth from boresight in radians, positive towards +x.
    pub azimuth: Option<f64>,
}

/// Detections of one processing window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionSet {
    pub window: usize,
    pub entries: Vec<Detection>,
}

impl DetectionSet {
    pub fn range_bins(&self) -> Vec<usize> {
        self.entries.iter().map(|d| d.range_bin).collect()
    }

    /// Cartesian points with the radar at the origin and boresight along +y.
    /// Entries without an azimuth are skipped.
    pub fn to_points(&self, cfg: &RadarConfig) -> Vec<Vec2> {
        self.entries
            .iter()
            .filter_map(|d| {
                let theta = d.azimuth?;
                let range = cfg.bin_to_range(d.range_bin as f64);
                Some(Vec2::new(range * theta.sin(), range * theta.cos()))
            })
            .collect()
    }
}

/// Binarize the trace map with per-range robust statistics and return the
/// detected range bins of each window.
///
/// A bin fires when `H[w][r] >= median_w + k_mad * MAD_w` for its range and
/// `H[w][r]` exceeds the global floor, the 95th percentile of all values in
/// the quietest tenth of windows. When the map carries spectral power, runs
/// of adjacent detections are thinned to their local power maxima.
pub fn detect_ranges(tm: &mut TraceMap, k_mad: f64) -> Result<Vec<DetectionSet>> {
    if !(k_mad > 0.0) {
        return Err(Error::config(format!("k_mad must be positive, got {k_mad}")));
    }
    let (n_w, n_r) = (tm.n_windows(), tm.n_ranges());
    if n_w < MIN_WINDOWS {
        return Err(Error::InsufficientData(format!(
            "{n_w} windows, need at least {MIN_WINDOWS} for range statistics"
        )));
    }
    let h = &tm.values;

    let thresholds: Vec<f64> = (0..n_r)
        .map(|r| {
            let col: Vec<f64> = (0..n_w).map(|w| h[(w, r)]).collect();
            let med = median(&col);
            let dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
            med + k_mad * median(&dev)
        })
        .collect();

    let floor = {
        let mut order: Vec<(f64, usize)> = (0..n_w)
            .map(|w| (h.row(w).iter().sum::<f64>() / n_r as f64, w))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let quiet = (n_w / 10).max(1);
        let pool: Vec<f64> = order[..quiet]
            .iter()
            .flat_map(|&(_, w)| h.row(w).iter().copied())
            .collect();
        percentile(&pool, 95.0)
    };

    let mut binary = Matrix::filled(n_w, n_r, false);
    for w in 0..n_w {
        for r in 0..n_r {
            let v = h[(w, r)];
            binary[(w, r)] = v >= thresholds[r] && v > floor;
        }
    }

    let sets = (0..n_w)
        .map(|w| {
            let fired: Vec<usize> = (0..n_r).filter(|&r| binary[(w, r)]).collect();
            let kept = match &tm.power {
                Some(p) => thin_to_peaks(&fired, p.row(w)),
                None => fired,
            };
            DetectionSet {
                window: w,
                entries: kept
                    .into_iter()
                    .map(|range_bin| Detection {
                        range_bin,
                        azimuth: None,
                    })
                    .collect(),
            }
        })
        .collect();
    tm.binary = Some(binary);
    Ok(sets)
}

/// Within each run of consecutive bins keep only local maxima of `power`
/// (plateaus keep their first bin). The DFT is circular, so when both the
/// first and the last bin fired they count as neighbors.
fn thin_to_peaks(fired: &[usize], power: &[f64]) -> Vec<usize> {
    let n = power.len();
    let wraps = n > 1 && fired.first() == Some(&0) && fired.last() == Some(&(n - 1));
    let mut out = Vec::new();
    let mut i = 0;
    while i < fired.len() {
        let mut j = i;
        while j + 1 < fired.len() && fired[j + 1] == fired[j] + 1 {
            j += 1;
        }
        let run = &fired[i..=j];
        for (k, &r) in run.iter().enumerate() {
            let left = if k > 0 {
                Some(run[k - 1])
            } else {
                (wraps && r == 0).then_some(n - 1)
            };
            let right = if k + 1 < run.len() {
                Some(run[k + 1])
            } else {
                (wraps && r == n - 1).then_some(0)
            };
            let left_ok = left.is_none_or(|l| power[r] > power[l]);
            let right_ok = right.is_none_or(|q| power[r] >= power[q]);
            if left_ok && right_ok {
                out.push(r);
            }
        }
        i = j + 1;
    }
    out
}
