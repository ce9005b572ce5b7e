//! Raw FMCW MIMO samples to per-window point clouds: range-only activity
//! detection over time, then angle estimation at the detected ranges only.

mod azimuth;
mod config;
mod cube;
mod detect;
mod range;

pub use azimuth::{
    azimuth_profile, azimuth_profiles, azimuth_spectrum, point_cloud, AzimuthProfile, AzimuthSpectrum,
};
pub use config::{RadarConfig, VirtualElement, SPEED_OF_LIGHT};
pub use cube::AdcCube;
pub use detect::{detect_ranges, Detection, DetectionSet, DEFAULT_K_MAD};
pub use range::{echo_strength, range_spectrum, trace_map, wrapped_phase, TraceMap};

use crate::cloud::PointCloudSequence;
use crate::error::Result;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, v: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }
}

impl<T> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Everything the frontend produces for one recording.
#[derive(Debug, Clone)]
pub struct FrontendOutput {
    pub trace_map: TraceMap,
    pub detections: Vec<DetectionSet>,
    pub clouds: PointCloudSequence,
}

/// Full chain: range spectrum, trace map, range detection, then targeted
/// azimuth estimation at each detected range.
pub fn run_frontend(cube: &AdcCube, cfg: &RadarConfig, k_mad: f64) -> Result<FrontendOutput> {
    cfg.validate()?;
    let spectrum = range_spectrum(cube, cfg)?;
    let mut tm = trace_map(&spectrum, cfg)?;
    tm.power = Some(echo_strength(cube, cfg)?);
    let mut detections = detect_ranges(&mut tm, k_mad)?;
    let mut clouds = PointCloudSequence::with_windows(detections.len());
    for set in detections.iter_mut() {
        if set.entries.is_empty() {
            continue;
        }
        let bins = set.range_bins();
        let profiles = azimuth_profiles(cube, cfg, set.window, &bins)?;
        for (det, profile) in set.entries.iter_mut().zip(profiles) {
            det.azimuth = Some(profile.argmax_angle(cfg));
        }
        clouds.windows[set.window] = set.to_points(cfg);
    }
    Ok(FrontendOutput {
        trace_map: tm,
        detections,
        clouds,
    })
}
