use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::{AdcCube, DetectionSet, Matrix, RadarConfig};
use crate::cloud::PointCloudSequence;
use crate::error::{Error, Result};

/// Range-azimuth magnitude spectrum of one window, `A[θ bin][range bin]`.
/// Angle bins are shifted so that bin `n/2` is boresight.
#[derive(Debug, Clone, PartialEq)]
pub struct AzimuthSpectrum {
    pub window: usize,
    pub values: Matrix<f64>,
}

/// Azimuth profile at a single range bin.
#[derive(Debug, Clone, PartialEq)]
pub struct AzimuthProfile {
    pub values: Vec<f64>,
}

impl AzimuthProfile {
    /// Bin of the maximum, excluding bin 0 (which maps to -90°).
    pub fn argmax_bin(&self) -> usize {
        (1..self.values.len())
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    pub fn argmax_angle(&self, cfg: &RadarConfig) -> f64 {
        cfg.angle_of_bin(self.argmax_bin())
    }
}

struct Plans {
    range: Arc<dyn Fft<f64>>,
    doppler: Arc<dyn Fft<f64>>,
    azimuth: Arc<dyn Fft<f64>>,
    elevation: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(cfg: &RadarConfig) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            range: planner.plan_fft_forward(cfg.n_samples),
            doppler: planner.plan_fft_forward(cfg.window),
            azimuth: planner.plan_fft_forward(cfg.angle_fft_bins),
            elevation: planner.plan_fft_forward(cfg.elevation_elements().max(1)),
        }
    }
}

/// Range-Doppler transform per channel over the window's chirps:
/// `[channel][doppler bin][range bin]`.
fn range_doppler(cube: &AdcCube, cfg: &RadarConfig, w: usize, plans: &Plans) -> Vec<Matrix<Complex64>> {
    let (_, n_samples, n_channels) = cube.dims();
    let start = w * cfg.window;
    let mut out = Vec::with_capacity(n_channels);
    for ch in 0..n_channels {
        let mut rd = Matrix::filled(cfg.window, n_samples, Complex64::new(0.0, 0.0));
        for i in 0..cfg.window {
            let row = rd.row_mut(i);
            for (n, slot) in row.iter_mut().enumerate() {
                *slot = cube.get(start + i, n, ch);
            }
            plans.range.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); cfg.window];
        for r in 0..n_samples {
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = rd[(i, r)];
            }
            plans.doppler.process(&mut col);
            for (i, v) in col.iter().enumerate() {
                rd[(i, r)] = *v;
            }
        }
        out.push(rd);
    }
    out
}

/// Angle spectrum at one range bin: for every Doppler bin, a zero-padded
/// 2D aperture FFT; magnitudes are summed over elevation and averaged over
/// Doppler.
fn profile_from_rd(rd: &[Matrix<Complex64>], cfg: &RadarConfig, r: usize, plans: &Plans) -> Vec<f64> {
    let n_az = cfg.angle_fft_bins;
    let n_el = cfg.elevation_elements().max(1);
    let mut acc = vec![0.0; n_az];
    let mut aperture = vec![Complex64::new(0.0, 0.0); n_az * n_el];
    let mut el_col = vec![Complex64::new(0.0, 0.0); n_el];
    for v in 0..cfg.window {
        aperture.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (ch, el) in cfg.virtual_layout.iter().enumerate() {
            aperture[el.q * n_az + el.p] += rd[ch][(v, r)];
        }
        for q in 0..n_el {
            plans.azimuth.process(&mut aperture[q * n_az..(q + 1) * n_az]);
        }
        for k in 0..n_az {
            for q in 0..n_el {
                el_col[q] = aperture[q * n_az + k];
            }
            plans.elevation.process(&mut el_col);
            let mag: f64 = el_col.iter().map(|z| z.norm()).sum();
            // fftshift: bin k lands at (k + n/2) mod n
            acc[(k + n_az / 2) % n_az] += mag;
        }
    }
    let inv = 1.0 / cfg.window as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

fn check_window(cube: &AdcCube, cfg: &RadarConfig, w: usize) -> Result<()> {
    cube.check_against(cfg)?;
    if w >= cfg.n_windows() {
        return Err(Error::config(format!(
            "window {w} outside the {} available",
            cfg.n_windows()
        )));
    }
    Ok(())
}

/// Effective range-azimuth spectrum of window `w` over all range bins.
pub fn azimuth_spectrum(cube: &AdcCube, cfg: &RadarConfig, w: usize) -> Result<AzimuthSpectrum> {
    check_window(cube, cfg, w)?;
    let plans = Plans::new(cfg);
    let rd = range_doppler(cube, cfg, w, &plans);
    let mut values = Matrix::filled(cfg.angle_fft_bins, cfg.n_samples, 0.0);
    for r in 0..cfg.n_samples {
        for (k, v) in profile_from_rd(&rd, cfg, r, &plans).into_iter().enumerate() {
            values[(k, r)] = v;
        }
    }
    Ok(AzimuthSpectrum { window: w, values })
}

/// Azimuth profile of window `w` at a single range bin.
pub fn azimuth_profile(cube: &AdcCube, cfg: &RadarConfig, w: usize, r: usize) -> Result<AzimuthProfile> {
    Ok(azimuth_profiles(cube, cfg, w, &[r])?.remove(0))
}

/// Targeted azimuth profiles of window `w`, one per requested range bin.
pub fn azimuth_profiles(
    cube: &AdcCube,
    cfg: &RadarConfig,
    w: usize,
    bins: &[usize],
) -> Result<Vec<AzimuthProfile>> {
    check_window(cube, cfg, w)?;
    if let Some(r) = bins.iter().find(|&&r| r >= cfg.n_samples) {
        return Err(Error::config(format!("range bin {r} out of range")));
    }
    let plans = Plans::new(cfg);
    let rd = range_doppler(cube, cfg, w, &plans);
    Ok(bins
        .iter()
        .map(|&r| AzimuthProfile {
            values: profile_from_rd(&rd, cfg, r, &plans),
        })
        .collect())
}

impl AzimuthSpectrum {
    pub fn profile(&self, r: usize) -> AzimuthProfile {
        AzimuthProfile {
            values: (0..self.values.rows()).map(|k| self.values[(k, r)]).collect(),
        }
    }
}

/// Assign each detected range its best azimuth and emit Cartesian points.
/// `spectra` is indexed by window and must cover every detection window.
pub fn point_cloud(
    detections: &[DetectionSet],
    spectra: &[AzimuthSpectrum],
    cfg: &RadarConfig,
) -> Result<(Vec<DetectionSet>, PointCloudSequence)> {
    let mut clouds = PointCloudSequence::with_windows(detections.len());
    let mut out = Vec::with_capacity(detections.len());
    for set in detections {
        let mut set = set.clone();
        if !set.entries.is_empty() {
            let spec = spectra.iter().find(|s| s.window == set.window).ok_or_else(|| {
                Error::config(format!("no azimuth spectrum for window {}", set.window))
            })?;
            for det in set.entries.iter_mut() {
                det.azimuth = Some(spec.profile(det.range_bin).argmax_angle(cfg));
            }
        }
        if set.window >= clouds.windows.len() {
            clouds.windows.resize(set.window + 1, Vec::new());
        }
        clouds.windows[set.window] = set.to_points(cfg);
        out.push(set);
    }
    Ok((out, clouds))
}
