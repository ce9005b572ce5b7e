use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{AdcCube, Matrix, RadarConfig};
use crate::error::{Error, Result};

/// Range transform of the channel-averaged IF signal: `R[chirp][range bin]`.
pub fn range_spectrum(cube: &AdcCube, cfg: &RadarConfig) -> Result<Matrix<Complex64>> {
    cube.check_against(cfg)?;
    let (n_chirps, n_samples, n_channels) = cube.dims();
    let fft = FftPlanner::new().plan_fft_forward(n_samples);
    let mut out = Matrix::filled(n_chirps, n_samples, Complex64::new(0.0, 0.0));
    let inv = 1.0 / n_channels as f64;
    for m in 0..n_chirps {
        let row = out.row_mut(m);
        for (n, slot) in row.iter_mut().enumerate() {
            let s: Complex64 = (0..n_channels).map(|ch| cube.get(m, n, ch)).sum();
            *slot = s * inv;
        }
        fft.process(row);
    }
    Ok(out)
}

/// Phase in `[0, 2π)`, with the phase of zero defined as 0.
pub fn wrapped_phase(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        return 0.0;
    }
    let a = z.im.atan2(z.re);
    let a = if a < 0.0 { a + TAU } else { a };
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Window-by-range activity map.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMap {
    /// `H[w][r]`, non-negative.
    pub values: Matrix<f64>,
    /// Binarized map, filled in by range detection.
    pub binary: Option<Matrix<bool>>,
    /// Echo strength per `[w][r]` (see [`echo_strength`]), used to thin
    /// adjacent detections down to spectral peaks.
    pub power: Option<Matrix<f64>>,
}

impl TraceMap {
    pub fn from_values(values: Matrix<f64>) -> Self {
        Self {
            values,
            binary: None,
            power: None,
        }
    }

    pub fn n_windows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_ranges(&self) -> usize {
        self.values.cols()
    }
}

/// RMS bandwidth of a spectrum over bins `1..len`, measured in bin index
/// about the power-weighted mean bin. The DC bin is excluded; a spectrum
/// with no energy outside DC has zero bandwidth.
fn rms_bandwidth(spectrum: &[Complex64]) -> f64 {
    let dc = spectrum[0].norm_sqr();
    let powers: Vec<f64> = spectrum[1..].iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = powers.iter().sum();
    if total <= 1e-20 * (dc + total) || total < 1e-300 {
        return 0.0;
    }
    let mean = powers
        .iter()
        .enumerate()
        .map(|(i, p)| (i + 1) as f64 * p)
        .sum::<f64>()
        / total;
    let var = powers
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = (i + 1) as f64 - mean;
            d * d * p
        })
        .sum::<f64>()
        / total;
    var.max(0.0).sqrt()
}

/// Wrapped-phase spectrum bandwidth per non-overlapping window of `W` chirps.
pub fn trace_map(r: &Matrix<Complex64>, cfg: &RadarConfig) -> Result<TraceMap> {
    let w_len = cfg.window;
    if w_len == 0 || w_len > r.rows() {
        return Err(Error::config(format!(
            "window of {w_len} chirps exceeds the {} available",
            r.rows()
        )));
    }
    let n_windows = r.rows() / w_len;
    let n_ranges = r.cols();
    let fft = FftPlanner::new().plan_fft_forward(w_len);
    let mut values = Matrix::filled(n_windows, n_ranges, 0.0);
    let mut buf = vec![Complex64::new(0.0, 0.0); w_len];
    for w in 0..n_windows {
        let start = w * w_len;
        for rb in 0..n_ranges {
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = Complex64::new(wrapped_phase(r[(start + i, rb)]), 0.0);
            }
            fft.process(&mut buf);
            values[(w, rb)] = rms_bandwidth(&buf);
        }
    }
    Ok(TraceMap::from_values(values))
}

/// Range-spectrum magnitude per `[window][range bin]`, averaged
/// non-coherently over the window's chirps and the virtual channels.
///
/// The channel-averaged spectrum is a beam towards boresight, so a target
/// off to the side can sink below the range sidelobes of one in front of the
/// radar; per-channel magnitudes rank targets by echo strength instead.
pub fn echo_strength(cube: &AdcCube, cfg: &RadarConfig) -> Result<Matrix<f64>> {
    cube.check_against(cfg)?;
    let (n_chirps, n_samples, n_channels) = cube.dims();
    let w_len = cfg.window;
    if w_len == 0 || w_len > n_chirps {
        return Err(Error::config(format!("window of {w_len} chirps exceeds the {n_chirps} available")));
    }
    let n_windows = n_chirps / w_len;
    let fft = FftPlanner::new().plan_fft_forward(n_samples);
    let mut out = Matrix::filled(n_windows, n_samples, 0.0);
    let mut buf = vec![Complex64::new(0.0, 0.0); n_samples];
    let scale = 1.0 / (w_len * n_channels) as f64;
    for m in 0..n_windows * w_len {
        for ch in 0..n_channels {
            for (n, slot) in buf.iter_mut().enumerate() {
                *slot = cube.get(m, n, ch);
            }
            fft.process(&mut buf);
            for (acc, z) in out.row_mut(m / w_len).iter_mut().zip(&buf) {
                *acc += z.norm() * scale;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::AdcCube;

    fn small_cfg() -> RadarConfig {
        RadarConfig {
            n_samples: 64,
            n_chirps: 64,
            window: 16,
            ..RadarConfig::default()
        }
    }

    /// Direct O(N^2) DFT, used as an oracle for the FFT path.
    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| {
                        let ang = -TAU * (j * k) as f64 / n as f64;
                        x[j] * Complex64::new(ang.cos(), ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    fn tone_cube(cfg: &RadarConfig, bins: &[f64]) -> AdcCube {
        let mut cube = AdcCube::for_config(cfg);
        for m in 0..cfg.n_chirps {
            for n in 0..cfg.n_samples {
                let z: Complex64 = bins
                    .iter()
                    .map(|b| {
                        let ph = TAU * b * n as f64 / cfg.n_samples as f64;
                        Complex64::new(ph.cos(), ph.sin())
                    })
                    .sum();
                for ch in 0..cfg.n_channels() {
                    cube.set(m, n, ch, z);
                }
            }
        }
        cube
    }

    #[test]
    fn zero_cube_gives_zero_spectrum() {
        let cfg = small_cfg();
        let r = range_spectrum(&AdcCube::for_config(&cfg), &cfg).unwrap();
        assert!(r.as_slice().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn spectrum_matches_naive_dft() {
        let cfg = small_cfg();
        let mut cube = AdcCube::for_config(&cfg);
        for n in 0..cfg.n_samples {
            for ch in 0..cfg.n_channels() {
                let v = ((n * 7 + ch * 3) % 11) as f64 - 5.0;
                cube.set(0, n, ch, Complex64::new(v, 0.5 * ch as f64));
            }
        }
        let r = range_spectrum(&cube, &cfg).unwrap();
        let avg: Vec<Complex64> = (0..cfg.n_samples)
            .map(|n| {
                (0..cfg.n_channels()).map(|ch| cube.get(0, n, ch)).sum::<Complex64>()
                    / cfg.n_channels() as f64
            })
            .collect();
        for (a, b) in r.row(0).iter().zip(naive_dft(&avg)) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn single_tone_peaks_at_its_bin() {
        let cfg = small_cfg();
        let r = range_spectrum(&tone_cube(&cfg, &[32.0]), &cfg).unwrap();
        for m in 0..cfg.n_chirps {
            let row = r.row(m);
            let arg = (0..row.len()).max_by(|&a, &b| row[a].norm().total_cmp(&row[b].norm()));
            assert_eq!(arg, Some(32));
        }
    }

    #[test]
    fn two_tones_give_two_local_maxima() {
        let cfg = small_cfg();
        let r = range_spectrum(&tone_cube(&cfg, &[10.0, 40.0]), &cfg).unwrap();
        let row: Vec<f64> = r.row(0).iter().map(|z| z.norm()).collect();
        let peak = row.iter().cloned().fold(0.0, f64::max);
        let maxima: Vec<usize> = (1..row.len() - 1)
            .filter(|&i| row[i] > 0.01 * peak && row[i] > row[i - 1] && row[i] > row[i + 1])
            .collect();
        assert_eq!(maxima, vec![10, 40]);
    }

    #[test]
    fn mismatched_cube_is_a_config_error() {
        let cfg = small_cfg();
        let cube = AdcCube::zeros(3, 3, 3);
        assert!(matches!(range_spectrum(&cube, &cfg), Err(Error::Config(_))));
    }

    fn phase_column(n: usize, step: f64, offset: f64) -> Matrix<Complex64> {
        let data = (0..n)
            .map(|i| {
                let ph = offset + step * i as f64;
                Complex64::new(ph.cos(), ph.sin())
            })
            .collect();
        Matrix::from_vec(n, 1, data)
    }

    #[test]
    fn static_reflector_has_zero_bandwidth() {
        let cfg = small_cfg();
        let tm = trace_map(&phase_column(64, 0.0, 1.3), &cfg).unwrap();
        assert!(tm.values.as_slice().iter().all(|&h| h < 1e-9));
    }

    #[test]
    fn moving_target_exceeds_static() {
        let cfg = small_cfg();
        let moving = trace_map(&phase_column(64, std::f64::consts::PI / 8.0, 0.2), &cfg).unwrap();
        let fixed = trace_map(&phase_column(64, 0.0, 0.2), &cfg).unwrap();
        for w in 0..moving.n_windows() {
            assert!(moving.values[(w, 0)] > fixed.values[(w, 0)] + 1.0);
        }
    }

    #[test]
    fn zero_input_gives_zero_map() {
        let cfg = small_cfg();
        let r = Matrix::filled(64, 8, Complex64::new(0.0, 0.0));
        let tm = trace_map(&r, &cfg).unwrap();
        assert!(tm.values.as_slice().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn window_longer_than_recording_errors() {
        let cfg = small_cfg();
        let r = Matrix::filled(8, 4, Complex64::new(1.0, 0.0));
        assert!(matches!(trace_map(&r, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn bandwidth_matches_direct_formula() {
        // Evaluate the wrapped-phase DFT and the RMS bandwidth by hand.
        let cfg = small_cfg();
        let step = std::f64::consts::PI / 8.0;
        let col = phase_column(16, step, 0.2);
        let tm = trace_map(&col, &RadarConfig { n_chirps: 16, ..cfg.clone() }).unwrap();
        let phases: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new(wrapped_phase(col[(i, 0)]), 0.0))
            .collect();
        let spec = naive_dft(&phases);
        let p: Vec<f64> = spec[1..].iter().map(|z| z.norm_sqr()).collect();
        let tot: f64 = p.iter().sum();
        let mean: f64 = p.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum::<f64>() / tot;
        let var: f64 =
            p.iter().enumerate().map(|(i, v)| ((i + 1) as f64 - mean).powi(2) * v).sum::<f64>() / tot;
        assert!((tm.values[(0, 0)] - var.sqrt()).abs() < 1e-9);
    }
}
