use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Virtual-array element position in half-wavelength units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualElement {
    /// Azimuth index.
    pub p: usize,
    /// Elevation index.
    pub q: usize,
}

/// FMCW MIMO radar parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    /// Carrier frequency, Hz.
    pub f0: f64,
    /// Sweep bandwidth, Hz.
    pub bandwidth: f64,
    /// Chirp duration, s.
    pub chirp_duration: f64,
    /// Chirp slope, Hz/s.
    pub slope: f64,
    /// ADC sample period, s.
    pub adc_period: f64,
    /// ADC samples per chirp.
    pub n_samples: usize,
    /// Chirps per frame.
    pub n_chirps: usize,
    /// Chirps per processing window.
    pub window: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Channel index (tx-major, `tx * n_rx + rx`) to virtual element.
    pub virtual_layout: Vec<VirtualElement>,
    /// Azimuth FFT size after zero padding.
    pub angle_fft_bins: usize,
}

impl Default for RadarConfig {
    /// 76 GHz carrier, 5 GHz sweep, 3 TX x 4 RX forming a 2 x 8 virtual
    /// array (two azimuth TXs, one elevated TX offset by two elements).
    fn default() -> Self {
        let chirp_duration = 100e-6;
        let bandwidth = 5e9;
        let n_tx = 3;
        let n_rx = 4;
        let mut layout = Vec::with_capacity(n_tx * n_rx);
        for tx in 0..n_tx {
            for rx in 0..n_rx {
                let (p, q) = match tx {
                    0 => (rx, 0),
                    1 => (rx + 2, 1),
                    _ => (rx + 4, 0),
                };
                layout.push(VirtualElement { p, q });
            }
        }
        Self {
            f0: 76e9,
            bandwidth,
            chirp_duration,
            slope: bandwidth / chirp_duration,
            adc_period: 1e-7,
            n_samples: 256,
            n_chirps: 128,
            window: 32,
            n_tx,
            n_rx,
            virtual_layout: layout,
            angle_fft_bins: 64,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        let rel = (self.slope * self.chirp_duration - self.bandwidth).abs() / self.bandwidth.abs();
        if !(rel <= 1e-6) {
            return Err(Error::config(format!(
                "slope * chirp_duration = {} does not match bandwidth {}",
                self.slope * self.chirp_duration,
                self.bandwidth
            )));
        }
        if self.n_samples < 2 {
            return Err(Error::config("need at least 2 ADC samples per chirp"));
        }
        if self.window == 0 || self.window > self.n_chirps {
            return Err(Error::config(format!(
                "window of {} chirps does not fit {} chirps",
                self.window, self.n_chirps
            )));
        }
        if self.virtual_layout.len() != self.n_tx * self.n_rx {
            return Err(Error::config(format!(
                "virtual layout has {} entries, expected {}",
                self.virtual_layout.len(),
                self.n_tx * self.n_rx
            )));
        }
        if self.angle_fft_bins < self.azimuth_elements() {
            return Err(Error::config(format!(
                "angle_fft_bins {} smaller than {} azimuth elements",
                self.angle_fft_bins,
                self.azimuth_elements()
            )));
        }
        if !(self.adc_period > 0.0 && self.f0 > 0.0) {
            return Err(Error::config("adc_period and f0 must be positive"));
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.n_tx * self.n_rx
    }

    /// Number of distinct azimuth positions in the virtual aperture.
    pub fn azimuth_elements(&self) -> usize {
        self.virtual_layout.iter().map(|e| e.p).max().map_or(0, |m| m + 1)
    }

    pub fn elevation_elements(&self) -> usize {
        self.virtual_layout.iter().map(|e| e.q).max().map_or(0, |m| m + 1)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f0
    }

    /// Number of complete non-overlapping windows in a frame.
    pub fn n_windows(&self) -> usize {
        self.n_chirps / self.window
    }

    /// Meters per range bin: bin `r` has beat frequency `r / (Nr Tr)`.
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.slope * self.n_samples as f64 * self.adc_period)
    }

    pub fn max_range(&self) -> f64 {
        self.range_resolution() * self.n_samples as f64
    }

    /// Fractional range bin of a target at `range` meters.
    pub fn range_to_bin(&self, range: f64) -> f64 {
        2.0 * self.slope * range * self.adc_period * self.n_samples as f64 / SPEED_OF_LIGHT
    }

    pub fn bin_to_range(&self, bin: f64) -> f64 {
        bin * self.range_resolution()
    }

    /// Azimuth of angle-FFT bin `k` (already shifted so `k = n/2` is boresight).
    pub fn angle_of_bin(&self, k: usize) -> f64 {
        let n = self.angle_fft_bins as f64;
        let s = 2.0 * (k as f64 - n / 2.0) / n;
        s.clamp(-1.0, 1.0).asin()
    }

    /// Nearest shifted angle bin for azimuth `theta`.
    pub fn bin_of_angle(&self, theta: f64) -> usize {
        let n = self.angle_fft_bins as f64;
        let k = (theta.sin() * n / 2.0 + n / 2.0).round();
        k.clamp(0.0, n - 1.0) as usize
    }
}
