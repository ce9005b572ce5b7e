use num_complex::Complex64;

use super::config::RadarConfig;
use crate::error::{Error, Result};

/// Complex IF samples indexed `[chirp][adc sample][virtual channel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdcCube {
    n_chirps: usize,
    n_samples: usize,
    n_channels: usize,
    data: Vec<Complex64>,
}

impl AdcCube {
    pub fn zeros(n_chirps: usize, n_samples: usize, n_channels: usize) -> Self {
        Self {
            n_chirps,
            n_samples,
            n_channels,
            data: vec![Complex64::new(0.0, 0.0); n_chirps * n_samples * n_channels],
        }
    }

    pub fn for_config(cfg: &RadarConfig) -> Self {
        Self::zeros(cfg.n_chirps, cfg.n_samples, cfg.n_channels())
    }

    pub fn from_vec(
        n_chirps: usize,
        n_samples: usize,
        n_channels: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != n_chirps * n_samples * n_channels {
            return Err(Error::config(format!(
                "cube data has {} samples, expected {n_chirps} x {n_samples} x {n_channels}",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::config("cube contains non-finite samples"));
        }
        Ok(Self {
            n_chirps,
            n_samples,
            n_channels,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_chirps, self.n_samples, self.n_channels)
    }

    #[inline]
    fn idx(&self, chirp: usize, sample: usize, channel: usize) -> usize {
        (chirp * self.n_samples + sample) * self.n_channels + channel
    }

    pub fn get(&self, chirp: usize, sample: usize, channel: usize) -> Complex64 {
        self.data[self.idx(chirp, sample, channel)]
    }

    pub fn set(&mut self, chirp: usize, sample: usize, channel: usize, z: Complex64) {
        let i = self.idx(chirp, sample, channel);
        self.data[i] = z;
    }

    pub fn add(&mut self, chirp: usize, sample: usize, channel: usize, z: Complex64) {
        let i = self.idx(chirp, sample, channel);
        self.data[i] += z;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * s).collect(),
            ..*self
        }
    }

    pub fn check_against(&self, cfg: &RadarConfig) -> Result<()> {
        let want = (cfg.n_chirps, cfg.n_samples, cfg.n_channels());
        if self.dims() != want {
            return Err(Error::config(format!(
                "cube dimensions {:?} do not match configuration {:?}",
                self.dims(),
                want
            )));
        }
        Ok(())
    }
}

impl std::ops::Add for &AdcCube {
    type Output = AdcCube;
    fn add(self, o: &AdcCube) -> AdcCube {
        assert_eq!(self.dims(), o.dims());
        AdcCube {
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
            ..*self
        }
    }
}
