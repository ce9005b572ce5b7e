use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{AdcCube, RadarConfig, SPEED_OF_LIGHT};

/// Point reflector seen in one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// m, at the first chirp of the recording.
    pub range: f64,
    /// Radians from boresight, positive towards +x.
    pub azimuth: f64,
    pub amplitude: f64,
    /// Radial velocity, m/s (positive receding).
    #[serde(default)]
    pub velocity: f64,
}

/// Complex white Gaussian noise with `std` per real component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcNoise {
    pub std: f64,
    pub seed: u64,
}

/// Synthesize the IF samples of every chirp. `targets[w]` lists the
/// reflectors present during window `w`; missing trailing windows are empty.
/// A target at chirp `m` sits at `range + velocity * m * chirp_duration`.
pub fn render_adc(targets: &[Vec<Target>], cfg: &RadarConfig, noise: Option<AdcNoise>) -> Result<AdcCube> {
    cfg.validate()?;
    if targets.len() > cfg.n_windows() {
        return Err(Error::scenario(format!(
            "{} target windows for a {}-window frame",
            targets.len(),
            cfg.n_windows()
        )));
    }
    let max_range = cfg.max_range();
    let tc = cfg.chirp_duration;
    for t in targets.iter().flatten() {
        let far = t.range.max(t.range + t.velocity * cfg.n_chirps as f64 * tc);
        if !(t.range >= 0.0) || far >= max_range {
            return Err(Error::scenario(format!(
                "target range {} m outside the unambiguous {max_range:.2} m",
                t.range
            )));
        }
        if !t.azimuth.is_finite() || t.azimuth.abs() >= PI / 2.0 {
            return Err(Error::scenario(format!("target azimuth {} outside (-90°, 90°)", t.azimuth)));
        }
    }

    let mut cube = AdcCube::for_config(cfg);
    let ts = cfg.adc_period;
    for (w, list) in targets.iter().enumerate() {
        for i in 0..cfg.window {
            let m = w * cfg.window + i;
            for t in list.iter().filter(|t| t.amplitude != 0.0) {
                let d = t.range + t.velocity * m as f64 * tc;
                let beat = 2.0 * cfg.slope * d / SPEED_OF_LIGHT;
                let carrier = 2.0 * PI * cfg.f0 * 2.0 * d / SPEED_OF_LIGHT;
                let spatial = PI * t.azimuth.sin();
                for (ch, el) in cfg.virtual_layout.iter().enumerate() {
                    let base = carrier + spatial * el.p as f64;
                    for n in 0..cfg.n_samples {
                        let ph = 2.0 * PI * beat * n as f64 * ts + base;
                        cube.add(m, n, ch, Complex64::from_polar(t.amplitude, ph));
                    }
                }
            }
        }
    }

    if let Some(nz) = noise.filter(|n| n.std > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(nz.seed);
        let g = Normal::new(0.0, nz.std).map_err(|e| Error::scenario(e.to_string()))?;
        let (n_c, n_s, n_ch) = cube.dims();
        for m in 0..n_c {
            for n in 0..n_s {
                for ch in 0..n_ch {
                    let z = Complex64::new(g.sample(&mut rng), g.sample(&mut rng));
                    cube.add(m, n, ch, z);
                }
            }
        }
    }
    Ok(cube)
}
