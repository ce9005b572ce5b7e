use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Trajectories;
use crate::cloud::PointCloudSequence;
use crate::error::{Error, Result};
use crate::grid::Vec2;

/// Roughly a body's angular width at 5-10 m.
pub const DEFAULT_OCCLUSION_ANGLE: f64 = 2.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Rect {
    fn default() -> Self {
        Self {
            x_min: -15.0,
            x_max: 15.0,
            y_min: 0.0,
            y_max: 15.0,
        }
    }
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }
}

/// Static reflector that fires with `activity_prob` in each window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterSite {
    pub x: f64,
    pub y: f64,
    pub activity_prob: f64,
}

fn default_occlusion_angle() -> f64 {
    DEFAULT_OCCLUSION_ANGLE
}

/// Detection imperfections applied on top of the true agent positions.
/// The radar sits at the origin looking along +y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub p_detect: f64,
    /// Expected false points per window.
    pub false_alarm_rate: f64,
    pub pos_noise_std: f64,
    pub occlusion: bool,
    /// Half-width of the shadow cast by a nearer agent, radians.
    #[serde(default = "default_occlusion_angle")]
    pub occlusion_angle: f64,
    #[serde(default)]
    pub clutter_sites: Vec<ClutterSite>,
    /// Region where false alarms land.
    #[serde(default)]
    pub area: Rect,
}

impl SensorModel {
    /// Every agent seen exactly, nothing else.
    pub fn ideal() -> Self {
        Self {
            p_detect: 1.0,
            false_alarm_rate: 0.0,
            pos_noise_std: 0.0,
            occlusion: false,
            occlusion_angle: DEFAULT_OCCLUSION_ANGLE,
            clutter_sites: Vec::new(),
            area: Rect::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_detect) {
            return Err(Error::config(format!("p_detect {} outside [0, 1]", self.p_detect)));
        }
        if !(self.false_alarm_rate >= 0.0) || !(self.pos_noise_std >= 0.0) || !(self.occlusion_angle >= 0.0) {
            return Err(Error::config("sensor rates and noise must be non-negative"));
        }
        if self.clutter_sites.iter().any(|c| !(0.0..=1.0).contains(&c.activity_prob)) {
            return Err(Error::config("clutter activity_prob outside [0, 1]"));
        }
        if !(self.area.x_max > self.area.x_min && self.area.y_max > self.area.y_min) {
            return Err(Error::config("sensor area is empty"));
        }
        Ok(())
    }
}

fn bearing(p: Vec2) -> f64 {
    p.x.atan2(p.y)
}

/// Indices of agents not hidden behind a nearer agent.
fn visible(pts: &[Vec2], half_angle: f64) -> Vec<bool> {
    let polar: Vec<(f64, f64)> = pts.iter().map(|&p| (p.norm(), bearing(p))).collect();
    polar
        .iter()
        .enumerate()
        .map(|(i, &(r, th))| {
            !polar
                .iter()
                .enumerate()
                .any(|(j, &(rj, thj))| j != i && rj < r && (thj - th).abs() <= half_angle)
        })
        .collect()
}

/// Per-window detections of the simulated agents. Deterministic for a
/// fixed seed.
pub fn render_point_clouds(traj: &Trajectories, sm: &SensorModel, seed: u64) -> Result<PointCloudSequence> {
    if traj.is_empty() {
        return Err(Error::InsufficientData("no trajectories to render".into()));
    }
    sm.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = (sm.false_alarm_rate > 0.0)
        .then(|| Poisson::new(sm.false_alarm_rate).expect("validated rate"));
    let noise = |rng: &mut ChaCha8Rng| -> Vec2 {
        if sm.pos_noise_std == 0.0 {
            return Vec2::ZERO;
        }
        let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        Vec2::new(a, b) * sm.pos_noise_std
    };

    let mut clouds = PointCloudSequence::with_windows(traj.n_windows());
    for (w, out) in clouds.windows.iter_mut().enumerate() {
        let agents = traj.window(w);
        let seen = if sm.occlusion {
            visible(&agents, sm.occlusion_angle)
        } else {
            vec![true; agents.len()]
        };
        for (p, ok) in agents.iter().zip(seen) {
            if ok && rng.random::<f64>() < sm.p_detect {
                out.push(*p + noise(&mut rng));
            }
        }
        if let Some(d) = &poisson {
            let k = d.sample(&mut rng) as usize;
            for _ in 0..k {
                out.push(Vec2::new(
                    rng.random_range(sm.area.x_min..sm.area.x_max),
                    rng.random_range(sm.area.y_min..sm.area.y_max),
                ));
            }
        }
        for c in &sm.clutter_sites {
            if rng.random::<f64>() < c.activity_prob {
                out.push(Vec2::new(c.x, c.y) + noise(&mut rng));
            }
        }
    }
    Ok(clouds)
}
