//! Local Jacobians of the unit flow field, divergence and curl maps, and
//! localization of their extrema.

mod jacobian;

pub use jacobian::{curl_divergence_fields, jacobian_field, local_jacobian, JacobianField, LocalFit};

use serde::{Deserialize, Serialize};

use crate::grid::{BinaryGrid, Cell, FlowField, Grid, ScalarField, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Max,
    Min,
}

/// A strict local extremum and its connected region of cells that reach
/// at least half its value with the same sign.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremum {
    pub cell: Cell,
    pub pos: Vec2,
    pub value: f64,
    pub region: BinaryGrid,
}

/// Gaussian smoothing of the valid cells, renormalized by the kernel mass
/// that fell on valid cells. No-data cells stay no-data.
pub fn gaussian_lowpass(sf: &ScalarField, sigma: f64) -> ScalarField {
    if !(sigma > 0.0) {
        return sf.clone();
    }
    let radius = (3.0 * sigma / sf.spec.cell).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| {
            let d = k as f64 * sf.spec.cell;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let data = sf.data.map(|c, v| {
        v.map(|_| {
            let (mut acc, mut mass) = (0.0, 0.0);
            for (i, ky) in kernel.iter().enumerate() {
                for (j, kx) in kernel.iter().enumerate() {
                    let (dx, dy) = (j as isize - radius, i as isize - radius);
                    if let Some(Some(x)) = sf.data.get_signed(c.ix as isize + dx, c.iy as isize + dy) {
                        acc += kx * ky * x;
                        mass += kx * ky;
                    }
                }
            }
            acc / mass
        })
    });
    ScalarField {
        spec: sf.spec,
        kind: sf.kind,
        data,
    }
}

/// Up to `top_k` strict 8-neighborhood extrema of the given polarity,
/// strongest first, ties broken by cell order. Cells need at least one valid
/// neighbor and a value of the matching sign.
pub fn extremum_regions(sf: &ScalarField, polarity: Polarity, top_k: usize) -> Vec<Extremum> {
    let sign = match polarity {
        Polarity::Max => 1.0,
        Polarity::Min => -1.0,
    };
    let val = |c: Cell| sf.data[c].map(|v| v * sign);
    let mut found: Vec<(f64, Cell)> = Vec::new();
    for c in sf.data.cells() {
        let Some(v) = val(c) else { continue };
        if v <= 0.0 {
            continue;
        }
        let mut any = false;
        let strict = sf.data.neighbors8(c).all(|n| match val(n) {
            Some(w) => {
                any = true;
                v > w
            }
            None => true,
        });
        if strict && any {
            found.push((v, c));
        }
    }
    found.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    found
        .into_iter()
        .take(top_k)
        .map(|(v, c)| Extremum {
            cell: c,
            pos: sf.spec.center(c),
            value: v * sign,
            region: grow_region(sf, c, sign, 0.5 * v),
        })
        .collect()
}

fn grow_region(sf: &ScalarField, seed: Cell, sign: f64, threshold: f64) -> BinaryGrid {
    let mut region = BinaryGrid::filled(sf.data.nx(), sf.data.ny(), false);
    let mut stack = vec![seed];
    region[seed] = true;
    while let Some(c) = stack.pop() {
        for n in sf.data.neighbors8(c) {
            if !region[n] && sf.data[n].is_some_and(|v| v * sign >= threshold) {
                region[n] = true;
                stack.push(n);
            }
        }
    }
    region
}

/// Straight line through a ridge: a point on it and a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeLine {
    pub point: Vec2,
    pub direction: Vec2,
}

impl RidgeLine {
    pub fn distance(&self, p: Vec2) -> f64 {
        (p - self.point).cross(self.direction).abs()
    }
}

/// Weighted principal axis of the cells whose magnitude reaches `frac` of
/// the field's largest magnitude and whose sign matches it.
pub fn ridge_line(sf: &ScalarField, frac: f64) -> Option<RidgeLine> {
    let (_, peak) = sf
        .data
        .iter()
        .filter_map(|(c, v)| v.map(|v| (c, v)))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))?;
    if peak == 0.0 {
        return None;
    }
    let pts: Vec<(Vec2, f64)> = sf
        .data
        .iter()
        .filter_map(|(c, v)| {
            let v = (*v)?;
            (v * peak.signum() >= frac * peak.abs()).then(|| (sf.spec.center(c), v.abs()))
        })
        .collect();
    let wsum: f64 = pts.iter().map(|p| p.1).sum();
    let mean = pts.iter().fold(Vec2::ZERO, |a, &(p, w)| a + p * w) * (1.0 / wsum);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(p, w) in &pts {
        let d = p - mean;
        sxx += w * d.x * d.x;
        sxy += w * d.x * d.y;
        syy += w * d.y * d.y;
    }
    // major axis of the 2x2 covariance
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some(RidgeLine {
        point: mean,
        direction: Vec2::new(theta.cos(), theta.sin()),
    })
}

/// Divergence and curl products of one unit field.
#[derive(Debug, Clone)]
pub struct SemanticMaps {
    pub jacobians: JacobianField,
    pub divergence: ScalarField,
    pub curl: ScalarField,
}

/// Fit Jacobians over a window of area `window_area` m² and derive the
/// scalar maps.
pub fn semantic_maps(unit: &FlowField, window_area: f64) -> SemanticMaps {
    let side = unit.spec.odd_window_side(window_area);
    let jacobians = jacobian_field(unit, side);
    let (divergence, curl) = curl_divergence_fields(&jacobians, unit);
    SemanticMaps {
        jacobians,
        divergence,
        curl,
    }
}

/// Grid of booleans marking valid cells of a scalar field.
pub fn valid_mask(sf: &ScalarField) -> Grid<bool> {
    sf.data.map(|_, v| v.is_some())
}
