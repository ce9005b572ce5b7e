//! Polyline primitives shared by graph construction, split-ratio buffering
//! and the evaluation metrics.

use crate::grid::Vec2;

/// Distance from `p` to segment `a`-`b` and the clamped projection parameter.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (p.dist(a), 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p.dist(a + ab * t), t)
}

/// Nearest location on a polyline: distance, segment index and parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub dist: f64,
    pub segment: usize,
    pub t: f64,
}

pub fn nearest_on_polyline(p: Vec2, pts: &[Vec2]) -> Option<Nearest> {
    match pts.len() {
        0 => None,
        1 => Some(Nearest {
            dist: p.dist(pts[0]),
            segment: 0,
            t: 0.0,
        }),
        _ => pts
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (dist, t) = point_segment_distance(p, w[0], w[1]);
                Nearest { dist, segment: i, t }
            })
            .min_by(|a, b| a.dist.total_cmp(&b.dist)),
    }
}

pub fn polyline_length(pts: &[Vec2]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Arc-length samples: midpoints of sub-intervals no longer than `step`,
/// each with its sub-interval length as weight and the local unit tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSample {
    pub point: Vec2,
    pub tangent: Vec2,
    pub weight: f64,
}

pub fn arc_samples(pts: &[Vec2], step: f64) -> Vec<ArcSample> {
    assert!(step > 0.0, "sample step must be positive");
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        let k = (len / step).ceil().max(1.0) as usize;
        let sub = len / k as f64;
        let tangent = (b - a).normalized();
        for j in 0..k {
            let s = (j as f64 + 0.5) / k as f64;
            out.push(ArcSample {
                point: a + (b - a) * s,
                tangent,
                weight: sub,
            });
        }
    }
    out
}

/// Point at arc length `s` along the polyline (clamped).
pub fn point_at(pts: &[Vec2], s: f64) -> Vec2 {
    let mut remaining = s.max(0.0);
    for w in pts.windows(2) {
        let len = w[0].dist(w[1]);
        if remaining <= len && len > 0.0 {
            return w[0] + (w[1] - w[0]) * (remaining / len);
        }
        remaining -= len;
    }
    *pts.last().expect("empty polyline")
}

/// Unit tangent at arc length `s` (direction of the containing segment).
pub fn tangent_at(pts: &[Vec2], s: f64) -> Vec2 {
    let mut remaining = s.max(0.0);
    let mut last = Vec2::ZERO;
    for w in pts.windows(2) {
        let len = w[0].dist(w[1]);
        if len == 0.0 {
            continue;
        }
        last = (w[1] - w[0]).normalized();
        if remaining <= len {
            return last;
        }
        remaining -= len;
    }
    last
}

/// Douglas-Peucker simplification keeping both ends.
pub fn simplify(pts: &[Vec2], tolerance: f64) -> Vec<Vec2> {
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mut keep = vec![false; pts.len()];
    keep[0] = true;
    keep[pts.len() - 1] = true;
    let mut stack = vec![(0usize, pts.len() - 1)];
    while let Some((i, j)) = stack.pop() {
        if j <= i + 1 {
            continue;
        }
        let (mut best, mut best_d) = (i, -1.0);
        for k in i + 1..j {
            let (d, _) = point_segment_distance(pts[k], pts[i], pts[j]);
            if d > best_d {
                best_d = d;
                best = k;
            }
        }
        if best_d > tolerance {
            keep[best] = true;
            stack.push((i, best));
            stack.push((best, j));
        }
    }
    pts.iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}

/// Corridor of half-width `radius` around a polyline, with round joins and
/// flat caps.
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    pub polyline: Vec<Vec2>,
    pub radius: f64,
}

impl Buffer {
    pub fn new(polyline: Vec<Vec2>, radius: f64) -> Self {
        Self { polyline, radius }
    }

    /// Union of one rectangle per segment and a round wedge on the outer
    /// side of every interior joint; nothing extends past the end points.
    pub fn contains(&self, p: Vec2) -> bool {
        let pts = &self.polyline;
        let r = self.radius;
        let dirs: Vec<Vec2> = pts.windows(2).map(|w| (w[1] - w[0]).normalized()).collect();
        for (w, d) in pts.windows(2).zip(&dirs) {
            let ab = w[1] - w[0];
            let len2 = ab.dot(ab);
            if len2 == 0.0 {
                continue;
            }
            let t = (p - w[0]).dot(ab) / len2;
            if (0.0..=1.0).contains(&t) && (p - w[0]).cross(*d).abs() <= r {
                return true;
            }
        }
        for j in 1..pts.len().saturating_sub(1) {
            let d = p - pts[j];
            if d.norm() <= r && d.dot(dirs[j - 1]) >= 0.0 && d.dot(dirs[j]) <= 0.0 {
                return true;
            }
        }
        false
    }

    /// Area from rectangles along each segment plus, at every interior
    /// joint turning by `θ`, the outer round wedge `r²θ/2` minus the inner
    /// overlap `r² tan(θ/2)`. Self-overlap of distant parts is ignored.
    pub fn area(&self) -> f64 {
        let r = self.radius;
        let pts: Vec<Vec2> = dedup(&self.polyline);
        if pts.len() < 2 {
            return 0.0;
        }
        let mut area = 2.0 * r * polyline_length(&pts);
        for w in pts.windows(3) {
            let d0 = (w[1] - w[0]).normalized();
            let d1 = (w[2] - w[1]).normalized();
            let theta = d0.cross(d1).atan2(d0.dot(d1)).abs();
            // the overlap term diverges for hairpins; cap below π
            let theta = theta.min(std::f64::consts::PI * 0.95);
            let l0 = w[0].dist(w[1]);
            let l1 = w[1].dist(w[2]);
            // inner overlap cannot extend past either adjacent segment
            let inner_leg = (r * (theta / 2.0).tan()).min(l0).min(l1);
            area += r * r * theta / 2.0 - r * inner_leg;
        }
        area.max(0.0)
    }
}

fn dedup(pts: &[Vec2]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in pts {
        if out.last().is_none_or(|q| q.dist(p) > 1e-12) {
            out.push(p);
        }
    }
    out
}
