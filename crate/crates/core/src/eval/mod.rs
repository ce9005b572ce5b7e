//! Reconstruction quality against ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{arc_samples, nearest_on_polyline};
use crate::graph::{Edge, FlowGraph};
use crate::grid::{FlowField, Vec2};

pub const DEFAULT_SAMPLE_STEP: f64 = 0.1;
pub const DEFAULT_GATE: f64 = 2.0;

/// Arc-length weighted mean distance from the estimated edges to the
/// nearest truth polyline. Missing truth coverage is not penalized.
pub fn chamfer_one_sided(est: &FlowGraph, truth: &FlowGraph, sample_step: f64) -> Result<f64> {
    if est.edges.is_empty() {
        return Err(Error::UndefinedMetric("estimated graph has no edges".into()));
    }
    if truth.edges.is_empty() {
        return Err(Error::UndefinedMetric("truth graph has no edges".into()));
    }
    let (mut acc, mut total) = (0.0, 0.0);
    for e in &est.edges {
        for s in arc_samples(&e.polyline, sample_step) {
            let d = truth
                .edges
                .iter()
                .filter_map(|t| nearest_on_polyline(s.point, &t.polyline))
                .map(|n| n.dist)
                .fold(f64::INFINITY, f64::min);
            acc += d * s.weight;
            total += s.weight;
        }
    }
    if total == 0.0 {
        return Err(Error::UndefinedMetric("estimated edges have zero length".into()));
    }
    Ok(acc / total)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Association {
    /// `(estimated edge id, truth edge id)`.
    pub pairs: Vec<(usize, usize)>,
    pub unassociated_est: Vec<usize>,
    pub unassociated_truth: Vec<usize>,
}

fn ends(e: &Edge) -> (Vec2, Vec2) {
    (e.polyline[0], *e.polyline.last().expect("polyline has points"))
}

/// Mean endpoint distance between two edges under the better of the two
/// end pairings.
pub fn endpoint_distance(a: &Edge, b: &Edge) -> f64 {
    let ((a0, a1), (b0, b1)) = (ends(a), ends(b));
    let same = 0.5 * (a0.dist(b0) + a1.dist(b1));
    let flipped = 0.5 * (a0.dist(b1) + a1.dist(b0));
    same.min(flipped)
}

/// Greedy one-to-one edge matching by smallest endpoint distance within
/// `gate` meters. Ties go to the smaller ids.
pub fn associate(est: &FlowGraph, truth: &FlowGraph, gate: f64) -> Association {
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, e) in est.edges.iter().enumerate() {
        for (j, t) in truth.edges.iter().enumerate() {
            let d = endpoint_distance(e, t);
            if d <= gate {
                cands.push((d, i, j));
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; est.edges.len()];
    let mut used_t = vec![false; truth.edges.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in cands {
        if !used_e[i] && !used_t[j] {
            used_e[i] = true;
            used_t[j] = true;
            pairs.push((est.edges[i].id, truth.edges[j].id));
        }
    }
    pairs.sort_unstable();
    Association {
        pairs,
        unassociated_est: est.edges.iter().zip(&used_e).filter(|(_, &u)| !u).map(|(e, _)| e.id).collect(),
        unassociated_truth: truth.edges.iter().zip(&used_t).filter(|(_, &u)| !u).map(|(e, _)| e.id).collect(),
    }
}

/// Unsigned angle between two vectors in degrees, in `[0, 180]`.
pub fn angle_between_deg(a: Vec2, b: Vec2) -> f64 {
    a.cross(b).atan2(a.dot(b)).abs().to_degrees()
}

/// Mean angle between associated chords (tail to head).
pub fn edge_orientation_mae(est: &FlowGraph, truth: &FlowGraph, assoc: &Association) -> Result<f64> {
    let errs: Vec<f64> = pairs_of(est, truth, assoc)
        .map(|(e, t)| angle_between_deg(e.chord(), t.chord()))
        .collect();
    if errs.is_empty() {
        return Err(Error::UndefinedMetric("no associated edges".into()));
    }
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

fn pairs_of<'a>(
    est: &'a FlowGraph,
    truth: &'a FlowGraph,
    assoc: &'a Association,
) -> impl Iterator<Item = (&'a Edge, &'a Edge)> + 'a {
    assoc
        .pairs
        .iter()
        .filter_map(|&(e, t)| Some((est.edge(e)?, truth.edge(t)?)))
}

/// Mean absolute ratio error over associated edges that carry a ratio on
/// both sides.
pub fn split_ratio_mae(est: &FlowGraph, truth: &FlowGraph, assoc: &Association) -> Result<f64> {
    let errs: Vec<f64> = pairs_of(est, truth, assoc)
        .filter_map(|(e, t)| Some((e.lambda? - t.lambda?).abs()))
        .collect();
    if errs.is_empty() {
        return Err(Error::UndefinedMetric("no associated edge has ratios on both sides".into()));
    }
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Mean cosine between edge tangents and the unit flow at the nearest cell,
/// over arc-length samples; cells without flow are skipped.
pub fn cosine_consistency(g: &FlowGraph, unit: &FlowField, sample_step: f64) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for e in &g.edges {
        for s in arc_samples(&e.polyline, sample_step) {
            let f = unit.sample_nearest(s.point).normalized();
            if f.is_zero() {
                continue;
            }
            sum += s.tangent.dot(f);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::UndefinedMetric("no edge sample falls on flow".into()));
    }
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalParams {
    pub sample_step: f64,
    pub gate: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            sample_step: DEFAULT_SAMPLE_STEP,
            gate: DEFAULT_GATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSensitivity {
    pub gate: f64,
    pub associated: usize,
    pub orientation_mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub d_avg: f64,
    pub orientation_mae: Option<f64>,
    pub split_mae: Option<f64>,
    pub cosine_consistency: Option<f64>,
    pub est_vertices: usize,
    pub est_edges: usize,
    pub truth_vertices: usize,
    pub truth_edges: usize,
    pub association: Association,
    /// Association at half and one and a half times the gate.
    pub gate_sensitivity: Vec<GateSensitivity>,
}

impl EvalReport {
    pub fn counts_match(&self) -> bool {
        self.est_vertices == self.truth_vertices && self.est_edges == self.truth_edges
    }

    /// Plain-text summary table.
    pub fn summary(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        format!(
            "vertices        {} est / {} truth\n\
             edges           {} est / {} truth\n\
             d_avg (m)       {:.3}\n\
             orientation (°) {}\n\
             split MAE       {}\n\
             cosine          {}\n\
             unassociated    {} est / {} truth\n",
            self.est_vertices,
            self.truth_vertices,
            self.est_edges,
            self.truth_edges,
            self.d_avg,
            opt(self.orientation_mae),
            opt(self.split_mae),
            opt(self.cosine_consistency),
            self.association.unassociated_est.len(),
            self.association.unassociated_truth.len(),
        )
    }
}

/// Every metric that is defined for the inputs; only the Chamfer distance
/// is mandatory.
pub fn evaluate(est: &FlowGraph, truth: &FlowGraph, unit: Option<&FlowField>, p: &EvalParams) -> Result<EvalReport> {
    let d_avg = chamfer_one_sided(est, truth, p.sample_step)?;
    let association = associate(est, truth, p.gate);
    let gate_sensitivity = [0.5, 1.5]
        .iter()
        .map(|k| {
            let a = associate(est, truth, p.gate * k);
            GateSensitivity {
                gate: p.gate * k,
                associated: a.pairs.len(),
                orientation_mae: edge_orientation_mae(est, truth, &a).ok(),
            }
        })
        .collect();
    Ok(EvalReport {
        d_avg,
        orientation_mae: edge_orientation_mae(est, truth, &association).ok(),
        split_mae: split_ratio_mae(est, truth, &association).ok(),
        cosine_consistency: unit.and_then(|u| cosine_consistency(est, u, p.sample_step).ok()),
        est_vertices: est.vertices.len(),
        est_edges: est.edges.len(),
        truth_vertices: truth.vertices.len(),
        truth_edges: truth.edges.len(),
        association,
        gate_sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Vertex;
    use crate::grid::{GridSpec, Stage};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(edges: &[&[(f64, f64)]]) -> FlowGraph {
        let mut g = FlowGraph::default();
        for (k, pts) in edges.iter().enumerate() {
            let pl: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            g.vertices.push(Vertex { id: 2 * k, pos: pl[0] });
            g.vertices.push(Vertex { id: 2 * k + 1, pos: *pl.last().unwrap() });
            g.edges.push(Edge { id: k, tail: 2 * k, head: 2 * k + 1, polyline: pl, lambda: None });
        }
        g
    }

    fn translated(g: &FlowGraph, d: Vec2) -> FlowGraph {
        let mut out = g.clone();
        for e in out.edges.iter_mut() {
            e.polyline.iter_mut().for_each(|p| *p += d);
        }
        out
    }

    #[test]
    fn chamfer_examples() {
        let line = graph(&[&[(0.0, 0.0), (10.0, 0.0)]]);
        assert_eq!(chamfer_one_sided(&line, &line, 0.1).unwrap(), 0.0);
        let shifted = translated(&line, Vec2::new(0.0, 0.3));
        assert!((chamfer_one_sided(&shifted, &line, 0.1).unwrap() - 0.3).abs() < 1e-12);
        let l_shape = graph(&[&[(0.0, 0.0), (5.0, 0.0)], &[(5.0, 0.0), (5.0, 5.0)]]);
        let one_arm = graph(&[&[(0.0, 0.0), (5.0, 0.0)]]);
        assert_eq!(chamfer_one_sided(&one_arm, &l_shape, 0.1).unwrap(), 0.0);
        assert!(chamfer_one_sided(&FlowGraph::default(), &line, 0.1).is_err());
    }

    #[test]
    fn orientation_examples() {
        let a = graph(&[&[(0.0, 0.0), (1.0, 0.0)]]);
        let b = graph(&[&[(0.0, 0.0), (1.0, 1.0)]]);
        let assoc = associate(&a, &b, 2.0);
        assert!((edge_orientation_mae(&a, &b, &assoc).unwrap() - 45.0).abs() < 1e-9);
        assert_eq!(edge_orientation_mae(&a, &a, &associate(&a, &a, 2.0)).unwrap(), 0.0);
        let c = graph(&[&[(0.5, -0.5), (0.5, 0.5)]]);
        assert!((edge_orientation_mae(&a, &c, &associate(&a, &c, 2.0)).unwrap() - 90.0).abs() < 1e-9);
        let far = graph(&[&[(50.0, 0.0), (51.0, 0.0)]]);
        assert!(edge_orientation_mae(&a, &far, &associate(&a, &far, 2.0)).is_err());
    }

    #[test]
    fn split_examples() {
        let mut est = graph(&[&[(0.0, 0.0), (5.0, 5.0)], &[(0.0, 0.0), (-5.0, 5.0)]]);
        let mut truth = est.clone();
        est.edges[0].lambda = Some(0.47);
        est.edges[1].lambda = Some(0.53);
        truth.edges[0].lambda = Some(0.5);
        truth.edges[1].lambda = Some(0.5);
        let assoc = associate(&est, &truth, 2.0);
        assert!((split_ratio_mae(&est, &truth, &assoc).unwrap() - 0.03).abs() < 1e-12);
        assert_eq!(split_ratio_mae(&truth, &truth, &assoc).unwrap(), 0.0);
        let mut single = graph(&[&[(0.0, 0.0), (5.0, 0.0)]]);
        single.edges[0].lambda = Some(1.0);
        assert_eq!(split_ratio_mae(&single, &single, &associate(&single, &single, 2.0)).unwrap(), 0.0);
        let bare = graph(&[&[(0.0, 0.0), (5.0, 0.0)]]);
        assert!(split_ratio_mae(&bare, &bare, &associate(&bare, &bare, 2.0)).is_err());
    }

    fn flow(f: impl Fn(Vec2) -> Vec2) -> FlowField {
        let gs = GridSpec::new(Vec2::new(-5.0, -5.0), 30.0, 30.0, 0.25).unwrap();
        FlowField::from_fn(gs, Stage::Unit, f)
    }

    #[test]
    fn cosine_examples() {
        let g = graph(&[&[(0.0, 0.0), (10.0, 0.0)], &[(0.0, 1.0), (0.0, 11.0)]]);
        let along = flow(|p| if p.y < 0.5 { Vec2::new(1.0, 0.0) } else { Vec2::new(0.0, 1.0) });
        assert!(cosine_consistency(&g, &along, 0.1).unwrap() >= 0.99);
        let against = flow(|p| if p.y < 0.5 { Vec2::new(-1.0, 0.0) } else { Vec2::new(0.0, -1.0) });
        assert!(cosine_consistency(&g, &against, 0.1).unwrap() <= -0.99);
        let empty = flow(|_| Vec2::ZERO);
        assert!(cosine_consistency(&g, &empty, 0.1).is_err());
    }

    #[test]
    fn random_flow_averages_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gs = GridSpec::new(Vec2::ZERO, 50.0, 50.0, 0.25).unwrap();
        let mut f = FlowField::zeros(gs, Stage::Unit);
        for c in f.data.cells().collect::<Vec<_>>() {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            f.data[c] = Vec2::new(a.cos(), a.sin());
        }
        // 40 horizontal edges of 48 m, sampled every 0.1 m
        let lines: Vec<Vec<(f64, f64)>> = (0..40).map(|k| vec![(1.0, 1.1 + k as f64), (49.0, 1.1 + k as f64)]).collect();
        let refs: Vec<&[(f64, f64)]> = lines.iter().map(|l| l.as_slice()).collect();
        let g = graph(&refs);
        let samples: usize = g.edges.iter().map(|e| arc_samples(&e.polyline, 0.1).len()).sum();
        assert!(samples >= 10_000);
        assert!(cosine_consistency(&g, &f, 0.1).unwrap().abs() <= 0.05);
    }

    #[test]
    fn association_is_greedy_and_gated() {
        let est = graph(&[&[(0.0, 0.0), (10.0, 0.0)], &[(0.0, 5.0), (10.0, 5.0)], &[(30.0, 0.0), (40.0, 0.0)]]);
        let truth = graph(&[&[(10.0, 5.3), (0.0, 5.3)], &[(0.0, 0.2), (10.0, 0.2)]]);
        let a = associate(&est, &truth, 2.0);
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(a.unassociated_est, vec![2]);
        // the reversed truth edge is matched and costs 180°
        assert!((edge_orientation_mae(&est, &truth, &a).unwrap() - 90.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn translation_moves_chamfer_by_at_most_its_length(
            pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..6),
            dx in -2.0f64..2.0, dy in -2.0f64..2.0,
        ) {
            let truth = graph(&[&pts]);
            let est = graph(&[&[(-3.0, 1.0), (4.0, 2.0), (5.0, -6.0)]]);
            let d = Vec2::new(dx, dy);
            let a = chamfer_one_sided(&est, &truth, 0.1).unwrap();
            let b = chamfer_one_sided(&translated(&est, d), &truth, 0.1).unwrap();
            prop_assert!((a - b).abs() <= d.norm() + 1e-9);
            prop_assert!(chamfer_one_sided(&truth, &truth, 0.1).unwrap() < 1e-12);
        }

        #[test]
        fn orientation_is_symmetric_and_rotation_invariant(
            a in (-5.0f64..5.0, -5.0f64..5.0), b in (-5.0f64..5.0, -5.0f64..5.0), rot in 0.0f64..std::f64::consts::TAU,
        ) {
            let (va, vb) = (Vec2::new(a.0, a.1), Vec2::new(b.0, b.1));
            prop_assume!(va.norm() > 1e-3 && vb.norm() > 1e-3);
            let r = |v: Vec2| Vec2::new(v.x * rot.cos() - v.y * rot.sin(), v.x * rot.sin() + v.y * rot.cos());
            let e = angle_between_deg(va, vb);
            prop_assert!((e - angle_between_deg(vb, va)).abs() < 1e-9);
            prop_assert!((e - angle_between_deg(r(va), r(vb))).abs() < 1e-7);
            prop_assert!((0.0..=180.0).contains(&e));
        }
    }
}
