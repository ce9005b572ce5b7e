use serde::{Deserialize, Serialize};

use super::{Edge, FlowGraph, Trace, Vertex};
use crate::error::{Error, Result};
use crate::geometry::{nearest_on_polyline, polyline_length};
use crate::grid::{FlowField, Vec2};

/// Parameters of graph construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildParams {
    /// Vertex-trace proximity distance, meters.
    pub proximity: f64,
    /// Trace ends closer than this are one vertex, meters.
    pub merge_radius: f64,
    /// Dead-end traces hanging off a junction shorter than this are
    /// thinning artifacts and are removed, meters.
    pub spur_length: f64,
    /// Junction-to-junction links shorter than this collapse into one
    /// vertex; thinning splits a crossing of two lanes into two branch
    /// points roughly a lane width over the sine of the crossing angle apart.
    pub junction_link: f64,
    /// A dead end is joined to the nearest vertex or trace lying ahead of
    /// it within this distance, closing gaps left by occlusion shadows and
    /// missed detections, meters. Zero disables.
    pub gap_bridge: f64,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self::for_cell(0.25, 1.0)
    }
}

impl BuildParams {
    pub fn for_cell(cell: f64, proximity: f64) -> Self {
        Self {
            proximity,
            merge_radius: 1.5 * cell,
            spur_length: proximity,
            junction_link: 2.0 * proximity,
            gap_bridge: 2.0 * proximity,
        }
    }
}

#[derive(Debug, Clone)]
struct WEdge {
    a: usize,
    b: usize,
    pts: Vec<Vec2>,
}

impl WEdge {
    fn len(&self) -> f64 {
        polyline_length(&self.pts)
    }
}

/// Mutable undirected multigraph used while cleaning up traces.
struct Work {
    verts: Vec<Option<Vec2>>,
    edges: Vec<Option<WEdge>>,
}

impl Work {
    fn live_edges(&self) -> impl Iterator<Item = (usize, &WEdge)> {
        self.edges.iter().enumerate().filter_map(|(i, e)| e.as_ref().map(|e| (i, e)))
    }

    fn incident(&self, v: usize) -> Vec<usize> {
        self.live_edges().filter(|(_, e)| e.a == v || e.b == v).map(|(i, _)| i).collect()
    }

    fn degree(&self, v: usize) -> usize {
        self.live_edges()
            .map(|(_, e)| (e.a == v) as usize + (e.b == v) as usize)
            .sum()
    }

    /// Make the polyline of edge `i` end exactly at its vertices.
    fn snap(&mut self, i: usize) {
        let e = self.edges[i].as_mut().expect("live edge");
        let (pa, pb) = (self.verts[e.a].expect("live vertex"), self.verts[e.b].expect("live vertex"));
        if e.pts.first() != Some(&pa) {
            e.pts.insert(0, pa);
        }
        if e.pts.last() != Some(&pb) {
            e.pts.push(pb);
        }
    }

    fn drop_unused_vertices(&mut self) {
        for v in 0..self.verts.len() {
            if self.verts[v].is_some() && self.degree(v) == 0 {
                self.verts[v] = None;
            }
        }
    }

    fn prune_spurs(&mut self, max_len: f64) -> bool {
        let mut changed = false;
        for i in 0..self.edges.len() {
            let Some(e) = &self.edges[i] else { continue };
            if e.a == e.b || e.len() >= max_len {
                continue;
            }
            let (da, db) = (self.degree(e.a), self.degree(e.b));
            if (da == 1 && db >= 3) || (db == 1 && da >= 3) {
                let free = if da == 1 { e.a } else { e.b };
                self.edges[i] = None;
                self.verts[free] = None;
                changed = true;
            }
        }
        changed
    }

    /// Join the two edges meeting at every vertex of degree two.
    fn dissolve_pass_through(&mut self) -> bool {
        let mut changed = false;
        for v in 0..self.verts.len() {
            if self.verts[v].is_none() {
                continue;
            }
            let inc = self.incident(v);
            if inc.len() != 2 || self.degree(v) != 2 {
                continue;
            }
            let mut e1 = self.edges[inc[0]].take().expect("live edge");
            let mut e2 = self.edges[inc[1]].take().expect("live edge");
            if e1.b != v {
                e1.pts.reverse();
                std::mem::swap(&mut e1.a, &mut e1.b);
            }
            if e2.a != v {
                e2.pts.reverse();
                std::mem::swap(&mut e2.a, &mut e2.b);
            }
            let mut pts = e1.pts;
            pts.extend(e2.pts.into_iter().skip(1));
            self.edges[inc[0]] = Some(WEdge { a: e1.a, b: e2.b, pts });
            self.verts[v] = None;
            changed = true;
        }
        changed
    }

    /// Collapse short edges whose both ends are junctions.
    fn contract_junction_links(&mut self, max_len: f64) -> bool {
        for i in 0..self.edges.len() {
            let Some(e) = &self.edges[i] else { continue };
            if e.a == e.b || e.len() >= max_len || self.degree(e.a) < 3 || self.degree(e.b) < 3 {
                continue;
            }
            let (keep, gone) = (e.a, e.b);
            let mid = point_mid(&e.pts);
            self.edges[i] = None;
            self.verts[keep] = Some(mid);
            self.verts[gone] = None;
            for j in 0..self.edges.len() {
                if let Some(o) = self.edges[j].as_mut() {
                    if o.a == gone {
                        o.a = keep;
                    }
                    if o.b == gone {
                        o.b = keep;
                    }
                }
            }
            for j in self.incident(keep) {
                self.snap(j);
            }
            return true;
        }
        false
    }

    fn drop_short_loops(&mut self, max_len: f64) -> bool {
        let mut changed = false;
        for e in self.edges.iter_mut() {
            if e.as_ref().is_some_and(|e| e.a == e.b && e.len() < max_len) {
                *e = None;
                changed = true;
            }
        }
        changed
    }

    /// Split edges whose interior passes within `dist` of a vertex that is
    /// not one of their ends. Returns the number of splits.
    fn proximity_split(&mut self, dist: f64, end_margin: f64) -> usize {
        let mut splits = 0;
        for v in 0..self.verts.len() {
            let Some(pv) = self.verts[v] else { continue };
            for i in 0..self.edges.len() {
                let Some(e) = &self.edges[i] else { continue };
                if e.a == v || e.b == v {
                    continue;
                }
                let Some(near) = nearest_on_polyline(pv, &e.pts) else { continue };
                if near.dist > dist {
                    continue;
                }
                let s = polyline_length(&e.pts[..=near.segment])
                    + near.t * e.pts[near.segment].dist(e.pts[near.segment + 1]);
                if s <= end_margin || e.len() - s <= end_margin {
                    continue;
                }
                let e = self.edges[i].take().expect("live edge");
                let mut first: Vec<Vec2> = e.pts[..=near.segment].to_vec();
                first.push(pv);
                let mut second = vec![pv];
                second.extend_from_slice(&e.pts[near.segment + 1..]);
                self.edges[i] = Some(WEdge { a: e.a, b: v, pts: first });
                self.edges.push(Some(WEdge { a: v, b: e.b, pts: second }));
                splits += 1;
            }
        }
        splits
    }

    fn residual_proximities(&self, dist: f64, end_margin: f64) -> usize {
        let mut n = 0;
        for (v, pv) in self.verts.iter().enumerate() {
            let Some(pv) = *pv else { continue };
            for (_, e) in self.live_edges() {
                if e.a == v || e.b == v {
                    continue;
                }
                if let Some(near) = nearest_on_polyline(pv, &e.pts) {
                    let s = polyline_length(&e.pts[..=near.segment])
                        + near.t * e.pts[near.segment].dist(e.pts[near.segment + 1]);
                    if near.dist <= dist && s > end_margin && e.len() - s > end_margin {
                        n += 1;
                    }
                }
            }
        }
        n
    }
}

/// Half-angle of the cone ahead of a dead end searched for a continuation.
const BRIDGE_CONE_DEG: f64 = 35.0;
/// Length of trace used for the outward direction at a dead end, meters.
const END_TANGENT_LEN: f64 = 1.0;

enum BridgeTarget {
    Vertex(usize),
    /// Edge index and polyline point index.
    Interior(usize, usize),
}

impl Work {
    /// Outward unit direction of the edge `i` at its end vertex `v`.
    fn end_direction(&self, i: usize, v: usize) -> Vec2 {
        let e = self.edges[i].as_ref().expect("live edge");
        let mut pts = e.pts.clone();
        if e.a == v && e.b != v {
            pts.reverse();
        }
        let tip = *pts.last().expect("non-empty");
        let total = polyline_length(&pts);
        let back = crate::geometry::point_at(&pts, (total - END_TANGENT_LEN).max(0.0));
        (tip - back).normalized()
    }

    /// Link every dead end to the closest vertex or trace point inside the
    /// cone ahead of it, nearest gaps first. Returns the number of links.
    fn bridge_gaps(&mut self, max_gap: f64, end_margin: f64) -> usize {
        let cos_cone = BRIDGE_CONE_DEG.to_radians().cos();
        let mut proposals: Vec<(f64, usize, usize)> = Vec::new();
        for u in 0..self.verts.len() {
            let Some(pu) = self.verts[u] else { continue };
            let inc = self.incident(u);
            if inc.len() != 1 || self.degree(u) != 1 {
                continue;
            }
            let dir = self.end_direction(inc[0], u);
            if dir.is_zero() {
                continue;
            }
            if let Some((d, _)) = self.bridge_target(u, pu, dir, inc[0], max_gap, cos_cone, end_margin) {
                proposals.push((d, u, inc[0]));
            }
        }
        proposals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut links = 0;
        for (_, u, own) in proposals {
            // earlier links may have changed the neighborhood
            let Some(pu) = self.verts[u] else { continue };
            if self.degree(u) != 1 || self.edges[own].is_none() {
                continue;
            }
            let dir = self.end_direction(own, u);
            let Some((_, target)) = self.bridge_target(u, pu, dir, own, max_gap, cos_cone, end_margin) else {
                continue;
            };
            let v = match target {
                BridgeTarget::Vertex(v) => v,
                BridgeTarget::Interior(i, k) => {
                    let e = self.edges[i].take().expect("live edge");
                    let v = self.verts.len();
                    self.verts.push(Some(e.pts[k]));
                    self.edges[i] = Some(WEdge { a: e.a, b: v, pts: e.pts[..=k].to_vec() });
                    self.edges.push(Some(WEdge { a: v, b: e.b, pts: e.pts[k..].to_vec() }));
                    v
                }
            };
            let pv = self.verts[v].expect("live vertex");
            self.edges.push(Some(WEdge { a: u, b: v, pts: vec![pu, pv] }));
            links += 1;
        }
        links
    }

    #[allow(clippy::too_many_arguments)]
    fn bridge_target(
        &self,
        u: usize,
        pu: Vec2,
        dir: Vec2,
        own: usize,
        max_gap: f64,
        cos_cone: f64,
        end_margin: f64,
    ) -> Option<(f64, BridgeTarget)> {
        let ahead = |p: Vec2| {
            let d = p - pu;
            let n = d.norm();
            (n > 1e-9 && n <= max_gap && d.dot(dir) >= cos_cone * n).then_some(n)
        };
        let own_far = self.edges[own].as_ref().map(|e| if e.a == u { e.b } else { e.a });
        let mut best: Option<(f64, BridgeTarget)> = None;
        let offer = |d: f64, t: BridgeTarget, best: &mut Option<(f64, BridgeTarget)>| {
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                *best = Some((d, t));
            }
        };
        for (v, pv) in self.verts.iter().enumerate() {
            let Some(pv) = *pv else { continue };
            if v == u || Some(v) == own_far {
                continue;
            }
            if let Some(d) = ahead(pv) {
                offer(d, BridgeTarget::Vertex(v), &mut best);
            }
        }
        for (i, e) in self.live_edges() {
            if i == own {
                continue;
            }
            let total = polyline_length(&e.pts);
            let mut s = 0.0;
            for k in 0..e.pts.len() {
                if k > 0 {
                    s += e.pts[k - 1].dist(e.pts[k]);
                }
                if s <= end_margin || total - s <= end_margin {
                    continue;
                }
                if let Some(d) = ahead(e.pts[k]) {
                    offer(d, BridgeTarget::Interior(i, k), &mut best);
                }
            }
        }
        best
    }
}

fn point_mid(pts: &[Vec2]) -> Vec2 {
    crate::geometry::point_at(pts, polyline_length(pts) / 2.0)
}

/// Mean cosine between the polyline's forward tangents and the unit flow at
/// the nearest cell, skipping cells without flow. `None` when no point has
/// flow.
pub fn edge_flow_cosine(pts: &[Vec2], unit: &FlowField) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..pts.len() {
        let t = if i + 1 < pts.len() {
            pts[i + 1] - pts[i]
        } else if i > 0 {
            pts[i] - pts[i - 1]
        } else {
            continue;
        };
        let (t, f) = (t.normalized(), unit.sample_nearest(pts[i]).normalized());
        if t.is_zero() || f.is_zero() {
            continue;
        }
        sum += t.dot(f);
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Turn skeleton traces into a directed flow graph.
///
/// Trace ends become vertices (ends within `merge_radius` are merged).
/// Short spurs, pass-through vertices and junction-to-junction links
/// left over from thinning are cleaned up, then every vertex lying within
/// `proximity` of another trace's interior splits that trace. Finally each
/// edge is oriented to agree with the unit flow field.
pub fn build_graph(traces: &[Trace], unit: &FlowField, params: &BuildParams) -> Result<FlowGraph> {
    if !(params.proximity >= 0.0) || !(params.merge_radius >= 0.0) {
        return Err(Error::config("graph distances must be non-negative"));
    }
    let mut ends: Vec<Vec2> = Vec::new();
    let mut raw: Vec<Vec<Vec2>> = Vec::new();
    for t in traces {
        if t.points.len() < 2 {
            log::warn!("dropping trace with {} point(s)", t.points.len());
            continue;
        }
        ends.push(t.points[0]);
        ends.push(*t.points.last().expect("non-empty"));
        raw.push(t.points.clone());
    }

    // union-find over trace ends
    let mut parent: Vec<usize> = (0..ends.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..ends.len() {
        for j in i + 1..ends.len() {
            if ends[i].dist(ends[j]) <= params.merge_radius + 1e-9 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut sums: Vec<(Vec2, usize)> = vec![(Vec2::ZERO, 0); ends.len()];
    for (i, &end) in ends.iter().enumerate() {
        let r = find(&mut parent, i);
        sums[r].0 += end;
        sums[r].1 += 1;
    }
    let mut work = Work {
        verts: sums
            .iter()
            .map(|&(s, n)| (n > 0).then(|| s * (1.0 / n as f64)))
            .collect(),
        edges: Vec::new(),
    };
    for (k, pts) in raw.into_iter().enumerate() {
        let (a, b) = (find(&mut parent, 2 * k), find(&mut parent, 2 * k + 1));
        work.edges.push(Some(WEdge { a, b, pts }));
        let i = work.edges.len() - 1;
        work.snap(i);
    }

    let cleanup = |work: &mut Work| {
        let mut rounds = 0;
        loop {
            let mut changed = work.drop_short_loops(2.0 * params.proximity);
            changed |= work.prune_spurs(params.spur_length);
            changed |= work.dissolve_pass_through();
            changed |= work.contract_junction_links(params.junction_link);
            work.drop_unused_vertices();
            rounds += 1;
            if !changed || rounds > 1000 {
                break;
            }
        }
    };
    cleanup(&mut work);
    let margin = params.merge_radius;
    if params.gap_bridge > 0.0 && work.bridge_gaps(params.gap_bridge, margin) > 0 {
        cleanup(&mut work);
    }
    for _ in 0..2 {
        if work.proximity_split(params.proximity, margin) == 0 {
            break;
        }
    }
    let residual = work.residual_proximities(params.proximity, margin);
    if residual > 0 {
        log::warn!("{residual} vertex-trace proximities remain after two split passes");
    }

    // compact ids and orient edges
    let mut id_of = vec![usize::MAX; work.verts.len()];
    let mut vertices = Vec::new();
    for (i, v) in work.verts.iter().enumerate() {
        if let Some(p) = v {
            id_of[i] = vertices.len();
            vertices.push(Vertex { id: vertices.len(), pos: *p });
        }
    }
    let mut edges = Vec::new();
    for (_, e) in work.live_edges() {
        let (mut tail, mut head, mut pts) = (id_of[e.a], id_of[e.b], e.pts.clone());
        if edge_flow_cosine(&pts, unit).is_some_and(|c| c < 0.0) {
            pts.reverse();
            std::mem::swap(&mut tail, &mut head);
        }
        edges.push(Edge {
            id: edges.len(),
            tail,
            head,
            polyline: pts,
            lambda: None,
        });
    }
    Ok(FlowGraph { vertices, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Cell, GridSpec, Stage};

    fn spec() -> GridSpec {
        GridSpec::new(Vec2::ZERO, 10.0, 10.0, 0.25).unwrap()
    }

    fn trace(cells: Vec<(usize, usize)>) -> Trace {
        let gs = spec();
        let cells: Vec<Cell> = cells.into_iter().map(|(x, y)| Cell::new(x, y)).collect();
        Trace {
            points: cells.iter().map(|&c| gs.center(c)).collect(),
            cells,
        }
    }

    fn uniform(v: Vec2) -> FlowField {
        FlowField::from_fn(spec(), Stage::Unit, |_| v)
    }

    #[test]
    fn single_trace_follows_the_flow() {
        let t = trace((4..30).map(|x| (x, 10)).collect());
        let g = build_graph(std::slice::from_ref(&t), &uniform(Vec2::new(1.0, 0.0)), &BuildParams::default()).unwrap();
        assert_eq!((g.vertices.len(), g.edges.len()), (2, 1));
        let e = &g.edges[0];
        assert!(g.vertex(e.tail).unwrap().pos.x < g.vertex(e.head).unwrap().pos.x);

        let g = build_graph(&[t], &uniform(Vec2::new(-1.0, 0.0)), &BuildParams::default()).unwrap();
        let e = &g.edges[0];
        assert!(g.vertex(e.tail).unwrap().pos.x > g.vertex(e.head).unwrap().pos.x);
    }

    #[test]
    fn t_junction_splits_the_bar() {
        // bar along y = 10 cells, stem ending two cells (0.5 m) below it
        let bar = trace((4..36).map(|x| (x, 20)).collect());
        let stem = trace((2..19).rev().map(|y| (20, y)).collect());
        let g = build_graph(&[bar, stem], &uniform(Vec2::new(0.0, 1.0)), &BuildParams::default()).unwrap();
        assert_eq!(g.vertices.len(), 4);
        assert_eq!(g.edges.len(), 3);
    }

    #[test]
    fn short_spur_is_removed() {
        let left = trace((4..20).map(|x| (x, 20)).collect());
        let right = trace((20..36).map(|x| (x, 20)).collect());
        let spur = trace(vec![(20, 20), (20, 21), (20, 22)]);
        let g = build_graph(&[left, right, spur], &uniform(Vec2::new(1.0, 0.0)), &BuildParams::default()).unwrap();
        assert_eq!((g.vertices.len(), g.edges.len()), (2, 1));
    }

    #[test]
    fn directions_agree_with_flow() {
        let a = trace((4..36).map(|x| (x, 20)).collect());
        let b = trace((20..38).map(|y| (20, y)).collect());
        let f = FlowField::from_fn(spec(), Stage::Unit, |p| Vec2::new(p.y - 5.0, 5.0 - p.x).normalized());
        let g = build_graph(&[a, b], &f, &BuildParams::default()).unwrap();
        for e in &g.edges {
            assert!(edge_flow_cosine(&e.polyline, &f).unwrap_or(0.0) >= 0.0);
        }
    }

    #[test]
    fn degenerate_traces_are_dropped() {
        let g = build_graph(&[trace(vec![(3, 3)])], &uniform(Vec2::new(1.0, 0.0)), &BuildParams::default()).unwrap();
        assert!(g.edges.is_empty());
    }
}
