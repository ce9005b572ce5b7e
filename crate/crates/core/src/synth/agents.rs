use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{MotionMode, ScenarioSpec, SplitRule};
use crate::error::{Error, Result};
use crate::geometry::{point_at, tangent_at};
use crate::graph::FlowGraph;
use crate::grid::Vec2;

/// Relaxation time of the lateral jitter, s.
const JITTER_TAU: f64 = 1.0;
const MIN_SPEED: f64 = 0.2;
const MAX_ROUTE_EDGES: usize = 256;
/// Radius around the anchor where radial agents spawn or are absorbed.
const ANCHOR_ZONE: f64 = 0.5;
/// People per square meter in a gathered crowd.
const STANDING_DENSITY: f64 = 2.0;
const LANE_GAP: f64 = 0.3;

/// Edges one agent walked (or was about to walk) from a source to a sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteLog {
    pub agent: usize,
    pub start_window: usize,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub agent: usize,
    pub w: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    pub dt: f64,
    /// `positions[agent][w]`.
    pub positions: Vec<Vec<Vec2>>,
    /// Structured mode only.
    pub routes: Vec<RouteLog>,
}

impl Trajectories {
    pub fn n_agents(&self) -> usize {
        self.positions.len()
    }

    pub fn n_windows(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.n_agents() == 0 || self.n_windows() == 0
    }

    pub fn window(&self, w: usize) -> Vec<Vec2> {
        self.positions.iter().map(|p| p[w]).collect()
    }

    pub fn records(&self) -> impl Iterator<Item = TrajectoryRecord> + '_ {
        let n_w = self.n_windows();
        (0..n_w).flat_map(move |w| {
            self.positions.iter().enumerate().map(move |(agent, p)| TrajectoryRecord {
                agent,
                w,
                x: p[w].x,
                y: p[w].y,
            })
        })
    }

    pub fn from_records(records: &[TrajectoryRecord], dt: f64) -> Result<Self> {
        let n_agents = records.iter().map(|r| r.agent + 1).max().unwrap_or(0);
        let n_w = records.iter().map(|r| r.w + 1).max().unwrap_or(0);
        let mut seen = vec![vec![false; n_w]; n_agents];
        let mut positions = vec![vec![Vec2::ZERO; n_w]; n_agents];
        for r in records {
            positions[r.agent][r.w] = Vec2::new(r.x, r.y);
            seen[r.agent][r.w] = true;
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(Error::format("trajectories", "every agent needs a position in every window"));
        }
        Ok(Self {
            dt,
            positions,
            routes: Vec::new(),
        })
    }
}

/// Mean-reverting lateral offset with stationary std `sigma`.
struct Jitter {
    value: f64,
    decay: f64,
    kick: f64,
}

impl Jitter {
    fn new(sigma: f64, dt: f64, rng: &mut ChaCha8Rng) -> Self {
        let decay = (-dt / JITTER_TAU).exp();
        let z: f64 = rng.sample(StandardNormal);
        Self {
            value: sigma * z,
            decay,
            kick: sigma * (1.0 - decay * decay).sqrt(),
        }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) {
        let z: f64 = rng.sample(StandardNormal);
        self.value = self.value * self.decay + self.kick * z;
    }
}

fn sample_speed(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> f64 {
    let v = Normal::new(spec.speed_mean, spec.speed_std)
        .expect("validated speed distribution")
        .sample(rng);
    v.max(MIN_SPEED)
}

struct Router<'a> {
    g: &'a FlowGraph,
    sources: Vec<usize>,
    rules: BTreeMap<(usize, Option<usize>), &'a SplitRule>,
    lengths: BTreeMap<usize, f64>,
}

impl<'a> Router<'a> {
    fn new(spec: &'a ScenarioSpec) -> Self {
        let g = &spec.truth_graph;
        Self {
            g,
            sources: g.sources(),
            rules: spec
                .split_spec
                .iter()
                .map(|r| ((r.vertex, r.from_edge), r))
                .collect(),
            lengths: g.edges.iter().map(|e| (e.id, e.length())).collect(),
        }
    }

    fn next_edge(&self, vertex: usize, prev: Option<usize>, rng: &mut ChaCha8Rng) -> Option<usize> {
        let out: Vec<usize> = self.g.out_edges(vertex).map(|e| e.id).collect();
        if out.is_empty() {
            return None;
        }
        let rule = prev
            .and_then(|p| self.rules.get(&(vertex, Some(p))))
            .or_else(|| self.rules.get(&(vertex, None)));
        let u: f64 = rng.random();
        match rule {
            Some(rule) => {
                let mut acc = 0.0;
                for br in &rule.ratios {
                    acc += br.ratio;
                    if u < acc {
                        return Some(br.edge);
                    }
                }
                rule.ratios.iter().rev().find(|b| b.ratio > 0.0).map(|b| b.edge)
            }
            None => Some(out[((u * out.len() as f64) as usize).min(out.len() - 1)]),
        }
    }

    fn sample_route(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let k = rng.random_range(0..self.sources.len());
        let mut v = self.sources[k];
        let mut route = Vec::new();
        let mut prev = None;
        while route.len() < MAX_ROUTE_EDGES {
            let Some(e) = self.next_edge(v, prev, rng) else {
                break;
            };
            route.push(e);
            prev = Some(e);
            v = self.g.edge(e).expect("router edge").head;
        }
        route
    }

    fn polyline(&self, route: &[usize]) -> Vec<Vec2> {
        let mut pts: Vec<Vec2> = Vec::new();
        for &e in route {
            let edge = self.g.edge(e).expect("router edge");
            let skip = usize::from(!pts.is_empty());
            pts.extend(edge.polyline.iter().skip(skip).copied());
        }
        pts
    }
}

struct Walker {
    path: Vec<Vec2>,
    length: f64,
    s: f64,
    speed: f64,
    jitter: Jitter,
}

fn new_route(router: &Router, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<Vec2>, f64) {
    let route = router.sample_route(rng);
    let path = router.polyline(&route);
    let length: f64 = route.iter().map(|e| router.lengths[e]).sum();
    (route, path, length)
}

fn simulate_structured(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Trajectories {
    let router = Router::new(spec);
    let n_w = spec.n_windows();
    let n = spec.agent_count;
    let mut routes = Vec::new();
    let mut walkers: Vec<Walker> = (0..n)
        .map(|i| {
            let (edges, path, length) = new_route(&router, rng);
            routes.push(RouteLog {
                agent: i,
                start_window: 0,
                edges,
            });
            Walker {
                path,
                length,
                // stagger so the walkways are populated from the first window
                s: length * i as f64 / n as f64,
                speed: sample_speed(spec, rng),
                jitter: Jitter::new(spec.waypoint_jitter, spec.dt, rng),
            }
        })
        .collect();

    let mut positions = vec![Vec::with_capacity(n_w); n];
    for w in 0..n_w {
        for (i, a) in walkers.iter_mut().enumerate() {
            let base = point_at(&a.path, a.s);
            let side = tangent_at(&a.path, a.s).perp();
            positions[i].push(base + side * a.jitter.value);

            a.s += a.speed * spec.dt;
            a.jitter.step(rng);
            let mut guard = 0;
            while a.s >= a.length && guard < 16 {
                let over = a.s - a.length;
                let (edges, path, length) = new_route(&router, rng);
                routes.push(RouteLog {
                    agent: i,
                    start_window: w + 1,
                    edges,
                });
                a.path = path;
                a.length = length;
                a.s = over;
                a.speed = sample_speed(spec, rng);
                guard += 1;
            }
        }
    }
    Trajectories {
        dt: spec.dt,
        positions,
        routes,
    }
}

/// Straight-line walker used by the diffuse modes.
struct Mover {
    origin: Vec2,
    heading: Vec2,
    s: f64,
    speed: f64,
    jitter: Jitter,
}

fn unit_at(angle: f64) -> Vec2 {
    Vec2::new(angle.cos(), angle.sin())
}

/// Start point, heading and path length of a fresh radial walk.
fn spawn_radial(anchor: Vec2, radius: f64, rng: &mut ChaCha8Rng) -> (Vec2, Vec2, f64) {
    let dir = unit_at(rng.random_range(0.0..std::f64::consts::TAU));
    let r0 = rng.random_range(0.0..ANCHOR_ZONE);
    (anchor + dir * r0, dir, radius - r0)
}

fn simulate_radial(spec: &ScenarioSpec, anchor: Vec2, radius: f64, outward: bool, rng: &mut ChaCha8Rng) -> Trajectories {
    if !outward {
        return simulate_gathering(spec, anchor, radius, rng);
    }
    let n_w = spec.n_windows();
    let n = spec.agent_count;
    let mut limits = Vec::with_capacity(n);
    let mut movers: Vec<Mover> = (0..n)
        .map(|i| {
            let (origin, heading, limit) = spawn_radial(anchor, radius, rng);
            limits.push(limit);
            Mover {
                origin,
                heading,
                s: limit * i as f64 / n as f64,
                speed: sample_speed(spec, rng),
                jitter: Jitter::new(spec.waypoint_jitter, spec.dt, rng),
            }
        })
        .collect();
    let mut positions = vec![Vec::with_capacity(n_w); n];
    for _ in 0..n_w {
        for (i, m) in movers.iter_mut().enumerate() {
            positions[i].push(m.origin + m.heading * m.s + m.heading.perp() * m.jitter.value);
            m.s += m.speed * spec.dt;
            m.jitter.step(rng);
            if m.s >= limits[i] {
                let over = m.s - limits[i];
                let (origin, heading, limit) = spawn_radial(anchor, radius, rng);
                m.origin = origin;
                m.heading = heading;
                m.s = over.min(limit);
                m.speed = sample_speed(spec, rng);
                limits[i] = limit;
            }
        }
    }
    Trajectories {
        dt: spec.dt,
        positions,
        routes: Vec::new(),
    }
}

/// Agents walk straight at the anchor and stop where they join a standing
/// crowd of [`STANDING_DENSITY`] around it. Starting distances are spread so that
/// arrivals continue over the whole run; agents never vanish, since a point
/// disappearing inside a dense cluster drags block matching outward.
fn simulate_gathering(spec: &ScenarioSpec, anchor: Vec2, radius: f64, rng: &mut ChaCha8Rng) -> Trajectories {
    let n_w = spec.n_windows();
    let reach = radius + spec.speed_mean * spec.duration;
    let crowd = (spec.agent_count as f64 / (std::f64::consts::PI * STANDING_DENSITY)).sqrt().max(ANCHOR_ZONE);
    let mut positions = Vec::with_capacity(spec.agent_count);
    for _ in 0..spec.agent_count {
        let dir = unit_at(rng.random_range(0.0..std::f64::consts::TAU));
        let standoff = crowd * rng.random_range(0.0f64..1.0).sqrt();
        let mut dist = rng.random_range(standoff..reach.max(standoff + 1.0));
        let speed = sample_speed(spec, rng);
        let mut jitter = Jitter::new(spec.waypoint_jitter, spec.dt, rng);
        let mut track = Vec::with_capacity(n_w);
        for _ in 0..n_w {
            let walking = dist > standoff;
            let lateral = if walking { jitter.value } else { 0.0 };
            track.push(anchor + dir * dist + dir.perp() * lateral);
            dist = (dist - speed * spec.dt).max(standoff);
            jitter.step(rng);
        }
        positions.push(track);
    }
    Trajectories {
        dt: spec.dt,
        positions,
        routes: Vec::new(),
    }
}

fn simulate_counterflow(spec: &ScenarioSpec, start: Vec2, end: Vec2, half_width: f64, rng: &mut ChaCha8Rng) -> Trajectories {
    let n_w = spec.n_windows();
    let n = spec.agent_count;
    let length = start.dist(end);
    let along = (end - start).normalized();
    let across = along.perp();
    let gap = LANE_GAP.min(half_width * 0.5);
    // (lateral offset, direction sign) per agent; agents alternate sides
    let mut lanes = Vec::with_capacity(n);
    let mut movers: Vec<Mover> = (0..n)
        .map(|i| {
            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
            let offset = side * rng.random_range(gap..half_width);
            lanes.push(offset);
            Mover {
                origin: start,
                heading: along * side,
                s: rng.random_range(0.0..length),
                speed: sample_speed(spec, rng),
                jitter: Jitter::new(spec.waypoint_jitter, spec.dt, rng),
            }
        })
        .collect();
    let mut positions = vec![Vec::with_capacity(n_w); n];
    for _ in 0..n_w {
        for (i, m) in movers.iter_mut().enumerate() {
            // keep the jitter on the agent's own side of the boundary
            let lateral = lanes[i] + m.jitter.value;
            let lateral = if lanes[i] > 0.0 { lateral.max(0.05) } else { lateral.min(-0.05) };
            let u = if m.heading.dot(along) > 0.0 { m.s } else { length - m.s };
            positions[i].push(start + along * u + across * lateral);
            m.s += m.speed * spec.dt;
            m.jitter.step(rng);
            if m.s >= length {
                m.s -= length;
                m.speed = sample_speed(spec, rng);
            }
        }
    }
    Trajectories {
        dt: spec.dt,
        positions,
        routes: Vec::new(),
    }
}

/// Per-agent, per-window ground-truth positions. Deterministic for a fixed
/// seed; one generator drives the whole scenario.
pub fn simulate_agents(spec: &ScenarioSpec) -> Result<Trajectories> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(match spec.mode {
        MotionMode::Structured => simulate_structured(spec, &mut rng),
        MotionMode::RadialOut { anchor, radius } => simulate_radial(spec, anchor, radius, true, &mut rng),
        MotionMode::RadialIn { anchor, radius } => simulate_radial(spec, anchor, radius, false, &mut rng),
        MotionMode::Counterflow { start, end, half_width } => {
            simulate_counterflow(spec, start, end, half_width, &mut rng)
        }
    })
}
