//! Ready-made scenarios inside the default 30 m x 15 m area in front of the
//! radar (x in [-15, 15], y in [0, 15]).

use super::{BranchRatio, ClutterSite, MotionMode, Rect, ScenarioSpec, SensorModel, SplitRule};
use super::DEFAULT_OCCLUSION_ANGLE;
use crate::graph::{Edge, FlowGraph, Vertex};
use crate::grid::Vec2;

pub const STRUCTURED_NAMES: [&str; 5] = ["line", "y_split", "x_cross", "loop_merge", "double_fork"];
pub const DIFFUSE_NAMES: [&str; 3] = ["radial_out", "radial_in", "counterflow"];

pub const DIFFUSE_ANCHOR: Vec2 = Vec2::new(0.0, 7.5);

/// Tail, head, interior waypoints and split ratio.
type EdgeSpec<'a> = (usize, usize, &'a [(f64, f64)], f64);

fn graph(vertices: &[(f64, f64)], edges: &[EdgeSpec]) -> FlowGraph {
    let vs: Vec<Vertex> = vertices
        .iter()
        .enumerate()
        .map(|(id, &(x, y))| Vertex { id, pos: Vec2::new(x, y) })
        .collect();
    let es = edges
        .iter()
        .enumerate()
        .map(|(id, &(tail, head, via, lambda))| {
            let mut polyline = vec![vs[tail].pos];
            polyline.extend(via.iter().map(|&(x, y)| Vec2::new(x, y)));
            polyline.push(vs[head].pos);
            Edge {
                id,
                tail,
                head,
                polyline,
                lambda: Some(lambda),
            }
        })
        .collect();
    FlowGraph { vertices: vs, edges: es }
}

fn rule(vertex: usize, from_edge: Option<usize>, ratios: &[(usize, f64)]) -> SplitRule {
    SplitRule {
        vertex,
        from_edge,
        ratios: ratios.iter().map(|&(edge, ratio)| BranchRatio { edge, ratio }).collect(),
    }
}

fn structured(truth_graph: FlowGraph, split_spec: Vec<SplitRule>) -> ScenarioSpec {
    ScenarioSpec {
        truth_graph,
        split_spec,
        agent_count: 20,
        speed_mean: 1.2,
        speed_std: 0.2,
        waypoint_jitter: 0.15,
        duration: 30.0,
        dt: 0.1,
        mode: MotionMode::Structured,
        seed: 42,
    }
}

fn diffuse(mode: MotionMode) -> ScenarioSpec {
    ScenarioSpec {
        truth_graph: FlowGraph::default(),
        split_spec: Vec::new(),
        agent_count: 40,
        speed_mean: 1.2,
        speed_std: 0.2,
        waypoint_jitter: 0.1,
        duration: 30.0,
        dt: 0.1,
        mode,
        seed: 42,
    }
}

pub fn line() -> ScenarioSpec {
    structured(graph(&[(-8.0, 7.0), (8.0, 7.0)], &[(0, 1, &[], 1.0)]), Vec::new())
}

/// One stem splitting into two branches; `ratio` goes to the far branch (edge 1).
pub fn y_split(ratio: f64) -> ScenarioSpec {
    let g = graph(
        &[(-11.0, 2.0), (-5.0, 8.0), (-3.0, 14.5), (8.0, 8.0)],
        &[(0, 1, &[], 1.0), (1, 2, &[], ratio), (1, 3, &[], 1.0 - ratio)],
    );
    structured(g, vec![rule(1, None, &[(1, ratio), (2, 1.0 - ratio)])])
}

/// Two straight streams crossing at one vertex; agents keep going straight.
pub fn x_cross() -> ScenarioSpec {
    let g = graph(
        &[(-9.0, 8.0), (-4.0, 1.0), (0.0, 8.0), (9.0, 8.0), (4.0, 14.5)],
        &[(0, 2, &[], 1.0), (1, 2, &[], 1.0), (2, 3, &[], 0.5), (2, 4, &[], 0.5)],
    );
    structured(g, vec![rule(2, Some(0), &[(2, 1.0)]), rule(2, Some(1), &[(3, 1.0)])])
}

/// Split into an upper and a lower arc that merge again.
pub fn loop_merge() -> ScenarioSpec {
    let g = graph(
        &[(-10.0, 1.0), (-6.0, 4.0), (2.0, 10.0), (6.0, 13.0)],
        &[
            (0, 1, &[], 1.0),
            (1, 2, &[(-4.8, 7.4), (-1.6, 9.8)], 0.5),
            (1, 2, &[(-2.4, 4.2), (0.8, 6.6)], 0.5),
            (2, 3, &[], 1.0),
        ],
    );
    structured(g, vec![rule(1, None, &[(1, 0.5), (2, 0.5)])])
}

/// A fork whose near branch forks again.
pub fn double_fork() -> ScenarioSpec {
    let g = graph(
        &[(-12.0, 1.0), (-7.0, 5.0), (-4.0, 14.0), (-1.0, 7.0), (4.0, 13.0), (9.0, 6.0)],
        &[
            (0, 1, &[], 1.0),
            (1, 2, &[], 0.4),
            (1, 3, &[], 0.6),
            (3, 4, &[], 0.5),
            (3, 5, &[], 0.5),
        ],
    );
    structured(
        g,
        vec![rule(1, None, &[(1, 0.4), (2, 0.6)]), rule(3, None, &[(3, 0.5), (4, 0.5)])],
    )
}

pub fn structured_all() -> Vec<ScenarioSpec> {
    vec![line(), y_split(0.5), x_cross(), loop_merge(), double_fork()]
}

pub fn radial_out() -> ScenarioSpec {
    diffuse(MotionMode::RadialOut {
        anchor: DIFFUSE_ANCHOR,
        radius: 6.0,
    })
}

pub fn radial_in() -> ScenarioSpec {
    diffuse(MotionMode::RadialIn {
        anchor: DIFFUSE_ANCHOR,
        radius: 6.0,
    })
}

pub fn counterflow() -> ScenarioSpec {
    diffuse(MotionMode::Counterflow {
        start: Vec2::new(-10.0, 7.5),
        end: Vec2::new(10.0, 7.5),
        half_width: 3.0,
    })
}

pub fn by_name(name: &str) -> Option<ScenarioSpec> {
    Some(match name {
        "line" => line(),
        "y_split" => y_split(0.5),
        "x_cross" => x_cross(),
        "loop_merge" => loop_merge(),
        "double_fork" => double_fork(),
        "radial_out" => radial_out(),
        "radial_in" => radial_in(),
        "counterflow" => counterflow(),
        _ => return None,
    })
}

/// Missed detections, false alarms, jitter, occlusion and two flickering
/// static reflectors.
pub fn noisy_sensor() -> SensorModel {
    SensorModel {
        p_detect: 0.9,
        false_alarm_rate: 1.0,
        pos_noise_std: 0.05,
        occlusion: true,
        occlusion_angle: DEFAULT_OCCLUSION_ANGLE,
        clutter_sites: vec![
            ClutterSite {
                x: -12.0,
                y: 2.0,
                activity_prob: 0.5,
            },
            ClutterSite {
                x: 11.0,
                y: 13.5,
                activity_prob: 0.3,
            },
        ],
        area: Rect::default(),
    }
}
