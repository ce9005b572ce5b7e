use std::collections::HashSet;

use super::{Skeleton, SkeletonClass};
use crate::grid::{Cell, GridSpec, Vec2};

/// Ordered chain of skeleton cells between endpoints or branch points.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub cells: Vec<Cell>,
    /// Cell centers in meters.
    pub points: Vec<Vec2>,
}

impl Trace {
    fn new(cells: Vec<Cell>, gs: &GridSpec) -> Self {
        let points = cells.iter().map(|&c| gs.center(c)).collect();
        Self { cells, points }
    }
}

/// Follow the skeleton from `start` through `first` until an endpoint, a
/// branch point or a dead end. Non-branch cells are claimed in `visited`.
fn walk(sk: &Skeleton, start: Cell, first: Cell, visited: &mut HashSet<Cell>) -> Vec<Cell> {
    let mut cells = vec![start];
    if !sk.is_branch(start) {
        visited.insert(start);
    }
    let (mut prev, mut cur) = (start, first);
    loop {
        cells.push(cur);
        if sk.is_branch(cur) {
            break;
        }
        visited.insert(cur);
        let next = sk
            .cells
            .neighbors8(cur)
            .filter(|&n| sk.cells[n] && n != prev)
            .filter(|&n| if sk.is_branch(n) { n != start || cells.len() > 2 } else { !visited.contains(&n) })
            // orthogonal steps first, so corners are not skipped
            .min_by_key(|&n| (n.ix.abs_diff(cur.ix) + n.iy.abs_diff(cur.iy), n));
        match next {
            Some(n) => {
                prev = cur;
                cur = n;
            }
            None => break,
        }
    }
    cells
}

/// Decompose a skeleton into traces.
///
/// Walks start at endpoints, then at branch points; every non-branch cell
/// belongs to exactly one trace while branch cells may terminate several.
/// Adjacent branch cells are joined by two-cell traces. Remaining closed
/// loops are opened at their lexicographically smallest cell.
pub fn extract_traces(sk: &Skeleton, gs: &GridSpec) -> Vec<Trace> {
    let mut visited: HashSet<Cell> = HashSet::new();
    let mut traces = Vec::new();
    let mut on: Vec<Cell> = sk.cells.cells().filter(|&c| sk.cells[c]).collect();
    on.sort();

    for &c in &on {
        match sk.class(c) {
            Some(SkeletonClass::Isolated) => {
                visited.insert(c);
                traces.push(vec![c]);
            }
            Some(SkeletonClass::Endpoint) if !visited.contains(&c) => {
                let first = sk.cells.neighbors8(c).find(|&n| sk.cells[n]).expect("endpoint has a neighbor");
                traces.push(walk(sk, c, first, &mut visited));
            }
            _ => {}
        }
    }
    for &b in on.iter().filter(|&&c| sk.is_branch(c)) {
        let mut nbrs: Vec<Cell> = sk.cells.neighbors8(b).filter(|&n| sk.cells[n]).collect();
        nbrs.sort();
        for n in nbrs {
            if sk.is_branch(n) {
                if b < n {
                    traces.push(vec![b, n]);
                }
            } else if !visited.contains(&n) {
                traces.push(walk(sk, b, n, &mut visited));
            }
        }
    }
    for &c in &on {
        if visited.contains(&c) || sk.is_branch(c) {
            continue;
        }
        let first = sk
            .cells
            .neighbors8(c)
            .filter(|&n| sk.cells[n])
            .min_by_key(|&n| (n.ix.abs_diff(c.ix) + n.iy.abs_diff(c.iy), n))
            .expect("loop cell has neighbors");
        traces.push(walk(sk, c, first, &mut visited));
    }
    traces.into_iter().map(|cells| Trace::new(cells, gs)).collect()
}
