use crate::grid::{BinaryGrid, Cell, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkeletonClass {
    Isolated,
    Endpoint,
    Path,
    Branch,
}

/// One-cell-wide medial structure of a binary support.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub cells: BinaryGrid,
}

impl Skeleton {
    pub fn neighbor_count(&self, c: Cell) -> usize {
        self.cells.neighbors8(c).filter(|&n| self.cells[n]).count()
    }

    pub fn class(&self, c: Cell) -> Option<SkeletonClass> {
        if !self.cells[c] {
            return None;
        }
        Some(match self.neighbor_count(c) {
            0 => SkeletonClass::Isolated,
            1 => SkeletonClass::Endpoint,
            2 => SkeletonClass::Path,
            _ => SkeletonClass::Branch,
        })
    }

    pub fn is_branch(&self, c: Cell) -> bool {
        self.class(c) == Some(SkeletonClass::Branch)
    }

    pub fn count(&self) -> usize {
        self.cells.count_ones()
    }
}

/// Neighbors P2..P9, clockwise from north (+y).
fn ring(g: &BinaryGrid, c: Cell) -> [bool; 8] {
    const OFFS: [(isize, isize); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];
    let mut out = [false; 8];
    for (slot, (dx, dy)) in out.iter_mut().zip(OFFS) {
        *slot = g
            .get_signed(c.ix as isize + dx, c.iy as isize + dy)
            .copied()
            .unwrap_or(false);
    }
    out
}

fn transitions(p: &[bool; 8]) -> usize {
    (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count()
}

fn deletable(g: &BinaryGrid, c: Cell, first: bool) -> bool {
    let p = ring(g, c);
    let b = p.iter().filter(|&&v| v).count();
    if !(3..=6).contains(&b) || transitions(&p) != 1 {
        return false;
    }
    // p[0]=N, p[2]=E, p[4]=S, p[6]=W
    let (n, e, s, w) = (p[0], p[2], p[4], p[6]);
    if first {
        !(n && e && s) && !(e && s && w)
    } else {
        !(n && e && w) && !(n && s && w)
    }
}

/// Staircase corner: `c` has a horizontal and a vertical 4-neighbor and its
/// set neighbors form a single 8-connected group within the ring, so
/// removing `c` cannot disconnect them. Line tips never qualify.
fn redundant(g: &BinaryGrid, c: Cell) -> bool {
    let p = ring(g, c);
    if !((p[0] || p[4]) && (p[2] || p[6])) {
        return false;
    }
    let set: Vec<usize> = (0..8).filter(|&i| p[i]).collect();
    // ring positions as offsets, to test 8-adjacency between them
    const POS: [(i32, i32); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];
    let mut seen = vec![false; set.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..set.len() {
            let (a, b) = (POS[set[i]], POS[set[j]]);
            if !seen[j] && (a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Zhang-Suen thinning to a fixpoint, followed by removal of staircase
/// corners whose neighbors stay 8-connected without them.
///
/// Cells need at least three set neighbors to be deleted (the Lü-Wang
/// variant); with the classic lower bound of two, the tips of two-cell-thick
/// diagonals erode one cell per pass until whole branches disappear.
///
/// Candidates of each sub-iteration are collected first and then deleted
/// one at a time, re-checking the conditions against the current state;
/// this keeps two-cell-thick blobs from vanishing entirely.
pub fn skeletonize(support: &BinaryGrid) -> Skeleton {
    let mut g = support.clone();
    loop {
        let mut changed = false;
        for first in [true, false] {
            let marked: Vec<Cell> = g.cells().filter(|&c| g[c] && deletable(&g, c, first)).collect();
            for c in marked {
                if deletable(&g, c, first) {
                    g[c] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    loop {
        let mut changed = false;
        let cells: Vec<Cell> = g.cells().filter(|&c| g[c]).collect();
        for c in cells {
            if redundant(&g, c) {
                g[c] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Skeleton { cells: g }
}

/// True if any 2x2 block of the grid is fully set.
pub fn has_thick_block(g: &Grid<bool>) -> bool {
    (0..g.ny().saturating_sub(1)).any(|iy| {
        (0..g.nx().saturating_sub(1)).any(|ix| {
            g[Cell::new(ix, iy)] && g[Cell::new(ix + 1, iy)] && g[Cell::new(ix, iy + 1)] && g[Cell::new(ix + 1, iy + 1)]
        })
    })
}
