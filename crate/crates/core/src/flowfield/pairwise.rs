use crate::grid::{BinaryGrid, Cell, GridSpec, Vec2};

/// Flow estimated at one occupied cell between two consecutive windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseFlow {
    pub cell: Cell,
    /// Displacement in meters per window.
    pub flow: Vec2,
}

/// Binary occupancy of one window's points. Points outside the grid are
/// dropped; the second value counts them.
pub fn rasterize(points: &[Vec2], gs: &GridSpec) -> (BinaryGrid, usize) {
    let mut grid = BinaryGrid::filled(gs.nx(), gs.ny(), false);
    let mut dropped = 0;
    for &p in points {
        match gs.cell_of(p) {
            Some(c) => grid[c] = true,
            None => dropped += 1,
        }
    }
    (grid, dropped)
}

/// Zero-padded copy of a binary grid for branch-free shifted lookups.
struct Padded {
    pad: usize,
    stride: usize,
    data: Vec<u8>,
}

impl Padded {
    fn new(g: &BinaryGrid, pad: usize) -> Self {
        let stride = g.nx() + 2 * pad;
        let rows = g.ny() + 2 * pad;
        let mut data = vec![0u8; stride * rows];
        for (c, &v) in g.iter() {
            if v {
                data[(c.iy + pad) * stride + c.ix + pad] = 1;
            }
        }
        Self { pad, stride, data }
    }

    #[inline]
    fn at(&self, ix: isize, iy: isize) -> u8 {
        let x = (ix + self.pad as isize) as usize;
        let y = (iy + self.pad as isize) as usize;
        self.data[y * self.stride + x]
    }
}

/// Exhaustive block matching between consecutive occupancy grids.
///
/// For every cell in `cells`, the integer displacement `h` with
/// `|h_x|, |h_y| <= half` minimizes `sum_d (next(x + d + h) - cur(x + d))^2`
/// over the square window `|d_x|, |d_y| <= half`. Ties go to the smallest
/// `|h|`, then to the lexicographically smallest `(h_x, h_y)`. A cell whose
/// objective is the same for every candidate emits nothing.
pub fn pairwise_flow(
    cur: &BinaryGrid,
    next: &BinaryGrid,
    cells: &[Cell],
    half: usize,
    cell_size: f64,
) -> Vec<PairwiseFlow> {
    let cur_p = Padded::new(cur, half);
    let next_p = Padded::new(next, 2 * half);
    let h = half as isize;
    let mut out = Vec::with_capacity(cells.len());
    for &c in cells {
        let (cx, cy) = (c.ix as isize, c.iy as isize);
        let mut best: Option<(u32, isize, isize, isize)> = None;
        let mut first: Option<u32> = None;
        let mut flat = true;
        for hx in -h..=h {
            for hy in -h..=h {
                let mut e = 0u32;
                for dy in -h..=h {
                    for dx in -h..=h {
                        let a = next_p.at(cx + dx + hx, cy + dy + hy);
                        let b = cur_p.at(cx + dx, cy + dy);
                        e += (a ^ b) as u32;
                    }
                }
                match first {
                    None => first = Some(e),
                    Some(f) if f != e => flat = false,
                    _ => {}
                }
                let key = (e, hx * hx + hy * hy, hx, hy);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        if flat {
            continue;
        }
        if let Some((_, _, hx, hy)) = best {
            out.push(PairwiseFlow {
                cell: c,
                flow: Vec2::new(hx as f64 * cell_size, hy as f64 * cell_size),
            });
        }
    }
    out
}
