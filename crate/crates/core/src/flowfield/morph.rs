use crate::grid::{BinaryGrid, Cell, FlowField, Grid, Stage, Vec2};
use crate::stats::median;

/// 8-connected component labels and the size of each component.
pub fn label_components(g: &BinaryGrid) -> (Grid<Option<usize>>, Vec<usize>) {
    let mut labels: Grid<Option<usize>> = Grid::filled(g.nx(), g.ny(), None);
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in g.cells() {
        if !g[start] || labels[start].is_some() {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        labels[start] = Some(id);
        stack.push(start);
        while let Some(c) = stack.pop() {
            size += 1;
            for n in g.neighbors8(c) {
                if g[n] && labels[n].is_none() {
                    labels[n] = Some(id);
                    stack.push(n);
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Zero every 8-connected component of the support smaller than `min_area` m².
pub fn prune_components(f: &FlowField, min_area: f64) -> FlowField {
    let (labels, sizes) = label_components(&f.support());
    let cell_area = f.spec.cell_area();
    let data = f.data.map(|c, &v| match labels[c] {
        Some(id) if (sizes[id] as f64) * cell_area >= min_area - 1e-12 => v,
        _ => Vec2::ZERO,
    });
    FlowField {
        spec: f.spec,
        stage: Stage::Pruned,
        data,
    }
}

fn window(f: &Grid<Vec2>, c: Cell, half: isize) -> impl Iterator<Item = Vec2> + '_ {
    (-half..=half).flat_map(move |dy| {
        (-half..=half).filter_map(move |dx| f.get_signed(c.ix as isize + dx, c.iy as isize + dy).copied())
    })
}

fn componentwise_median(vs: &[Vec2]) -> Vec2 {
    let xs: Vec<f64> = vs.iter().map(|v| v.x).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v.y).collect();
    Vec2::new(median(&xs), median(&ys))
}

/// Componentwise median over the non-zero cells of each window; cells whose
/// window holds no flow keep their value.
pub fn median_round_nonzero(f: &Grid<Vec2>, half: usize) -> Grid<Vec2> {
    f.map(|c, &v| {
        let nz: Vec<Vec2> = window(f, c, half as isize).filter(|w| !w.is_zero()).collect();
        if nz.is_empty() {
            v
        } else {
            componentwise_median(&nz)
        }
    })
}

/// Plain componentwise median over each window, zeros included.
pub fn median_round_standard(f: &Grid<Vec2>, half: usize) -> Grid<Vec2> {
    f.map(|c, _| {
        let all: Vec<Vec2> = window(f, c, half as isize).collect();
        componentwise_median(&all)
    })
}

/// Two rounds of componentwise median filtering over a square window of
/// area `window_area` m². The first round grows the support into gaps, the
/// second erodes cells whose window is mostly empty.
pub fn median_smooth(f: &FlowField, window_area: f64) -> FlowField {
    let half = f.spec.odd_window_side(window_area) / 2;
    let round1 = median_round_nonzero(&f.data, half);
    FlowField {
        spec: f.spec,
        stage: Stage::Final,
        data: median_round_standard(&round1, half),
    }
}
