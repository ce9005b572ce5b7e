//! Regular 2D grids over the sensing area and the field types built on them.
//!
//! Cells are addressed as `(ix, iy)` with `ix` along +x and `iy` along +y.
//! The radar sits at the world origin looking along +y, so a typical area
//! is `origin = (-15, 0)`, `extent = (30, 15)`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2D point or vector in meters (or meters per window for flows).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn is_zero(self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }

    /// Unit vector, or zero for the zero vector.
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            Vec2::new(self.x / n, self.y / n)
        } else {
            Vec2::ZERO
        }
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Orientation in `[0, 2π)`.
    pub fn angle(self) -> f64 {
        let a = self.y.atan2(self.x);
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Integer cell index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub ix: usize,
    pub iy: usize,
}

impl Cell {
    pub const fn new(ix: usize, iy: usize) -> Self {
        Self { ix, iy }
    }

    pub fn offset(self, dx: isize, dy: isize) -> Option<Cell> {
        let ix = self.ix.checked_add_signed(dx)?;
        let iy = self.iy.checked_add_signed(dy)?;
        Some(Cell::new(ix, iy))
    }

    pub fn is_adjacent8(self, o: Cell) -> bool {
        self != o && self.ix.abs_diff(o.ix) <= 1 && self.iy.abs_diff(o.iy) <= 1
    }
}

/// Discretization of the sensing area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec2,
    pub width: f64,
    pub height: f64,
    pub cell: f64,
}

impl Default for GridSpec {
    /// 30 m x 15 m area in front of the radar at 0.25 m cells.
    fn default() -> Self {
        Self {
            origin: Vec2::new(-15.0, 0.0),
            width: 30.0,
            height: 15.0,
            cell: 0.25,
        }
    }
}

impl GridSpec {
    pub fn new(origin: Vec2, width: f64, height: f64, cell: f64) -> Result<Self> {
        let gs = Self {
            origin,
            width,
            height,
            cell,
        };
        gs.validate()?;
        Ok(gs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell > 0.0) || !self.cell.is_finite() {
            return Err(Error::config(format!("grid cell must be > 0, got {}", self.cell)));
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::config(format!(
                "grid extent must be positive, got {} x {}",
                self.width, self.height
            )));
        }
        if !self.origin.is_finite() {
            return Err(Error::config("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        (self.width / self.cell).round() as usize
    }

    pub fn ny(&self) -> usize {
        (self.height / self.cell).round() as usize
    }

    pub fn cell_area(&self) -> f64 {
        self.cell * self.cell
    }

    pub fn cell_of(&self, p: Vec2) -> Option<Cell> {
        let fx = ((p.x - self.origin.x) / self.cell).floor();
        let fy = ((p.y - self.origin.y) / self.cell).floor();
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        (ix < self.nx() && iy < self.ny()).then_some(Cell::new(ix, iy))
    }

    pub fn center(&self, c: Cell) -> Vec2 {
        Vec2::new(
            self.origin.x + (c.ix as f64 + 0.5) * self.cell,
            self.origin.y + (c.iy as f64 + 0.5) * self.cell,
        )
    }

    /// Nearest cell to `p`, clamped into the grid.
    pub fn nearest_cell(&self, p: Vec2) -> Cell {
        let fx = ((p.x - self.origin.x) / self.cell).floor();
        let fy = ((p.y - self.origin.y) / self.cell).floor();
        let ix = fx.clamp(0.0, (self.nx() - 1) as f64) as usize;
        let iy = fy.clamp(0.0, (self.ny() - 1) as f64) as usize;
        Cell::new(ix, iy)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some()
    }

    /// Odd window side (in cells) whose area best matches `area_m2`, at least 1.
    pub fn odd_window_side(&self, area_m2: f64) -> usize {
        let side = (area_m2.max(0.0).sqrt() / self.cell).round() as usize;
        if side == 0 {
            1
        } else if side.is_multiple_of(2) {
            side + 1
        } else {
            side
        }
    }
}

/// Dense row-major grid of values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    nx: usize,
    ny: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(nx: usize, ny: usize, value: T) -> Self {
        Self {
            nx,
            ny,
            data: vec![value; nx * ny],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(Cell) -> T) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                data.push(f(Cell::new(ix, iy)));
            }
        }
        Self { nx, ny, data }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.ix < self.nx && c.iy < self.ny
    }

    pub fn get(&self, c: Cell) -> Option<&T> {
        self.in_bounds(c).then(|| &self.data[c.iy * self.nx + c.ix])
    }

    /// Signed lookup, `None` outside the grid.
    pub fn get_signed(&self, ix: isize, iy: isize) -> Option<&T> {
        if ix < 0 || iy < 0 {
            return None;
        }
        self.get(Cell::new(ix as usize, iy as usize))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let nx = self.nx;
        (0..self.data.len()).map(move |i| Cell::new(i % nx, i / nx))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, &T)> + '_ {
        let nx = self.nx;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (Cell::new(i % nx, i / nx), v))
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, mut f: impl FnMut(Cell, &T) -> U) -> Grid<U> {
        let nx = self.nx;
        Grid {
            nx,
            ny: self.ny,
            data: self
                .data
                .iter()
                .enumerate()
                .map(|(i, v)| f(Cell::new(i % nx, i / nx), v))
                .collect(),
        }
    }

    /// In-bounds 8-neighbors of `c`, in a fixed order.
    pub fn neighbors8(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        const OFFS: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        OFFS.iter()
            .filter_map(move |&(dx, dy)| c.offset(dx, dy))
            .filter(move |n| self.in_bounds(*n))
    }
}

impl<T> Index<Cell> for Grid<T> {
    type Output = T;
    fn index(&self, c: Cell) -> &T {
        assert!(self.in_bounds(c), "cell {c:?} outside {}x{} grid", self.nx, self.ny);
        &self.data[c.iy * self.nx + c.ix]
    }
}

impl<T> IndexMut<Cell> for Grid<T> {
    fn index_mut(&mut self, c: Cell) -> &mut T {
        assert!(self.in_bounds(c), "cell {c:?} outside {}x{} grid", self.nx, self.ny);
        &mut self.data[c.iy * self.nx + c.ix]
    }
}

pub type BinaryGrid = Grid<bool>;

impl Grid<bool> {
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Parse rows of `'1'`/`'#'` (set) and anything else (unset). The first
    /// row is the top of the picture, i.e. the largest `iy`.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let ny = rows.len();
        let nx = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        Grid::from_fn(nx, ny, |c| {
            let row = rows[ny - 1 - c.iy].as_bytes();
            matches!(row.get(c.ix), Some(b'1') | Some(b'#'))
        })
    }

    pub fn to_ascii(&self) -> Vec<String> {
        (0..self.ny)
            .rev()
            .map(|iy| {
                (0..self.nx)
                    .map(|ix| if self[Cell::new(ix, iy)] { '1' } else { '0' })
                    .collect()
            })
            .collect()
    }
}

/// Processing stage that produced a flow field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Stage {
    Taf,
    Dff,
    Pruned,
    Final,
    Unit,
}

/// Grid of 2D flow vectors (meters per window, or unit vectors at `Stage::Unit`).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub spec: GridSpec,
    pub stage: Stage,
    pub data: Grid<Vec2>,
}

impl FlowField {
    pub fn zeros(spec: GridSpec, stage: Stage) -> Self {
        Self {
            spec,
            stage,
            data: Grid::filled(spec.nx(), spec.ny(), Vec2::ZERO),
        }
    }

    pub fn from_fn(spec: GridSpec, stage: Stage, mut f: impl FnMut(Vec2) -> Vec2) -> Self {
        Self {
            spec,
            stage,
            data: Grid::from_fn(spec.nx(), spec.ny(), |c| f(spec.center(c))),
        }
    }

    pub fn support(&self) -> BinaryGrid {
        self.data.map(|_, v| !v.is_zero())
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.values().iter().filter(|v| !v.is_zero()).count()
    }

    /// Flow at the cell containing `p` (clamped to the grid).
    pub fn sample_nearest(&self, p: Vec2) -> Vec2 {
        self.data[self.spec.nearest_cell(p)]
    }

    pub fn with_stage(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarKind {
    Divergence,
    Curl,
    Pvalue,
    OccupancyDensity,
}

/// Grid of reals; `None` is the explicit no-data marker.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub spec: GridSpec,
    pub kind: ScalarKind,
    pub data: Grid<Option<f64>>,
}

impl ScalarField {
    pub fn empty(spec: GridSpec, kind: ScalarKind) -> Self {
        Self {
            spec,
            kind,
            data: Grid::filled(spec.nx(), spec.ny(), None),
        }
    }

    pub fn valid_count(&self) -> usize {
        self.data.values().iter().filter(|v| v.is_some()).count()
    }

    pub fn max_abs(&self) -> Option<f64> {
        self.data
            .values()
            .iter()
            .flatten()
            .map(|v| v.abs())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}
