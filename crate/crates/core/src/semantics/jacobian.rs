use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::grid::{Cell, FlowField, Grid, ScalarField, ScalarKind, Vec2};

/// Ratio of smallest to largest singular value of the design matrix below
/// which a fit is rank-deficient.
const RANK_TOL: f64 = 1e-8;

/// Least-squares affine model of the flow around one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFit {
    /// `j[r][c] = ∂v_r / ∂x_c`, per meter.
    pub j: [[f64; 2]; 2],
    /// Fitted flow at the cell center.
    pub b: Vec2,
    pub neighbors: usize,
}

impl LocalFit {
    pub fn divergence(&self) -> f64 {
        self.j[0][0] + self.j[1][1]
    }

    pub fn curl(&self) -> f64 {
        self.j[1][0] - self.j[0][1]
    }
}

/// Affine fit `v(y) ≈ b + J (y - x)` over the non-zero cells of the square
/// window of side `side` cells centered at `c`. Needs a non-zero center, at
/// least three contributing cells and a full-rank design.
pub fn local_jacobian(f: &FlowField, c: Cell, side: usize) -> Option<LocalFit> {
    if f.data.get(c).is_none_or(|v| v.is_zero()) {
        return None;
    }
    let half = (side / 2) as isize;
    let h = f.spec.cell;
    let mut ata = Matrix3::<f64>::zeros();
    let mut atx = Vector3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    let mut n = 0;
    for dy in -half..=half {
        for dx in -half..=half {
            let Some(&v) = f.data.get_signed(c.ix as isize + dx, c.iy as isize + dy) else {
                continue;
            };
            if v.is_zero() {
                continue;
            }
            let row = Vector3::new(1.0, dx as f64 * h, dy as f64 * h);
            ata += row * row.transpose();
            atx += row * v.x;
            aty += row * v.y;
            n += 1;
        }
    }
    if n < 3 {
        return None;
    }
    let eig = SymmetricEigen::new(ata).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    // singular values of the design are square roots of these eigenvalues
    if !(hi > 0.0) || (lo.max(0.0) / hi).sqrt() < RANK_TOL {
        return None;
    }
    let chol = ata.cholesky()?;
    let px = chol.solve(&atx);
    let py = chol.solve(&aty);
    Some(LocalFit {
        j: [[px[1], px[2]], [py[1], py[2]]],
        b: Vec2::new(px[0], py[0]),
        neighbors: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianField {
    pub fits: Grid<Option<LocalFit>>,
}

pub fn jacobian_field(f: &FlowField, side: usize) -> JacobianField {
    let cells: Vec<Cell> = f.data.cells().collect();
    let fits: Vec<Option<LocalFit>> = cells.par_iter().map(|&c| local_jacobian(f, c, side)).collect();
    let mut it = fits.into_iter();
    JacobianField {
        fits: Grid::from_fn(f.data.nx(), f.data.ny(), |_| it.next().flatten()),
    }
}

/// Divergence and curl of every valid fit; invalid cells carry no data.
pub fn curl_divergence_fields(jf: &JacobianField, f: &FlowField) -> (ScalarField, ScalarField) {
    let div = ScalarField {
        spec: f.spec,
        kind: ScalarKind::Divergence,
        data: jf.fits.map(|_, fit| fit.map(|j| j.divergence())),
    };
    let curl = ScalarField {
        spec: f.spec,
        kind: ScalarKind::Curl,
        data: jf.fits.map(|_, fit| fit.map(|j| j.curl())),
    };
    (div, curl)
}
