use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fields::{cell_gradient, Grid, Point, VectorField};
use crate::{Error, Result};

/// A grid cell crossed by the level `{|u| = δ}` with a sub-cell location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    /// Corner node (lowest multi-index) of the cell.
    pub cell: usize,
    pub point: Point,
    /// Frobenius norm of the interpolated Jacobian at the cell center.
    pub grad_norm: f64,
    /// Unit normal of the local plane fit pointing into the support, when available.
    pub normal: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundarySet {
    pub gamma: Vec<BoundaryPoint>,
    /// Points of `gamma` with `grad_norm ≤ eps_grad`.
    pub gamma0: Vec<BoundaryPoint>,
    pub delta: f64,
    pub eps_grad: f64,
}

impl FreeBoundarySet {
    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }
}

/// Support threshold `1e−6 · sup|u|` (at least the smallest positive double).
pub fn default_delta(field: &VectorField) -> f64 {
    (1e-6 * field.sup_norm()).max(f64::MIN_POSITIVE)
}

/// Gradient threshold `5h`.
pub fn default_eps_grad(grid: &Grid) -> f64 {
    5.0 * grid.h_max()
}

/// Cells where `|u| − δ` changes sign, located on the zero level of a local
/// least-squares plane fit of `√(2|u|)` over nearby support nodes.
pub fn extract_free_boundary(field: &VectorField, delta: f64, eps_grad: f64) -> Result<FreeBoundarySet> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    let grid = field.grid();
    let dim = grid.dim();
    let m = field.components();
    let mags = field.magnitudes();
    let counts = grid.counts();
    let corners = 1usize << dim;
    let strides = grid.strides();
    let mut jac = vec![0.0; m * dim];
    let mut gamma = Vec::new();
    for node in 0..grid.node_count() {
        let idx = grid.multi_index(node);
        if (0..dim).any(|a| idx[a] + 1 >= counts[a]) {
            continue;
        }
        let mut above = 0;
        for c in 0..corners {
            let n = (0..dim).filter(|a| c >> a & 1 == 1).fold(node, |n, a| n + strides[a]);
            if mags[n] > delta {
                above += 1;
            }
        }
        if above == 0 || above == corners {
            continue;
        }
        cell_gradient(field, node, &mut jac);
        let grad_norm = jac.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (point, normal) = locate(grid, &mags, delta, node);
        gamma.push(BoundaryPoint { cell: node, point, grad_norm, normal });
    }
    let gamma0 = gamma.iter().filter(|p| p.grad_norm <= eps_grad).copied().collect();
    Ok(FreeBoundarySet { gamma, gamma0, delta, eps_grad })
}

fn center_of(grid: &Grid, corner: usize) -> Point {
    let mut x = grid.coord(corner);
    let h = grid.spacing();
    for a in 0..grid.dim() {
        x[a] += 0.5 * h[a];
    }
    x
}

fn locate(grid: &Grid, mags: &[f64], delta: f64, corner: usize) -> (Point, Option<[f64; 3]>) {
    let dim = grid.dim();
    let h = grid.spacing();
    let center = center_of(grid, corner);
    if let Some((p, nrm)) = plane_fit(grid, mags, delta, corner, &center) {
        let inside = (0..dim).all(|a| (p[a] - center[a]).abs() <= 1.5 * h[a]);
        if inside {
            return (p, Some(nrm));
        }
    }
    (edge_crossings(grid, mags, delta, corner).unwrap_or(center), None)
}

/// Fits `√(2|u|) ≈ c + g·(x − center)` over support nodes of the `4ⁿ` block.
fn plane_fit(grid: &Grid, mags: &[f64], delta: f64, corner: usize, center: &Point) -> Option<(Point, [f64; 3])> {
    let dim = grid.dim();
    let counts = grid.counts();
    let idx = grid.multi_index(corner);
    let h = grid.spacing();
    let mut rows: Vec<[f64; 4]> = Vec::new();
    let mut vals = Vec::new();
    let span = 4usize.pow(dim as u32);
    for k in 0..span {
        let mut rest = k;
        let mut j = idx;
        let mut ok = true;
        for a in 0..dim {
            let off = (rest % 4) as isize - 1;
            rest /= 4;
            let v = idx[a] as isize + off;
            if v < 0 || v >= counts[a] as isize {
                ok = false;
                break;
            }
            j[a] = v as usize;
        }
        if !ok {
            continue;
        }
        let n = grid.index(j);
        if mags[n] <= delta {
            continue;
        }
        let x = grid.coord(n);
        let mut row = [1.0, 0.0, 0.0, 0.0];
        for a in 0..dim {
            row[a + 1] = (x[a] - center[a]) / h[a];
        }
        rows.push(row);
        vals.push((2.0 * mags[n]).sqrt());
    }
    if rows.len() < dim + 2 {
        return None;
    }
    let p = dim + 1;
    let a = DMatrix::from_fn(rows.len(), p, |r, c| rows[r][c]);
    let b = DVector::from_vec(vals);
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-8 * smax) {
        return None;
    }
    let coef = svd.solve(&b, 1e-12).ok()?;
    let mut g = [0.0; 3];
    for a in 0..dim {
        g[a] = coef[a + 1] / h[a];
    }
    let g2: f64 = g.iter().map(|v| v * v).sum();
    if !(g2 > 0.0) {
        return None;
    }
    let mut point = *center;
    for a in 0..dim {
        point[a] -= coef[0] * g[a] / g2;
    }
    let gn = g2.sqrt();
    let normal = [g[0] / gn, g[1] / gn, g[2] / gn];
    Some((point, normal))
}

/// Mean of the linear-interpolation crossings of `|u| − δ` on the cell edges.
fn edge_crossings(grid: &Grid, mags: &[f64], delta: f64, corner: usize) -> Option<Point> {
    let dim = grid.dim();
    let strides = grid.strides();
    let h = grid.spacing();
    let mut sum = [0.0; 3];
    let mut count = 0usize;
    for c in 0..(1usize << dim) {
        let n0 = (0..dim).filter(|a| c >> a & 1 == 1).fold(corner, |n, a| n + strides[a]);
        for a in 0..dim {
            if c >> a & 1 == 1 {
                continue;
            }
            let n1 = n0 + strides[a];
            let (f0, f1) = (mags[n0] - delta, mags[n1] - delta);
            if (f0 > 0.0) != (f1 > 0.0) {
                let t = f0 / (f0 - f1);
                let mut x = grid.coord(n0);
                x[a] += t * h[a];
                for b in 0..3 {
                    sum[b] += x[b];
                }
                count += 1;
            }
        }
    }
    (count > 0).then(|| sum.map(|s| s / count as f64))
}
