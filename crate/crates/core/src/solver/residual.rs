use serde::{Deserialize, Serialize};

use crate::energy::energy_e;
use crate::fields::{gradient, laplacian, Ball, VectorField};
use crate::{Error, Result};

/// Width in cells of the band around the discrete free boundary excluded
/// from the PDE residual.
pub const FREE_BOUNDARY_BAND: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `sup |Δu − u/|u||` over interior nodes with `|u| > δ` outside the band.
    pub pde_residual_sup: f64,
    /// `sup |Δu|` over interior nodes with `|u| ≤ δ` whose axis neighbors are all `≤ δ`.
    pub zero_set_laplacian_sup: f64,
    /// `sup |Δu − u/|u||` over the excluded band nodes with `|u| > δ`.
    pub band_residual_sup: f64,
    pub delta: f64,
}

/// Default support threshold `1e−6 · sup|u|`.
pub fn default_delta(field: &VectorField) -> f64 {
    1e-6 * field.sup_norm()
}

pub fn residual(field: &VectorField, delta: f64) -> Result<ResidualReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    let grid = field.grid();
    let dim = grid.dim();
    let m = field.components();
    let counts = grid.counts();
    let strides = grid.strides();
    let lap = laplacian(field);
    let mags = field.magnitudes();
    let positive: Vec<bool> = mags.iter().map(|&v| v > delta).collect();
    let n = grid.node_count();

    // nodes adjacent to a change of the support indicator
    let mut interface = vec![false; n];
    for node in 0..n {
        let idx = grid.multi_index(node);
        for a in 0..dim {
            if idx[a] + 1 < counts[a] && positive[node] != positive[node + strides[a]] {
                interface[node] = true;
                interface[node + strides[a]] = true;
            }
        }
    }
    let band = dilate(grid, &interface, FREE_BOUNDARY_BAND);

    let mut report = ResidualReport { pde_residual_sup: 0.0, zero_set_laplacian_sup: 0.0, band_residual_sup: 0.0, delta };
    for node in 0..n {
        if grid.is_boundary(node) {
            continue;
        }
        let l = lap.node(node);
        if positive[node] {
            let u = field.node(node);
            let r = (0..m).map(|c| (l[c] - u[c] / mags[node]).powi(2)).sum::<f64>().sqrt();
            if band[node] {
                report.band_residual_sup = report.band_residual_sup.max(r);
            } else {
                report.pde_residual_sup = report.pde_residual_sup.max(r);
            }
        } else {
            let quiet = (0..dim).all(|a| !positive[node - strides[a]] && !positive[node + strides[a]]);
            if quiet {
                let r = l.iter().map(|v| v * v).sum::<f64>().sqrt();
                report.zero_set_laplacian_sup = report.zero_set_laplacian_sup.max(r);
            }
        }
    }
    Ok(report)
}

/// Marks every node within Chebyshev index distance `width` of a marked node.
pub(crate) fn dilate(grid: &crate::fields::Grid, marked: &[bool], width: usize) -> Vec<bool> {
    let dim = grid.dim();
    let counts = grid.counts();
    let strides = grid.strides();
    let mut out = marked.to_vec();
    // separable dilation, one axis at a time
    for a in 0..dim {
        let src = out.clone();
        for node in 0..grid.node_count() {
            if !src[node] {
                continue;
            }
            let i = grid.multi_index(node)[a];
            let lo = i.saturating_sub(width);
            let hi = (i + width).min(counts[a] - 1);
            for j in lo..=hi {
                out[node - i * strides[a] + j * strides[a]] = true;
            }
        }
    }
    out
}

/// `(sup_{B_{3/4}} |u| + sup_{B_{3/4}} |∇u|) / (‖u‖_{L¹(B₁)} + 1)` for fields on a grid containing `B₁`.
pub fn gradient_bound_ratio(field: &VectorField) -> Result<f64> {
    let grid = field.grid();
    let unit = Ball::unit();
    grid.require_ball(&unit)?;
    let l1 = 0.5 * energy_e(field, Some(&unit))?.mass;
    let grad = gradient(field);
    let dim = grid.dim();
    let (mut su, mut sg) = (0.0f64, 0.0f64);
    for node in 0..grid.node_count() {
        let x = grid.coord(node);
        if x[..dim].iter().map(|c| c * c).sum::<f64>() <= 0.75 * 0.75 {
            su = su.max(field.magnitude(node));
            sg = sg.max(grad.norm_at(node));
        }
    }
    Ok((su + sg) / (l1 + 1.0))
}
