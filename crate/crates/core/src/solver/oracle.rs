use super::boundary::BoundaryData;
use crate::fields::{Grid, VectorField};
use crate::{Error, Result};

pub const ORACLE_MAX_NODES_PER_AXIS: usize = 12;
pub const ORACLE_MAX_COMPONENTS: usize = 2;
const ORACLE_TOL: f64 = 1e-12;
const ORACLE_MAX_SWEEPS: usize = 10_000_000;

/// Brute-force reference minimiser by cyclic exact coordinate minimisation.
///
/// Each interior node is replaced by the minimiser of its local objective
/// `Σ_axes (1/h_a²) Σ_± |v − u_±|² + 2|v|`, a shrinkage of the weighted
/// neighbor average, until one sweep changes no value by more than `1e−12`
/// and the geometric tail of the sweep changes is below `1e−13`.
pub fn oracle_solve(grid: &Grid, boundary: &BoundaryData) -> Result<VectorField> {
    let dim = grid.dim();
    let counts = grid.counts();
    let m = boundary.components();
    if counts.iter().any(|&c| c > ORACLE_MAX_NODES_PER_AXIS) {
        return Err(Error::InstanceTooLarge(format!("{counts:?} nodes per axis, at most {ORACLE_MAX_NODES_PER_AXIS}")));
    }
    if m > ORACLE_MAX_COMPONENTS {
        return Err(Error::InstanceTooLarge(format!("{m} components, at most {ORACLE_MAX_COMPONENTS}")));
    }
    let mut field = VectorField::zeros(grid.clone(), m);
    boundary.apply(&mut field)?;
    let h = grid.spacing();
    let strides = grid.strides();
    let inv_h2: Vec<f64> = (0..dim).map(|a| 1.0 / (h[a] * h[a])).collect();
    let total_weight: f64 = 2.0 * inv_h2.iter().sum::<f64>();
    let threshold = 1.0 / total_weight;
    let interior: Vec<usize> = (0..grid.node_count()).filter(|&n| !grid.is_boundary(n)).collect();
    let values = field.values_mut();
    let mut avg = [0.0; ORACLE_MAX_COMPONENTS];
    let mut prev_change = 0.0;
    for _ in 0..ORACLE_MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for &node in &interior {
            avg[..m].iter_mut().for_each(|v| *v = 0.0);
            for a in 0..dim {
                let (lo, hi) = (node - strides[a], node + strides[a]);
                for c in 0..m {
                    avg[c] += inv_h2[a] * (values[lo * m + c] + values[hi * m + c]);
                }
            }
            let mut len = 0.0;
            for v in avg[..m].iter_mut() {
                *v /= total_weight;
                len += *v * *v;
            }
            let len = len.sqrt();
            let factor = if len > threshold { 1.0 - threshold / len } else { 0.0 };
            for c in 0..m {
                let new = factor * avg[c];
                change = change.max((new - values[node * m + c]).abs());
                values[node * m + c] = new;
            }
        }
        // geometric tail estimate of the remaining error
        let rate = if prev_change > 0.0 { (change / prev_change).min(0.999_999) } else { 0.0 };
        if change < ORACLE_TOL && change * rate / (1.0 - rate) < 0.1 * ORACLE_TOL || change == 0.0 {
            return Ok(field);
        }
        prev_change = change;
    }
    Err(Error::OracleNotConverged { sweeps: ORACLE_MAX_SWEEPS })
}
