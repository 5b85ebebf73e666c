use rayon::prelude::*;

use super::field::VectorField;

/// Nodal gradient, stored as `nodes × m × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    dim: usize,
    m: usize,
    values: Vec<f64>,
}

impl Gradient {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.m
    }

    /// `∇u_c` at `node`.
    pub fn at(&self, node: usize, component: usize) -> &[f64] {
        let off = (node * self.m + component) * self.dim;
        &self.values[off..off + self.dim]
    }

    /// Full Jacobian at `node`, `m × n` row-major.
    pub fn jacobian(&self, node: usize) -> &[f64] {
        let w = self.m * self.dim;
        &self.values[node * w..(node + 1) * w]
    }

    /// Frobenius norm `|∇u|` at a node.
    pub fn norm_at(&self, node: usize) -> f64 {
        self.jacobian(node).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Central differences in the interior, second-order one-sided at boundary nodes.
pub fn gradient(field: &VectorField) -> Gradient {
    let grid = field.grid();
    let dim = grid.dim();
    let m = field.components();
    let counts = grid.counts();
    let strides = grid.strides();
    let h = grid.spacing();
    let vals = field.values();
    let mut values = vec![0.0; grid.node_count() * m * dim];
    values.par_chunks_mut(m * dim).enumerate().for_each(|(node, out)| {
        let idx = grid.multi_index(node);
        for a in 0..dim {
            let s = strides[a];
            let i = idx[a];
            let c = counts[a];
            for k in 0..m {
                let at = |n: usize| vals[n * m + k];
                let d = if i == 0 {
                    (-3.0 * at(node) + 4.0 * at(node + s) - at(node + 2 * s)) / (2.0 * h[a])
                } else if i + 1 == c {
                    (3.0 * at(node) - 4.0 * at(node - s) + at(node - 2 * s)) / (2.0 * h[a])
                } else {
                    (at(node + s) - at(node - s)) / (2.0 * h[a])
                };
                out[k * dim + a] = d;
            }
        }
    });
    Gradient { dim, m, values }
}

/// `(2n+1)`-point Laplacian. Boundary nodes are not defined and carry zero.
pub fn laplacian(field: &VectorField) -> VectorField {
    let grid = field.grid().clone();
    let dim = grid.dim();
    let m = field.components();
    let strides = grid.strides();
    let h = grid.spacing();
    let vals = field.values();
    let mut out = VectorField::zeros(grid.clone(), m);
    out.values_mut().par_chunks_mut(m).enumerate().for_each(|(node, o)| {
        if grid.is_boundary(node) {
            return;
        }
        for k in 0..m {
            let c = vals[node * m + k];
            let mut acc = 0.0;
            for a in 0..dim {
                let s = strides[a];
                acc += (vals[(node + s) * m + k] - 2.0 * c + vals[(node - s) * m + k]) / (h[a] * h[a]);
            }
            o[k] = acc;
        }
    });
    out
}
