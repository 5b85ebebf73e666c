use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Grid, Point};
use super::{dot, norm};
use crate::{Error, Result};

const UNIT_TOL: f64 = 1e-12;

/// Map `u: D → ℝᵐ` sampled at grid nodes, components interleaved per node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    m: usize,
    values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid, m: usize) -> Self {
        let n = grid.node_count() * m;
        Self { grid, m, values: vec![0.0; n] }
    }

    pub fn from_values(grid: Grid, m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("field needs at least one component".into()));
        }
        if values.len() != grid.node_count() * m {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.node_count() * m,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at offset {i}")));
        }
        Ok(Self { grid, m, values })
    }

    /// Samples `f(x, out)` at every node.
    pub fn from_fn<F>(grid: Grid, m: usize, f: F) -> Self
    where
        F: Fn(&Point, &mut [f64]) + Sync,
    {
        let mut values = vec![0.0; grid.node_count() * m];
        values.par_chunks_mut(m).enumerate().for_each(|(node, out)| {
            f(&grid.coord(node), out);
        });
        Self { grid, m, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    pub fn node_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.m..(node + 1) * self.m]
    }

    /// `|u|` at a node.
    pub fn magnitude(&self, node: usize) -> f64 {
        norm(self.node(node))
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.chunks(self.m).map(norm).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.chunks(self.m).map(norm).fold(0.0, f64::max)
    }

    /// Sup over nodes of `|u - v|`.
    pub fn sup_distance(&self, other: &VectorField) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .chunks(self.m)
            .zip(other.values.chunks(self.m))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &VectorField, b: f64) -> VectorField {
        assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        VectorField { grid: self.grid.clone(), m: self.m, values }
    }

    /// Applies a fixed `m×m` matrix (row-major) to every node value.
    pub fn map_components(&self, matrix: &[f64]) -> VectorField {
        let m = self.m;
        assert_eq!(matrix.len(), m * m);
        let mut values = vec![0.0; self.values.len()];
        for (src, dst) in self.values.chunks(m).zip(values.chunks_mut(m)) {
            for r in 0..m {
                dst[r] = dot(&matrix[r * m..(r + 1) * m], src);
            }
        }
        VectorField { grid: self.grid.clone(), m, values }
    }

    /// Multilinear interpolation; `x` is clamped into the grid box.
    pub fn interpolate(&self, x: &Point, out: &mut [f64]) {
        let grid = &self.grid;
        let dim = grid.dim();
        let (base, t) = grid.locate(x);
        let strides = grid.strides();
        let base_node = grid.index(base);
        out.iter_mut().for_each(|o| *o = 0.0);
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut node = base_node;
            for a in 0..dim {
                if corner >> a & 1 == 1 {
                    w *= t[a];
                    node += strides[a];
                } else {
                    w *= 1.0 - t[a];
                }
            }
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(self.node(node)) {
                    *o += w * v;
                }
            }
        }
    }

    /// Multilinear interpolation minus `½ t(1−t) δ²_a u` per axis. Along each
    /// cell edge the second difference is taken from whichever of the two
    /// end nodes has the smoother neighborhood (smaller Euclidean norm of the
    /// adjacent third difference), so quadratics and fields that are piecewise quadratic
    /// with kinks on grid planes are reproduced exactly.
    pub fn interpolate_corrected(&self, x: &Point, out: &mut [f64]) {
        let grid = &self.grid;
        let dim = grid.dim();
        let (base, t) = grid.locate(x);
        out.iter_mut().for_each(|o| *o = 0.0);
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut idx = base;
            for a in 0..dim {
                if corner >> a & 1 == 1 {
                    w *= t[a];
                    idx[a] += 1;
                } else {
                    w *= 1.0 - t[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            let node = grid.index(idx);
            for (o, v) in out.iter_mut().zip(self.node(node)) {
                *o += w * v;
            }
            for a in 0..dim {
                let k = 0.5 * t[a] * (1.0 - t[a]) * w;
                if k == 0.0 {
                    continue;
                }
                let mut line = idx;
                line[a] = base[a];
                let c = self.smooth_center(line, a);
                let (s, m) = (grid.strides()[a], self.m);
                for q in 0..m {
                    out[q] -= k * self.second_difference(c, s, q);
                }
            }
        }
    }

    fn second_difference(&self, center: usize, stride: usize, q: usize) -> f64 {
        let m = self.m;
        self.values[(center + stride) * m + q] - 2.0 * self.values[center * m + q] + self.values[(center - stride) * m + q]
    }

    /// Node whose axis-`a` second difference represents the edge from `lo`
    /// to `lo + e_a`.
    fn smooth_center(&self, lo: [usize; 3], a: usize) -> usize {
        let grid = &self.grid;
        let n = grid.counts()[a];
        let s = grid.strides()[a];
        let i = lo[a];
        let at = |j: usize| {
            let mut p = lo;
            p[a] = j;
            grid.index(p)
        };
        let valid = |j: usize| j >= 1 && j + 2 <= n;
        let (left, right) = (i, i + 1);
        match (valid(left), valid(right)) {
            (true, false) => return at(left),
            (false, true) => return at(right),
            (false, false) => return at(1.min(n - 2).max(1)),
            (true, true) => {}
        }
        let jump = |j0: usize, j1: usize| -> f64 {
            (0..self.m).map(|q| (self.second_difference(at(j1), s, q) - self.second_difference(at(j0), s, q)).powi(2)).sum()
        };
        let dl = if i >= 2 { jump(i - 1, i) } else { f64::INFINITY };
        let dr = if i + 3 < n { jump(i + 1, i + 2) } else { f64::INFINITY };
        if dl <= dr {
            at(left)
        } else {
            at(right)
        }
    }

    pub fn interpolate_vec(&self, x: &Point) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.interpolate(x, &mut out);
        out
    }
}

/// Element of ℍ: `x ↦ ½ max(x·ν, 0)² e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneSolution {
    nu: Vec<f64>,
    e: Vec<f64>,
}

impl HalfPlaneSolution {
    pub fn new(nu: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        for (name, v) in [("nu", &nu), ("e", &e)] {
            if v.is_empty() || v.len() > 3 && name == "nu" {
                return Err(Error::InvalidArgument(format!("{name} has invalid length {}", v.len())));
            }
            if (norm(v) - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!("{name} is not a unit vector: |{name}| = {}", norm(v))));
            }
        }
        Ok(Self { nu, e })
    }

    /// Normalizes both vectors before construction.
    pub fn normalized(nu: &[f64], e: &[f64]) -> Result<Self> {
        let nn = norm(nu);
        let ne = norm(e);
        if nn == 0.0 || ne == 0.0 {
            return Err(Error::InvalidArgument("zero direction".into()));
        }
        Self::new(nu.iter().map(|x| x / nn).collect(), e.iter().map(|x| x / ne).collect())
    }

    /// The canonical element `½ max(x_n, 0)² e¹` in `n` dimensions with `m` components.
    pub fn canonical(dim: usize, m: usize) -> Self {
        let mut nu = vec![0.0; dim];
        nu[dim - 1] = 1.0;
        let mut e = vec![0.0; m];
        e[0] = 1.0;
        Self { nu, e }
    }

    /// Normal at angle `theta` from the x₁-axis in the plane (`ν = (cos θ, sin θ)`).
    pub fn planar(theta: f64, e: &[f64]) -> Result<Self> {
        Self::normalized(&[theta.cos(), theta.sin()], e)
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    /// Scalar profile `½ max(x·ν, 0)²`.
    pub fn profile(&self, x: &Point) -> f64 {
        let s = dot(&self.nu, &x[..self.nu.len()]).max(0.0);
        0.5 * s * s
    }

    pub fn value(&self, x: &Point, out: &mut [f64]) {
        let p = self.profile(x);
        for (o, e) in out.iter_mut().zip(&self.e) {
            *o = p * e;
        }
    }
}

pub fn eval_half_plane(grid: &Grid, hp: &HalfPlaneSolution) -> VectorField {
    assert_eq!(hp.nu.len(), grid.dim(), "ν must live in the grid dimension");
    VectorField::from_fn(grid.clone(), hp.e.len(), |x, out| hp.value(x, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(count: usize) -> Grid {
        Grid::cube(2, -1.0, 1.0, count).unwrap()
    }

    #[test]
    fn half_plane_pointwise() {
        let hp = HalfPlaneSolution::canonical(2, 2);
        let mut out = [0.0; 2];
        hp.value(&[0.3, 0.5, 0.0], &mut out);
        assert_eq!(out, [0.125, 0.0]);
        hp.value(&[0.3, -0.5, 0.0], &mut out);
        assert_eq!(out, [0.0, 0.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let diag = HalfPlaneSolution::new(vec![s, s], vec![1.0, 0.0]).unwrap();
        diag.value(&[0.5, 0.5, 0.0], &mut out);
        assert!((out[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn half_plane_rejects_non_unit() {
        assert!(HalfPlaneSolution::new(vec![1.0, 1.0], vec![1.0]).is_err());
        assert!(HalfPlaneSolution::new(vec![0.0, 1.0], vec![2.0]).is_err());
    }

    #[test]
    fn eval_on_grid_matches_profile() {
        let g = unit_square(17);
        let hp = HalfPlaneSolution::canonical(2, 2);
        let f = eval_half_plane(&g, &hp);
        for node in 0..g.node_count() {
            let x = g.coord(node);
            assert_eq!(f.node(node)[0], 0.5 * x[1].max(0.0).powi(2));
            assert_eq!(f.node(node)[1], 0.0);
        }
    }

    #[test]
    fn interpolation_reproduces_bilinear_functions() {
        let g = unit_square(9);
        let f = VectorField::from_fn(g, 1, |x, out| out[0] = 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]);
        let p = [0.123, -0.456, 0.0];
        let v = f.interpolate_vec(&p);
        let exact = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
        assert!((v[0] - exact).abs() < 1e-14);
    }

    #[test]
    fn corrected_interpolation_reproduces_quadratics() {
        let g = Grid::new(2, &[(-1.0, 1.0), (0.0, 1.0)], &[9, 5]).unwrap();
        let q = |x: &Point| 0.3 - x[0] + 2.0 * x[1] + 1.5 * x[0] * x[0] - x[0] * x[1] + 0.7 * x[1] * x[1];
        let f = VectorField::from_fn(g, 1, |x, o| o[0] = q(x));
        for p in [[0.123, 0.456, 0.0], [-0.99, 0.01, 0.0], [0.8, 0.97, 0.0]] {
            let mut out = [0.0];
            f.interpolate_corrected(&p, &mut out);
            assert!((out[0] - q(&p)).abs() < 1e-13, "{p:?}");
        }
    }

    #[test]
    fn from_values_checks_shape_and_finiteness() {
        let g = unit_square(3);
        assert!(VectorField::from_values(g.clone(), 1, vec![0.0; 8]).is_err());
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(VectorField::from_values(g, 1, v).is_err());
    }
}
