use crate::fields::Grid;
use crate::sum::pairwise_sum_fn;
use crate::{Error, Result};

/// Discrete energy `Σ_edges w_ij |u_i − u_j|² + Σ_i 2 a_i |u_i|` on a weighted graph.
///
/// Edges are stored symmetrically in CSR form. Nodes flagged as fixed carry
/// Dirichlet data and are never updated by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGraph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    mass: Vec<f64>,
    fixed: Vec<bool>,
}

impl EnergyGraph {
    /// Builds the graph from undirected edges `(i, j, w)`.
    pub fn from_edges(edges: &[(usize, usize, f64)], mass: Vec<f64>, fixed: Vec<bool>) -> Result<Self> {
        let n = mass.len();
        if fixed.len() != n {
            return Err(Error::InvalidArgument("mass and fixed flags differ in length".into()));
        }
        if let Some(i) = mass.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidArgument(format!("node {i} has non-positive mass")));
        }
        let mut degree = vec![0usize; n];
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidArgument(format!("invalid edge ({i}, {j})")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidArgument(format!("edge ({i}, {j}) has invalid weight {w}")));
            }
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for &(i, j, w) in edges {
            neighbors[cursor[i]] = j;
            weights[cursor[i]] = w;
            cursor[i] += 1;
            neighbors[cursor[j]] = i;
            weights[cursor[j]] = w;
            cursor[j] += 1;
        }
        Ok(Self { offsets, neighbors, weights, mass, fixed })
    }

    /// Finite-volume discretization of `E` on a box grid: dual-cell masses
    /// and face weights `|face| / h_axis`, boundary nodes fixed.
    pub fn cartesian(grid: &Grid) -> Self {
        let dim = grid.dim();
        let counts = grid.counts();
        let h = grid.spacing();
        let strides = grid.strides();
        let width = |axis: usize, i: usize| {
            if i == 0 || i + 1 == counts[axis] {
                0.5 * h[axis]
            } else {
                h[axis]
            }
        };
        let n = grid.node_count();
        let mut mass = vec![0.0; n];
        let mut fixed = vec![false; n];
        let mut edges = Vec::with_capacity(n * dim);
        for node in 0..n {
            let idx = grid.multi_index(node);
            mass[node] = (0..dim).map(|a| width(a, idx[a])).product();
            fixed[node] = grid.is_boundary_index(idx);
            for axis in 0..dim {
                if idx[axis] + 1 < counts[axis] {
                    let face: f64 = (0..dim).filter(|&b| b != axis).map(|b| width(b, idx[b])).product();
                    edges.push((node, node + strides[axis], face / h[axis]));
                }
            }
        }
        Self::from_edges(&edges, mass, fixed).expect("cartesian graph is well formed")
    }

    pub fn node_count(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    pub fn is_fixed(&self, node: usize) -> bool {
        self.fixed[node]
    }

    /// Neighbors of `node` with their edge weights.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[node]..self.offsets[node + 1];
        self.neighbors[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    /// Bound on the Lipschitz constant of the Dirichlet gradient in the
    /// mass metric: `max_i 4 Σ_j w_ij / a_i` over free nodes.
    pub fn lipschitz_bound(&self) -> f64 {
        (0..self.node_count())
            .filter(|&i| !self.fixed[i])
            .map(|i| 4.0 * self.neighbors(i).map(|(_, w)| w).sum::<f64>() / self.mass[i])
            .fold(0.0, f64::max)
    }

    /// Total energy and its (Dirichlet, mass) parts for interleaved values with `m` components.
    pub fn energy_parts(&self, values: &[f64], m: usize) -> [f64; 2] {
        pairwise_sum_fn(self.node_count(), &|i| {
            let ui = &values[i * m..(i + 1) * m];
            let mut d = 0.0;
            for (j, w) in self.neighbors(i) {
                if j > i {
                    let uj = &values[j * m..(j + 1) * m];
                    d += w * ui.iter().zip(uj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                }
            }
            [d, 2.0 * self.mass[i] * norm(ui)]
        })
    }

    pub fn energy(&self, values: &[f64], m: usize) -> f64 {
        let [d, a] = self.energy_parts(values, m);
        d + a
    }

    /// `E(new) − E(old)` evaluated from increments, accurate when the two are close.
    pub fn energy_change(&self, old: &[f64], new: &[f64], m: usize) -> f64 {
        let [d, a] = pairwise_sum_fn(self.node_count(), &|i| {
            let (oi, ni) = (&old[i * m..(i + 1) * m], &new[i * m..(i + 1) * m]);
            let mut d = 0.0;
            for (j, w) in self.neighbors(i) {
                if j > i {
                    let (oj, nj) = (&old[j * m..(j + 1) * m], &new[j * m..(j + 1) * m]);
                    let mut s = 0.0;
                    for c in 0..m {
                        let step = (ni[c] - oi[c]) - (nj[c] - oj[c]);
                        s += step * ((ni[c] - nj[c]) + (oi[c] - oj[c]));
                    }
                    d += w * s;
                }
            }
            let (no, nn) = (norm(oi), norm(ni));
            let mass = if no + nn > 0.0 {
                let s: f64 = (0..m).map(|c| (ni[c] - oi[c]) * (ni[c] + oi[c])).sum();
                s / (no + nn)
            } else {
                0.0
            };
            [d, 2.0 * self.mass[i] * mass]
        });
        d + a
    }

    /// `Σ_edges w_ij |d_i − d_j|²`.
    pub fn dirichlet(&self, values: &[f64], m: usize) -> f64 {
        self.energy_parts(values, m)[0]
    }

    /// `2 Σ_j w_ij (u_i − u_j)` written into `out` (length `m`).
    pub(crate) fn dirichlet_gradient_at(&self, values: &[f64], m: usize, i: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let ui = &values[i * m..(i + 1) * m];
        for (j, w) in self.neighbors(i) {
            let uj = &values[j * m..(j + 1) * m];
            for c in 0..m {
                out[c] += 2.0 * w * (ui[c] - uj[c]);
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_lipschitz_matches_stencil_bound() {
        for dim in 1..=3 {
            let g = Grid::cube(dim, -1.0, 1.0, 9).unwrap();
            let h = g.h_max();
            let l = EnergyGraph::cartesian(&g).lipschitz_bound();
            assert!((l - 8.0 * dim as f64 / (h * h)).abs() < 1e-9 * l, "dim {dim}: {l}");
        }
    }

    #[test]
    fn cartesian_masses_sum_to_volume() {
        let g = Grid::new(2, &[(0.0, 2.0), (-1.0, 0.5)], &[9, 7]).unwrap();
        let graph = EnergyGraph::cartesian(&g);
        let total: f64 = graph.mass().iter().sum();
        assert!((total - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_part_of_linear_function_is_exact() {
        let g = Grid::new(2, &[(0.0, 2.0), (-1.0, 0.5)], &[9, 7]).unwrap();
        let graph = EnergyGraph::cartesian(&g);
        let values: Vec<f64> = (0..g.node_count()).map(|i| 3.0 * g.coord(i)[0] - g.coord(i)[1]).collect();
        // |∇u|² = 10 over area 3
        assert!((graph.dirichlet(&values, 1) - 30.0).abs() < 1e-10);
    }

    #[test]
    fn energy_change_matches_difference() {
        let g = Grid::cube(2, -1.0, 1.0, 9).unwrap();
        let graph = EnergyGraph::cartesian(&g);
        let a: Vec<f64> = (0..g.node_count() * 2).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.1).collect();
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + 1e-3 * ((i % 7) as f64 - 3.0)).collect();
        let direct = graph.energy(&b, 2) - graph.energy(&a, 2);
        assert!((graph.energy_change(&a, &b, 2) - direct).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(EnergyGraph::from_edges(&[(0, 0, 1.0)], vec![1.0], vec![false]).is_err());
        assert!(EnergyGraph::from_edges(&[(0, 1, -1.0)], vec![1.0, 1.0], vec![false; 2]).is_err());
        assert!(EnergyGraph::from_edges(&[], vec![0.0], vec![false]).is_err());
    }
}
