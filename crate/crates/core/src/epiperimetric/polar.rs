use std::f64::consts::PI;

use crate::solver::EnergyGraph;
use crate::{Error, Result};

pub const MIN_RADIAL_NODES: usize = 16;
pub const MIN_ANGULAR_NODES: usize = 64;
pub const DEFAULT_RADIAL_NODES: usize = 64;
pub const DEFAULT_ANGULAR_NODES: usize = 256;

/// Polar mesh of the unit disc: a center node and `n_r − 1` rings at
/// `r_i = sin(πi / (2(n_r − 1)))`, each with `n_theta` uniform angles.
///
/// The energy graph is a finite-volume discretization with annular-sector
/// control volumes, so every mass is an exact sector area. The outer ring
/// sits on `∂B₁` and is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    n_r: usize,
    n_theta: usize,
    radii: Vec<f64>,
    graph: EnergyGraph,
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize) -> Result<Self> {
        if n_r < MIN_RADIAL_NODES || n_theta < MIN_ANGULAR_NODES {
            return Err(Error::InvalidArgument(format!(
                "polar grid {n_r}×{n_theta} is below the minimum {MIN_RADIAL_NODES}×{MIN_ANGULAR_NODES}"
            )));
        }
        let last = n_r - 1;
        let radii: Vec<f64> = (0..n_r)
            .map(|i| if i == last { 1.0 } else { (0.5 * PI * i as f64 / last as f64).sin() })
            .collect();
        // control volume of ring i spans [edge[i], edge[i+1]]
        let mut edge = vec![0.0; n_r + 1];
        for i in 1..n_r {
            edge[i] = 0.5 * (radii[i - 1] + radii[i]);
        }
        edge[n_r] = 1.0;
        let dt = 2.0 * PI / n_theta as f64;
        let index = |i: usize, j: usize| if i == 0 { 0 } else { 1 + (i - 1) * n_theta + j % n_theta };
        let nodes = 1 + last * n_theta;
        let mut mass = vec![0.0; nodes];
        let mut fixed = vec![false; nodes];
        let mut edges = Vec::with_capacity(2 * nodes);
        mass[0] = PI * edge[1] * edge[1];
        for i in 1..n_r {
            let (lo, hi) = (edge[i], edge[i + 1]);
            for j in 0..n_theta {
                let node = index(i, j);
                mass[node] = 0.5 * (hi * hi - lo * lo) * dt;
                fixed[node] = i == last;
                edges.push((index(i - 1, j), node, lo * dt / (radii[i] - radii[i - 1])));
                edges.push((node, index(i, j + 1), (hi / lo).ln() / dt));
            }
        }
        let graph = EnergyGraph::from_edges(&edges, mass, fixed)?;
        Ok(Self { n_r, n_theta, radii, graph })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn radius(&self, ring: usize) -> f64 {
        self.radii[ring]
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_theta as f64
    }

    pub fn angle_step(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn node_count(&self) -> usize {
        1 + (self.n_r - 1) * self.n_theta
    }

    /// Node index of ring `ring`, angle `j`; ring 0 is the center.
    pub fn node(&self, ring: usize, j: usize) -> usize {
        if ring == 0 {
            0
        } else {
            1 + (ring - 1) * self.n_theta + j % self.n_theta
        }
    }

    /// `(r, θ)` of a node.
    pub fn polar(&self, node: usize) -> (f64, f64) {
        if node == 0 {
            return (0.0, 0.0);
        }
        let k = node - 1;
        (self.radii[1 + k / self.n_theta], self.theta(k % self.n_theta))
    }

    pub fn graph(&self) -> &EnergyGraph {
        &self.graph
    }

    /// Trapezoidal `∫_{∂B₁} |v|²` over the outer ring.
    pub fn boundary_l2_squared(&self, values: &[f64], m: usize) -> f64 {
        let ring = self.n_r - 1;
        let total: f64 = (0..self.n_theta)
            .map(|j| {
                let o = self.node(ring, j) * m;
                values[o..o + m].iter().map(|x| x * x).sum::<f64>()
            })
            .sum();
        total * self.angle_step()
    }

    /// Discrete `M(v) = E(v) − 2∫_{∂B₁}|v|²`.
    pub fn functional_m(&self, values: &[f64], m: usize) -> f64 {
        self.graph.energy(values, m) - 2.0 * self.boundary_l2_squared(values, m)
    }
}
