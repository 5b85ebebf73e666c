use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tridiag::{eigenvalue, eigenvector};
use crate::{Error, Result};

pub const MIN_NODES: usize = 64;
pub const MAX_EIGENPAIRS: usize = 5;

/// Arcs of the unit circle (`n = 2`) or axisymmetric caps of `S²` (`n = 3`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Angle `θ` along the circle, with `x₂ = sin θ`.
    Arc,
    /// Polar angle `φ` from the pole `x₃ = 1`, so `x₃ = cos φ`.
    Cap,
}

impl Geometry {
    pub fn dim(self) -> usize {
        match self {
            Geometry::Arc => 2,
            Geometry::Cap => 3,
        }
    }

    /// Height `xₙ` of the point at angle `t`.
    pub fn height(self, t: f64) -> f64 {
        match self {
            Geometry::Arc => t.sin(),
            Geometry::Cap => t.cos(),
        }
    }
}

/// Potential `q` as a function of the angle coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Constant { value: f64 },
    /// `1/h` with `h = ½ max(xₙ, 0)²`; infinite where `xₙ ≤ 0`.
    InverseHalfPlane,
    /// `q₀ + xₙ²`.
    HeightSquared { q0: f64 },
    /// `q₀ + amplitude Σ_k c_k (1 + cos(kt + φ_k)) / 2k`, with `c_k ∈ [0, 1)` and
    /// phases drawn from the seed.
    RandomSmooth {
        seed: u64,
        q0: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// Piecewise-linear through `(angles[i], values[i])`, constant beyond the ends.
    Tabulated { angles: Vec<f64>, values: Vec<f64> },
}

fn default_amplitude() -> f64 {
    1.0
}

const RANDOM_MODES: usize = 4;

impl Potential {
    pub fn eval(&self, geometry: Geometry, t: f64) -> f64 {
        match self {
            Potential::Constant { value } => *value,
            Potential::InverseHalfPlane => {
                let x = geometry.height(t);
                if x > 0.0 {
                    2.0 / (x * x)
                } else {
                    f64::INFINITY
                }
            }
            Potential::HeightSquared { q0 } => q0 + geometry.height(t).powi(2),
            Potential::RandomSmooth { seed, q0, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut q = *q0;
                for k in 1..=RANDOM_MODES {
                    let c: f64 = rng.gen();
                    let phase = rng.gen_range(0.0..2.0 * PI);
                    q += amplitude * c * (1.0 + (k as f64 * t + phase).cos()) / (2.0 * k as f64);
                }
                q
            }
            Potential::Tabulated { angles, values } => {
                let i = angles.partition_point(|&a| a <= t);
                if i == 0 {
                    values[0]
                } else if i == angles.len() {
                    values[values.len() - 1]
                } else {
                    let s = (t - angles[i - 1]) / (angles[i] - angles[i - 1]);
                    values[i - 1] + s * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// A lower bound `q₀` valid everywhere the potential is finite.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Potential::Constant { value } => *value,
            Potential::InverseHalfPlane => 2.0,
            Potential::HeightSquared { q0 } | Potential::RandomSmooth { q0, .. } => *q0,
            Potential::Tabulated { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// `q ≡ q₀` on every domain.
    pub fn is_constant(&self) -> bool {
        matches!(self, Potential::Constant { .. })
            || matches!(self, Potential::RandomSmooth { amplitude, .. } if *amplitude == 0.0)
    }

    fn validate(&self) -> Result<()> {
        if let Potential::Tabulated { angles, values } = self {
            if angles.len() != values.len() || angles.is_empty() {
                return Err(Error::InvalidArgument("tabulated potential needs matching, non-empty columns".into()));
            }
            if angles.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidArgument("tabulated angles must increase strictly".into()));
            }
        }
        Ok(())
    }
}

/// `𝓛v = −Δ′v + qv = λv` on `(lo, hi)` with Dirichlet conditions. Nodes are
/// cell centered, `t_i = lo + (i + ½)(hi − lo)/n_nodes`, so endpoint
/// singularities of `q` are never sampled. For caps an endpoint at a pole is
/// not a boundary; the metric weight `sin φ` vanishes there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalProblem {
    pub geometry: Geometry,
    pub lo: f64,
    pub hi: f64,
    pub potential: Potential,
    pub q0: f64,
    pub n_nodes: usize,
}

impl SphericalProblem {
    /// Arc `lo < θ < hi` with `0 ≤ lo` and `hi ≤ 2π`.
    pub fn arc(lo: f64, hi: f64, potential: Potential, n_nodes: usize) -> Result<Self> {
        let q0 = potential.lower_bound();
        Self::new(Geometry::Arc, lo, hi, potential, q0, n_nodes)
    }

    /// Cap `lo < φ < hi` with `0 ≤ lo < hi ≤ π`.
    pub fn cap(lo: f64, hi: f64, potential: Potential, n_nodes: usize) -> Result<Self> {
        let q0 = potential.lower_bound();
        Self::new(Geometry::Cap, lo, hi, potential, q0, n_nodes)
    }

    pub fn new(geometry: Geometry, lo: f64, hi: f64, potential: Potential, q0: f64, n_nodes: usize) -> Result<Self> {
        let p = Self { geometry, lo, hi, potential, q0, n_nodes };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let top = match self.geometry {
            Geometry::Arc => 2.0 * PI,
            Geometry::Cap => PI,
        };
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= top + 1e-12) {
            return Err(Error::InvalidArgument(format!("invalid interval ({}, {})", self.lo, self.hi)));
        }
        if self.n_nodes < MIN_NODES {
            return Err(Error::InvalidArgument(format!("{} nodes, at least {MIN_NODES} required", self.n_nodes)));
        }
        if !(self.q0 > 0.0 && self.q0.is_finite()) {
            return Err(Error::InvalidArgument(format!("q₀ = {} must be positive", self.q0)));
        }
        self.potential.validate()?;
        let slack = 1e-12 * self.q0.max(1.0);
        for (i, t) in self.nodes().into_iter().enumerate() {
            let q = self.potential.eval(self.geometry, t);
            if !q.is_finite() {
                return Err(Error::PotentialSingular { node: i });
            }
            if q < self.q0 - slack {
                return Err(Error::InvalidArgument(format!("q = {q} < q₀ = {} at node {i}", self.q0)));
            }
        }
        Ok(())
    }

    /// Same potential and resolution on another interval.
    pub fn on_interval(&self, lo: f64, hi: f64) -> Result<Self> {
        Self::new(self.geometry, lo, hi, self.potential.clone(), self.q0, self.n_nodes)
    }

    /// Same domain with `q ≡ value`.
    pub fn with_constant_potential(&self, value: f64) -> Result<Self> {
        Self::new(self.geometry, self.lo, self.hi, Potential::Constant { value }, value, self.n_nodes)
    }

    pub fn with_nodes(&self, n_nodes: usize) -> Result<Self> {
        Self::new(self.geometry, self.lo, self.hi, self.potential.clone(), self.q0, n_nodes)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.n_nodes as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_nodes).map(|i| self.lo + (i as f64 + 0.5) * h).collect()
    }

    /// Metric weight at nodes (`1` on arcs, `sin φ` on caps).
    pub fn weights(&self) -> Vec<f64> {
        self.nodes().into_iter().map(|t| self.weight(t)).collect()
    }

    fn weight(&self, t: f64) -> f64 {
        match self.geometry {
            Geometry::Arc => 1.0,
            Geometry::Cap => t.sin().max(0.0),
        }
    }

    /// Stiffness `A` (diagonal, off-diagonal) for azimuthal order `m`; the
    /// discrete problem is `A v = λ W v`.
    fn stiffness(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_nodes;
        let h = self.spacing();
        let nodes = self.nodes();
        let face = |j: usize| {
            let f = self.weight(self.lo + j as f64 * h);
            // boundary faces sit half a cell from the outer nodes
            if j == 0 || j == n {
                2.0 * f
            } else {
                f
            }
        };
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for i in 0..n {
            let w = self.weight(nodes[i]);
            let mut q = self.potential.eval(self.geometry, nodes[i]);
            if m > 0 {
                q += (m * m) as f64 / (w * w);
            }
            diag[i] = (face(i) + face(i + 1)) / (h * h) + q * w;
            if i + 1 < n {
                off[i] = -face(i + 1) / (h * h);
            }
        }
        (diag, off)
    }

    /// Symmetric form `W^{-1/2} A W^{-1/2}`.
    fn symmetric(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        let w = self.weights();
        let (mut d, mut e) = self.stiffness(m);
        for i in 0..d.len() {
            d[i] /= w[i];
        }
        for i in 0..e.len() {
            e[i] /= (w[i] * w[i + 1]).sqrt();
        }
        (d, e)
    }

    /// `vᵀAv / vᵀWv` for nodal values of an axisymmetric function.
    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        let (d, e) = self.stiffness(0);
        let w = self.weights();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..v.len() {
            num += d[i] * v[i] * v[i];
            if i + 1 < v.len() {
                num += 2.0 * e[i] * v[i] * v[i + 1];
            }
            den += w[i] * v[i] * v[i];
        }
        num / den
    }
}

/// First `k` eigenpairs, ascending. On caps the spectrum is the union over
/// azimuthal orders; orders `m ≥ 1` appear twice (`cos mψ`, `sin mψ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambdas: Vec<f64>,
    /// Nodal values, normalized in the weighted `L²` norm; the first is positive.
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Azimuthal order of each eigenpair (always 0 on arcs).
    pub azimuthal: Vec<usize>,
    pub nodes: Vec<f64>,
}

fn solve_order(problem: &SphericalProblem, m: usize, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let (d, e) = problem.symmetric(m);
    let w = problem.weights();
    let h = problem.spacing();
    let mut found: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for j in 0..k.min(problem.n_nodes) {
        let lambda = eigenvalue(&d, &e, j);
        let u = eigenvector(&d, &e, lambda, &found)?;
        // u has unit Euclidean norm; v = W^{-1/2} u / √h has unit weighted L² norm
        let mut v: Vec<f64> = u.iter().zip(&w).map(|(a, wi)| a / (wi * h).sqrt()).collect();
        let (big, _) = v.iter().enumerate().fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        let sign = if j == 0 { v.iter().sum::<f64>().signum() } else { v[big].signum() };
        v.iter_mut().for_each(|x| *x *= sign);
        found.push(u);
        out.push((lambda, v));
    }
    Ok(out)
}

pub fn eigensolve(problem: &SphericalProblem, k: usize) -> Result<EigenResult> {
    problem.validate()?;
    if k == 0 || k > MAX_EIGENPAIRS {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={MAX_EIGENPAIRS}")));
    }
    let mut pairs: Vec<(f64, usize, Vec<f64>)> = solve_order(problem, 0, k)?.into_iter().map(|(l, v)| (l, 0, v)).collect();
    if problem.geometry == Geometry::Cap {
        // the lowest eigenvalue of order m grows with m, so stop once it exceeds the k-th candidate
        for m in 1.. {
            let kth = pairs[k - 1].0;
            let next = solve_order(problem, m, k)?;
            if next[0].0 >= kth {
                break;
            }
            for (l, v) in next {
                pairs.push((l, m, v.clone()));
                pairs.push((l, m, v));
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            pairs.truncate(k);
        }
    }
    pairs.truncate(k);
    Ok(EigenResult {
        lambdas: pairs.iter().map(|p| p.0).collect(),
        azimuthal: pairs.iter().map(|p| p.1).collect(),
        eigenfunctions: pairs.into_iter().map(|p| p.2).collect(),
        nodes: problem.nodes(),
    })
}
