use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fields::{read_field, Grid, HalfPlaneSolution, Point, VectorField};
use crate::{Error, Result};

/// Dirichlet data: `m` values per boundary node, in `Grid::boundary_nodes` order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    m: usize,
    nodes: Vec<usize>,
    values: Vec<f64>,
}

impl BoundaryData {
    pub fn from_values(grid: &Grid, m: usize, values: Vec<f64>) -> Result<Self> {
        let nodes = grid.boundary_nodes();
        if m == 0 || values.len() != nodes.len() * m {
            return Err(Error::InvalidArgument(format!(
                "boundary data needs {} × {m} values, got {}",
                nodes.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite boundary value at offset {i}")));
        }
        Ok(Self { m, nodes, values })
    }

    pub fn zero(grid: &Grid, m: usize) -> Self {
        let nodes = grid.boundary_nodes();
        let values = vec![0.0; nodes.len() * m];
        Self { m, nodes, values }
    }

    /// Samples `f` at the boundary nodes.
    pub fn from_fn<F: Fn(&Point, &mut [f64])>(grid: &Grid, m: usize, f: F) -> Result<Self> {
        let nodes = grid.boundary_nodes();
        let mut values = vec![0.0; nodes.len() * m];
        for (k, &node) in nodes.iter().enumerate() {
            f(&grid.coord(node), &mut values[k * m..(k + 1) * m]);
        }
        Self::from_values(grid, m, values)
    }

    /// Restriction of `field` to the boundary of its grid.
    pub fn from_field(field: &VectorField) -> Result<Self> {
        let m = field.components();
        let nodes = field.grid().boundary_nodes();
        let values = nodes.iter().flat_map(|&n| field.node(n).iter().copied()).collect();
        Self::from_values(field.grid(), m, values)
    }

    pub fn generate(grid: &Grid, m: usize, generator: &BoundaryGenerator) -> Result<Self> {
        generator.build(grid, m)
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Writes the data into the boundary nodes of `field`.
    pub fn apply(&self, field: &mut VectorField) -> Result<()> {
        if field.components() != self.m || field.grid().boundary_nodes().len() != self.nodes.len() {
            return Err(Error::InvalidArgument("boundary data does not match the field".into()));
        }
        for (k, &node) in self.nodes.iter().enumerate() {
            field.node_mut(node).copy_from_slice(&self.values[k * self.m..(k + 1) * self.m]);
        }
        Ok(())
    }
}

fn default_amplitude() -> f64 {
    0.05
}

fn default_width() -> f64 {
    0.5
}

/// Named families of boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryGenerator {
    Zero,
    /// Trace of `½ max(x·ν, 0)² e`.
    HalfPlane { nu: Vec<f64>, e: Vec<f64> },
    /// Half-plane solution with normal `e_n` turned by `angle` towards `e₁`.
    Rotated {
        angle: f64,
        #[serde(default)]
        e: Option<Vec<f64>>,
    },
    /// Half-plane with random normal and direction plus a random smooth
    /// trigonometric perturbation of size `amplitude`.
    Random {
        seed: u64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// Canonical half-plane plus `amplitude |x|² cos(kθ + φ) v`, `θ` the angle
    /// in the `(x₁, x_n)` plane; phase `φ` and unit `v` drawn from `seed`.
    AngularMode {
        k: u32,
        amplitude: f64,
        seed: u64,
    },
    /// Canonical half-plane plus a Gaussian bump `amplitude exp(−|x − c|²/w²) e₁`.
    Bump {
        amplitude: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "default_width")]
        width: f64,
    },
    /// `½ max(x_n, 0)² (cos ψ, sin ψ, 0…)` with `ψ = φ + angle·x₁`, `φ` from `seed`.
    Twist { angle: f64, seed: u64 },
    /// Boundary values of a stored field on the same grid.
    File { path: PathBuf },
}

impl BoundaryGenerator {
    /// Whether the generator draws random numbers.
    pub fn is_randomized(&self) -> bool {
        matches!(self, Self::Random { .. } | Self::AngularMode { .. } | Self::Twist { .. })
    }

    /// The exact solution for half-plane data, whose trace this generator is.
    pub fn half_plane(&self, dim: usize, m: usize) -> Result<Option<HalfPlaneSolution>> {
        match self {
            Self::HalfPlane { nu, e } => {
                check_len("nu", nu, dim)?;
                check_len("e", e, m)?;
                HalfPlaneSolution::normalized(nu, e).map(Some)
            }
            Self::Rotated { angle, e } => {
                let mut nu = vec![0.0; dim];
                nu[dim - 1] = angle.cos();
                if dim > 1 {
                    nu[0] = angle.sin();
                }
                let e = e.clone().unwrap_or_else(|| HalfPlaneSolution::canonical(dim, m).e().to_vec());
                check_len("e", &e, m)?;
                HalfPlaneSolution::normalized(&nu, &e).map(Some)
            }
            _ => Ok(None),
        }
    }

    fn build(&self, grid: &Grid, m: usize) -> Result<BoundaryData> {
        let dim = grid.dim();
        if m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        let canonical = HalfPlaneSolution::canonical(dim, m);
        match self {
            Self::Zero => Ok(BoundaryData::zero(grid, m)),
            Self::HalfPlane { .. } | Self::Rotated { .. } => {
                let hp = self.half_plane(dim, m)?.expect("half-plane generator");
                BoundaryData::from_fn(grid, m, |x, o| hp.value(x, o))
            }
            Self::Random { seed, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let nu = random_unit(&mut rng, dim);
                let e = random_unit(&mut rng, m);
                let hp = HalfPlaneSolution::normalized(&nu, &e)?;
                let modes: Vec<(Vec<f64>, f64, Vec<f64>)> = (0..4)
                    .map(|_| {
                        let k = (0..dim).map(|_| rng.gen_range(-PI..PI)).collect();
                        let phase = rng.gen_range(0.0..2.0 * PI);
                        let v = random_unit(&mut rng, m).iter().map(|c| c * rng.gen_range(-1.0..1.0)).collect();
                        (k, phase, v)
                    })
                    .collect();
                let amp = *amplitude;
                BoundaryData::from_fn(grid, m, |x, o| {
                    hp.value(x, o);
                    for (k, phase, v) in &modes {
                        let arg: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phase;
                        for c in 0..m {
                            o[c] += amp * v[c] * arg.cos();
                        }
                    }
                })
            }
            Self::AngularMode { k, amplitude, seed } => {
                if dim < 2 {
                    return Err(Error::InvalidArgument("angular modes need dimension ≥ 2".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let phase = rng.gen_range(0.0..2.0 * PI);
                let v = random_unit(&mut rng, m);
                let (k, amp) = (*k as f64, *amplitude);
                BoundaryData::from_fn(grid, m, |x, o| {
                    canonical.value(x, o);
                    let theta = x[dim - 1].atan2(x[0]);
                    let r2: f64 = x[..dim].iter().map(|c| c * c).sum();
                    let s = amp * r2 * (k * theta + phase).cos();
                    for c in 0..m {
                        o[c] += s * v[c];
                    }
                })
            }
            Self::Bump { amplitude, center, width } => {
                let mut c = [0.0; 3];
                match center {
                    Some(p) => {
                        check_len("center", p, dim)?;
                        c[..dim].copy_from_slice(p);
                    }
                    None => c[0] = grid.hi()[0],
                }
                if !(*width > 0.0) {
                    return Err(Error::InvalidArgument("bump width must be positive".into()));
                }
                let (amp, w2) = (*amplitude, width * width);
                BoundaryData::from_fn(grid, m, |x, o| {
                    canonical.value(x, o);
                    let d2: f64 = (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum();
                    o[0] += amp * (-d2 / w2).exp();
                })
            }
            Self::Twist { angle, seed } => {
                if m < 2 {
                    return Err(Error::InvalidArgument("twisting data needs m ≥ 2".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let phase = rng.gen_range(-0.25 * PI..0.25 * PI);
                let angle = *angle;
                BoundaryData::from_fn(grid, m, |x, o| {
                    let p = 0.5 * x[dim - 1].max(0.0).powi(2);
                    let psi = phase + angle * x[0];
                    o.iter_mut().for_each(|v| *v = 0.0);
                    o[0] = p * psi.cos();
                    o[1] = p * psi.sin();
                })
            }
            Self::File { path } => {
                let field = read_field(path)?;
                if field.grid() != grid || field.components() != m {
                    return Err(Error::InvalidArgument(format!(
                        "field in {} does not match the requested grid",
                        path.display()
                    )));
                }
                BoundaryData::from_field(&field)
            }
        }
    }
}

fn check_len(name: &str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::InvalidArgument(format!("{name} has length {}, expected {expected}", v.len())));
    }
    Ok(())
}

fn random_unit(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}
