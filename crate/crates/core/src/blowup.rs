//! Blow-up rescalings `u_r(x) = u(x⁰ + r x)/r²`, distance to the half-plane
//! family and the decay exponent of `W(r) − W(0+)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::WeissScan;
use crate::fields::{gradient, trace_sphere, Ball, Grid, HalfPlaneSolution, NodalRule, Point, VectorField};
use crate::stats::fit_line;
use crate::{Error, Result};

/// Nodes per axis of the default reference grid on `[−1, 1]ⁿ`.
pub fn default_reference_count(dim: usize) -> usize {
    if dim >= 3 {
        65
    } else {
        129
    }
}

pub fn default_reference_grid(dim: usize) -> Result<Grid> {
    Grid::cube(dim, -1.0, 1.0, default_reference_count(dim))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaledField {
    pub x0: Point,
    pub r: f64,
    pub field: VectorField,
}

/// Samples `u(x⁰ + r x)/r²` on the reference grid with the quadratic-corrected
/// interpolant of the source field.
pub fn rescale(field: &VectorField, x0: &Point, r: f64, reference: &Grid) -> Result<RescaledField> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    let grid = field.grid();
    if reference.dim() != grid.dim() {
        return Err(Error::InvalidArgument("reference grid dimension differs from the field".into()));
    }
    grid.require_ball(&Ball::new(*x0, r))?;
    let dim = grid.dim();
    let scale = 1.0 / (r * r);
    let rescaled = VectorField::from_fn(reference.clone(), field.components(), |x, out| {
        let mut y = [0.0; 3];
        for a in 0..dim {
            y[a] = x0[a] + r * x[a];
        }
        field.interpolate_corrected(&y, out);
        out.iter_mut().for_each(|v| *v *= scale);
    });
    Ok(RescaledField { x0: *x0, r, field: rescaled })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneFit {
    pub best: HalfPlaneSolution,
    /// `‖u − h‖_{L²(B₁)}`.
    pub l2_distance: f64,
    /// `(‖u − h‖²_{L²(B₁)} + ‖∇(u − h)‖²_{L²(B₁)})^{1/2}`.
    pub w12_distance: f64,
}

const COARSE_DIRECTIONS: usize = 64;
const GOLDEN_TOL: f64 = 1e-10;

struct FitData<'a> {
    field: &'a VectorField,
    nodes: Vec<usize>,
    weights: Vec<f64>,
    coords: Vec<Point>,
    u_norm2: f64,
}

impl FitData<'_> {
    /// `(‖u‖² − 2|∫u p_ν| + ∫p_ν², ∫u p_ν)` for the profile `p_ν = ½ max(x·ν, 0)²`.
    fn objective(&self, nu: &[f64]) -> (f64, Vec<f64>) {
        let m = self.field.components();
        let dim = nu.len();
        let mut up = vec![0.0; m];
        let mut pp = 0.0;
        for (k, &n) in self.nodes.iter().enumerate() {
            let x = &self.coords[k];
            let s: f64 = (0..dim).map(|a| x[a] * nu[a]).sum::<f64>().max(0.0);
            if s == 0.0 {
                continue;
            }
            let p = 0.5 * s * s;
            let w = self.weights[k];
            pp += w * p * p;
            for (c, v) in self.field.node(n).iter().enumerate() {
                up[c] += w * p * v;
            }
        }
        let len = up.iter().map(|v| v * v).sum::<f64>().sqrt();
        (self.u_norm2 - 2.0 * len + pp, up)
    }
}

fn direction(dim: usize, angles: &[f64]) -> Vec<f64> {
    match dim {
        1 => vec![if angles[0] < PI { 1.0 } else { -1.0 }],
        2 => vec![angles[0].cos(), angles[0].sin()],
        _ => vec![angles[0].sin() * angles[1].cos(), angles[0].sin() * angles[1].sin(), angles[0].cos()],
    }
}

pub(crate) fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Nearest element of ℍ in `L²(B₁)`: coarse search over `64ⁿ⁻¹` normals,
/// golden-section refinement per angle, closed-form optimal `e` per normal.
pub fn fit_half_plane(rescaled: &RescaledField) -> Result<HalfPlaneFit> {
    fit_field(&rescaled.field)
}

/// `fit_half_plane` for any field on a grid containing `B₁`.
pub fn fit_field(field: &VectorField) -> Result<HalfPlaneFit> {
    let grid = field.grid();
    let dim = grid.dim();
    let m = field.components();
    let unit = Ball::unit();
    grid.require_ball(&unit)?;
    let rule = NodalRule::new(grid, Some(&unit));
    let nodes = rule.nodes().to_vec();
    let weights = rule.weights().to_vec();
    let coords: Vec<Point> = nodes.iter().map(|&n| grid.coord(n)).collect();
    let u_norm2: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(&n, w)| w * field.node(n).iter().map(|v| v * v).sum::<f64>())
        .sum();
    if !(u_norm2.max(0.0).sqrt() >= 1e-10) {
        return Err(Error::DegenerateField(u_norm2.max(0.0).sqrt()));
    }
    let data = FitData { field, nodes, weights, coords, u_norm2 };

    let nu_angles: Vec<Vec<f64>> = match dim {
        1 => vec![vec![0.0], vec![1.5 * PI]],
        2 => (0..COARSE_DIRECTIONS).map(|k| vec![2.0 * PI * k as f64 / COARSE_DIRECTIONS as f64]).collect(),
        _ => (0..COARSE_DIRECTIONS)
            .flat_map(|i| {
                (0..COARSE_DIRECTIONS).map(move |j| {
                    vec![PI * (i as f64 + 0.5) / COARSE_DIRECTIONS as f64, 2.0 * PI * j as f64 / COARSE_DIRECTIONS as f64]
                })
            })
            .collect(),
    };
    let values: Vec<f64> = nu_angles.par_iter().map(|a| data.objective(&direction(dim, a)).0).collect();
    // first minimum in candidate order
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    let mut angles = nu_angles[best].clone();
    if dim >= 2 {
        let step = 2.0 * PI / COARSE_DIRECTIONS as f64;
        let rounds = if dim == 2 { 1 } else { 4 };
        for round in 0..rounds {
            let width = if round == 0 { step } else { step / 4.0 };
            for k in 0..angles.len() {
                let base = angles.clone();
                let f = |t: f64| {
                    let mut a = base.clone();
                    a[k] = t;
                    data.objective(&direction(dim, &a)).0
                };
                let center = angles[k];
                angles[k] = golden(f, center - width, center + width);
            }
        }
    }
    let nu = direction(dim, &angles);
    let (_, up) = data.objective(&nu);
    let len = up.iter().map(|v| v * v).sum::<f64>().sqrt();
    let e: Vec<f64> = if len > 0.0 {
        up.iter().map(|v| v / len).collect()
    } else {
        let mut e = vec![0.0; m];
        e[0] = 1.0;
        e
    };
    let best = HalfPlaneSolution::normalized(&nu, &e)?;
    let (l2, w12) = distances(field, &rule, &best);
    Ok(HalfPlaneFit { best, l2_distance: l2, w12_distance: w12 })
}

/// `L²(B₁)` and `W^{1,2}(B₁)` distances between `field` and `hp`.
fn distances(field: &VectorField, rule: &NodalRule, hp: &HalfPlaneSolution) -> (f64, f64) {
    let grid = field.grid();
    let m = field.components();
    let mut diff = field.clone();
    let mut hv = vec![0.0; m];
    for n in 0..grid.node_count() {
        hp.value(&grid.coord(n), &mut hv);
        for (d, h) in diff.node_mut(n).iter_mut().zip(&hv) {
            *d -= h;
        }
    }
    let grad = gradient(&diff);
    let [l2, g2] = rule.integrate(|n| {
        let v: f64 = diff.node(n).iter().map(|x| x * x).sum();
        let g = grad.norm_at(n);
        [v, g * g]
    });
    let l2 = l2.max(0.0);
    (l2.sqrt(), (l2 + g2.max(0.0)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupSequence {
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    pub fields: Vec<RescaledField>,
    /// `‖u_{rᵢ} − u_{rᵢ₊₁}‖_{L¹(∂B₁)}`.
    pub l1_differences: Vec<f64>,
    pub cauchy: bool,
}

/// Final difference bound for the Cauchy flag.
pub const CAUCHY_TOLERANCE: f64 = 5e-3;

/// Rescalings at decreasing radii and their successive `L¹(∂B₁)` differences.
/// `cauchy` holds when the differences do not grow and the last is at most
/// `5e−3`.
pub fn blowup_sequence(field: &VectorField, x0: &Point, radii: &[f64], reference: &Grid) -> Result<BlowupSequence> {
    if radii.len() < 2 {
        return Err(Error::InvalidArgument("a blow-up sequence needs at least two radii".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("radii must be strictly decreasing".into()));
    }
    let min = 5.0 * field.grid().h_max();
    if let Some(&r) = radii.iter().find(|&&r| r < min) {
        return Err(Error::RadiusBelowResolution { radius: r, min });
    }
    reference.require_ball(&Ball::unit())?;
    let fields = radii
        .par_iter()
        .map(|&r| rescale(field, x0, r, reference))
        .collect::<Result<Vec<_>>>()?;
    let samples = crate::fields::default_angular_samples(reference, 1.0);
    let origin = [0.0; 3];
    let traces = fields
        .iter()
        .map(|f| trace_sphere(&f.field, &origin, 1.0, samples))
        .collect::<Result<Vec<_>>>()?;
    let l1_differences: Vec<f64> = traces
        .windows(2)
        .map(|w| {
            w[0].samples
                .iter()
                .zip(&w[1].samples)
                .map(|(a, b)| a.weight * a.value.iter().zip(&b.value).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
                .sum()
        })
        .collect();
    let last = *l1_differences.last().unwrap();
    let decreasing = l1_differences.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let cauchy = decreasing && last <= CAUCHY_TOLERANCE;
    Ok(BlowupSequence { radii: radii.to_vec(), fields, l1_differences, cauchy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Exponent of `W(r) − W(0+) ≈ C r^γ`.
    pub gamma_hat: f64,
    pub c_hat: f64,
    pub r_range: (f64, f64),
    /// R² of the log-log fit.
    pub fit_quality: f64,
    pub samples: usize,
    /// `γ / (n + 2 + γ)`.
    pub kappa_hat: f64,
    /// `γ / (2 + γ)`.
    pub beta_hat: f64,
}

/// Excess over `W(0+)` below which a radius carries no decay information.
pub const DECAY_EXCESS_MIN: f64 = 1e-6;
pub const DECAY_MIN_SAMPLES: usize = 4;

/// Log-log least squares of `W(r) − w0_estimate` against `r` in dimension `dim`.
pub fn fit_decay(scan: &WeissScan, dim: usize) -> Result<DecayFit> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidDimension(dim));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&r, &w) in scan.radii.iter().zip(&scan.values) {
        let excess = w - scan.w0_estimate;
        if excess > DECAY_EXCESS_MIN {
            x.push(r.ln());
            y.push(excess.ln());
        }
    }
    if x.len() < DECAY_MIN_SAMPLES {
        return Err(Error::ExactHomogeneity);
    }
    let fit = fit_line(&x, &y)?;
    let gamma = fit.slope;
    let n = dim as f64;
    Ok(DecayFit {
        gamma_hat: gamma,
        c_hat: fit.intercept.exp(),
        r_range: (x[0].exp(), x[x.len() - 1].exp()),
        fit_quality: fit.r_squared,
        samples: x.len(),
        kappa_hat: gamma / (n + 2.0 + gamma),
        beta_hat: gamma / (2.0 + gamma),
    })
}
