use std::f64::consts::PI;

use super::field::VectorField;
use super::grid::{Ball, Grid, Point};
use super::quadrature::gauss_legendre;
use crate::sum::pairwise_sum;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    /// `[θ, 0]` on circles, `[polar, azimuth]` on spheres, `[0 | π, 0]` in 1D.
    pub angles: [f64; 2],
    pub point: Point,
    /// Surface quadrature weight, already scaled by `r^{n-1}`.
    pub weight: f64,
    pub value: Vec<f64>,
}

/// Restriction of a field to `∂B_r(x⁰)` with a surface quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereTrace {
    pub center: Point,
    pub radius: f64,
    pub samples: Vec<TraceSample>,
}

impl SphereTrace {
    pub fn integrate<F: Fn(&TraceSample) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self.samples.iter().map(|s| s.weight * f(s)).collect();
        pairwise_sum(&terms)
    }

    /// `∫_{∂B_r} |u|²`.
    pub fn l2_squared(&self) -> f64 {
        self.integrate(|s| s.value.iter().map(|v| v * v).sum())
    }

    /// `∫_{∂B_r} |u|`.
    pub fn l1(&self) -> f64 {
        self.integrate(|s| s.value.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    pub fn measure(&self) -> f64 {
        self.integrate(|_| 1.0)
    }
}

/// A sample count giving several samples per grid cell along the sphere.
pub fn default_angular_samples(grid: &Grid, radius: f64) -> usize {
    let per = 2.0 * PI * radius / grid.h_min();
    match grid.dim() {
        3 => ((2.0 * per).ceil() as usize).clamp(32, 256),
        _ => (((4.0 * per).ceil() as usize).max(64) + 3) / 4 * 4,
    }
}

/// Sample points and weights on `∂B_r(x⁰)`. Circles use `n_angular`
/// equispaced angles; spheres use a Gauss–Legendre rule in `cos φ` with
/// `n_angular / 2` nodes times `n_angular` uniform azimuths.
pub fn sphere_rule(dim: usize, center: &Point, radius: f64, n_angular: usize) -> Vec<([f64; 2], Point, f64)> {
    match dim {
        1 => vec![
            ([PI, 0.0], [center[0] - radius, 0.0, 0.0], 1.0),
            ([0.0, 0.0], [center[0] + radius, 0.0, 0.0], 1.0),
        ],
        2 => {
            let w = 2.0 * PI * radius / n_angular as f64;
            (0..n_angular)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / n_angular as f64;
                    ([t, 0.0], [center[0] + radius * t.cos(), center[1] + radius * t.sin(), 0.0], w)
                })
                .collect()
        }
        _ => {
            let n_polar = (n_angular / 2).max(8);
            let (z, wz) = gauss_legendre(n_polar);
            let dpsi = 2.0 * PI / n_angular as f64;
            let mut out = Vec::with_capacity(n_polar * n_angular);
            for (zi, wi) in z.iter().zip(&wz) {
                let phi = zi.acos();
                let s = (1.0 - zi * zi).sqrt();
                for j in 0..n_angular {
                    let psi = dpsi * j as f64;
                    let p = [
                        center[0] + radius * s * psi.cos(),
                        center[1] + radius * s * psi.sin(),
                        center[2] + radius * zi,
                    ];
                    out.push(([phi, psi], p, radius * radius * wi * dpsi));
                }
            }
            out
        }
    }
}

pub fn trace_sphere(field: &VectorField, center: &Point, radius: f64, n_angular: usize) -> Result<SphereTrace> {
    let grid = field.grid();
    if grid.dim() > 1 && n_angular < 16 {
        return Err(Error::InvalidArgument(format!("n_angular = {n_angular} < 16")));
    }
    grid.require_ball(&Ball::new(*center, radius))?;
    let samples = sphere_rule(grid.dim(), center, radius, n_angular)
        .into_iter()
        .map(|(angles, point, weight)| TraceSample {
            angles,
            point,
            weight,
            value: {
                let mut v = vec![0.0; field.components()];
                field.interpolate_corrected(&point, &mut v);
                v
            },
        })
        .collect();
    Ok(SphereTrace { center: *center, radius, samples })
}
