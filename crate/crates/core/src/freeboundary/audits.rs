use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extract::FreeBoundarySet;
use crate::fields::{
    default_angular_samples, dot, gradient, laplacian, norm, trace_sphere, Ball, HalfPlaneSolution, NodalRule, Point,
    VectorField,
};
use crate::solver::dilate;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonDegeneracySample {
    pub center: Point,
    pub radius: f64,
    pub sup: f64,
    /// `r² / (2n)`.
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonDegeneracyReport {
    pub samples: Vec<NonDegeneracySample>,
    pub min_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// `max |u| / dist²(x, Γ₀)` over nodes in `B_{1/2}`.
    pub c_value: f64,
    /// `max |∇u| / dist(x, Γ₀)` over nodes in `B_{1/2}`.
    pub c_grad: f64,
    pub dist_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicityReport {
    /// `min (ΔU − 1)` with `U = |u|`.
    pub min_laplacian_excess: f64,
    /// `min (|∇u|² − |∇U|²)`.
    pub a_min: f64,
    pub evaluated_nodes: usize,
    /// No node qualified; the minima are reported as 0.
    pub vacuous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    /// `‖u − h‖_{L¹(B₁)}`.
    pub eps_l1: f64,
    /// `max(0, max −x·ν)` over support nodes in `B_{1/2}`.
    pub penetration: f64,
    /// `penetration · eps_l1^{−1/(2n+2)}`, 0 when both vanish.
    pub scaled: f64,
}

/// Whether a node within one cell diagonal of `x` has `|u| > δ`.
pub fn in_support_closure(field: &VectorField, x: &Point, delta: f64) -> bool {
    let grid = field.grid();
    let dim = grid.dim();
    let h = grid.spacing();
    let reach2: f64 = (0..dim).map(|a| h[a] * h[a]).sum::<f64>() * 1.000_001;
    nodes_near(field, x, reach2.sqrt()).into_iter().any(|n| {
        let y = grid.coord(n);
        (0..dim).map(|a| (y[a] - x[a]).powi(2)).sum::<f64>() <= reach2 && field.magnitude(n) > delta
    })
}

/// Node indices in the bounding box of `B_r(x)` clipped to the grid.
fn nodes_near(field: &VectorField, x: &Point, r: f64) -> Vec<usize> {
    let grid = field.grid();
    let dim = grid.dim();
    let counts = grid.counts();
    let h = grid.spacing();
    let lo = grid.lo();
    let mut range = [(0usize, 0usize); 3];
    for a in 0..dim {
        let a0 = ((x[a] - r - lo[a]) / h[a]).floor().max(0.0) as usize;
        let a1 = (((x[a] + r - lo[a]) / h[a]).ceil().max(0.0) as usize).min(counts[a] - 1);
        range[a] = (a0.min(counts[a] - 1), a1);
    }
    let mut out = Vec::new();
    for i in range[0].0..=range[0].1 {
        for j in range[1].0..=range[1].1 {
            for k in range[2].0..=range[2].1 {
                out.push(grid.index([i, j, k]));
            }
        }
    }
    out
}

/// `sup_{B_r(x⁰)} |u|` against `r²/(2n)` for every point and radius. The
/// sup runs over nodes in the ball and interpolated samples on its sphere.
pub fn audit_nondegeneracy(field: &VectorField, points: &[Point], radii: &[f64], delta: f64) -> Result<NonDegeneracyReport> {
    let grid = field.grid();
    let dim = grid.dim();
    let mut jobs = Vec::new();
    for p in points {
        if !in_support_closure(field, p, delta) {
            return Err(Error::NotInSupportClosure(p[..dim].to_vec()));
        }
        for &r in radii {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
            }
            grid.require_ball(&Ball::new(*p, r))?;
            jobs.push((*p, r));
        }
    }
    let samples: Vec<NonDegeneracySample> = jobs
        .par_iter()
        .map(|&(center, radius)| {
            let inner = nodes_near(field, &center, radius)
                .into_iter()
                .filter(|&n| {
                    let y = grid.coord(n);
                    (0..dim).map(|a| (y[a] - center[a]).powi(2)).sum::<f64>() <= radius * radius
                })
                .map(|n| field.magnitude(n))
                .fold(0.0, f64::max);
            let samples = default_angular_samples(grid, radius);
            let sphere = trace_sphere(field, &center, radius, samples)
                .map(|t| t.samples.iter().map(|s| norm(&s.value)).fold(0.0, f64::max))
                .unwrap_or(0.0);
            let sup = inner.max(sphere);
            let bound = radius * radius / (2.0 * dim as f64);
            NonDegeneracySample { center, radius, sup, bound, ratio: sup / bound }
        })
        .collect();
    let min_ratio = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    Ok(NonDegeneracyReport { samples, min_ratio })
}

/// Growth constants against the nearest `Γ₀` point, distances clamped at `2h`.
pub fn audit_quadratic_growth(field: &VectorField, fbset: &FreeBoundarySet) -> Result<GrowthReport> {
    if fbset.gamma0.is_empty() {
        return Err(Error::EmptyGamma0);
    }
    let grid = field.grid();
    let dim = grid.dim();
    let floor = 2.0 * grid.h_max();
    let grad = gradient(field);
    let targets: Vec<Point> = fbset.gamma0.iter().map(|p| p.point).collect();
    let (c_value, c_grad) = (0..grid.node_count())
        .into_par_iter()
        .filter_map(|n| {
            let x = grid.coord(n);
            if dot(&x[..dim], &x[..dim]) > 0.25 {
                return None;
            }
            let d2 = targets
                .iter()
                .map(|t| (0..dim).map(|a| (t[a] - x[a]).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let d = d2.sqrt().max(floor);
            Some((field.magnitude(n) / (d * d), grad.norm_at(n) / d))
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(GrowthReport { c_value, c_grad, dist_floor: floor })
}

/// `ΔU − 1` and `A = |∇u|² − |∇U|²` on interior support nodes at least two
/// cells away from the discrete free boundary.
pub fn audit_subharmonicity(field: &VectorField, delta: f64) -> Result<SubharmonicityReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    let grid = field.grid();
    let dim = grid.dim();
    let counts = grid.counts();
    let strides = grid.strides();
    let mags = field.magnitudes();
    let positive: Vec<bool> = mags.iter().map(|&v| v > delta).collect();
    let n = grid.node_count();
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
    let band = dilate(grid, &interface, 2);
    let scalar = VectorField::from_values(grid.clone(), 1, mags)?;
    let lap_u = laplacian(&scalar);
    let grad_u = gradient(field);
    let grad_mag = gradient(&scalar);
    let mut report = SubharmonicityReport {
        min_laplacian_excess: f64::INFINITY,
        a_min: f64::INFINITY,
        evaluated_nodes: 0,
        vacuous: true,
    };
    for node in 0..n {
        if grid.is_boundary(node) || !positive[node] || band[node] {
            continue;
        }
        let gu = grad_u.norm_at(node);
        let gm = grad_mag.norm_at(node);
        report.min_laplacian_excess = report.min_laplacian_excess.min(lap_u.node(node)[0] - 1.0);
        report.a_min = report.a_min.min(gu * gu - gm * gm);
        report.evaluated_nodes += 1;
    }
    if report.evaluated_nodes == 0 {
        report.min_laplacian_excess = 0.0;
        report.a_min = 0.0;
    } else {
        report.vacuous = false;
    }
    Ok(report)
}

/// Distance of `u` to the half-plane solution `hp` and penetration of the
/// support into `{x·ν < 0}` within `B_{1/2}`.
pub fn audit_support_localization(field: &VectorField, hp: &HalfPlaneSolution, delta: f64) -> Result<SupportReport> {
    let grid = field.grid();
    let dim = grid.dim();
    let m = field.components();
    if hp.nu().len() != dim || hp.e().len() != m {
        return Err(Error::InvalidArgument("half-plane solution does not match the field".into()));
    }
    let unit = Ball::unit();
    grid.require_ball(&unit)?;
    let rule = NodalRule::new(grid, Some(&unit));
    let eps_l1 = rule.integrate_scalar(|n| {
        let p = hp.profile(&grid.coord(n));
        field.node(n).iter().zip(hp.e()).map(|(a, e)| (a - p * e).powi(2)).sum::<f64>().sqrt()
    });
    let mut penetration: f64 = 0.0;
    for n in 0..grid.node_count() {
        let x = grid.coord(n);
        if dot(&x[..dim], &x[..dim]) <= 0.25 && field.magnitude(n) > delta {
            penetration = penetration.max(-dot(&x[..dim], hp.nu()));
        }
    }
    let scaled = if penetration == 0.0 { 0.0 } else { penetration * eps_l1.powf(-1.0 / (2.0 * dim as f64 + 2.0)) };
    Ok(SupportReport { eps_l1, penetration, scaled })
}
