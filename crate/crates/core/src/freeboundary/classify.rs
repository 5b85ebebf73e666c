use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extract::FreeBoundarySet;
use crate::energy::{alpha_n, weiss_scan, WeissScan};
use crate::fields::{Ball, Point, VectorField};
use crate::Result;

/// Radii per scan and their geometric ratio.
pub const SCAN_RADII: usize = 6;
pub const SCAN_RATIO: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointClassification {
    pub point: Point,
    pub verdict: Verdict,
    pub w_at_rmin: f64,
    pub scan: WeissScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub points: Vec<PointClassification>,
    pub threshold: f64,
    pub margin: f64,
    /// `Γ₀` points whose ball of radius `r_min` leaves the grid.
    pub skipped: usize,
}

impl Classification {
    pub fn regular_count(&self) -> usize {
        self.points.iter().filter(|p| p.verdict == Verdict::Regular).count()
    }
}

/// Default margin `0.1 α_n` above `α_n/2`.
pub fn default_margin(dim: usize) -> Result<f64> {
    Ok(0.1 * alpha_n(dim)?.value)
}

/// Radii `r_min·1.25ᵏ`, stopping at the first ball that leaves the grid.
fn scan_radii(field: &VectorField, x0: &Point, r_min: f64) -> Result<Vec<f64>> {
    let grid = field.grid();
    grid.require_ball(&Ball::new(*x0, r_min))?;
    let mut radii = vec![r_min];
    while radii.len() < SCAN_RADII {
        let r = radii[radii.len() - 1] * SCAN_RATIO;
        if !grid.contains_ball(&Ball::new(*x0, r)) {
            break;
        }
        radii.push(r);
    }
    Ok(radii)
}

/// Regular iff the estimated `W(u, x⁰, 0+)` lies below `α_n/2 + margin`.
pub fn classify_point(field: &VectorField, x0: &Point, r_min: f64, margin: Option<f64>) -> Result<PointClassification> {
    let dim = field.grid().dim();
    let margin = match margin {
        Some(m) => m,
        None => default_margin(dim)?,
    };
    let threshold = alpha_n(dim)?.half() + margin;
    let radii = scan_radii(field, x0, r_min)?;
    let scan = weiss_scan(field, x0, &radii)?;
    let w_at_rmin = if radii.len() >= 4 { scan.w0_estimate } else { scan.values[0] };
    let verdict = if w_at_rmin < threshold { Verdict::Regular } else { Verdict::Indeterminate };
    Ok(PointClassification { point: *x0, verdict, w_at_rmin, scan })
}

/// Classifies every `Γ₀` point of `fbset` whose `r_min` ball fits in the grid.
pub fn classify_points(field: &VectorField, fbset: &FreeBoundarySet, r_min: f64, margin: Option<f64>) -> Result<Classification> {
    let dim = field.grid().dim();
    let margin = match margin {
        Some(m) => m,
        None => default_margin(dim)?,
    };
    let threshold = alpha_n(dim)?.half() + margin;
    let inside: Vec<Point> = fbset
        .gamma0
        .iter()
        .map(|p| p.point)
        .filter(|p| field.grid().contains_ball(&Ball::new(*p, r_min)))
        .collect();
    let skipped = fbset.gamma0.len() - inside.len();
    let points = inside
        .par_iter()
        .map(|p| classify_point(field, p, r_min, Some(margin)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Classification { points, threshold, margin, skipped })
}
