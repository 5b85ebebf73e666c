//! Volume energy `E`, the boundary-adjusted energy `M` on `B₁`, the Weiss
//! functional `W(u, x⁰, r)` and the constant `α_n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fields::{default_angular_samples, norm, trace_sphere, Ball, NodalRule, Point, VectorField};
use crate::{Error, Result};

/// `∫|∇u|²`, `∫2|u|` and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub mass: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MValue {
    pub volume_part: f64,
    /// `2∫_{∂B₁}|v|²`.
    pub boundary_part: f64,
    pub value: f64,
}

impl MValue {
    pub fn new(volume_part: f64, boundary_part: f64) -> Self {
        Self { volume_part, boundary_part, value: volume_part - boundary_part }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeissValue {
    pub center: Point,
    pub radius: f64,
    pub value: f64,
}

/// How the right limit `W(0+)` of a scan was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extrapolation {
    /// `W(r) ≈ W₀ + C r^γ` through the three smallest radii.
    PowerLaw { gamma: f64, coefficient: f64 },
    /// Fit rejected; `W₀` is the value at the smallest radius.
    SmallestRadius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeissScan {
    pub center: Point,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub w0_estimate: f64,
    pub extrapolation: Extrapolation,
    /// Largest drop `max(0, W(rᵢ) − W(rᵢ₊₁))` over consecutive radii.
    pub monotone_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaN {
    pub dim: usize,
    pub value: f64,
}

impl AlphaN {
    /// `α_n / 2`, the energy density of a half-plane solution.
    pub fn half(&self) -> f64 {
        0.5 * self.value
    }
}

/// `H^{n-1}(∂B₁)` in ℝⁿ.
pub fn unit_sphere_area(dim: usize) -> Result<f64> {
    match dim {
        1 => Ok(2.0),
        2 => Ok(2.0 * PI),
        3 => Ok(4.0 * PI),
        d => Err(Error::InvalidDimension(d)),
    }
}

/// `α_n = H^{n-1}(∂B₁) / (2n(n+2))`.
pub fn alpha_n(dim: usize) -> Result<AlphaN> {
    let area = unit_sphere_area(dim)?;
    let n = dim as f64;
    Ok(AlphaN { dim, value: area / (2.0 * n * (n + 2.0)) })
}

/// Midpoint-rule energy over the whole grid or over a contained ball.
pub fn energy_e(field: &VectorField, ball: Option<&Ball>) -> Result<EnergyBreakdown> {
    let grid = field.grid();
    if let Some(b) = ball {
        grid.require_ball(b)?;
    }
    let rule = NodalRule::new(grid, ball);
    let [dirichlet, mass] = rule.integrate(|node| energy_density(field, node));
    Ok(EnergyBreakdown { dirichlet, mass, total: dirichlet + mass })
}

/// `[|∇u|², 2|u|]` at a node, gradient by central differences
/// (second-order one-sided at the grid boundary).
pub(crate) fn energy_density(field: &VectorField, node: usize) -> [f64; 2] {
    let grid = field.grid();
    let counts = grid.counts();
    let strides = grid.strides();
    let h = grid.spacing();
    let idx = grid.multi_index(node);
    let u = field.node(node);
    let mut grad2 = 0.0;
    for a in 0..grid.dim() {
        let s = strides[a];
        for k in 0..field.components() {
            let at = |n: usize| field.values()[n * field.components() + k];
            let d = if idx[a] == 0 {
                (-3.0 * at(node) + 4.0 * at(node + s) - at(node + 2 * s)) / (2.0 * h[a])
            } else if idx[a] + 1 == counts[a] {
                (3.0 * at(node) - 4.0 * at(node - s) + at(node - 2 * s)) / (2.0 * h[a])
            } else {
                (at(node + s) - at(node - s)) / (2.0 * h[a])
            };
            grad2 += d * d;
        }
    }
    [grad2, 2.0 * norm(u)]
}

/// `∫_{∂B_r(x⁰)} |u|²` with the default angular resolution.
pub fn boundary_l2_squared(field: &VectorField, center: &Point, radius: f64) -> Result<f64> {
    let n_ang = default_angular_samples(field.grid(), radius);
    Ok(trace_sphere(field, center, radius, n_ang)?.l2_squared())
}

/// `M(v) = ∫_{B₁}(|∇v|² + 2|v|) − 2∫_{∂B₁}|v|²` for a field on a grid containing `B₁`.
pub fn functional_m(field: &VectorField) -> Result<MValue> {
    let ball = Ball::unit();
    let vol = energy_e(field, Some(&ball))?.total;
    let bnd = 2.0 * boundary_l2_squared(field, &ball.center, 1.0)?;
    Ok(MValue::new(vol, bnd))
}

/// `W(u,x⁰,r) = r^{-n-2} ∫_{B_r}(|∇u|² + 2|u|) − 2 r^{-n-3} ∫_{∂B_r}|u|²`.
pub fn weiss_w(field: &VectorField, x0: &Point, r: f64) -> Result<WeissValue> {
    let n = field.grid().dim() as i32;
    let ball = Ball::new(*x0, r);
    let vol = energy_e(field, Some(&ball))?.total;
    let bnd = boundary_l2_squared(field, x0, r)?;
    let value = vol / r.powi(n + 2) - 2.0 * bnd / r.powi(n + 3);
    Ok(WeissValue { center: *x0, radius: r, value })
}

pub fn weiss_scan(field: &VectorField, x0: &Point, radii: &[f64]) -> Result<WeissScan> {
    check_radii(radii)?;
    for &r in radii {
        field.grid().require_ball(&Ball::new(*x0, r))?;
    }
    use rayon::prelude::*;
    let values = radii
        .par_iter()
        .map(|&r| weiss_w(field, x0, r).map(|w| w.value))
        .collect::<Result<Vec<_>>>()?;
    WeissScan::from_values(*x0, radii.to_vec(), values)
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidArgument("radii must be positive and strictly increasing".into()));
    }
    Ok(())
}

const FIT_COND_MAX: f64 = 1e8;
const GAMMA_RANGE: (f64, f64) = (0.1, 20.0);

impl WeissScan {
    pub fn from_values(center: Point, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_radii(&radii)?;
        if radii.len() != values.len() {
            return Err(Error::InvalidArgument("radii and values differ in length".into()));
        }
        let monotone_violation = values.windows(2).map(|p| (p[0] - p[1]).max(0.0)).fold(0.0, f64::max);
        let (w0_estimate, extrapolation) = match power_law_limit(&radii, &values) {
            Some((w0, gamma, coefficient)) => (w0, Extrapolation::PowerLaw { gamma, coefficient }),
            None => (values[0], Extrapolation::SmallestRadius),
        };
        Ok(Self { center, radii, values, w0_estimate, extrapolation, monotone_violation })
    }
}

/// Solves `wᵢ = W₀ + C rᵢ^γ` through the three smallest radii.
fn power_law_limit(radii: &[f64], values: &[f64]) -> Option<(f64, f64, f64)> {
    if radii.len() < 3 {
        return None;
    }
    let (r1, r2, r3) = (radii[0], radii[1], radii[2]);
    let (w1, w2, w3) = (values[0], values[1], values[2]);
    let d1 = w2 - w1;
    let d2 = w3 - w2;
    let scale = w1.abs().max(w2.abs()).max(w3.abs()).max(1e-300);
    if d1.abs() < 1e-13 * scale || d1 * d2 <= 0.0 {
        return None;
    }
    let target = d2 / d1;
    let ratio = |g: f64| (r3.powf(g) - r2.powf(g)) / (r2.powf(g) - r1.powf(g));
    let (mut lo, mut hi) = GAMMA_RANGE;
    if !(ratio(lo) <= target && target <= ratio(hi)) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = 0.5 * (lo + hi);
    let p: Vec<f64> = [r1, r2, r3].iter().map(|r| r.powf(gamma)).collect();
    // conditioning of the 3×2 design matrix [1, rᵢ^γ]
    let s1: f64 = p.iter().sum();
    let s2: f64 = p.iter().map(|x| x * x).sum();
    let (a, b, d) = (3.0, s1, s2);
    let tr = a + d;
    let det = a * d - b * b;
    let disc = ((tr * tr / 4.0) - det).max(0.0).sqrt();
    let (lmax, lmin) = (tr / 2.0 + disc, tr / 2.0 - disc);
    if lmin <= 0.0 || (lmax / lmin).sqrt() > FIT_COND_MAX {
        return None;
    }
    let c = d1 / (p[1] - p[0]);
    Some((w1 - c * p[0], gamma, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{eval_half_plane, Grid, HalfPlaneSolution};

    fn half_plane_2d(count: usize) -> VectorField {
        let g = Grid::cube(2, -1.0, 1.0, count).unwrap();
        eval_half_plane(&g, &HalfPlaneSolution::canonical(2, 2))
    }

    #[test]
    fn alpha_closed_forms() {
        assert_eq!(alpha_n(2).unwrap().value, PI / 8.0);
        assert!((alpha_n(3).unwrap().value - 2.0 * PI / 15.0).abs() < 1e-16);
        assert_eq!(alpha_n(1).unwrap().value, 1.0 / 3.0);
        assert!(matches!(alpha_n(4), Err(Error::InvalidDimension(4))));
    }

    #[test]
    fn half_plane_energy_on_unit_disc() {
        // ∫_{B₁∩{x₂>0}} x₂² = π/8 for both the Dirichlet and the mass part
        let f = half_plane_2d(257);
        let e = energy_e(&f, Some(&Ball::unit())).unwrap();
        let q = PI / 8.0;
        assert!((e.dirichlet - q).abs() / q < 0.01, "{e:?}");
        assert!((e.mass - q).abs() / q < 0.01, "{e:?}");
        assert!((e.total - PI / 4.0).abs() / (PI / 4.0) < 0.01);
        assert_eq!(e.total, e.dirichlet + e.mass);
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
        let z = VectorField::zeros(g, 2);
        let e = energy_e(&z, Some(&Ball::unit())).unwrap();
        assert_eq!((e.dirichlet, e.mass, e.total), (0.0, 0.0, 0.0));
        assert_eq!(functional_m(&z).unwrap().value, 0.0);
        assert_eq!(weiss_w(&z, &[0.0; 3], 0.5).unwrap().value, 0.0);
    }

    #[test]
    fn m_of_half_plane_is_half_alpha() {
        let f = half_plane_2d(257);
        let m = functional_m(&f).unwrap();
        let target = PI / 16.0;
        assert!((m.value - target).abs() / target < 0.01, "{m:?}");
        assert_eq!(m.value, m.volume_part - m.boundary_part);
    }

    #[test]
    fn weiss_of_half_plane_is_scale_invariant() {
        let f = half_plane_2d(257);
        for r in [0.25, 0.5] {
            let w = weiss_w(&f, &[0.0; 3], r).unwrap().value;
            assert!((w - PI / 16.0).abs() / (PI / 16.0) < 0.02, "r={r}: {w}");
        }
    }

    #[test]
    fn weiss_off_origin_on_gamma_is_at_least_the_limit() {
        // x⁰ = (0.5, 0) lies on Γ; direct quadrature oracle gives π/16 by translation invariance
        let f = half_plane_2d(257);
        let w = weiss_w(&f, &[0.5, 0.0, 0.0], 0.25).unwrap().value;
        assert!(w >= PI / 16.0 - 2e-3, "{w}");
    }

    #[test]
    fn half_plane_scan_is_flat() {
        let f = half_plane_2d(257);
        let h = f.grid().h_max();
        let radii: Vec<f64> = (0..10).map(|k| 5.0 * h * 1.3f64.powi(k)).filter(|&r| r <= 0.9).collect();
        let scan = weiss_scan(&f, &[0.0; 3], &radii).unwrap();
        assert!(scan.monotone_violation <= 2e-3, "{scan:?}");
        for w in &scan.values {
            assert!((w - PI / 16.0).abs() / (PI / 16.0) < 0.02);
        }
        assert!((scan.w0_estimate - PI / 16.0).abs() / (PI / 16.0) < 0.02);
    }

    #[test]
    fn zero_scan() {
        let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
        let scan = weiss_scan(&VectorField::zeros(g, 1), &[0.0; 3], &[0.2, 0.3, 0.4]).unwrap();
        assert!(scan.values.iter().all(|&w| w == 0.0));
        assert_eq!(scan.monotone_violation, 0.0);
    }

    #[test]
    fn power_law_extrapolation_is_exact_on_synthetic_data() {
        let radii = vec![0.05, 0.08, 0.12, 0.2, 0.3];
        let values: Vec<f64> = radii.iter().map(|r| 0.3 + 0.1 * r * r).collect();
        let scan = WeissScan::from_values([0.0; 3], radii, values).unwrap();
        assert!((scan.w0_estimate - 0.3).abs() < 1e-10);
        match scan.extrapolation {
            Extrapolation::PowerLaw { gamma, .. } => assert!((gamma - 2.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotone_data_falls_back() {
        let scan = WeissScan::from_values([0.0; 3], vec![0.1, 0.2, 0.3], vec![1.0, 1.1, 1.05]).unwrap();
        assert_eq!(scan.extrapolation, Extrapolation::SmallestRadius);
        assert_eq!(scan.w0_estimate, 1.0);
        assert!((scan.monotone_violation - 0.05).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_field_m_equals_mass() {
        // ¼|x|² solves the system away from 0 and is 2-homogeneous: M(u) = ∫_{B₁}|u| = π/8
        let g = Grid::cube(2, -1.0, 1.0, 257).unwrap();
        let f = VectorField::from_fn(g, 1, |x, o| o[0] = 0.25 * (x[0] * x[0] + x[1] * x[1]));
        let m = functional_m(&f).unwrap().value;
        let mass = 0.5 * energy_e(&f, Some(&Ball::unit())).unwrap().mass;
        assert!((m - mass).abs() < 1e-2 * (1.0 + mass.abs()));
        assert!((m - PI / 8.0).abs() / (PI / 8.0) < 0.01);
    }
}
