use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::problem::{eigensolve, Geometry, Potential, SphericalProblem};
use crate::{Error, Result};

/// Strictness margin for `λ₁` under domain shrinking.
pub const STRICT_MARGIN: f64 = 1e-6;
/// Slack on the discrete shift inequality.
pub const SHIFT_SLACK: f64 = 1e-8;
/// Resolution of the half-domain and perturbed-cap problems.
pub const HALF_DOMAIN_NODES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityRow {
    pub fraction: f64,
    pub lo: f64,
    pub hi: f64,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// The full domain first, then sub-intervals in order of decreasing size.
    pub rows: Vec<MonotonicityRow>,
    pub nondecreasing: bool,
    /// `λ₁` grows by more than [`STRICT_MARGIN`] at every strict shrink.
    pub strict_first: bool,
    pub passed: bool,
}

/// `λ_k` on nested sub-intervals of length `fraction·(hi − lo)`, sharing the
/// midpoint of `problem` (or the pole, for caps starting at it).
pub fn check_domain_monotonicity(problem: &SphericalProblem, shrink_fractions: &[f64], k: usize) -> Result<MonotonicityReport> {
    if shrink_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::InvalidArgument("shrink fractions must lie in (0, 1]".into()));
    }
    let mut fractions = vec![1.0];
    let mut sorted = shrink_fractions.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    fractions.extend(sorted);
    let anchored = problem.geometry == Geometry::Cap && problem.lo == 0.0;
    let mid = 0.5 * (problem.lo + problem.hi);
    let len = problem.hi - problem.lo;
    let mut rows = Vec::with_capacity(fractions.len());
    for f in fractions {
        let (lo, hi) = if anchored { (0.0, f * problem.hi) } else { (mid - 0.5 * f * len, mid + 0.5 * f * len) };
        let sub = problem.on_interval(lo, hi)?;
        rows.push(MonotonicityRow { fraction: f, lo, hi, lambdas: eigensolve(&sub, k)?.lambdas });
    }
    let mut nondecreasing = true;
    let mut strict_first = true;
    for w in rows.windows(2) {
        let tol = 1e-10 * w[0].lambdas[k - 1].abs().max(1.0);
        nondecreasing &= w[0].lambdas.iter().zip(&w[1].lambdas).all(|(a, b)| *b >= *a - tol);
        if w[1].fraction < w[0].fraction {
            strict_first &= w[1].lambdas[0] > w[0].lambdas[0] + STRICT_MARGIN;
        } else {
            strict_first &= (w[1].lambdas[0] - w[0].lambdas[0]).abs() <= tol;
        }
    }
    Ok(MonotonicityReport { rows, nondecreasing, strict_first, passed: nondecreasing && strict_first })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftBoundReport {
    pub q0: f64,
    pub lambdas: Vec<f64>,
    /// Eigenvalues of `−Δ′` on the same domain and mesh.
    pub laplace_lambdas: Vec<f64>,
    /// `λ_k(𝓛) − q₀ − λ_k(−Δ′)` for each `k`.
    pub gaps: Vec<f64>,
    pub holds: bool,
    /// `q ≢ q₀` on the nodes and every gap is positive.
    pub strict: bool,
    pub constant_potential: bool,
}

/// `λ_k(𝓛) ≥ q₀ + λ_k(−Δ′)` on one discretization.
pub fn check_shift_bound(problem: &SphericalProblem, k: usize) -> Result<ShiftBoundReport> {
    let lambdas = eigensolve(problem, k)?.lambdas;
    // q ≡ 0 is not admissible as a problem potential, so shift a tiny constant back out
    let tiny = 1e-6;
    let laplace_lambdas: Vec<f64> =
        eigensolve(&problem.with_constant_potential(tiny)?, k)?.lambdas.iter().map(|l| l - tiny).collect();
    let gaps: Vec<f64> = lambdas.iter().zip(&laplace_lambdas).map(|(l, d)| l - problem.q0 - d).collect();
    let holds = gaps.iter().all(|g| *g >= -SHIFT_SLACK);
    let q0 = problem.q0;
    let constant_potential = problem
        .nodes()
        .iter()
        .all(|&t| (problem.potential.eval(problem.geometry, t) - q0).abs() <= 1e-12 * q0.max(1.0));
    let strict = !constant_potential && gaps.iter().all(|g| *g > 0.0);
    Ok(ShiftBoundReport { q0, lambdas, laplace_lambdas, gaps, holds, strict, constant_potential })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSphereReport {
    pub dim: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub target: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    /// Relative weighted `L²` distance of the first eigenfunction from the
    /// best multiple of `h`.
    pub eigenfunction_deviation: f64,
    pub lambda1_ok: bool,
    /// `λ₂ > 2n + 2 − 0.1`.
    pub lambda2_ok: bool,
    pub passed: bool,
}

/// `q = 1/h` on the half domain `{xₙ > 0}`: `λ₁ = 2n` with eigenfunction `h`.
pub fn verify_half_sphere(dim: usize) -> Result<HalfSphereReport> {
    let (problem, tolerance) = match dim {
        2 => (SphericalProblem::arc(0.0, PI, Potential::InverseHalfPlane, HALF_DOMAIN_NODES)?, 0.005),
        3 => (SphericalProblem::cap(0.0, 0.5 * PI, Potential::InverseHalfPlane, HALF_DOMAIN_NODES)?, 0.01),
        d => return Err(Error::InvalidDimension(d)),
    };
    let res = eigensolve(&problem, 2)?;
    let target = 2.0 * dim as f64;
    let (lambda1, lambda2) = (res.lambdas[0], res.lambdas[1]);
    let relative_error = (lambda1 - target).abs() / target;
    let w = problem.weights();
    let v = &res.eigenfunctions[0];
    let hv: Vec<f64> = res.nodes.iter().map(|&t| 0.5 * problem.geometry.height(t).powi(2)).collect();
    let (mut vh, mut hh, mut vv) = (0.0, 0.0, 0.0);
    for i in 0..v.len() {
        vh += w[i] * v[i] * hv[i];
        hh += w[i] * hv[i] * hv[i];
        vv += w[i] * v[i] * v[i];
    }
    let a = vh / hh;
    let dist: f64 = (0..v.len()).map(|i| w[i] * (v[i] - a * hv[i]).powi(2)).sum();
    let eigenfunction_deviation = (dist / vv).sqrt();
    let lambda1_ok = relative_error <= tolerance;
    let lambda2_ok = lambda2 > target + 2.0 - 0.1;
    Ok(HalfSphereReport {
        dim,
        lambda1,
        lambda2,
        target,
        relative_error,
        tolerance,
        eigenfunction_deviation,
        lambda1_ok,
        lambda2_ok,
        passed: lambda1_ok && lambda2_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedCapRow {
    pub delta: f64,
    pub lambda2: f64,
    pub above: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedCapReport {
    pub dim: usize,
    pub q0: f64,
    pub rows: Vec<PerturbedCapRow>,
    /// Largest `δ` with `λ₂ > 2n` for it and every smaller listed `δ`.
    pub threshold: Option<f64>,
}

/// `λ₂(𝓛)` with `q ≡ q₀` on the half domain enlarged by `δ`: the arc of
/// length `π + 2δ`, or the cap `φ < π/2 + δ`.
pub fn check_perturbed_cap(dim: usize, delta_list: &[f64], q0: f64) -> Result<PerturbedCapReport> {
    if delta_list.iter().any(|d| !(0.0..=0.3).contains(d)) {
        return Err(Error::InvalidArgument("perturbation angles must lie in [0, 0.3]".into()));
    }
    let mut deltas = delta_list.to_vec();
    deltas.sort_by(f64::total_cmp);
    let potential = Potential::Constant { value: q0 };
    let target = 2.0 * dim as f64;
    let mut rows = Vec::with_capacity(deltas.len());
    for delta in deltas {
        let problem = match dim {
            2 => SphericalProblem::arc(0.0, PI + 2.0 * delta, potential.clone(), HALF_DOMAIN_NODES)?,
            3 => SphericalProblem::cap(0.0, 0.5 * PI + delta, potential.clone(), HALF_DOMAIN_NODES)?,
            d => return Err(Error::InvalidDimension(d)),
        };
        let lambda2 = eigensolve(&problem, 2)?.lambdas[1];
        rows.push(PerturbedCapRow { delta, lambda2, above: lambda2 > target });
    }
    let threshold = rows.iter().take_while(|r| r.above).last().map(|r| r.delta);
    Ok(PerturbedCapReport { dim, q0, rows, threshold })
}
