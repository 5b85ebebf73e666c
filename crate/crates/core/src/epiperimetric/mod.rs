//! Empirical epiperimetric measurement on the unit disc: 2-homogeneous
//! competitors `c = |x|² g(x/|x|)` near ℍ, the minimizer `v` of `M` with
//! `v = c` on `∂B₁`, and the achieved `κ`.

mod datum;
mod polar;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use datum::{homogeneous_extension, perturbation_family, HomogeneousDatum, PerturbationMode, PolarField, FAMILY_COMPONENTS};
pub use polar::{PolarGrid, DEFAULT_ANGULAR_NODES, DEFAULT_RADIAL_NODES, MIN_ANGULAR_NODES, MIN_RADIAL_NODES};

use crate::solver::{solve_graph, SolveParams, SolveReport};
use crate::{Error, Result};

/// Denominators at or below this are reported as undefined `κ`.
pub const DENOMINATOR_FLOOR: f64 = 1e-10;

/// Position of `M(c)` relative to the discrete `α₂/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Above,
    /// `|M(c) − α₂/2| ≤ DENOMINATOR_FLOOR`, e.g. `c ∈ ℍ`.
    HalfPlane,
    /// `M(c) < α₂/2`; the inequality carries no information here.
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpiResult {
    pub m_c: f64,
    pub m_v: f64,
    /// Discrete `M` of the canonical half-plane solution on the same grid.
    pub alpha_half: f64,
    /// `(M_c − M_v) / (M_c − α₂/2)`, when the denominator exceeds the floor.
    pub kappa_achieved: Option<f64>,
    pub denominator: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpiOutcome {
    pub result: EpiResult,
    pub v: PolarField,
    pub report: SolveReport,
}

/// Discrete `M(h)` for `h = ½ max(x₂, 0)² e¹`.
pub fn discrete_alpha_half(grid: &PolarGrid) -> Result<f64> {
    let h = perturbation_family(PerturbationMode::Amplitude, 0.0, grid.n_theta())?;
    let c = homogeneous_extension(grid, &h)?;
    Ok(grid.functional_m(&c.values, c.m))
}

/// Minimizes the discrete `M` over fields equal to `c` on the outer ring,
/// starting from `c`. With the boundary values fixed this is the volume
/// energy minimization.
pub fn minimize_m(grid: &PolarGrid, datum: &HomogeneousDatum, params: &SolveParams) -> Result<EpiOutcome> {
    let c = homogeneous_extension(grid, datum)?;
    let m = c.m;
    let m_c = grid.functional_m(&c.values, m);
    let alpha_half = discrete_alpha_half(grid)?;
    let (mut values, report) = solve_graph(grid.graph(), m, c.values.clone(), params)?;
    let mut m_v = grid.functional_m(&values, m);
    if m_v > m_c {
        values.clone_from(&c.values);
        m_v = m_c;
    }
    let denominator = m_c - alpha_half;
    let regime = if denominator > DENOMINATOR_FLOOR {
        Regime::Above
    } else if denominator < -DENOMINATOR_FLOOR {
        Regime::Below
    } else {
        Regime::HalfPlane
    };
    let kappa_achieved = (regime == Regime::Above).then(|| (m_c - m_v) / denominator);
    let outcome = EpiOutcome {
        result: EpiResult { m_c, m_v, alpha_half, kappa_achieved, denominator, regime },
        v: PolarField { m, values },
        report,
    };
    if !outcome.report.converged {
        return Err(Error::EpiNotConverged { iterations: outcome.report.iterations, best: Box::new(outcome) });
    }
    Ok(outcome)
}

/// One `(mode, δ)` entry of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpiCell {
    pub mode: PerturbationMode,
    pub delta: f64,
    pub delta_to_h: f64,
    pub result: EpiResult,
}

/// Runs every `(mode, δ)` pair, in parallel; rows are mode-major.
pub fn epi_matrix(grid: &PolarGrid, modes: &[PerturbationMode], deltas: &[f64], params: &SolveParams) -> Result<Vec<EpiCell>> {
    let pairs: Vec<(PerturbationMode, f64)> = modes.iter().flat_map(|&m| deltas.iter().map(move |&d| (m, d))).collect();
    pairs
        .par_iter()
        .map(|&(mode, delta)| {
            let datum = perturbation_family(mode, delta, grid.n_theta())?;
            let outcome = minimize_m(grid, &datum, params)?;
            Ok(EpiCell { mode, delta, delta_to_h: datum.delta_to_h, result: outcome.result })
        })
        .collect()
}

/// Smallest defined `κ` over the matrix.
pub fn min_kappa(cells: &[EpiCell]) -> Option<f64> {
    cells.iter().filter_map(|c| c.result.kappa_achieved).reduce(f64::min)
}
