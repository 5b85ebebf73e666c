use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::EnergyGraph;
use crate::fields::VectorField;
use crate::{Error, Result};

/// Iterations between the two energies compared by the stopping rule.
pub const ENERGY_WINDOW: usize = 100;
const MIN_CHUNK: usize = 4096;

/// Group soft-thresholding: the proximal map of `z ↦ 2|z|` with step `tau`,
/// `(1 − 2τ/|z|)₊ z`.
pub fn prox_shrink(z: &[f64], tau: f64) -> Vec<f64> {
    let mut out = z.to_vec();
    shrink_in_place(&mut out, tau);
    out
}

pub(crate) fn shrink_in_place(z: &mut [f64], tau: f64) {
    let n = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let factor = if n > 2.0 * tau { 1.0 - 2.0 * tau / n } else { 0.0 };
    z.iter_mut().for_each(|x| *x *= factor);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepRule {
    /// Constant step; `None` uses `1/L` with `L` the graph bound.
    Fixed { step: Option<f64> },
    /// Start from `1/L₀` and halve until the quadratic upper bound holds.
    /// `None` uses the graph bound, for which the first trial always succeeds.
    Backtracking { initial_lipschitz: Option<f64> },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking { initial_lipschitz: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    pub step_rule: StepRule,
    /// Accelerated (FISTA with function-value restart) when set.
    pub momentum: bool,
    pub tol_rel_energy: f64,
    pub max_iter: usize,
    /// Initial iterate; boundary values are overwritten by the data.
    pub seed_field: Option<VectorField>,
    /// Keep every `history_stride`-th energy in the report.
    pub history_stride: usize,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            step_rule: StepRule::default(),
            momentum: true,
            tol_rel_energy: 1e-10,
            max_iter: 200_000,
            seed_field: None,
            history_stride: 10,
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_rel_energy > 0.0) {
            return Err(Error::InvalidArgument("tol_rel_energy must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.history_stride == 0 {
            return Err(Error::InvalidArgument("history_stride must be at least 1".into()));
        }
        match self.step_rule {
            StepRule::Fixed { step: Some(t) } if !(t > 0.0 && t.is_finite()) => {
                Err(Error::InvalidArgument(format!("invalid step {t}")))
            }
            StepRule::Backtracking { initial_lipschitz: Some(l) } if !(l > 0.0 && l.is_finite()) => {
                Err(Error::InvalidArgument(format!("invalid initial Lipschitz estimate {l}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_energy: f64,
    /// `(iteration, energy)` pairs of accepted iterates, accumulated from the
    /// per-step energy changes.
    pub energy_history_decimated: Vec<(usize, f64)>,
    /// Sup norm over nodes of the prox-gradient map `(y − x⁺)/t`.
    pub grad_map_norm: f64,
    pub converged: bool,
    pub final_step: f64,
    pub restarts: usize,
}

/// Proximal gradient on `graph` from `initial` (interleaved, `m` components).
/// Fixed nodes keep their initial values. Returns the last accepted iterate,
/// which has the lowest energy seen; `report.converged` tells whether the
/// stopping rule was met.
pub fn solve_graph(graph: &EnergyGraph, m: usize, initial: Vec<f64>, params: &SolveParams) -> Result<(Vec<f64>, SolveReport)> {
    params.validate()?;
    let n = graph.node_count();
    if initial.len() != n * m || m == 0 {
        return Err(Error::InvalidArgument("initial iterate has the wrong shape".into()));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEncountered { iteration: 0 });
    }
    let bound = graph.lipschitz_bound().max(f64::MIN_POSITIVE);
    let (mut t, backtrack) = match params.step_rule {
        StepRule::Fixed { step } => (step.unwrap_or(1.0 / bound), false),
        StepRule::Backtracking { initial_lipschitz } => (1.0 / initial_lipschitz.unwrap_or(bound), true),
    };

    let mut x = initial;
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut xn = x.clone();
    let mut diff = vec![0.0; n * m];
    let mut y_is_x = true;
    let mut theta = 1.0f64;
    let mut e_x = graph.energy(&x, m);
    let mut window = std::collections::VecDeque::with_capacity(ENERGY_WINDOW + 1);
    window.push_back(e_x);
    let mut history = vec![(0usize, e_x)];
    let mut grad_map = f64::INFINITY;
    let mut converged = false;
    let mut restarts = 0usize;
    let mut iterations = 0usize;

    while iterations < params.max_iter {
        iterations += 1;
        // prox step from y, with backtracking where requested
        loop {
            grad_map = prox_step(graph, m, &y, &mut xn, t);
            if !backtrack || t * bound <= 1.0 {
                break;
            }
            diff.par_iter_mut().zip(&xn).zip(&y).for_each(|((d, a), b)| *d = a - b);
            let lhs = graph.dirichlet(&diff, m);
            let rhs: f64 = (0..n)
                .map(|i| graph.mass()[i] * diff[i * m..(i + 1) * m].iter().map(|d| d * d).sum::<f64>())
                .sum::<f64>()
                / (2.0 * t);
            if lhs <= rhs {
                break;
            }
            t *= 0.5;
        }
        let change = graph.energy_change(&x, &xn, m);
        if !change.is_finite() {
            return Err(Error::NonFiniteEncountered { iteration: iterations });
        }
        if change > 0.0 {
            if !y_is_x {
                // momentum overshoot: restart from the current iterate
                restarts += 1;
                theta = 1.0;
                y.copy_from_slice(&x);
                y_is_x = true;
                continue;
            }
            // a plain step that raises the energy only happens at round-off level
            converged = grad_map < params.tol_rel_energy.sqrt();
            break;
        }
        let e_n = e_x + change;
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut x, &mut xn);
        e_x = e_n;
        if params.momentum {
            let theta_n = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = (theta - 1.0) / theta_n;
            theta = theta_n;
            y.par_iter_mut()
                .zip(&x)
                .zip(&x_prev)
                .with_min_len(MIN_CHUNK)
                .for_each(|((yv, a), b)| *yv = a + beta * (a - b));
            y_is_x = beta == 0.0;
        } else {
            y.copy_from_slice(&x);
        }
        if iterations % params.history_stride == 0 {
            history.push((iterations, e_x));
        }
        window.push_back(e_x);
        if window.len() > ENERGY_WINDOW + 1 {
            window.pop_front();
        }
        if grad_map == 0.0 {
            converged = true;
            break;
        }
        if window.len() == ENERGY_WINDOW + 1 {
            let old = window[0];
            let rel = (old - e_x).abs() / e_x.abs().max(f64::MIN_POSITIVE);
            if rel < params.tol_rel_energy && grad_map < params.tol_rel_energy.sqrt() {
                converged = true;
                break;
            }
        }
    }
    if history.last().map(|h| h.0) != Some(iterations) {
        history.push((iterations, e_x));
    }
    let report = SolveReport {
        iterations,
        final_energy: graph.energy(&x, m),
        energy_history_decimated: history,
        grad_map_norm: grad_map,
        converged,
        final_step: t,
        restarts,
    };
    Ok((x, report))
}

/// `x⁺ = prox(y − t A⁻¹∇D(y))` on free nodes; returns the sup norm of `(y − x⁺)/t`.
fn prox_step(graph: &EnergyGraph, m: usize, y: &[f64], out: &mut [f64], t: f64) -> f64 {
    out.par_chunks_mut(m)
        .enumerate()
        .with_min_len(MIN_CHUNK / m.max(1))
        .map(|(i, o)| {
            let yi = &y[i * m..(i + 1) * m];
            if graph.is_fixed(i) {
                o.copy_from_slice(yi);
                return 0.0;
            }
            graph.dirichlet_gradient_at(y, m, i, o);
            let scale = t / graph.mass()[i];
            for c in 0..m {
                o[c] = yi[c] - scale * o[c];
            }
            shrink_in_place(o, t);
            let mut g = 0.0;
            for c in 0..m {
                let d = (yi[c] - o[c]) / t;
                g += d * d;
            }
            g.sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrink_examples() {
        let z = prox_shrink(&[3.0, 4.0], 1.0);
        assert!((z[0] - 1.8).abs() < 1e-15 && (z[1] - 2.4).abs() < 1e-15);
        assert_eq!(prox_shrink(&[0.5, 0.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(prox_shrink(&[0.0, 0.0], 0.3), vec![0.0, 0.0]);
        assert_eq!(prox_shrink(&[2.0], 1.0), vec![0.0]);
    }

    #[test]
    fn params_validation() {
        let mut p = SolveParams::default();
        assert!(p.validate().is_ok());
        p.tol_rel_energy = 0.0;
        assert!(p.validate().is_err());
        p = SolveParams { max_iter: 0, ..SolveParams::default() };
        assert!(p.validate().is_err());
        p = SolveParams { step_rule: StepRule::Fixed { step: Some(-1.0) }, ..SolveParams::default() };
        assert!(p.validate().is_err());
    }
}
