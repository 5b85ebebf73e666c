//! Minimisation of the discrete energy `Σ |∇u|² + 2|u|` with Dirichlet data.

mod boundary;
mod graph;
mod oracle;
mod prox;
mod residual;

pub use boundary::{BoundaryData, BoundaryGenerator};
pub use graph::EnergyGraph;
pub use oracle::{oracle_solve, ORACLE_MAX_COMPONENTS, ORACLE_MAX_NODES_PER_AXIS};
pub use prox::{prox_shrink, solve_graph, SolveParams, SolveReport, StepRule, ENERGY_WINDOW};
pub use residual::{default_delta, gradient_bound_ratio, residual, ResidualReport, FREE_BOUNDARY_BAND};
pub(crate) use residual::dilate;

use crate::fields::{Grid, VectorField};
use crate::{Error, Result};

/// A solved field with its iteration report.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub field: VectorField,
    pub report: SolveReport,
}

/// Minimises the discrete energy on `grid` with boundary values fixed.
///
/// Fails with `NotConverged` (carrying the best iterate) when the stopping
/// rule is not met within `max_iter` iterations.
pub fn solve(grid: &Grid, m: usize, boundary: &BoundaryData, params: &SolveParams) -> Result<Solution> {
    if boundary.components() != m || boundary.nodes().len() != grid.boundary_nodes().len() {
        return Err(Error::InvalidArgument("boundary data does not match the grid".into()));
    }
    let mut start = match &params.seed_field {
        Some(seed) => {
            if seed.grid() != grid || seed.components() != m {
                return Err(Error::InvalidArgument("seed field does not match the grid".into()));
            }
            seed.clone()
        }
        None => VectorField::zeros(grid.clone(), m),
    };
    boundary.apply(&mut start)?;
    let graph = EnergyGraph::cartesian(grid);
    let (values, report) = solve_graph(&graph, m, start.into_values(), params)?;
    let field = VectorField::from_values(grid.clone(), m, values)?;
    let solution = Solution { field, report };
    if solution.report.converged {
        Ok(solution)
    } else {
        Err(Error::NotConverged { iterations: solution.report.iterations, best: Box::new(solution) })
    }
}
