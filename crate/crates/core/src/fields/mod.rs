//! Grids, vector fields, discrete differential operators and interpolation.

mod cells;
mod field;
mod grid;
mod io;
mod ops;
pub mod quadrature;
mod trace;

pub use cells::{cell_gradient, cell_value, NodalRule};
pub use field::{eval_half_plane, HalfPlaneSolution, VectorField};
pub use grid::{make_grid, Ball, Grid, Point};
pub use io::{read_field, write_field, MAGIC};
pub use ops::{gradient, laplacian, Gradient};
pub use trace::{default_angular_samples, trace_sphere, SphereTrace, TraceSample};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
