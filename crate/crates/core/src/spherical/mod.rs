//! Sturm–Liouville eigenproblems `−Δ′v + qv = λv` on arcs of the unit circle
//! and axisymmetric caps of `S²`, with Dirichlet conditions.

mod checks;
mod problem;
mod tridiag;

pub use checks::{
    check_domain_monotonicity, check_perturbed_cap, check_shift_bound, verify_half_sphere, HalfSphereReport,
    MonotonicityReport, MonotonicityRow, PerturbedCapReport, PerturbedCapRow, ShiftBoundReport, HALF_DOMAIN_NODES,
    SHIFT_SLACK, STRICT_MARGIN,
};
pub use problem::{eigensolve, EigenResult, Geometry, Potential, SphericalProblem, MAX_EIGENPAIRS, MIN_NODES};
pub use tridiag::{eigenvalue, eigenvector, sturm_count};
