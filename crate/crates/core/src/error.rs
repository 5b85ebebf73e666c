use thiserror::Error;

use crate::epiperimetric::EpiOutcome;
use crate::solver::Solution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not supported (expected 1, 2 or 3)")]
    InvalidDimension(usize),
    #[error("degenerate extent on axis {axis}: lo = {lo} must be < hi = {hi}")]
    DegenerateExtent { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis} has {count} nodes, at least 3 are required")]
    ResolutionTooSmall { axis: usize, count: usize },
    #[error("ball of radius {radius} around {center:?} is not contained in the grid")]
    BallNotContained { center: Vec<f64>, radius: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        best: Box<Solution>,
    },
    #[error("M minimization did not converge after {iterations} iterations")]
    EpiNotConverged {
        iterations: usize,
        best: Box<EpiOutcome>,
    },
    #[error("non-finite value encountered at iteration {iteration}")]
    NonFiniteEncountered { iteration: usize },
    #[error("instance too large for the oracle: {0}")]
    InstanceTooLarge(String),
    #[error("oracle did not settle within {sweeps} sweeps")]
    OracleNotConverged { sweeps: usize },
    #[error("Γ₀ is empty")]
    EmptyGamma0,
    #[error("point {0:?} is not in the closure of the support")]
    NotInSupportClosure(Vec<f64>),
    #[error("point {0:?} is not classified regular")]
    NotRegular(Vec<f64>),
    #[error("found {found} free boundary samples, need at least {needed}")]
    InsufficientBoundarySamples { found: usize, needed: usize },
    #[error("field is degenerate (L² norm {0:e})")]
    DegenerateField(f64),
    #[error("radius {radius} is below the resolution limit {min}")]
    RadiusBelowResolution { radius: f64, min: f64 },
    #[error("W(r) is constant over the scan: exact homogeneity, no finite decay rate")]
    ExactHomogeneity,
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("potential is singular at interior node {node}")]
    PotentialSingular { node: usize },
    #[error("eigensolver did not converge: {0}")]
    EigenNotConverged(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
