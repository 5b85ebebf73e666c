//! Numerical laboratory for the vector-valued obstacle system
//! `Δu = u/|u| χ{|u|>0}`.
//!
//! Minimisers of `E(u) = ∫ |∇u|² + 2|u|` are computed by proximal gradient
//! descent on node-centered box grids. Around them sit the quantitative
//! tools used to study the free boundary: the Weiss functional and its
//! right limit, non-degeneracy and growth audits, blow-up rescalings with
//! half-plane fits, an empirical epiperimetric measurement on the unit disc
//! and a Sturm–Liouville eigensolver for arcs and axisymmetric caps.

pub mod blowup;
pub mod energy;
pub mod epiperimetric;
mod error;
pub mod fields;
pub mod freeboundary;
pub mod solver;
pub mod spherical;
pub mod stats;
pub mod sum;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use fields::{Ball, Grid, HalfPlaneSolution, Point, VectorField};
