use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vecobstacle::epiperimetric::{PerturbationMode, DEFAULT_ANGULAR_NODES, DEFAULT_RADIAL_NODES};
use vecobstacle::solver::{BoundaryGenerator, SolveParams, StepRule};
use vecobstacle::spherical::{Geometry, Potential};
use vecobstacle::{Grid, Point};

use crate::error::{Result, RunError};

/// Box grid `extents × resolution`; single entries broadcast to every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    #[serde(default = "default_extents")]
    pub extents: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
}

fn default_extents() -> Vec<(f64, f64)> {
    vec![(-1.0, 1.0)]
}

impl GridSpec {
    pub fn square(dim: usize, count: usize) -> Self {
        Self { dim, extents: default_extents(), resolution: vec![count] }
    }

    pub fn build(&self) -> Result<Grid> {
        Ok(Grid::new(self.dim, &self.extents, &self.resolution)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub step_rule: StepRule,
    pub momentum: bool,
    pub tol_rel_energy: f64,
    pub max_iter: usize,
    pub history_stride: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let p = SolveParams::default();
        Self {
            step_rule: p.step_rule,
            momentum: p.momentum,
            tol_rel_energy: p.tol_rel_energy,
            max_iter: p.max_iter,
            history_stride: p.history_stride,
        }
    }
}

impl SolverSpec {
    pub fn params(&self) -> SolveParams {
        SolveParams {
            step_rule: self.step_rule,
            momentum: self.momentum,
            tol_rel_energy: self.tol_rel_energy,
            max_iter: self.max_iter,
            seed_field: None,
            history_stride: self.history_stride,
        }
    }
}

/// Support and gradient thresholds for free boundary extraction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractRequest {
    pub delta: Option<f64>,
    pub eps_grad: Option<f64>,
}

/// Geometric radii `min·ratioᵏ` up to `max`; a `min` of `None` means `5h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusRange {
    #[serde(default)]
    pub min: Option<f64>,
    pub max: f64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

fn default_ratio() -> f64 {
    1.25
}

impl RadiusRange {
    pub fn new(min: Option<f64>, max: f64, ratio: f64) -> Self {
        Self { min, max, ratio }
    }

    pub fn radii(&self, h: f64) -> Result<Vec<f64>> {
        let min = self.min.unwrap_or(5.0 * h);
        if !(min > 0.0 && self.max >= min && self.ratio > 1.0) {
            return Err(RunError::Schema(format!(
                "radius range needs 0 < min ≤ max and ratio > 1, got min {min}, max {}, ratio {}",
                self.max, self.ratio
            )));
        }
        let mut out = Vec::new();
        let mut r = min;
        while r <= self.max * (1.0 + 1e-12) {
            out.push(r);
            r *= self.ratio;
        }
        Ok(out)
    }
}

/// Which `Γ₀` points an analysis looks at. With `targets`, the `Γ₀` point
/// nearest each target; otherwise `count` points spread over the candidates
/// whose ball of the largest radius fits in the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointSelection {
    pub targets: Option<Vec<Point>>,
    pub count: usize,
}

impl Default for PointSelection {
    fn default() -> Self {
        Self { targets: None, count: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditRequest {
    /// Nondegeneracy radii; centers are all `Γ` points whose balls fit.
    pub radii: RadiusRange,
    pub min_nondegeneracy_ratio: f64,
    pub min_subharmonic_a: f64,
    pub min_laplacian_excess: f64,
    pub growth: bool,
}

impl Default for AuditRequest {
    fn default() -> Self {
        Self {
            radii: RadiusRange::new(None, 0.3, 1.4),
            min_nondegeneracy_ratio: 0.9,
            min_subharmonic_a: -1e-3,
            min_laplacian_excess: -1e-2,
            growth: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanRequest {
    pub points: PointSelection,
    pub radii: RadiusRange,
    pub max_monotone_violation: f64,
}

impl Default for ScanRequest {
    fn default() -> Self {
        Self { points: PointSelection::default(), radii: RadiusRange::new(None, 0.4, 1.25), max_monotone_violation: 2e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupRequest {
    /// The `Γ₀` point nearest this target.
    pub target: Point,
    /// Decreasing rescaling radii.
    pub radii: Vec<f64>,
    /// Nodes per axis of the reference grid; `None` for the default.
    pub reference_count: Option<usize>,
    pub require_cauchy: bool,
    pub max_fit_distance: f64,
    /// Weiss scan for the decay fit, at the `Γ₀` point nearest `decay_target`.
    pub decay: Option<DecayRequest>,
}

impl Default for BlowupRequest {
    fn default() -> Self {
        Self {
            target: [0.0; 3],
            radii: (0..7).map(|k| 0.4 * 0.5f64.sqrt().powi(k)).collect(),
            reference_count: None,
            require_cauchy: true,
            max_fit_distance: 0.1,
            decay: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayRequest {
    pub target: Point,
    pub radii: RadiusRange,
    pub min_fit_quality: f64,
}

impl Default for DecayRequest {
    fn default() -> Self {
        Self { target: [-0.4, 0.0, 0.0], radii: RadiusRange::new(Some(0.1), 0.5, 1.2), min_fit_quality: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyRequest {
    /// `None` for `5h`.
    pub r_min: Option<f64>,
    /// `None` for the default `0.1 α_n`.
    pub margin: Option<f64>,
    pub min_regular: usize,
}

impl Default for ClassifyRequest {
    fn default() -> Self {
        Self { r_min: None, margin: None, min_regular: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpiRequest {
    pub modes: Vec<PerturbationMode>,
    pub deltas: Vec<f64>,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub min_kappa: f64,
    /// Cells with a smaller denominator are exempt from the `κ` floor.
    pub denominator_floor: f64,
}

impl Default for EpiRequest {
    fn default() -> Self {
        Self {
            modes: vec![PerturbationMode::Amplitude, PerturbationMode::SecondComponent, PerturbationMode::AngularMode(2)],
            deltas: vec![0.02, 0.05, 0.1],
            radial_nodes: DEFAULT_RADIAL_NODES,
            angular_nodes: DEFAULT_ANGULAR_NODES,
            min_kappa: 0.01,
            denominator_floor: 1e-6,
        }
    }
}

/// An eigenproblem and the checks to run on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenRequest {
    pub geometry: Geometry,
    pub lo: f64,
    pub hi: f64,
    pub potential: Potential,
    /// `None` for the infimum of the potential.
    #[serde(default)]
    pub q0: Option<f64>,
    #[serde(default = "default_eigen_nodes")]
    pub nodes: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Sub-domain fractions for the monotonicity check.
    #[serde(default)]
    pub shrink_fractions: Vec<f64>,
    #[serde(default)]
    pub shift_bound: bool,
}

fn default_eigen_nodes() -> usize {
    400
}

fn default_k() -> usize {
    3
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSuite {
    pub problems: Vec<EigenRequest>,
    /// Dimensions for the `q = 1/h` half-domain check.
    pub half_sphere: Vec<usize>,
    pub perturbed: Vec<PerturbedRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbedRequest {
    pub dim: usize,
    pub deltas: Vec<f64>,
    pub q0: f64,
    /// Assert `λ₂ > 2n` at every listed angle up to this one.
    #[serde(default)]
    pub assert_up_to: Option<f64>,
}

/// When set, the sup distance to the exact half-plane solution must be at most
/// `factor·h²`. Only meaningful for half-plane boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceCheck {
    #[serde(default = "default_reference_factor")]
    pub factor: f64,
}

fn default_reference_factor() -> f64 {
    10.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisRequests {
    pub reference: Option<ReferenceCheck>,
    pub extract: Option<ExtractRequest>,
    pub audits: Option<AuditRequest>,
    pub weiss_scan: Option<ScanRequest>,
    pub blowup: Option<BlowupRequest>,
    pub classify: Option<ClassifyRequest>,
    pub epi: Option<EpiRequest>,
    pub eigen: Option<EigenSuite>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Filled into randomized boundary generators that omit their own seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub boundary: Option<BoundaryGenerator>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub analysis: AnalysisRequests,
}

fn default_m() -> usize {
    2
}

const SEEDED_KINDS: [&str; 3] = ["random", "angular_mode", "twist"];

impl ExperimentConfig {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            seed: None,
            grid: None,
            m: default_m(),
            boundary: None,
            solver: SolverSpec::default(),
            analysis: AnalysisRequests::default(),
        }
    }

    /// Parses JSON, filling the top-level seed into randomized generators
    /// without one, and validates the result.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut raw: Value = serde_json::from_str(text).map_err(|e| RunError::Schema(e.to_string()))?;
        let seed = raw.get("seed").cloned();
        if let Some(boundary) = raw.get_mut("boundary").and_then(Value::as_object_mut) {
            let kind = boundary.get("kind").and_then(Value::as_str).unwrap_or_default().to_owned();
            if SEEDED_KINDS.contains(&kind.as_str()) && !boundary.contains_key("seed") {
                match seed {
                    Some(s) if !s.is_null() => {
                        boundary.insert("seed".into(), s);
                    }
                    _ => {
                        return Err(RunError::Schema(format!(
                            "boundary generator `{kind}` is randomized and needs a seed"
                        )))
                    }
                }
            }
        }
        let config: Self = serde_json::from_value(raw).map_err(|e| RunError::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(RunError::Schema(format!("invalid experiment name {:?}", self.name)));
        }
        if let Some(b) = &self.boundary {
            if b.is_randomized() && self.seed.is_none() {
                return Err(RunError::Schema("randomized boundary generators need a top-level seed".into()));
            }
        }
        if self.m == 0 {
            return Err(RunError::Schema("m must be at least 1".into()));
        }
        self.solver.params().validate()?;
        let a = &self.analysis;
        let needs_field = a.reference.is_some()
            || a.extract.is_some()
            || a.audits.is_some()
            || a.weiss_scan.is_some()
            || a.blowup.is_some()
            || a.classify.is_some();
        if needs_field && (self.grid.is_none() || self.boundary.is_none()) {
            return Err(RunError::Schema("field analyses need a grid and a boundary generator".into()));
        }
        if let Some(g) = &self.grid {
            g.build()?;
        }
        if let Some(b) = &a.blowup {
            if b.radii.len() < 2 || b.radii.windows(2).any(|w| w[1] >= w[0]) {
                return Err(RunError::Schema("blow-up radii must be at least two, strictly decreasing".into()));
            }
        }
        if let Some(e) = &a.epi {
            if e.modes.is_empty() || e.deltas.is_empty() {
                return Err(RunError::Schema("the epiperimetric matrix needs modes and deltas".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        crate::manifest::sha256_hex(&serde_json::to_vec(self).expect("config serialises"))
    }
}

impl EigenRequest {
    pub fn new(geometry: Geometry, lo: f64, hi: f64, potential: Potential) -> Self {
        Self {
            geometry,
            lo,
            hi,
            potential,
            q0: None,
            nodes: default_eigen_nodes(),
            k: default_k(),
            shrink_fractions: Vec::new(),
            shift_bound: false,
        }
    }
}
