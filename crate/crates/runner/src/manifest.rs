use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, RunError};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Solve,
    Extract,
    Audits,
    Scans,
    Blowup,
    Classify,
    Epi,
    Eigen,
}

impl Stage {
    pub const ALL: [Stage; 8] =
        [Stage::Solve, Stage::Extract, Stage::Audits, Stage::Scans, Stage::Blowup, Stage::Classify, Stage::Epi, Stage::Eigen];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Solve => "solve",
            Stage::Extract => "extract",
            Stage::Audits => "audits",
            Stage::Scans => "scans",
            Stage::Blowup => "blowup",
            Stage::Classify => "classify",
            Stage::Epi => "epi",
            Stage::Eigen => "eigen",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// An output file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionRecord {
    pub name: String,
    pub stage: Stage,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Versions {
    pub runner: String,
    pub core: String,
}

impl Default for Versions {
    fn default() -> Self {
        Self { runner: env!("CARGO_PKG_VERSION").into(), core: vecobstacle::VERSION.into() }
    }
}

/// Deterministic part of the manifest, covered by the checksum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestBody {
    pub name: String,
    pub config_sha256: String,
    pub versions: Versions,
    pub stages: Vec<StageRecord>,
    pub artifacts: Vec<ArtifactRecord>,
    pub assertions: Vec<AssertionRecord>,
    /// All requested stages have been attempted.
    pub complete: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub started_unix_seconds: u64,
    pub stage_seconds: Vec<(Stage, f64)>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    #[serde(flatten)]
    pub body: ManifestBody,
    /// SHA-256 of the JSON serialisation of `body`.
    pub checksum: String,
    pub timings: Timings,
}

impl ManifestBody {
    pub fn new(name: &str, config_sha256: String) -> Self {
        Self {
            name: name.to_owned(),
            config_sha256,
            versions: Versions::default(),
            stages: Vec::new(),
            artifacts: Vec::new(),
            assertions: Vec::new(),
            complete: false,
            passed: false,
        }
    }

    pub fn stage_status(&self, stage: Stage) -> Option<StageStatus> {
        self.stages.iter().find(|s| s.stage == stage).map(|s| s.status)
    }

    /// Every stage completed and every assertion passed.
    pub fn all_passed(&self) -> bool {
        self.stages.iter().all(|s| s.status == StageStatus::Completed) && self.assertions.iter().all(|a| a.passed)
    }
}

impl ExperimentManifest {
    pub fn seal(mut body: ManifestBody, timings: Timings) -> Self {
        body.passed = body.complete && body.all_passed();
        let checksum = sha256_hex(&serde_json::to_vec(&body).expect("manifest serialises"));
        Self { body, checksum, timings }
    }

    pub fn passed(&self) -> bool {
        self.body.passed
    }

    /// Writes `manifest.json` through a temporary file and a rename.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&tmp, text).map_err(|e| RunError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| RunError::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| RunError::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Recomputes the checksum of the body.
    pub fn verify_checksum(&self) -> bool {
        sha256_hex(&serde_json::to_vec(&self.body).expect("manifest serialises")) == self.checksum
    }
}
