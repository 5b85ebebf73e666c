use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use vecobstacle::epiperimetric::PerturbationMode;
use vecobstacle::spherical::{Geometry, Potential};
use vecobstacle_runner::config::{BlowupRequest, EigenRequest, EigenSuite, EpiRequest};
use vecobstacle_runner::manifest::StageStatus;
use vecobstacle_runner::{restrict, run_experiment, ExperimentConfig, ExperimentManifest, Stage};

#[derive(Parser)]
#[command(name = "vecobstacle", version, about = "Experiments on the vector-valued obstacle problem")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write the field.
    Solve(Common),
    /// Solve, extract the free boundary and run the audits.
    Audit(Common),
    /// Classify free boundary points by the Weiss functional.
    Classify(Common),
    /// Weiss functional scans at selected degenerate points.
    WeissScan(Common),
    /// Blow-up sequence, half-plane fit and decay fit.
    Blowup {
        #[command(flatten)]
        common: Common,
        /// Comma separated coordinates; the nearest `Γ₀` point is used.
        #[arg(long, value_delimiter = ',')]
        point: Vec<f64>,
        /// Comma separated decreasing radii.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Energy gain matrix on the unit disc.
    EpiTest {
        #[command(flatten)]
        common: Common,
        /// Comma separated modes: amplitude, rotation, second_component, angular_mode:K.
        #[arg(long, value_delimiter = ',')]
        modes: Vec<PerturbationMode>,
        #[arg(long, value_delimiter = ',')]
        deltas: Vec<f64>,
        #[arg(long)]
        radial_nodes: Option<usize>,
        #[arg(long)]
        angular_nodes: Option<usize>,
    },
    /// Eigenpairs of `−Δ′ + q` on an arc or a cap.
    Eigen {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        problem: Option<ProblemKind>,
        /// `inverse_half_plane`, `constant:V`, `height_squared:Q0`,
        /// `random:SEED:Q0`, or a JSON / CSV (angle,value) file.
        #[arg(long)]
        q: Option<String>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long, default_value_t = 400)]
        nodes: usize,
        /// Sub-domain fractions for the monotonicity check.
        #[arg(long, value_delimiter = ',')]
        shrink: Vec<f64>,
        #[arg(long)]
        shift_bound: bool,
    },
    /// Every stage the configuration requests.
    Run(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Arc,
    Cap,
}

fn load(common: &Common) -> anyhow::Result<Option<ExperimentConfig>> {
    common
        .config
        .as_ref()
        .map(|p| ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()
}

fn require(common: &Common) -> anyhow::Result<ExperimentConfig> {
    load(common)?.context("--config is required for this command")
}

fn parse_potential(text: &str) -> anyhow::Result<Potential> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.parse::<f64>().with_context(|| format!("invalid number {s:?} in {text:?}"));
    Ok(match parts.as_slice() {
        ["inverse_half_plane"] => Potential::InverseHalfPlane,
        ["constant", v] => Potential::Constant { value: num(v)? },
        ["height_squared", q0] => Potential::HeightSquared { q0: num(q0)? },
        ["random", seed, q0] => Potential::RandomSmooth { seed: seed.parse()?, q0: num(q0)?, amplitude: 1.0 },
        _ => read_potential(Path::new(text))?,
    })
}

fn read_potential(path: &Path) -> anyhow::Result<Potential> {
    if !path.exists() {
        bail!("unknown potential {:?}", path.display().to_string());
    }
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path)?;
        return Ok(serde_json::from_str(&text)?);
    }
    let mut reader = csv::Reader::from_path(path)?;
    let (mut angles, mut values) = (Vec::new(), Vec::new());
    for row in reader.deserialize() {
        let (a, v): (f64, f64) = row?;
        angles.push(a);
        values.push(v);
    }
    Ok(Potential::Tabulated { angles, values })
}

fn report(manifest: &ExperimentManifest, out: &Path) {
    for s in &manifest.body.stages {
        let status = match s.status {
            StageStatus::Completed => "completed",
            StageStatus::Failed => "FAILED",
            StageStatus::Skipped => "skipped",
        };
        match &s.error {
            Some(e) => println!("stage {:<9} {status}: {e}", s.stage.name()),
            None => println!("stage {:<9} {status}", s.stage.name()),
        }
    }
    for a in &manifest.body.assertions {
        let value = a.value.map(|v| format!(" value={v:.6e}")).unwrap_or_default();
        let threshold = a.threshold.map(|v| format!(" threshold={v:.6e}")).unwrap_or_default();
        println!("{} {}{value}{threshold}", if a.passed { "PASS" } else { "FAIL" }, a.name);
    }
    println!("manifest {} ({})", out.join("manifest.json").display(), if manifest.passed() { "passed" } else { "failed" });
}

fn build(command: Command) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    Ok(match command {
        Command::Solve(c) => (restrict(&require(&c)?, Stage::Solve), c.out),
        Command::Audit(c) => (restrict(&require(&c)?, Stage::Audits), c.out),
        Command::Classify(c) => (restrict(&require(&c)?, Stage::Classify), c.out),
        Command::WeissScan(c) => (restrict(&require(&c)?, Stage::Scans), c.out),
        Command::Blowup { common, point, radii } => {
            let mut config = restrict(&require(&common)?, Stage::Blowup);
            let req = config.analysis.blowup.get_or_insert_with(BlowupRequest::default);
            if !point.is_empty() {
                if point.len() > 3 {
                    bail!("--point takes at most 3 coordinates");
                }
                req.target = [0.0; 3];
                req.target[..point.len()].copy_from_slice(&point);
            }
            if !radii.is_empty() {
                req.radii = radii;
            }
            (config, common.out)
        }
        Command::Run(c) => (require(&c)?, c.out),
        Command::EpiTest { common, modes, deltas, radial_nodes, angular_nodes } => {
            let mut config = restrict(&load(&common)?.unwrap_or_else(|| ExperimentConfig::new("epi-test")), Stage::Epi);
            let epi = config.analysis.epi.get_or_insert_with(EpiRequest::default);
            if !modes.is_empty() {
                epi.modes = modes;
            }
            if !deltas.is_empty() {
                epi.deltas = deltas;
            }
            if let Some(n) = radial_nodes {
                epi.radial_nodes = n;
            }
            if let Some(n) = angular_nodes {
                epi.angular_nodes = n;
            }
            (config, common.out)
        }
        Command::Eigen { common, problem, q, k, lo, hi, nodes, shrink, shift_bound } => {
            let mut config = restrict(&load(&common)?.unwrap_or_else(|| ExperimentConfig::new("eigen")), Stage::Eigen);
            if let Some(kind) = problem {
                let (geometry, top) = match kind {
                    ProblemKind::Arc => (Geometry::Arc, std::f64::consts::PI),
                    ProblemKind::Cap => (Geometry::Cap, 0.5 * std::f64::consts::PI),
                };
                let potential = parse_potential(q.as_deref().unwrap_or("inverse_half_plane"))?;
                let mut req = EigenRequest::new(geometry, lo.unwrap_or(0.0), hi.unwrap_or(top), potential);
                req.k = k;
                req.nodes = nodes;
                req.shrink_fractions = shrink;
                req.shift_bound = shift_bound;
                config.analysis.eigen.get_or_insert_with(EigenSuite::default).problems.push(req);
            } else if q.is_some() {
                bail!("--q needs --problem");
            }
            (config, common.out)
        }
    })
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let (config, out) = build(cli.command)?;
    config.validate()?;
    let manifest = run_experiment(&config, &out)?;
    report(&manifest, &out);
    Ok(if manifest.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
