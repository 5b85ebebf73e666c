use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;
use vecobstacle::blowup::{blowup_sequence, default_reference_grid, fit_decay, fit_half_plane};
use vecobstacle::energy::{energy_e, weiss_scan};
use vecobstacle::epiperimetric::{epi_matrix, min_kappa, PolarGrid};
use vecobstacle::fields::eval_half_plane;
use vecobstacle::freeboundary::{
    audit_nondegeneracy, audit_quadratic_growth, audit_subharmonicity, classify_point, classify_points, default_delta,
    default_eps_grad, extract_free_boundary, in_support_closure, BoundaryPoint, NonDegeneracyReport, FreeBoundarySet, Verdict,
};
use vecobstacle::solver::{self, residual, solve, BoundaryData};
use vecobstacle::spherical::{
    check_domain_monotonicity, check_perturbed_cap, check_shift_bound, eigensolve, verify_half_sphere, SphericalProblem,
};
use vecobstacle::{Ball, Grid, Point, VectorField};

use crate::config::{ExperimentConfig, PointSelection};
use crate::error::{Result, RunError};
use crate::manifest::{
    sha256_hex, ArtifactRecord, AssertionRecord, ExperimentManifest, ManifestBody, Stage, StageRecord, StageStatus,
    Timings,
};

pub const CONFIG_FILE: &str = "config.json";
pub const FIELD_FILE: &str = "field.vopf";

/// Stages implied by the requests in `config`, in execution order.
pub fn planned_stages(config: &ExperimentConfig) -> Vec<Stage> {
    let a = &config.analysis;
    let field = config.grid.is_some() && config.boundary.is_some();
    let boundary_work = a.audits.is_some() || a.weiss_scan.is_some() || a.blowup.is_some() || a.classify.is_some();
    Stage::ALL
        .into_iter()
        .filter(|s| match s {
            Stage::Solve => field,
            Stage::Extract => field && (a.extract.is_some() || boundary_work),
            Stage::Audits => field && a.audits.is_some(),
            Stage::Scans => field && a.weiss_scan.is_some(),
            Stage::Blowup => field && a.blowup.is_some(),
            Stage::Classify => field && a.classify.is_some(),
            Stage::Epi => a.epi.is_some(),
            Stage::Eigen => a.eigen.is_some(),
        })
        .collect()
}

/// Keeps only what `stage` and its inputs need, filling a default request for
/// `stage` when the config has none.
pub fn restrict(config: &ExperimentConfig, stage: Stage) -> ExperimentConfig {
    let mut out = config.clone();
    let a = std::mem::take(&mut out.analysis);
    let b = &mut out.analysis;
    match stage {
        Stage::Solve => b.reference = a.reference,
        Stage::Extract => b.extract = Some(a.extract.unwrap_or_default()),
        Stage::Audits => {
            b.extract = a.extract;
            b.audits = Some(a.audits.unwrap_or_default());
        }
        Stage::Scans => {
            b.extract = a.extract;
            b.weiss_scan = Some(a.weiss_scan.unwrap_or_default());
        }
        Stage::Blowup => {
            b.extract = a.extract;
            b.blowup = Some(a.blowup.unwrap_or_default());
        }
        Stage::Classify => {
            b.extract = a.extract;
            b.classify = Some(a.classify.unwrap_or_default());
        }
        Stage::Epi | Stage::Eigen => {
            out.grid = None;
            out.boundary = None;
            if stage == Stage::Epi {
                b.epi = Some(a.epi.unwrap_or_default());
            } else {
                b.eigen = Some(a.eigen.unwrap_or_default());
            }
        }
    }
    out
}

/// Runs every planned stage, writing artifacts and an updated manifest into
/// `out` after each one. Stage failures are recorded, not returned.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentManifest> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(|e| RunError::io(out, e))?;
    let mut run = Run::new(config, out);
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    run.artifact(CONFIG_FILE, text.as_bytes())?;
    for stage in planned_stages(config) {
        run.stage(stage)?;
    }
    run.body.complete = true;
    run.timings.total_seconds = run.started.elapsed().as_secs_f64();
    let manifest = ExperimentManifest::seal(run.body, run.timings);
    manifest.write(out)?;
    Ok(manifest)
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    out: PathBuf,
    body: ManifestBody,
    timings: Timings,
    started: Instant,
    field: Option<VectorField>,
    fbset: Option<FreeBoundarySet>,
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| RunError::Csv(e.into_error().into()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn dist2(a: &Point, b: &Point) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

fn nearest(points: &[BoundaryPoint], target: &Point) -> Option<Point> {
    points.iter().map(|p| p.point).min_by(|a, b| dist2(a, target).total_cmp(&dist2(b, target)))
}

/// `Γ₀` points whose ball of radius `reach` lies in the grid.
fn fitting(fb: &FreeBoundarySet, grid: &Grid, reach: f64) -> Vec<BoundaryPoint> {
    fb.gamma0.iter().filter(|p| grid.contains_ball(&Ball::new(p.point, reach))).copied().collect()
}

fn select(candidates: &[BoundaryPoint], selection: &PointSelection) -> Result<Vec<Point>> {
    if candidates.is_empty() {
        return Err(vecobstacle::Error::EmptyGamma0.into());
    }
    Ok(match &selection.targets {
        Some(targets) => targets.iter().filter_map(|t| nearest(candidates, t)).collect(),
        None => {
            let n = selection.count.min(candidates.len()).max(1);
            (0..n)
                .map(|i| {
                    let j = if n == 1 { candidates.len() / 2 } else { i * (candidates.len() - 1) / (n - 1) };
                    candidates[j].point
                })
                .collect()
        }
    })
}

impl<'a> Run<'a> {
    fn new(config: &'a ExperimentConfig, out: &Path) -> Self {
        let started_unix_seconds = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            config,
            out: out.to_owned(),
            body: ManifestBody::new(&config.name, config.hash()),
            timings: Timings { started_unix_seconds, ..Timings::default() },
            started: Instant::now(),
            field: None,
            fbset: None,
        }
    }

    fn artifact(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(rel);
        std::fs::write(&path, bytes).map_err(|e| RunError::io(&path, e))?;
        self.body.artifacts.retain(|a| a.path != rel);
        self.body.artifacts.push(ArtifactRecord { path: rel.to_owned(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    fn check(&mut self, stage: Stage, name: impl Into<String>, passed: bool, value: Option<f64>, threshold: Option<f64>) {
        self.body.assertions.push(AssertionRecord { name: name.into(), stage, passed, value, threshold });
    }

    fn partial(&mut self) -> Result<()> {
        self.timings.total_seconds = self.started.elapsed().as_secs_f64();
        ExperimentManifest::seal(self.body.clone(), self.timings.clone()).write(&self.out)
    }

    fn stage(&mut self, stage: Stage) -> Result<()> {
        let missing = match stage {
            Stage::Solve | Stage::Epi | Stage::Eigen => None,
            Stage::Extract => self.field.is_none().then_some(Stage::Solve),
            _ => {
                if self.field.is_none() {
                    Some(Stage::Solve)
                } else {
                    self.fbset.is_none().then_some(Stage::Extract)
                }
            }
        };
        let t0 = Instant::now();
        let (status, error) = match missing {
            Some(needs) => (
                StageStatus::Skipped,
                Some(RunError::MissingInput { stage: stage.to_string(), needs: needs.to_string() }.to_string()),
            ),
            None => match self.execute(stage) {
                Ok(()) => (StageStatus::Completed, None),
                Err(RunError::Io { path, source }) => return Err(RunError::Io { path, source }),
                Err(e) => (StageStatus::Failed, Some(e.to_string())),
            },
        };
        self.timings.stage_seconds.push((stage, t0.elapsed().as_secs_f64()));
        self.body.stages.push(StageRecord { stage, status, error });
        self.partial()
    }

    fn execute(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Solve => self.solve(),
            Stage::Extract => self.extract(),
            Stage::Audits => self.audits(),
            Stage::Scans => self.scans(),
            Stage::Blowup => self.blowup(),
            Stage::Classify => self.classify(),
            Stage::Epi => self.epi(),
            Stage::Eigen => self.eigen(),
        }
    }

    fn inputs(&self) -> (&VectorField, &FreeBoundarySet) {
        (self.field.as_ref().expect("solve completed"), self.fbset.as_ref().expect("extract completed"))
    }

    fn solve(&mut self) -> Result<()> {
        let config = self.config;
        let grid_spec = config.grid.as_ref().expect("planned with a grid");
        let generator = config.boundary.as_ref().expect("planned with a boundary");
        let grid = grid_spec.build()?;
        let data = BoundaryData::generate(&grid, config.m, generator)?;
        let solution = match solve(&grid, config.m, &data, &config.solver.params()) {
            Ok(s) => s,
            Err(vecobstacle::Error::NotConverged { best, .. }) => *best,
            Err(e) => return Err(e.into()),
        };
        let converged = solution.report.converged;
        self.check(Stage::Solve, "solve.converged", converged, Some(solution.report.grad_map_norm), None);
        let field = solution.field;
        let res = residual(&field, solver::default_delta(&field).max(f64::MIN_POSITIVE))?;
        let energy = energy_e(&field, None)?;
        let mut reference = None;
        if let Some(check) = &config.analysis.reference {
            let hp = generator
                .half_plane(grid.dim(), config.m)?
                .ok_or_else(|| RunError::Schema("the reference check needs half-plane boundary data".into()))?;
            let error = field.sup_distance(&eval_half_plane(&grid, &hp));
            let h = grid.h_max();
            let bound = check.factor * h * h;
            self.check(Stage::Solve, "solve.reference_sup_error", error <= bound, Some(error), Some(bound));
            reference = Some(json!({ "sup_error": error, "bound": bound }));
        }
        self.artifact(FIELD_FILE, &field.to_vopf_bytes())?;
        let report = json!({
            "grid": grid_spec,
            "m": config.m,
            "boundary": generator,
            "report": solution.report,
            "residual": res,
            "energy": energy,
            "sup_norm": field.sup_norm(),
            "reference": reference,
        });
        self.artifact("solve.json", &json_bytes(&report)?)?;
        self.field = Some(field);
        Ok(())
    }

    fn extract(&mut self) -> Result<()> {
        let field = self.field.as_ref().expect("solve completed");
        let req = self.config.analysis.extract.clone().unwrap_or_default();
        let delta = req.delta.unwrap_or_else(|| default_delta(field));
        let eps_grad = req.eps_grad.unwrap_or_else(|| default_eps_grad(field.grid()));
        let fb = extract_free_boundary(field, delta, eps_grad)?;
        #[derive(Serialize)]
        struct Row {
            x: f64,
            y: f64,
            z: f64,
            grad_norm: f64,
            degenerate: bool,
        }
        let rows: Vec<Row> = fb
            .gamma
            .iter()
            .map(|p| Row { x: p.point[0], y: p.point[1], z: p.point[2], grad_norm: p.grad_norm, degenerate: p.grad_norm <= eps_grad })
            .collect();
        let csv = csv_bytes(rows)?;
        let summary = json!({
            "delta": delta,
            "eps_grad": eps_grad,
            "gamma": fb.gamma.len(),
            "gamma0": fb.gamma0.len(),
        });
        self.artifact("free_boundary.csv", &csv)?;
        self.artifact("free_boundary.json", &json_bytes(&summary)?)?;
        self.fbset = Some(fb);
        Ok(())
    }

    fn audits(&mut self) -> Result<()> {
        let req = self.config.analysis.audits.clone().unwrap_or_default();
        let (field, fb) = self.inputs();
        let grid = field.grid();
        let delta = fb.delta;
        let radii = req.radii.radii(grid.h_max())?;
        // each support point uses the radii whose balls stay in the grid
        let mut centers = 0;
        let mut nondegeneracy: Option<NonDegeneracyReport> = None;
        for p in fb.gamma.iter().map(|p| p.point).filter(|p| in_support_closure(field, p, delta)) {
            let fit: Vec<f64> = radii.iter().copied().filter(|&r| grid.contains_ball(&Ball::new(p, r))).collect();
            if fit.is_empty() {
                continue;
            }
            centers += 1;
            let r = audit_nondegeneracy(field, &[p], &fit, delta)?;
            match &mut nondegeneracy {
                Some(all) => {
                    all.min_ratio = all.min_ratio.min(r.min_ratio);
                    all.samples.extend(r.samples);
                }
                None => nondegeneracy = Some(r),
            }
        }
        let subharmonicity = audit_subharmonicity(field, delta)?;
        let growth = if req.growth && !fb.gamma0.is_empty() { Some(audit_quadratic_growth(field, fb)?) } else { None };
        #[derive(Serialize)]
        struct Row {
            x: f64,
            y: f64,
            z: f64,
            radius: f64,
            sup: f64,
            bound: f64,
            ratio: f64,
        }
        let nd_csv = csv_bytes(nondegeneracy.iter().flat_map(|r| &r.samples).map(|s| Row {
            x: s.center[0],
            y: s.center[1],
            z: s.center[2],
            radius: s.radius,
            sup: s.sup,
            bound: s.bound,
            ratio: s.ratio,
        }))?;
        let report = json!({
            "radii": radii,
            "centers": centers,
            "nondegeneracy_min_ratio": nondegeneracy.as_ref().map(|r| r.min_ratio),
            "subharmonicity": subharmonicity,
            "growth": growth,
        });
        self.artifact("nondegeneracy.csv", &nd_csv)?;
        self.artifact("audits.json", &json_bytes(&report)?)?;
        let min_ratio = nondegeneracy.as_ref().map(|r| r.min_ratio);
        self.check(
            Stage::Audits,
            "audits.nondegeneracy_min_ratio",
            min_ratio.is_none_or(|r| r >= req.min_nondegeneracy_ratio),
            min_ratio,
            Some(req.min_nondegeneracy_ratio),
        );
        self.check(
            Stage::Audits,
            "audits.subharmonic_a_min",
            subharmonicity.a_min >= req.min_subharmonic_a,
            Some(subharmonicity.a_min),
            Some(req.min_subharmonic_a),
        );
        self.check(
            Stage::Audits,
            "audits.laplacian_excess_min",
            subharmonicity.min_laplacian_excess >= req.min_laplacian_excess,
            Some(subharmonicity.min_laplacian_excess),
            Some(req.min_laplacian_excess),
        );
        if let Some(g) = growth {
            let finite = g.c_value.is_finite() && g.c_grad.is_finite();
            self.check(Stage::Audits, "audits.growth_finite", finite, Some(g.c_value.max(g.c_grad)), None);
        }
        Ok(())
    }

    fn scans(&mut self) -> Result<()> {
        let req = self.config.analysis.weiss_scan.clone().unwrap_or_default();
        let (field, fb) = self.inputs();
        let grid = field.grid();
        let radii = req.radii.radii(grid.h_max())?;
        let reach = *radii.last().expect("nonempty radii");
        let points = select(&fitting(fb, grid, reach), &req.points)?;
        let scans = points.iter().map(|p| weiss_scan(field, p, &radii)).collect::<vecobstacle::Result<Vec<_>>>()?;
        #[derive(Serialize)]
        struct Row {
            point: usize,
            x: f64,
            y: f64,
            z: f64,
            radius: f64,
            w: f64,
        }
        let rows: Vec<Row> = scans
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                s.radii.iter().zip(&s.values).map(move |(&r, &w)| Row { point: i, x: s.center[0], y: s.center[1], z: s.center[2], radius: r, w })
            })
            .collect();
        let csv = csv_bytes(rows)?;
        let summary: Vec<_> = scans
            .iter()
            .map(|s| json!({ "center": s.center, "w0_estimate": s.w0_estimate, "extrapolation": s.extrapolation, "monotone_violation": s.monotone_violation }))
            .collect();
        self.artifact("weiss_scan.csv", &csv)?;
        self.artifact("weiss_scan.json", &json_bytes(&summary)?)?;
        for (i, s) in scans.iter().enumerate() {
            let v = s.monotone_violation;
            self.check(Stage::Scans, format!("scans.point{i}.monotone_violation"), v <= req.max_monotone_violation, Some(v), Some(req.max_monotone_violation));
        }
        Ok(())
    }

    fn blowup(&mut self) -> Result<()> {
        let req = self.config.analysis.blowup.clone().unwrap_or_default();
        let (field, fb) = self.inputs();
        let grid = field.grid();
        let dim = grid.dim();
        let reference = match req.reference_count {
            Some(n) => Grid::cube(dim, -1.0, 1.0, n)?,
            None => default_reference_grid(dim)?,
        };
        let x0 = nearest(&fitting(fb, grid, req.radii[0]), &req.target).ok_or(vecobstacle::Error::EmptyGamma0)?;
        let seq = blowup_sequence(field, &x0, &req.radii, &reference)?;
        let fits = seq.fields.iter().map(fit_half_plane).collect::<vecobstacle::Result<Vec<_>>>()?;
        #[derive(Serialize)]
        struct Row {
            radius: f64,
            l1_difference_to_next: Option<f64>,
            l2_distance: f64,
            w12_distance: f64,
        }
        let rows: Vec<Row> = seq
            .radii
            .iter()
            .zip(&fits)
            .enumerate()
            .map(|(i, (&r, f))| Row {
                radius: r,
                l1_difference_to_next: seq.l1_differences.get(i).copied(),
                l2_distance: f.l2_distance,
                w12_distance: f.w12_distance,
            })
            .collect();
        let last = fits.last().expect("at least two radii");
        let final_distance = last.l2_distance;
        let decay = match &req.decay {
            Some(d) => {
                let h = grid.h_max();
                let radii = d.radii.radii(h)?;
                let reach = *radii.last().expect("nonempty radii");
                let x1 = nearest(&fitting(fb, grid, reach), &d.target).ok_or(vecobstacle::Error::EmptyGamma0)?;
                let verdict = classify_point(field, &x1, 5.0 * h, None)?.verdict;
                let scan = weiss_scan(field, &x1, &radii)?;
                let fit = fit_decay(&scan, dim)?;
                Some((d.min_fit_quality, x1, verdict, scan, fit))
            }
            None => None,
        };
        let csv = csv_bytes(rows)?;
        let report = json!({
            "x0": x0,
            "cauchy": seq.cauchy,
            "l1_differences": seq.l1_differences,
            "final_fit": last,
            "decay": decay.as_ref().map(|(_, x1, verdict, scan, fit)| json!({
                "point": x1,
                "verdict": verdict,
                "radii": scan.radii,
                "values": scan.values,
                "w0_estimate": scan.w0_estimate,
                "fit": fit,
            })),
        });
        let final_field = seq.fields.last().expect("at least two radii").field.to_vopf_bytes();
        self.artifact("blowup.csv", &csv)?;
        self.artifact("blowup.json", &json_bytes(&report)?)?;
        self.artifact("blowup_final.vopf", &final_field)?;
        if req.require_cauchy {
            let last_diff = seq.l1_differences.last().copied();
            self.check(Stage::Blowup, "blowup.cauchy", seq.cauchy, last_diff, Some(vecobstacle::blowup::CAUCHY_TOLERANCE));
        }
        self.check(Stage::Blowup, "blowup.fit_distance", final_distance <= req.max_fit_distance, Some(final_distance), Some(req.max_fit_distance));
        if let Some((min_quality, _, verdict, _, fit)) = decay {
            self.check(Stage::Blowup, "blowup.decay_point_regular", verdict == Verdict::Regular, None, None);
            self.check(Stage::Blowup, "blowup.decay_gamma_positive", fit.gamma_hat > 0.0, Some(fit.gamma_hat), Some(0.0));
            self.check(Stage::Blowup, "blowup.decay_fit_quality", fit.fit_quality >= min_quality, Some(fit.fit_quality), Some(min_quality));
            let beta_ok = fit.beta_hat > 0.0 && fit.beta_hat < 1.0;
            self.check(Stage::Blowup, "blowup.decay_beta_in_unit_interval", beta_ok, Some(fit.beta_hat), None);
        }
        Ok(())
    }

    fn classify(&mut self) -> Result<()> {
        let req = self.config.analysis.classify.clone().unwrap_or_default();
        let (field, fb) = self.inputs();
        let r_min = req.r_min.unwrap_or(5.0 * field.grid().h_max());
        let c = classify_points(field, fb, r_min, req.margin)?;
        #[derive(Serialize)]
        struct Row {
            x: f64,
            y: f64,
            z: f64,
            verdict: Verdict,
            w_at_rmin: f64,
            w0_estimate: f64,
        }
        let rows: Vec<Row> = c
            .points
            .iter()
            .map(|p| Row { x: p.point[0], y: p.point[1], z: p.point[2], verdict: p.verdict, w_at_rmin: p.w_at_rmin, w0_estimate: p.scan.w0_estimate })
            .collect();
        let regular = c.regular_count();
        let summary = json!({
            "r_min": r_min,
            "threshold": c.threshold,
            "margin": c.margin,
            "classified": c.points.len(),
            "regular": regular,
            "indeterminate": c.points.len() - regular,
            "skipped": c.skipped,
        });
        let csv = csv_bytes(rows)?;
        self.artifact("classify.csv", &csv)?;
        self.artifact("classify.json", &json_bytes(&summary)?)?;
        if req.min_regular > 0 {
            self.check(Stage::Classify, "classify.min_regular", regular >= req.min_regular, Some(regular as f64), Some(req.min_regular as f64));
        }
        Ok(())
    }

    fn epi(&mut self) -> Result<()> {
        let req = self.config.analysis.epi.clone().unwrap_or_default();
        let grid = PolarGrid::new(req.radial_nodes, req.angular_nodes)?;
        let cells = epi_matrix(&grid, &req.modes, &req.deltas, &self.config.solver.params())?;
        #[derive(Serialize)]
        struct Row {
            mode: String,
            delta: f64,
            delta_to_h: f64,
            m_c: f64,
            m_v: f64,
            alpha_half: f64,
            denominator: f64,
            kappa: Option<f64>,
            regime: vecobstacle::epiperimetric::Regime,
        }
        let rows: Vec<Row> = cells
            .iter()
            .map(|c| Row {
                mode: c.mode.to_string(),
                delta: c.delta,
                delta_to_h: c.delta_to_h,
                m_c: c.result.m_c,
                m_v: c.result.m_v,
                alpha_half: c.result.alpha_half,
                denominator: c.result.denominator,
                kappa: c.result.kappa_achieved,
                regime: c.result.regime,
            })
            .collect();
        let max_gain_violation = cells.iter().map(|c| c.result.m_v - c.result.m_c).fold(f64::NEG_INFINITY, f64::max);
        let gated: Vec<f64> = cells
            .iter()
            .filter(|c| c.result.denominator > req.denominator_floor)
            .map(|c| c.result.kappa_achieved.unwrap_or(f64::NEG_INFINITY))
            .collect();
        let gated_min = gated.iter().copied().reduce(f64::min);
        let csv = csv_bytes(rows)?;
        let summary = json!({
            "radial_nodes": req.radial_nodes,
            "angular_nodes": req.angular_nodes,
            "cells": cells.len(),
            "min_kappa": min_kappa(&cells),
            "min_kappa_above_floor": gated_min,
            "denominator_floor": req.denominator_floor,
            "max_m_v_minus_m_c": max_gain_violation,
        });
        self.artifact("epi_kappa.csv", &csv)?;
        self.artifact("epi.json", &json_bytes(&summary)?)?;
        self.check(Stage::Epi, "epi.m_v_le_m_c", max_gain_violation <= 1e-10, Some(max_gain_violation), Some(1e-10));
        self.check(Stage::Epi, "epi.min_kappa", gated_min.is_none_or(|k| k >= req.min_kappa), gated_min, Some(req.min_kappa));
        Ok(())
    }

    fn eigen(&mut self) -> Result<()> {
        let suite = self.config.analysis.eigen.clone().unwrap_or_default();
        let mut checks = Vec::new();
        for (i, req) in suite.problems.iter().enumerate() {
            let q0 = req.q0.unwrap_or_else(|| req.potential.lower_bound());
            let problem = SphericalProblem::new(req.geometry, req.lo, req.hi, req.potential.clone(), q0, req.nodes)?;
            let result = eigensolve(&problem, req.k)?;
            let mut csv = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["node".to_owned(), "angle".to_owned()];
            header.extend((1..=result.lambdas.len()).map(|j| format!("v{j}")));
            csv.write_record(&header)?;
            for (n, t) in result.nodes.iter().enumerate() {
                let mut rec = vec![n.to_string(), t.to_string()];
                rec.extend(result.eigenfunctions.iter().map(|v| v[n].to_string()));
                csv.write_record(&rec)?;
            }
            let csv = csv.into_inner().map_err(|e| RunError::Csv(e.into_error().into()))?;
            let monotonicity = if req.shrink_fractions.is_empty() {
                None
            } else {
                Some(check_domain_monotonicity(&problem, &req.shrink_fractions, req.k)?)
            };
            let shift = if req.shift_bound { Some(check_shift_bound(&problem, req.k)?) } else { None };
            let report = json!({
                "problem": problem,
                "lambdas": result.lambdas,
                "azimuthal": result.azimuthal,
                "monotonicity": monotonicity,
                "shift_bound": shift,
            });
            self.artifact(&format!("eigen_{i}.csv"), &csv)?;
            self.artifact(&format!("eigen_{i}.json"), &json_bytes(&report)?)?;
            let ordered = result.lambdas.windows(2).all(|w| w[0] <= w[1]) && result.lambdas.get(1).is_none_or(|l| result.lambdas[0] < *l);
            self.check(Stage::Eigen, format!("eigen.{i}.ordered"), ordered, Some(result.lambdas[0]), None);
            let min_first = result.eigenfunctions[0].iter().copied().fold(f64::INFINITY, f64::min);
            self.check(Stage::Eigen, format!("eigen.{i}.first_positive"), min_first > 0.0, Some(min_first), Some(0.0));
            if let Some(m) = monotonicity {
                self.check(Stage::Eigen, format!("eigen.{i}.monotonicity"), m.passed, None, None);
            }
            if let Some(s) = shift {
                let worst = s.gaps.iter().copied().fold(f64::INFINITY, f64::min);
                self.check(Stage::Eigen, format!("eigen.{i}.shift_bound"), s.holds, Some(worst), Some(-vecobstacle::spherical::SHIFT_SLACK));
            }
        }
        for &dim in &suite.half_sphere {
            let r = verify_half_sphere(dim)?;
            self.check(Stage::Eigen, format!("eigen.half_sphere_{dim}.lambda1"), r.lambda1_ok, Some(r.relative_error), Some(r.tolerance));
            self.check(Stage::Eigen, format!("eigen.half_sphere_{dim}.lambda2"), r.lambda2_ok, Some(r.lambda2), Some(r.target + 2.0 - 0.1));
            checks.push(json!({ "half_sphere": r }));
        }
        for p in &suite.perturbed {
            let r = check_perturbed_cap(p.dim, &p.deltas, p.q0)?;
            if let Some(up_to) = p.assert_up_to {
                let ok = r.rows.iter().filter(|row| row.delta <= up_to).all(|row| row.above);
                let worst = r.rows.iter().filter(|row| row.delta <= up_to).map(|row| row.lambda2).fold(f64::INFINITY, f64::min);
                self.check(Stage::Eigen, format!("eigen.perturbed_{}_q0_{}.lambda2_above", p.dim, p.q0), ok, Some(worst), Some(2.0 * p.dim as f64));
            }
            checks.push(json!({ "perturbed": r }));
        }
        if !checks.is_empty() {
            self.artifact("eigen_checks.json", &json_bytes(&checks)?)?;
        }
        Ok(())
    }
}
