//! Acceptance criteria A1–A10, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use vecobstacle::blowup::fit_decay;
use vecobstacle::energy::{alpha_n, functional_m, weiss_scan};
use vecobstacle::epiperimetric::{epi_matrix, PerturbationMode, PolarGrid, DEFAULT_ANGULAR_NODES, DEFAULT_RADIAL_NODES};
use vecobstacle::fields::eval_half_plane;
use vecobstacle::freeboundary::{
    audit_nondegeneracy, audit_quadratic_growth, audit_subharmonicity, classify_point, default_delta, default_eps_grad,
    extract_free_boundary, in_support_closure, FreeBoundarySet, Verdict,
};
use vecobstacle::solver::{oracle_solve, solve, BoundaryData, BoundaryGenerator, SolveParams};
use vecobstacle::spherical::{
    check_domain_monotonicity, check_perturbed_cap, check_shift_bound, verify_half_sphere, Potential, SphericalProblem,
};
use vecobstacle::{Ball, Grid, HalfPlaneSolution, Point, VectorField};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn square(count: usize) -> Grid {
    Grid::cube(2, -1.0, 1.0, count).unwrap()
}

fn solved(count: usize, generator: &BoundaryGenerator) -> VectorField {
    let g = square(count);
    let data = BoundaryData::generate(&g, 2, generator).unwrap();
    solve(&g, 2, &data, &SolveParams::default()).unwrap().field
}

fn boundary_set(u: &VectorField) -> FreeBoundarySet {
    extract_free_boundary(u, default_delta(u), default_eps_grad(u.grid())).unwrap()
}

fn nearest(fb: &FreeBoundarySet, target: [f64; 2]) -> Point {
    let d = |p: &Point| (p[0] - target[0]).hypot(p[1] - target[1]);
    fb.gamma0.iter().map(|p| p.point).min_by(|a, b| d(a).total_cmp(&d(b))).unwrap()
}

/// The perturbed instance of A3 and A8: half-plane trace plus `0.05` of angular mode 2, seed 1.
fn perturbed() -> &'static VectorField {
    static FIELD: OnceLock<VectorField> = OnceLock::new();
    FIELD.get_or_init(|| solved(257, &BoundaryGenerator::AngularMode { k: 2, amplitude: 0.05, seed: 1 }))
}

fn corpus_generators() -> Vec<(&'static str, BoundaryGenerator)> {
    vec![
        ("half_plane", BoundaryGenerator::HalfPlane { nu: vec![0.0, 1.0], e: vec![1.0, 0.0] }),
        ("rotated", BoundaryGenerator::Rotated { angle: 0.3, e: None }),
        ("angular_2", BoundaryGenerator::AngularMode { k: 2, amplitude: 0.05, seed: 1 }),
        ("angular_3", BoundaryGenerator::AngularMode { k: 3, amplitude: 0.05, seed: 2 }),
        ("bump", BoundaryGenerator::Bump { amplitude: 0.05, center: None, width: 0.5 }),
        ("twist", BoundaryGenerator::Twist { angle: 0.3, seed: 4 }),
        ("random", BoundaryGenerator::Random { seed: 3, amplitude: 0.02 }),
    ]
}

/// Corpus solutions at 65² and 129² nodes.
fn corpus() -> &'static Vec<(&'static str, VectorField, VectorField)> {
    static CORPUS: OnceLock<Vec<(&'static str, VectorField, VectorField)>> = OnceLock::new();
    CORPUS.get_or_init(|| corpus_generators().into_iter().map(|(name, g)| (name, solved(65, &g), solved(129, &g))).collect())
}

fn a1() -> Check {
    let exact = (alpha_n(2).unwrap().value - PI / 8.0).abs() < 1e-15 && (alpha_n(3).unwrap().value - 2.0 * PI / 15.0).abs() < 1e-15;
    let m2 = functional_m(&eval_half_plane(&square(257), &HalfPlaneSolution::canonical(2, 1))).unwrap().value;
    let g3 = Grid::cube(3, -1.0, 1.0, 257).unwrap();
    let m3 = functional_m(&eval_half_plane(&g3, &HalfPlaneSolution::canonical(3, 1))).unwrap().value;
    let (e2, e3) = ((m2 / (PI / 16.0) - 1.0).abs(), (m3 / (PI / 15.0) - 1.0).abs());
    ensure(exact && e2 <= 0.01 && e3 <= 0.015, format!("closed forms exact: {exact}; M rel. error n=2 {e2:.2e}, n=3 {e3:.2e}"))
}

fn a2() -> Check {
    let mut detail = Vec::new();
    let mut ok = true;
    for (label, nu) in [("aligned", [0.0, 1.0]), ("rotated", [0.3, 1.0])] {
        let hp = HalfPlaneSolution::normalized(&nu, &[1.0, 0.0]).unwrap();
        let mut errors = Vec::new();
        for count in [65, 129, 257] {
            let g = square(count);
            let data = BoundaryData::from_fn(&g, 2, |x, o| hp.value(x, o)).unwrap();
            let u = solve(&g, 2, &data, &SolveParams::default()).unwrap().field;
            let err = u.sup_distance(&eval_half_plane(&g, &hp));
            let h = g.h_max();
            ok &= err <= 10.0 * h * h;
            errors.push(err);
        }
        let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        if label == "rotated" {
            ok &= orders.iter().all(|&p| p >= 1.5);
        }
        let errors: Vec<String> = errors.iter().map(|e| format!("{e:.2e}")).collect();
        let orders: Vec<String> = orders.iter().map(|p| format!("{p:.2}")).collect();
        detail.push(format!("{label} errors [{}] orders [{}]", errors.join(", "), orders.join(", ")));
    }
    ensure(ok, detail.join("; "))
}

fn a3() -> Check {
    let u = perturbed();
    let h = u.grid().h_max();
    let fb = boundary_set(u);
    let radii: Vec<f64> = (0..40).map(|k| 5.0 * h * 1.25f64.powi(k)).take_while(|&r| r <= 0.4).collect();
    let mut worst: f64 = 0.0;
    for target in [[0.0, 0.0], [-0.3, 0.0], [0.3, 0.0]] {
        let scan = weiss_scan(u, &nearest(&fb, target), &radii).map_err(|e| e.to_string())?;
        worst = worst.max(scan.monotone_violation);
    }
    ensure(worst <= 2e-3, format!("max monotone violation {worst:.2e} over 3 Γ₀ points, {} radii", radii.len()))
}

fn a4() -> Check {
    let mut worst = f64::INFINITY;
    let mut samples = 0;
    for (name, _, u) in corpus() {
        let g = u.grid();
        let h = g.h_max();
        let delta = default_delta(u);
        let radii: Vec<f64> = (0..40).map(|k| 5.0 * h * 1.4f64.powi(k)).take_while(|&r| r <= 0.3).collect();
        for p in boundary_set(u).gamma.iter().map(|p| p.point) {
            if !in_support_closure(u, &p, delta) {
                continue;
            }
            let fit: Vec<f64> = radii.iter().copied().filter(|&r| g.contains_ball(&Ball::new(p, r))).collect();
            if fit.is_empty() {
                continue;
            }
            let r = audit_nondegeneracy(u, &[p], &fit, delta).map_err(|e| format!("{name}: {e}"))?;
            samples += r.samples.len();
            worst = worst.min(r.min_ratio);
        }
    }
    ensure(worst >= 0.9, format!("min ratio {worst:.4} over {samples} (point, radius) samples on {} instances", corpus().len()))
}

fn a5() -> Check {
    let g = square(8);
    let mut worst: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for seed in 0..5 {
        let data = BoundaryData::generate(&g, 2, &BoundaryGenerator::Random { seed, amplitude: 0.2 }).unwrap();
        let oracle = oracle_solve(&g, &data).map_err(|e| e.to_string())?;
        let zero_start = solve(&g, 2, &data, &SolveParams::default()).map_err(|e| e.to_string())?.field;
        worst = worst.max(zero_start.sup_distance(&oracle));
        let other = VectorField::from_fn(g.clone(), 2, |x, o| {
            o[0] = 0.5 * (3.0 * x[0]).sin();
            o[1] = 0.3 * x[1];
        });
        let params = SolveParams { seed_field: Some(other), ..SolveParams::default() };
        let second = solve(&g, 2, &data, &params).map_err(|e| e.to_string())?.field;
        spread = spread.max(second.sup_distance(&zero_start));
    }
    ensure(worst <= 1e-6 && spread <= 1e-6, format!("solver vs oracle {worst:.2e}; two starts {spread:.2e}"))
}

fn a6() -> Check {
    let h = square(257).h_max();
    let hp = eval_half_plane(&square(257), &HalfPlaneSolution::canonical(2, 2));
    let p = classify_point(&hp, &[0.0; 3], 5.0 * h, None).map_err(|e| e.to_string())?;
    let e_reg = (p.w_at_rmin / (PI / 16.0) - 1.0).abs();
    let full = VectorField::from_fn(square(257), 2, |x, o| {
        o[0] = 0.25 * (x[0] * x[0] + x[1] * x[1]);
        o[1] = 0.0;
    });
    let q = classify_point(&full, &[0.0; 3], 5.0 * h, None).map_err(|e| e.to_string())?;
    let e_ind = (q.w_at_rmin / (PI / 8.0) - 1.0).abs();
    let ok = p.verdict == Verdict::Regular && q.verdict == Verdict::Indeterminate && e_reg <= 0.02 && e_ind <= 0.02;
    ensure(ok, format!("half-plane {:?} (W rel. error {e_reg:.2e}); ¼|x|²e¹ {:?} (W rel. error {e_ind:.2e})", p.verdict, q.verdict))
}

fn a7() -> Check {
    let grid = PolarGrid::new(DEFAULT_RADIAL_NODES, DEFAULT_ANGULAR_NODES).unwrap();
    let modes = [PerturbationMode::Amplitude, PerturbationMode::SecondComponent, PerturbationMode::AngularMode(2)];
    let cells = epi_matrix(&grid, &modes, &[0.02, 0.05, 0.1], &SolveParams::default()).map_err(|e| e.to_string())?;
    let gain_ok = cells.iter().all(|c| c.result.m_v <= c.result.m_c + 1e-10);
    let gated: Vec<f64> = cells
        .iter()
        .filter(|c| c.result.denominator > 1e-6)
        .map(|c| c.result.kappa_achieved.unwrap_or(f64::NEG_INFINITY))
        .collect();
    let min = gated.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(
        gain_ok && min >= 0.01,
        format!("M_v ≤ M_c + 1e-10 in all {} cells: {gain_ok}; min κ {min:.4} over {} gated cells", cells.len(), gated.len()),
    )
}

fn a8() -> Check {
    let u = perturbed();
    let h = u.grid().h_max();
    let x1 = nearest(&boundary_set(u), [-0.4, 0.0]);
    let verdict = classify_point(u, &x1, 5.0 * h, None).map_err(|e| e.to_string())?.verdict;
    let radii: Vec<f64> = (0..9).map(|k| 0.1 * 1.2f64.powi(k)).filter(|&r| r <= 0.5).collect();
    let scan = weiss_scan(u, &x1, &radii).map_err(|e| e.to_string())?;
    let fit = fit_decay(&scan, 2).map_err(|e| e.to_string())?;
    let ok = verdict == Verdict::Regular && fit.gamma_hat > 0.0 && fit.fit_quality >= 0.9 && fit.beta_hat > 0.0 && fit.beta_hat < 1.0;
    ensure(
        ok,
        format!(
            "point ({:.3}, {:.3}) {verdict:?}: γ̂ {:.3}, R² {:.4}, β̂ {:.3}",
            x1[0], x1[1], fit.gamma_hat, fit.fit_quality, fit.beta_hat
        ),
    )
}

fn a9() -> Check {
    let e = |e: vecobstacle::Error| e.to_string();
    let arc = verify_half_sphere(2).map_err(e)?;
    let cap = verify_half_sphere(3).map_err(e)?;
    let mut suites = 0;
    for seed in 0..20u64 {
        let q = Potential::RandomSmooth { seed, q0: 1.0, amplitude: 2.0 };
        let problem = if seed % 2 == 0 {
            SphericalProblem::arc(0.0, PI, q, 300).map_err(e)?
        } else {
            SphericalProblem::cap(0.0, 0.6 * PI, q, 300).map_err(e)?
        };
        let mono = check_domain_monotonicity(&problem, &[0.95, 0.85, 0.7, 0.55, 0.4], 3).map_err(e)?;
        let shift = check_shift_bound(&problem, 3).map_err(e)?;
        suites += usize::from(mono.passed && shift.holds && shift.strict);
    }
    let p2 = check_perturbed_cap(2, &[0.0], 1.0).map_err(e)?;
    let p3 = check_perturbed_cap(3, &[0.0], 1.0).map_err(e)?;
    let lambda2_ok = p2.rows[0].above && p3.rows[0].above;
    let ok = arc.lambda1_ok && cap.lambda1_ok && suites == 20 && lambda2_ok;
    ensure(
        ok,
        format!(
            "λ₁ arc {:.6} (rel. {:.1e}), cap {:.6} (rel. {:.1e}); {suites}/20 seeded suites; λ₂ half-domain {:.4} / {:.4}",
            arc.lambda1, arc.relative_error, cap.lambda1, cap.relative_error, p2.rows[0].lambda2, p3.rows[0].lambda2
        ),
    )
}

fn a10() -> Check {
    let mut a_min = f64::INFINITY;
    let mut excess = f64::INFINITY;
    let mut ratio_range = (f64::INFINITY, f64::NEG_INFINITY);
    for (name, coarse, fine) in corpus() {
        for u in [coarse, fine] {
            let s = audit_subharmonicity(u, default_delta(u)).map_err(|e| format!("{name}: {e}"))?;
            a_min = a_min.min(s.a_min);
            excess = excess.min(s.min_laplacian_excess);
        }
        let gc = audit_quadratic_growth(coarse, &boundary_set(coarse)).map_err(|e| format!("{name}: {e}"))?;
        let gf = audit_quadratic_growth(fine, &boundary_set(fine)).map_err(|e| format!("{name}: {e}"))?;
        for (c, f) in [(gc.c_value, gf.c_value), (gc.c_grad, gf.c_grad)] {
            if !(c.is_finite() && f.is_finite()) {
                return Err(format!("{name}: non-finite growth constant"));
            }
            let r = f / c;
            ratio_range = (ratio_range.0.min(r), ratio_range.1.max(r));
        }
    }
    let ok = a_min >= -1e-3 && excess >= -1e-2 && ratio_range.0 >= 0.5 && ratio_range.1 <= 2.0;
    ensure(
        ok,
        format!(
            "A_min {a_min:.2e}, min(ΔU−1) {excess:.2e}; growth constant ratios h/2 : h in [{:.3}, {:.3}]",
            ratio_range.0, ratio_range.1
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Option<f64>, fn() -> Check); 10] = [
        ("A1", Some(10.0), a1),
        ("A2", Some(120.0), a2),
        ("A3", Some(120.0), a3),
        ("A4", None, a4),
        ("A5", Some(60.0), a5),
        ("A6", None, a6),
        ("A7", Some(300.0), a7),
        ("A8", None, a8),
        ("A9", Some(30.0), a9),
        ("A10", None, a10),
    ];
    let mut failed = 0;
    for (id, budget, check) in criteria {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        let over = budget.is_some_and(|b| secs > b);
        let (ok, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; over the {:.0} s budget", budget.unwrap())),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!("{} {id}: {detail} [{secs:.1} s]", if ok { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
