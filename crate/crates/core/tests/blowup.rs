use std::f64::consts::{FRAC_1_SQRT_2, PI};

use vecobstacle::blowup::*;
use vecobstacle::energy::{weiss_scan, WeissScan};
use vecobstacle::fields::eval_half_plane;
use vecobstacle::freeboundary::{classify_point, default_delta, default_eps_grad, extract_free_boundary, Verdict};
use vecobstacle::solver::{solve, BoundaryData, BoundaryGenerator, SolveParams};
use vecobstacle::{Error, Grid, HalfPlaneSolution, VectorField};

fn square(count: usize) -> Grid {
    Grid::cube(2, -1.0, 1.0, count).unwrap()
}

fn reference() -> Grid {
    default_reference_grid(2).unwrap()
}

fn paraboloid(g: Grid) -> VectorField {
    VectorField::from_fn(g, 2, |x, o| {
        o[0] = 0.25 * (x[0] * x[0] + x[1] * x[1]);
        o[1] = 0.0;
    })
}

#[test]
fn rescaling_half_plane_is_exact() {
    let hp = HalfPlaneSolution::canonical(2, 2);
    let f = eval_half_plane(&square(257), &hp);
    let r = rescale(&f, &[0.0; 3], 0.5, &reference()).unwrap();
    let exact = eval_half_plane(&reference(), &hp);
    assert!(r.field.sup_distance(&exact) <= 1e-10);
    let zero = rescale(&VectorField::zeros(square(33), 2), &[0.1, 0.0, 0.0], 0.3, &reference()).unwrap();
    assert_eq!(zero.field.sup_norm(), 0.0);
}

#[test]
fn homogeneous_fields_rescale_to_themselves() {
    let f = paraboloid(square(129));
    let a = rescale(&f, &[0.0; 3], 0.7, &reference()).unwrap();
    let b = rescale(&f, &[0.0; 3], 0.23, &reference()).unwrap();
    assert!(a.field.sup_distance(&b.field) <= 1e-8);
    assert!(a.field.sup_distance(&paraboloid(reference())) <= 1e-8);
}

#[test]
fn rescale_rejects_balls_outside_the_grid() {
    let f = paraboloid(square(33));
    assert!(matches!(rescale(&f, &[0.5, 0.0, 0.0], 0.6, &reference()), Err(Error::BallNotContained { .. })));
}

#[test]
fn fit_recovers_rotated_half_plane() {
    let theta = PI / 2.0 + PI / 6.0;
    let hp = HalfPlaneSolution::planar(theta, &[1.0, 0.0]).unwrap();
    let f = eval_half_plane(&reference(), &hp);
    let fit = fit_field(&f).unwrap();
    let got = fit.best.nu()[1].atan2(fit.best.nu()[0]);
    assert!((got - theta).abs() <= 1e-3, "{got} vs {theta}");
    assert!(fit.l2_distance <= 1e-6, "{}", fit.l2_distance);
    assert!(fit.w12_distance >= fit.l2_distance);
}

#[test]
fn fit_recovers_direction_e() {
    let e = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
    let hp = HalfPlaneSolution::new(vec![0.0, 1.0], e.to_vec()).unwrap();
    let fit = fit_field(&eval_half_plane(&reference(), &hp)).unwrap();
    for (a, b) in fit.best.e().iter().zip(&e) {
        assert!((a - b).abs() <= 1e-6);
    }
}

#[test]
fn paraboloid_is_far_from_half_planes() {
    let fit = fit_field(&paraboloid(reference())).unwrap();
    assert!(fit.l2_distance >= 0.05, "{}", fit.l2_distance);
    assert!(fit.w12_distance >= fit.l2_distance);
}

#[test]
fn fit_of_zero_field_is_degenerate() {
    assert!(matches!(fit_field(&VectorField::zeros(reference(), 2)), Err(Error::DegenerateField(_))));
}

#[test]
fn fit_is_equivariant_under_quarter_turns() {
    let f = |x: [f64; 2], o: &mut [f64]| {
        let s = (0.8 * x[0] + 0.6 * x[1] + 0.1 * x[0] * x[1]).max(0.0);
        o[0] = 0.5 * s * s;
        o[1] = 0.1 * x[0] * x[0];
    };
    let a = fit_field(&VectorField::from_fn(reference(), 2, |x, o| f([x[0], x[1]], o))).unwrap();
    // sample at the inverse-rotated point, so the field is turned by +90°
    let b = fit_field(&VectorField::from_fn(reference(), 2, |x, o| f([x[1], -x[0]], o))).unwrap();
    assert!((a.l2_distance - b.l2_distance).abs() <= 1e-10);
    let (na, nb) = (a.best.nu(), b.best.nu());
    assert!((nb[0] + na[1]).abs() < 1e-6 && (nb[1] - na[0]).abs() < 1e-6);
}

#[test]
fn three_dimensional_fit() {
    let g = default_reference_grid(3).unwrap();
    let hp = HalfPlaneSolution::normalized(&[0.3, -0.2, 1.0], &[1.0, 0.0]).unwrap();
    let fit = fit_field(&eval_half_plane(&g, &hp)).unwrap();
    let dot: f64 = fit.best.nu().iter().zip(hp.nu()).map(|(a, b)| a * b).sum();
    assert!(dot > 1.0 - 1e-6, "{:?}", fit.best);
    assert!(fit.l2_distance < 1e-5);
}

#[test]
fn half_plane_sequence_is_cauchy() {
    let f = eval_half_plane(&square(257), &HalfPlaneSolution::canonical(2, 2));
    let seq = blowup_sequence(&f, &[0.0; 3], &[0.8, 0.4, 0.2, 0.1], &reference()).unwrap();
    assert!(seq.cauchy, "{:?}", seq.l1_differences);
    assert!(seq.l1_differences.iter().all(|&d| d <= 1e-8), "{:?}", seq.l1_differences);
}

#[test]
fn sequence_guards() {
    let f = paraboloid(square(65));
    let h = f.grid().h_max();
    assert!(matches!(
        blowup_sequence(&f, &[0.0; 3], &[0.5, 4.0 * h], &reference()),
        Err(Error::RadiusBelowResolution { .. })
    ));
    assert!(blowup_sequence(&f, &[0.0; 3], &[0.2, 0.5], &reference()).is_err());
}

#[test]
fn decay_of_exact_and_synthetic_scans() {
    let f = eval_half_plane(&square(129), &HalfPlaneSolution::canonical(2, 2));
    let radii = [0.1, 0.15, 0.2, 0.3, 0.4];
    let scan = weiss_scan(&f, &[0.0; 3], &radii).unwrap();
    assert!(matches!(fit_decay(&scan, 2), Err(Error::ExactHomogeneity)));

    let radii: Vec<f64> = (0..6).map(|k| 0.05 * 1.5f64.powi(k)).collect();
    let values: Vec<f64> = radii.iter().map(|r| 0.2 + 0.1 * r * r).collect();
    let scan = WeissScan::from_values([0.0; 3], radii, values).unwrap();
    let fit = fit_decay(&scan, 2).unwrap();
    assert!((fit.gamma_hat - 2.0).abs() <= 1e-6, "{}", fit.gamma_hat);
    assert!((fit.c_hat - 0.1).abs() <= 1e-6);
    assert!((fit.kappa_hat - 2.0 / 6.0).abs() < 1e-6 && (fit.beta_hat - 0.5).abs() < 1e-6);
}

#[test]
fn perturbed_solution_blows_up_to_a_half_plane() {
    let g = square(257);
    let data = BoundaryData::generate(&g, 2, &BoundaryGenerator::AngularMode { k: 2, amplitude: 0.05, seed: 1 }).unwrap();
    let u = solve(&g, 2, &data, &SolveParams::default()).unwrap().field;
    let h = g.h_max();
    let fb = extract_free_boundary(&u, default_delta(&u), default_eps_grad(&g)).unwrap();
    let x0 = fb.gamma0.iter().map(|p| p.point).min_by(|a, b| a[0].hypot(a[1]).total_cmp(&b[0].hypot(b[1]))).unwrap();
    let class = classify_point(&u, &x0, 5.0 * h, None).unwrap();
    assert_eq!(class.verdict, Verdict::Regular);
    let radii: Vec<f64> = (0..7).map(|k| 0.4 * 0.5f64.sqrt().powi(k)).collect();
    let seq = blowup_sequence(&u, &x0, &radii, &reference()).unwrap();
    assert!(seq.cauchy, "{:?}", seq.l1_differences);
    let fit = fit_half_plane(seq.fields.last().unwrap()).unwrap();
    assert!(fit.l2_distance <= 0.1, "{}", fit.l2_distance);

    // the excess is only resolved well above the mesh scale, away from the center
    let x1 = fb
        .gamma0
        .iter()
        .map(|p| p.point)
        .min_by(|a, b| (a[0] + 0.4).hypot(a[1]).total_cmp(&(b[0] + 0.4).hypot(b[1])))
        .unwrap();
    assert_eq!(classify_point(&u, &x1, 5.0 * h, None).unwrap().verdict, Verdict::Regular);
    let scan_radii: Vec<f64> = (0..9).map(|k| 0.1 * 1.2f64.powi(k)).filter(|&r| r <= 0.5).collect();
    let scan = weiss_scan(&u, &x1, &scan_radii).unwrap();
    let decay = fit_decay(&scan, 2).unwrap();
    assert!(decay.gamma_hat > 0.0 && decay.fit_quality >= 0.9, "{decay:?}");
    assert!(decay.beta_hat > 0.0 && decay.beta_hat < 1.0);
}
