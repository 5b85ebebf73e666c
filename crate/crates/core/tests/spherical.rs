use std::f64::consts::PI;

use proptest::prelude::*;
use vecobstacle::spherical::*;
use vecobstacle::Error;

fn constant(value: f64) -> Potential {
    Potential::Constant { value }
}

#[test]
fn constant_potential_shifts_the_laplacian() {
    let p = SphericalProblem::arc(0.0, PI, constant(0.01), 400).unwrap();
    let r = eigensolve(&p, 3).unwrap();
    assert!((r.lambdas[0] - 1.01).abs() < 1e-4, "{:?}", r.lambdas);
    assert!((r.lambdas[1] - 4.01).abs() < 1e-3 && (r.lambdas[2] - 9.01).abs() < 1e-3);
    let one = SphericalProblem::arc(0.0, PI, constant(1.0), 400).unwrap();
    assert!((eigensolve(&one, 1).unwrap().lambdas[0] - 2.0).abs() < 1e-4);
}

#[test]
fn half_circle_with_inverse_potential() {
    let p = SphericalProblem::arc(0.0, PI, Potential::InverseHalfPlane, 2000).unwrap();
    let r = eigensolve(&p, 2).unwrap();
    assert!((r.lambdas[0] / 4.0 - 1.0).abs() < 0.005, "{}", r.lambdas[0]);
    // eigenfunction ∝ sin²θ
    let v = &r.eigenfunctions[0];
    let s: Vec<f64> = r.nodes.iter().map(|t| t.sin().powi(2)).collect();
    let a = v.iter().zip(&s).map(|(x, y)| x * y).sum::<f64>() / s.iter().map(|y| y * y).sum::<f64>();
    let err = v.iter().zip(&s).map(|(x, y)| (x - a * y).powi(2)).sum::<f64>().sqrt() / v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(err < 1e-2, "{err}");
    let report = verify_half_sphere(2).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(report.lambda2 >= 6.0 - 0.1);
}

#[test]
fn half_sphere_with_inverse_potential() {
    let p = SphericalProblem::cap(0.0, 0.5 * PI, Potential::InverseHalfPlane, 2000).unwrap();
    let r = eigensolve(&p, 1).unwrap();
    assert!((r.lambdas[0] / 6.0 - 1.0).abs() < 0.01, "{}", r.lambdas[0]);
    let report = verify_half_sphere(3).unwrap();
    assert!(report.passed && report.eigenfunction_deviation < 1e-2, "{report:?}");
    assert!(matches!(verify_half_sphere(4), Err(Error::InvalidDimension(4))));
}

#[test]
fn floored_potential_is_consistent_with_the_shift_bound() {
    // q = 2/sin²θ has minimum q₀ = 2, and λ₁(−Δ′) = 1 on a half circle
    let p = SphericalProblem::arc(0.0, PI, Potential::InverseHalfPlane, 1000).unwrap();
    let r = check_shift_bound(&p, 3).unwrap();
    assert_eq!(r.q0, 2.0);
    assert!(r.holds && r.strict, "{r:?}");
    assert!(r.lambdas[0] >= 2.0 + 1.0 - 1e-8);
}

#[test]
fn hemisphere_laplacian_spectrum_includes_azimuthal_modes() {
    let p = SphericalProblem::cap(0.0, 0.5 * PI, constant(1e-6), 400).unwrap();
    let r = eigensolve(&p, 4).unwrap();
    let expected = [2.0, 6.0, 6.0, 12.0];
    for (l, e) in r.lambdas.iter().zip(expected) {
        assert!((l - e).abs() < 1e-3, "{:?}", r.lambdas);
    }
    assert_eq!(&r.azimuthal[..3], &[0, 1, 1]);
}

#[test]
fn singular_and_invalid_problems_are_rejected() {
    assert!(matches!(
        SphericalProblem::arc(0.0, 1.2 * PI, Potential::InverseHalfPlane, 100),
        Err(Error::PotentialSingular { .. })
    ));
    assert!(SphericalProblem::arc(0.0, PI, constant(1.0), 10).is_err());
    assert!(SphericalProblem::cap(0.0, 1.1 * PI, constant(1.0), 100).is_err());
    assert!(SphericalProblem::new(Geometry::Arc, 0.0, PI, constant(1.0), 2.0, 100).is_err());
    let p = SphericalProblem::arc(0.0, PI, constant(1.0), 100).unwrap();
    assert!(eigensolve(&p, 6).is_err() && eigensolve(&p, 0).is_err());
}

#[test]
fn domain_monotonicity_examples() {
    let p = SphericalProblem::arc(0.0, PI, constant(1.0), 400).unwrap();
    let r = check_domain_monotonicity(&p, &[0.8], 2).unwrap();
    assert!(r.passed, "{r:?}");
    assert!((r.rows[1].lo - 0.1 * PI).abs() < 1e-12 && (r.rows[1].hi - 0.9 * PI).abs() < 1e-12);
    assert!(r.rows[1].lambdas[0] > r.rows[0].lambdas[0]);

    let same = check_domain_monotonicity(&p, &[1.0], 2).unwrap();
    assert!(same.passed);
    assert_eq!(same.rows[0].lambdas, same.rows[1].lambdas);

    let cap = SphericalProblem::cap(0.0, 0.6 * PI, Potential::HeightSquared { q0: 0.5 }, 300).unwrap();
    assert!(check_domain_monotonicity(&cap, &[0.9, 0.7, 0.5], 3).unwrap().passed);
    assert!(check_domain_monotonicity(&cap, &[1.5], 3).is_err());
}

#[test]
fn seeded_potentials_are_monotone_and_shift_bounded() {
    for seed in 0..20u64 {
        let q = Potential::RandomSmooth { seed, q0: 1.0, amplitude: 2.0 };
        let (problem, fractions) = if seed % 2 == 0 {
            (SphericalProblem::arc(0.0, PI, q, 300).unwrap(), [0.95, 0.85, 0.7, 0.55, 0.4])
        } else {
            (SphericalProblem::cap(0.0, 0.6 * PI, q, 300).unwrap(), [0.95, 0.85, 0.7, 0.55, 0.4])
        };
        let mono = check_domain_monotonicity(&problem, &fractions, 3).unwrap();
        assert!(mono.passed, "seed {seed}: {mono:?}");
        let shift = check_shift_bound(&problem, 3).unwrap();
        assert!(shift.holds && shift.strict, "seed {seed}: {shift:?}");
    }
}

#[test]
fn shift_bound_examples() {
    let p = SphericalProblem::arc(0.2, 2.9, constant(0.7), 300).unwrap();
    let r = check_shift_bound(&p, 4).unwrap();
    assert!(r.constant_potential && !r.strict && r.holds);
    assert!(r.gaps.iter().all(|g| g.abs() <= 1e-8), "{:?}", r.gaps);

    let q = SphericalProblem::arc(0.0, PI, Potential::HeightSquared { q0: 1.0 }, 300).unwrap();
    let r = check_shift_bound(&q, 3).unwrap();
    assert!(r.strict && r.gaps.iter().all(|g| *g >= 1e-3), "{:?}", r.gaps);
}

#[test]
fn perturbed_half_domains() {
    let r = check_perturbed_cap(2, &[0.0, 0.1], 1.0).unwrap();
    assert!((r.rows[0].lambda2 - 5.0).abs() < 1e-4);
    assert!(r.rows.iter().all(|row| row.above) && r.threshold == Some(0.1));
    // outside the small-δ regime λ₂ may fall below 2n; that is reported, not an error
    let weak = check_perturbed_cap(2, &[0.3], 0.01).unwrap();
    assert!(!weak.rows[0].above && weak.threshold.is_none());
    let cap = check_perturbed_cap(3, &[0.0, 0.05], 1.0).unwrap();
    assert!(cap.rows.iter().all(|row| row.above && row.lambda2 > 6.0), "{cap:?}");
    assert!(check_perturbed_cap(2, &[0.5], 1.0).is_err());
}

fn refinement(problem: &SphericalProblem) -> [f64; 3] {
    let l: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| eigensolve(&problem.with_nodes(n).unwrap(), 1).unwrap().lambdas[0])
        .collect();
    [l[0], l[1], l[2]]
}

#[test]
fn refinement_is_second_order() {
    for problem in [
        SphericalProblem::arc(0.0, PI, constant(1.0), 100).unwrap(),
        SphericalProblem::arc(0.0, PI, Potential::InverseHalfPlane, 100).unwrap(),
        SphericalProblem::cap(0.0, 0.5 * PI, constant(1.0), 100).unwrap(),
        SphericalProblem::cap(0.0, 0.5 * PI, Potential::InverseHalfPlane, 100).unwrap(),
    ] {
        let l = refinement(&problem);
        assert!((l[0] - l[1]).abs() <= 4.0 * (l[1] - l[2]).abs() + 1e-10, "{problem:?}: {l:?}");
    }
    // variable smooth potentials sit on either side of the ratio 4
    for problem in [
        SphericalProblem::arc(0.0, PI, Potential::HeightSquared { q0: 1.0 }, 100).unwrap(),
        SphericalProblem::cap(0.0, 0.6 * PI, Potential::HeightSquared { q0: 0.5 }, 100).unwrap(),
        SphericalProblem::arc(0.3, 2.5, Potential::RandomSmooth { seed: 3, q0: 1.0, amplitude: 2.0 }, 100).unwrap(),
    ] {
        let l = refinement(&problem);
        let ratio = (l[0] - l[1]) / (l[1] - l[2]);
        assert!((ratio - 4.0).abs() < 0.1, "{problem:?}: {l:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn spectra_are_ordered_positive_and_rayleigh_consistent(
        seed in 0u64..10_000,
        lo in 0.0f64..1.0,
        len in 0.8f64..2.0,
        cap in any::<bool>(),
    ) {
        let q = Potential::RandomSmooth { seed, q0: 0.5, amplitude: 1.0 };
        let problem = if cap {
            SphericalProblem::cap(lo, (lo + len).min(PI), q, 200).unwrap()
        } else {
            SphericalProblem::arc(lo, lo + len, q, 200).unwrap()
        };
        let r = eigensolve(&problem, 3).unwrap();
        prop_assert!(r.lambdas[0] < r.lambdas[1]);
        prop_assert!(r.lambdas.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.eigenfunctions[0].iter().all(|&v| v > 0.0));
        let rq = problem.rayleigh_quotient(&r.eigenfunctions[0]);
        prop_assert!((rq - r.lambdas[0]).abs() <= 1e-8 * r.lambdas[0].max(1.0));
        let w = problem.weights();
        let h = problem.spacing();
        let norm: f64 = r.eigenfunctions[0].iter().zip(&w).map(|(v, wi)| wi * v * v * h).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
    }
}
