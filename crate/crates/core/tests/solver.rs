use proptest::prelude::*;
use vecobstacle::fields::eval_half_plane;
use vecobstacle::solver::{
    oracle_solve, prox_shrink, residual, solve, BoundaryData, BoundaryGenerator, SolveParams, StepRule,
};
use vecobstacle::{Error, Grid, HalfPlaneSolution, VectorField};

fn square(count: usize) -> Grid {
    Grid::cube(2, -1.0, 1.0, count).unwrap()
}

fn tight() -> SolveParams {
    SolveParams::default()
}

#[test]
fn zero_boundary_gives_zero_field() {
    let g = square(17);
    let sol = solve(&g, 2, &BoundaryData::zero(&g, 2), &SolveParams::default()).unwrap();
    assert!(sol.report.converged);
    assert_eq!(sol.field.sup_norm(), 0.0);
    let oracle = oracle_solve(&square(9), &BoundaryData::zero(&square(9), 2)).unwrap();
    assert_eq!(oracle.sup_norm(), 0.0);
}

#[test]
fn one_dimensional_profile_agrees_with_oracle() {
    let g = Grid::new(1, &[(0.0, 1.0)], &[5]).unwrap();
    let data = BoundaryData::from_values(&g, 1, vec![0.0, 0.5]).unwrap();
    let oracle = oracle_solve(&g, &data).unwrap();
    let sol = solve(&g, 1, &data, &tight()).unwrap();
    let values = oracle.values();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    assert!(values.iter().all(|&v| v >= 0.0));
    assert!(sol.field.sup_distance(&oracle) <= 1e-8, "{}", sol.field.sup_distance(&oracle));
}

#[test]
fn random_boundary_matches_oracle() {
    let g = square(8);
    for seed in 0..5 {
        let data = BoundaryData::generate(&g, 2, &BoundaryGenerator::Random { seed, amplitude: 0.2 }).unwrap();
        let oracle = oracle_solve(&g, &data).unwrap();
        let sol = solve(&g, 2, &data, &tight()).unwrap();
        let d = sol.field.sup_distance(&oracle);
        assert!(d <= 1e-6, "seed {seed}: {d}");
    }
}

#[test]
fn three_dimensional_instance_matches_oracle() {
    let g = Grid::cube(3, -1.0, 1.0, 7).unwrap();
    let data = BoundaryData::generate(&g, 2, &BoundaryGenerator::Twist { angle: 0.8, seed: 4 }).unwrap();
    let oracle = oracle_solve(&g, &data).unwrap();
    let sol = solve(&g, 2, &data, &tight()).unwrap();
    assert!(sol.field.sup_distance(&oracle) <= 1e-6);
}

#[test]
fn oracle_rejects_large_instances() {
    let g = square(13);
    assert!(matches!(oracle_solve(&g, &BoundaryData::zero(&g, 1)), Err(Error::InstanceTooLarge(_))));
    let g = square(8);
    assert!(matches!(oracle_solve(&g, &BoundaryData::zero(&g, 3)), Err(Error::InstanceTooLarge(_))));
}

#[test]
fn symmetric_data_gives_symmetric_oracle() {
    let g = square(11);
    let hp = HalfPlaneSolution::canonical(2, 2);
    let data = BoundaryData::from_fn(&g, 2, |x, o| {
        hp.value(x, o);
        o[1] = 0.1 * x[0] * x[0];
    })
    .unwrap();
    let u = oracle_solve(&g, &data).unwrap();
    let c = g.counts();
    for i in 0..c[0] {
        for j in 0..c[1] {
            let a = u.node(g.index([i, j, 0]));
            let b = u.node(g.index([c[0] - 1 - i, j, 0]));
            assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
        }
    }
}

#[test]
fn half_plane_is_reproduced() {
    let g = square(129);
    let hp = HalfPlaneSolution::normalized(&[0.3, 1.0], &[1.0, 0.0]).unwrap();
    let exact = eval_half_plane(&g, &hp);
    let data = BoundaryData::from_field(&exact).unwrap();
    let sol = solve(&g, 2, &data, &SolveParams::default()).unwrap();
    let h = g.h_max();
    let err = sol.field.sup_distance(&exact);
    assert!(err <= 10.0 * h * h, "error {err:e} vs bound {:e}", 10.0 * h * h);
}

#[test]
fn plain_proximal_gradient_is_monotone() {
    let g = square(33);
    let data = BoundaryData::generate(&g, 2, &BoundaryGenerator::Random { seed: 11, amplitude: 0.1 }).unwrap();
    for rule in [StepRule::Backtracking { initial_lipschitz: None }, StepRule::Backtracking { initial_lipschitz: Some(1.0) }, StepRule::Fixed { step: None }] {
        let params = SolveParams { momentum: false, step_rule: rule, history_stride: 1, max_iter: 3000, ..SolveParams::default() };
        let report = match solve(&g, 2, &data, &params) {
            Ok(s) => s.report,
            Err(Error::NotConverged { best, .. }) => best.report,
            Err(e) => panic!("{e}"),
        };
        let h = &report.energy_history_decimated;
        assert!(h.len() > 10);
        assert!(h.windows(2).all(|w| w[1].1 <= w[0].1), "energy increased");
    }
}

#[test]
fn minimiser_is_independent_of_the_seed_field() {
    let g = square(33);
    let data = BoundaryData::generate(&g, 2, &BoundaryGenerator::AngularMode { k: 2, amplitude: 0.05, seed: 9 }).unwrap();
    let a = solve(&g, 2, &data, &SolveParams::default()).unwrap();
    let seed = VectorField::from_fn(g.clone(), 2, |x, o| {
        o[0] = (3.0 * x[0]).sin();
        o[1] = x[1] * x[0];
    });
    let b = solve(&g, 2, &data, &SolveParams { seed_field: Some(seed), ..SolveParams::default() }).unwrap();
    assert!(a.field.sup_distance(&b.field) <= 1e-6);
}

#[test]
fn not_converged_returns_best_iterate() {
    let g = square(33);
    let data = BoundaryData::generate(&g, 2, &BoundaryGenerator::Random { seed: 2, amplitude: 0.1 }).unwrap();
    let params = SolveParams { max_iter: 5, ..SolveParams::default() };
    match solve(&g, 2, &data, &params) {
        Err(Error::NotConverged { iterations, best }) => {
            assert_eq!(iterations, 5);
            assert!(!best.report.converged);
            assert!(best.report.final_energy.is_finite());
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn residual_of_exact_half_plane() {
    let g = square(65);
    let exact = eval_half_plane(&g, &HalfPlaneSolution::canonical(2, 2));
    let r = residual(&exact, 1e-6).unwrap();
    assert!(r.pde_residual_sup <= 1e-10, "{}", r.pde_residual_sup);
    assert!(r.zero_set_laplacian_sup <= 1e-10);
    let zero = VectorField::zeros(g, 2);
    let r = residual(&zero, 1e-6).unwrap();
    assert_eq!((r.pde_residual_sup, r.zero_set_laplacian_sup), (0.0, 0.0));
}

#[test]
fn residual_of_solved_random_problem() {
    let g = square(257);
    let data = BoundaryData::generate(&g, 2, &BoundaryGenerator::Random { seed: 3, amplitude: 0.05 }).unwrap();
    let sol = solve(&g, 2, &data, &SolveParams::default()).unwrap();
    let r = residual(&sol.field, 1e-6 * sol.field.sup_norm()).unwrap();
    assert!(r.pde_residual_sup <= 5e-2);
}

proptest! {
    #[test]
    fn shrink_is_the_prox_of_twice_the_norm(z in proptest::collection::vec(-5.0f64..5.0, 1..4), tau in 0.01f64..3.0) {
        let p = prox_shrink(&z, tau);
        let obj = |v: &[f64]| {
            v.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * tau)
                + 2.0 * v.iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        let best = obj(&p);
        for k in 0..z.len() {
            for s in [-1e-4, 1e-4] {
                let mut q = p.clone();
                q[k] += s;
                prop_assert!(obj(&q) >= best - 1e-12);
            }
        }
    }
}
