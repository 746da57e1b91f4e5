use detconvex::odelimit::{
    comparison_check, log_space, solve_livp_numeric, y_family, y_limit, y_limit_function,
    CurveTable, IvpSpec,
};
use detconvex::scalar::rel_diff;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rk4_tracks_closed_form(
        xi in 0.1f64..5.0,
        eta in -3.0f64..-0.01,
        n in 1usize..=6,
        ratio in 1.5f64..10.0,
        steps in 1000usize..3000,
    ) {
        let spec = IvpSpec::new(xi, eta, n).unwrap();
        let curve = solve_livp_numeric::<f64>(&spec, xi * ratio, steps).unwrap();
        for &(x, y) in &curve.points {
            let exact = y_limit(&spec, x).unwrap();
            prop_assert!(rel_diff(y, exact, 0.0) <= 1e-6, "x = {x}: {y} vs {exact}");
        }
    }

    #[test]
    fn limit_solves_the_equation(xi in 0.1f64..10.0, eta in -5.0f64..0.0, n in 1usize..=6) {
        let spec = IvpSpec::new(xi, eta, n).unwrap();
        let y = y_limit_function(&spec);
        for x in log_space::<f64>((1e-2, 1e2), 100).unwrap() {
            let j = y.eval_jet(x).unwrap();
            prop_assert!((j.d1 - spec.rhs(x, j.v)).abs() <= 1e-12 * (1.0 + j.v.abs()));
        }
    }

    #[test]
    fn steeper_members_cross_at_xi(xi in 0.2f64..5.0, eta in -3.0f64..-0.01, n in 2usize..=5, a in 0.01f64..2.0) {
        let spec = IvpSpec::new(xi, eta, n).unwrap();
        let mut xs = log_space::<f64>((xi / 10.0, xi), 200).unwrap();
        xs.extend(log_space::<f64>((xi, xi * 10.0), 200).unwrap().into_iter().skip(1));
        let points: Vec<(f64, f64)> = xs.iter().map(|&x| (x, y_family(&spec, a, x).unwrap())).collect();
        let curve = CurveTable::new("y_a", "", points).unwrap();
        let report = comparison_check(&curve, &spec).unwrap();
        prop_assert!(report.class.is_above(), "{:?}", report.class);
        prop_assert!(report.violations.is_empty());
        for p in &report.points {
            if p.x > xi {
                prop_assert!(p.y > p.y_limit);
            } else if p.x < xi {
                prop_assert!(p.y < p.y_limit);
            } else {
                prop_assert_eq!(p.y, p.y_limit);
            }
        }
    }
}

#[test]
fn estimated_derivative_of_limit_has_small_interior_residual() {
    let spec = IvpSpec::new(1.0, -1.5, 3).unwrap();
    let curve = CurveTable::sample("y_limit", "", (0.5, 2.0), 20_001, |x: f64| {
        y_limit(&spec, x)
    })
    .unwrap();
    let report = comparison_check(&curve, &spec).unwrap();
    let m = report.points.len();
    for p in &report.points[1..m - 1] {
        assert!(p.residual.abs() <= 1e-7, "x = {}: {}", p.x, p.residual);
    }
    assert!(report.violations.is_empty());
}
