use detconvex::certifier::{reference_functions, SAMPLE_EIG_RANGE};
use detconvex::detcalculus::{
    condition_lhs_full, default_first_difference_step, fd_first_directional, g_grad_form,
    g_hess_form, QuadFormSample,
};
use detconvex::linalg::{frob_inner, random_posdef, random_sym};
use detconvex::scalar::rel_diff;
use detconvex::{PosDefMatrix64, ScalarFunction, SymMatrix64};
use proptest::prelude::*;

fn log_range() -> (f64, f64) {
    (SAMPLE_EIG_RANGE.0.ln(), SAMPLE_EIG_RANGE.1.ln())
}

fn case(n: usize, seed: u64) -> (PosDefMatrix64, SymMatrix64) {
    (
        random_posdef(n, log_range(), seed).unwrap(),
        random_sym(n, 1.0, seed ^ 0x9e37_79b9).unwrap(),
    )
}

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3), Just(5)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hessian_form_is_quadratic_in_direction(n in dims(), idx in 0usize..13, seed: u64) {
        let fs = reference_functions(n);
        let f = &fs[idx % fs.len()];
        let (c, h) = case(n, seed);
        let base = g_hess_form(f, &c, &h).unwrap();
        for t in [-2.0, 0.5, 3.0] {
            let scaled = g_hess_form(f, &c, &h.scaled(t)).unwrap();
            prop_assert!(rel_diff(scaled, t * t * base, 0.0) <= 1e-12, "t = {t}: {scaled} vs {}", t * t * base);
        }
    }

    #[test]
    fn two_routes_to_the_hessian_agree(n in dims(), idx in 0usize..13, seed: u64) {
        let fs = reference_functions(n);
        let f = &fs[idx % fs.len()];
        let (c, h) = case(n, seed);
        let a = condition_lhs_full(f, &c, &h).unwrap() * c.det();
        let b = g_hess_form(f, &c, &h).unwrap();
        prop_assert!(rel_diff(a, b, 0.0) <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn hessian_matches_second_differences(n in dims(), idx in 0usize..13, seed: u64) {
        let fs = reference_functions(n);
        let f = &fs[idx % fs.len()];
        let (c, h) = case(n, seed);
        let q = QuadFormSample::evaluate(f, c, h).unwrap();
        prop_assert!(q.agrees(1e-5), "analytic {} fd {} (h = {})", q.analytic, q.fd, q.h_used);
    }

    #[test]
    fn gradient_matches_central_differences(n in dims(), idx in 0usize..13, seed: u64) {
        let fs = reference_functions(n);
        let f = &fs[idx % fs.len()];
        let (c, h) = case(n, seed);
        let a = g_grad_form(f, &c, &h).unwrap();
        let fd = fd_first_directional(f, &c, &h, default_first_difference_step(&c, &h)).unwrap().value;
        prop_assert!((a - fd).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {fd}");
    }

    #[test]
    fn neg_log_det_hessian_is_the_trace_term(n in 1usize..=6, seed: u64) {
        let f = ScalarFunction::parse("-ln(s)").unwrap();
        let (c, h) = case(n, seed);
        let cinv = c.inverse().as_matrix();
        let quad = frob_inner(&(h.as_matrix() * cinv), &(cinv * h.as_matrix())).unwrap();
        let hess = g_hess_form(&f, &c, &h).unwrap();
        prop_assert!(rel_diff(hess, quad, 0.0) <= 1e-10);
        prop_assert!(hess >= 0.0);
    }
}
