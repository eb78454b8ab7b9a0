use approx::assert_relative_eq;
use proptest::prelude::*;
use wavefront_core::charroots::{
    char_zero, check_k_hyperbolicity, critical_epsilon, epsilon_bound, minimal_wave_root, solve_lambda,
    solve_perturbed,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perturbed_chain_holds(p in 1.01f64..10.0, h in 0.0f64..3.0, frac in 0.01f64..0.99) {
        let eps = frac * epsilon_bound(p);
        let r = solve_perturbed(p, h, eps).unwrap();
        prop_assert!(r.chain_holds(p), "{r:?}");
        let (res1, res_inf) = r.scaled_residuals();
        prop_assert!(res1 <= 1e-10 && res_inf <= 1e-10);
    }

    #[test]
    fn lambda_decreases_with_delay(p in 1.05f64..10.0, h in 0.0f64..2.5, dh in 0.01f64..0.5) {
        let a = solve_lambda(p, h).unwrap().value;
        let b = solve_lambda(p, h + dh).unwrap().value;
        prop_assert!(b < a);
    }

    #[test]
    fn wave_root_grows_with_epsilon(p in 1.05f64..10.0, h in 0.0f64..3.0, frac in 0.05f64..0.9) {
        let e1 = frac * epsilon_bound(p);
        let e2 = 1.1 * e1;
        let l0 = solve_lambda(p, h).unwrap().value;
        let l1 = minimal_wave_root(p, h, e1).unwrap();
        let l2 = minimal_wave_root(p, h, e2).unwrap();
        prop_assert!(l0 < l1 && l1 < l2);
    }
}

#[test]
fn root_is_a_zero() {
    let r = solve_lambda(3.0, 0.7).unwrap();
    assert!(char_zero(3.0, 0.7, 0.0, r.value).abs() < 1e-12);
}

#[test]
fn critical_epsilon_exceeds_lemma_range() {
    // the existence range is a sufficient condition; the true threshold lies beyond it
    for (p, h) in [(2.0, 0.5), (std::f64::consts::E, 1.0), (7.389, 0.25)] {
        let crit = critical_epsilon(p, h).unwrap();
        assert!(crit > epsilon_bound(p));
        assert!(minimal_wave_root(p, h, 0.999 * crit).is_some());
        assert!(minimal_wave_root(p, h, 1.001 * crit).is_none());
    }
}

#[test]
fn undelayed_critical_speed() {
    for p in [1.5, 2.0, 5.0] {
        let crit = critical_epsilon(p, 0.0).unwrap();
        assert_relative_eq!(1.0 / crit, 2.0 * (p - 1.0).sqrt(), max_relative = 1e-8);
    }
}

#[test]
fn hyperbolicity_scan_for_unit_gamma() {
    for h in [0.5, 1.0, 2.0] {
        let r = check_k_hyperbolicity(-1.0, h, 0.05, None).unwrap();
        assert!(r.hyperbolic, "h = {h}: {r:?}");
    }
    // below the hypothesis threshold the check refuses to run
    assert!(check_k_hyperbolicity(-1.0, 0.2, 0.0, None).is_err());
}
