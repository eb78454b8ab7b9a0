use proptest::prelude::*;
use wavefront_core::birth::{check_gsc, check_oscillation_criterion, find_positive_fixed_point, BirthFunction, BirthSpec};
use wavefront_core::region::{classify_region, sweep, Axis, RegionClass};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nicholson_equilibrium(p in 1.01f64..60.0) {
        let g = BirthFunction::nicholson(p).unwrap();
        let eq = find_positive_fixed_point(&g, None).unwrap();
        prop_assert!((g.value(eq.k) - eq.k).abs() <= 1e-12 * eq.k.max(1.0));
        prop_assert!((eq.k - p.ln()).abs() < 1e-10);
        prop_assert!((eq.gamma - (1.0 - p.ln())).abs() < 1e-9);
    }

    #[test]
    fn mackey_glass_equilibrium(p in 1.05f64..20.0, n in 2.0f64..12.0) {
        let g = BirthFunction::mackey_glass(p, n).unwrap();
        let eq = find_positive_fixed_point(&g, None).unwrap();
        prop_assert!((g.value(eq.k) - eq.k).abs() <= 1e-12 * eq.k.max(1.0));
        prop_assert!((eq.k - (p - 1.0).powf(1.0 / n)).abs() < 1e-9);
    }

    #[test]
    fn gsc_is_a_down_set_in_delay(p in 2.8f64..60.0, h in 0.0f64..4.0, dh in 0.0f64..1.0) {
        let eq = find_positive_fixed_point(&BirthFunction::nicholson(p).unwrap(), None).unwrap();
        if check_gsc(&eq, h + dh).holds {
            prop_assert!(check_gsc(&eq, h).holds);
        }
    }

    #[test]
    fn oscillation_is_an_up_set_in_delay(p in 1.1f64..60.0, h in 0.0f64..4.0, dh in 0.0f64..1.0) {
        let eq = find_positive_fixed_point(&BirthFunction::nicholson(p).unwrap(), None).unwrap();
        if check_oscillation_criterion(&eq, h) {
            prop_assert!(check_oscillation_criterion(&eq, h + dh));
        }
    }
}

#[test]
fn gsc_holds_for_small_delay_whenever_gamma_exceeds_minus_one() {
    // Γ ∈ (-1, 0): the right side of the condition is below 1 at h = 0
    for p in [3.0, 5.0, 7.0] {
        let eq = find_positive_fixed_point(&BirthFunction::nicholson(p).unwrap(), None).unwrap();
        assert!(eq.gamma > -1.0 && eq.gamma < 0.0);
        assert!(check_gsc(&eq, 0.0).holds);
    }
}

#[test]
fn sweep_boundaries_are_monotone() {
    let spec = BirthSpec::Nicholson { p: 2.0 };
    let map = sweep(&spec, &Axis { min: 1.1, max: 40.0, count: 40 }, &Axis { min: 0.0, max: 3.0, count: 31 }).unwrap();
    for (i, &p) in map.p_axis.iter().enumerate() {
        let row: Vec<_> = (0..map.h_axis.len()).map(|j| map.cell(i, j)).collect();
        // once the condition fails along h it keeps failing
        if let Some(first_fail) = row.iter().position(|c| c.class == RegionClass::GscFails) {
            assert!(row[first_fail..].iter().all(|c| c.class == RegionClass::GscFails), "p = {p}");
        }
        // oscillation switches on once and stays on while the condition holds
        let osc: Vec<bool> = row.iter().filter(|c| c.class.gsc_holds()).map(|c| c.class == RegionClass::GscHoldsOscillatory).collect();
        assert!(osc.windows(2).all(|w| w[0] <= w[1]), "p = {p}");
        if p <= std::f64::consts::E {
            assert!(row.iter().all(|c| c.class == RegionClass::MonotoneRegime));
        }
    }
    for c in &map.cells {
        assert_eq!(c.class, classify_region(&spec, c.p, c.h).class);
    }
}
