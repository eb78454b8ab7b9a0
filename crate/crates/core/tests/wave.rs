use wavefront_core::birth::{BirthFunction, ModelParams};
use wavefront_core::waveprofile::{
    apply_wave_operator, delay_limit, initial_guess, solve_profile, GridOptions, GridProfile, SolveOptions,
    WaveSolution,
};

fn nicholson_e2() -> BirthFunction {
    BirthFunction::nicholson(std::f64::consts::E.powi(2)).unwrap()
}

fn solve_at(spacing: f64) -> WaveSolution {
    let g = nicholson_e2();
    let params = ModelParams::new(0.5, 1.0, 0.05).unwrap();
    let (psi0, eq) = delay_limit(&g, 0.5, 200).unwrap();
    let grid = GridOptions { target_spacing: spacing, ..Default::default() };
    let init = initial_guess(&psi0, &eq, 0.5, 0.05, &grid).unwrap();
    solve_profile(&g, &params, &init, &SolveOptions::default()).unwrap()
}

fn gap(a: &GridProfile, b: &GridProfile, lo: f64, hi: f64) -> f64 {
    (0..=800)
        .map(|i| lo + (hi - lo) * i as f64 / 800.0)
        .map(|t| (a.value_at(t) - b.value_at(t)).abs())
        .fold(0.0, f64::max)
}

// bound on the error of linear interpolation, from second differences
fn interpolation_bound(x: &GridProfile) -> f64 {
    x.values.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).fold(0.0, f64::max) / 8.0
}

#[test]
fn second_order_under_refinement() {
    let s: Vec<_> = [0.025, 0.0125, 0.00625].iter().map(|&d| solve_at(d)).collect();
    let e1 = gap(&s[0].profile, &s[1].profile, -5.0, 8.0);
    let e2 = gap(&s[1].profile, &s[2].profile, -5.0, 8.0);
    let ratio = e1 / e2;
    assert!((3.0..5.5).contains(&ratio), "ratio {ratio}: {e1:e} {e2:e}");
}

#[test]
fn independent_of_initial_guess() {
    let g = nicholson_e2();
    let params = ModelParams::new(0.5, 1.0, 0.05).unwrap();
    let (psi0, eq) = delay_limit(&g, 0.5, 200).unwrap();
    let a0 = initial_guess(&psi0, &eq, 0.5, 0.05, &GridOptions::default()).unwrap();
    let k = eq.k;
    let b0 = GridProfile::sample(a0.t_min, a0.spacing, a0.len(), 0.0, k, |t| {
        let s = 1.0 / (1.0 + (-1.5 * (t - 1.0)).exp());
        0.5 * a0.value_at(t) + 0.5 * k * s
    })
    .unwrap();
    let opts = SolveOptions::default();
    let a = solve_profile(&g, &params, &a0, &opts).unwrap();
    let b = solve_profile(&g, &params, &b0, &opts).unwrap();
    // the two grids end up offset by a fraction of a cell, so compare through the interpolant
    let bound = interpolation_bound(&a.profile) + interpolation_bound(&b.profile) + 10.0 * opts.tol;
    let d = gap(&a.profile, &b.profile, -5.0, 8.0);
    assert!(d <= bound, "{d:e} > {bound:e}");
}

#[test]
fn solution_is_a_fixed_point_below_the_hump_bound() {
    let s = solve_at(0.025);
    let g = nicholson_e2();
    let params = ModelParams::new(0.5, 1.0, 0.05).unwrap();
    let image = apply_wave_operator(&s.profile, &g, &params).unwrap();
    let n = s.profile.len();
    let res = s.profile.values[1..n - 1]
        .iter()
        .zip(&image.values[1..n - 1])
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(res < 1e-8, "{res:e}");
    assert!(s.diagnostics.positive);
    assert!(s.diagnostics.hump_max <= g.max_value() + 1e-9);
}

#[test]
fn constant_states_are_fixed() {
    let g = nicholson_e2();
    let params = ModelParams::new(1.0, 1.0, 0.1).unwrap();
    for c in [0.0, 2.0] {
        let x = GridProfile::constant(-10.0, 0.05, 401, c).unwrap();
        let y = apply_wave_operator(&x, &g, &params).unwrap();
        assert!(y.values.iter().all(|v| (v - c).abs() < 1e-12));
    }
}
