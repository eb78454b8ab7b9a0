use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wavefront_core::birth::{
    check_corollary_conditions, check_gsc, check_oscillation_criterion, default_scan_limit, find_positive_fixed_point,
    oscillation_lhs, rescale_nicholson, BirthSpec, CorollaryReport, Equilibria, GscOutcome, ModelParams, Rescaled,
};
use wavefront_core::charroots::{
    count_roots_in_strip, critical_epsilon, double_root_scale, epsilon_bound, gaps_shrink, limit_consistency,
    solve_lambda, solve_perturbed, LimitRow, Strip, StripCount,
};
use wavefront_core::dde::{
    fit_left_tail, heteroclinic, local_maxima, validate_envelopes, EnvelopeReport, HeteroclinicOptions, TailFit,
};
use wavefront_core::numeric::sign_changes_about;
use wavefront_core::pdesim::{comoving_profile, compare_with_profile, simulate, PdeConfig, ProfileComparison};
use wavefront_core::region::{classify_region, sweep, RegionClass};
use wavefront_core::waveprofile::{
    delay_limit, epsilon_continuation, initial_guess, solve_profile, verify_theorem1_structure, ContinuationRow,
    Theorem1Report, WaveDiagnostics,
};

use crate::config::{AnalyzeConfig, ContinuationConfig, HeteroConfig, PdeRunConfig, RootsConfig, SweepConfig, WaveConfig};
use crate::error::CliError;
use crate::output::OutDir;

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{name} must be finite, got {v}")))
    }
}

#[derive(Serialize)]
struct AnalyzeReport {
    birth: BirthSpec,
    h: f64,
    rescaled: Option<Rescaled>,
    equilibria: Equilibria,
    max_g: f64,
    critical_point: Option<f64>,
    gsc: GscOutcome,
    oscillation_lhs: f64,
    oscillation_criterion: bool,
    corollary: CorollaryReport,
    region: &'static str,
    lambda: f64,
    critical_epsilon: Option<f64>,
    double_root_scale: Option<(f64, f64)>,
}

pub fn analyze(cfg: AnalyzeConfig, out: &mut OutDir) -> Result<(), CliError> {
    let (birth, h, rescaled) = match cfg.raw {
        Some(r) => {
            let s = rescale_nicholson(r.p, r.delta, r.b, r.h, r.diffusion)?;
            (BirthSpec::Nicholson { p: s.p }, s.h, Some(s))
        }
        None => (cfg.birth, cfg.h, None),
    };
    ModelParams::delay_ode(h)?;
    let g = birth.build()?;
    let eq = find_positive_fixed_point(&g, None)?;
    let u_max = cfg.u_max.unwrap_or_else(|| default_scan_limit(&g).min(50.0));
    let report = AnalyzeReport {
        birth,
        h,
        rescaled,
        equilibria: eq,
        max_g: g.max_value(),
        critical_point: g.critical_point(),
        gsc: check_gsc(&eq, h),
        oscillation_lhs: oscillation_lhs(&eq, h),
        oscillation_criterion: check_oscillation_criterion(&eq, h),
        corollary: check_corollary_conditions(&g, &eq, h, u_max),
        region: classify_region(&birth, birth.p(), h).class.as_str(),
        lambda: solve_lambda(eq.p, h)?.value,
        critical_epsilon: critical_epsilon(eq.p, h),
        double_root_scale: double_root_scale(eq.p, h),
    };
    out.json("analyze.json", "analyze", &report)
}

#[derive(Serialize)]
struct Residuals {
    lambda: f64,
    lambda1: f64,
    lambda_inf: f64,
}

#[derive(Serialize)]
struct StripCounts {
    xi: f64,
    finite: StripCount,
    right_half_plane: StripCount,
    total: i64,
}

#[derive(Serialize)]
struct RandomCheck {
    samples: usize,
    chain_failures: usize,
    max_scaled_residual: f64,
}

#[derive(Serialize)]
struct RootsReport {
    p: f64,
    h: f64,
    epsilon: f64,
    lambda: f64,
    lambda1: f64,
    lambda_inf: f64,
    residuals: Residuals,
    lemma12_bounds_ok: bool,
    strip_counts: StripCounts,
    epsilon_bound: f64,
    critical_epsilon: Option<f64>,
    double_root_scale: Option<(f64, f64)>,
    limit_table: Vec<LimitRow>,
    limit_gaps_shrink: bool,
    random_check: Option<RandomCheck>,
}

pub fn roots(cfg: RootsConfig, seed: u64, out: &mut OutDir) -> Result<(), CliError> {
    let (p, h, eps) = (finite("p", cfg.p)?, finite("h", cfg.h)?, finite("epsilon", cfg.epsilon)?);
    if !(p > 1.0) {
        return Err(CliError::Validation(format!("p must exceed 1, got {p}")));
    }
    if h < 0.0 {
        return Err(CliError::Validation(format!("h must be >= 0, got {h}")));
    }
    let lam = solve_lambda(p, h)?;
    let r = solve_perturbed(p, h, eps)?;
    let (res1, res_inf) = r.scaled_residuals();
    let xi = cfg.xi.unwrap_or(0.5 * r.lambda);
    let fin = count_roots_in_strip(p, h, eps, Strip::finite(p, h, xi))?;
    let rhp = count_roots_in_strip(p, h, eps, Strip::right_half_plane(p, eps))?;
    let limit_table = limit_consistency(p, h, &cfg.limit_epsilons)?;

    let random_check = (cfg.samples > 0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failures = 0;
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples {
            let sp = 10.0 - 9.0 * rng.gen::<f64>();
            let sh = 3.0 * rng.gen::<f64>();
            let se = epsilon_bound(sp) * rng.gen_range(f64::EPSILON..1.0);
            match solve_perturbed(sp, sh, se) {
                Ok(s) if s.chain_holds(sp) => {
                    let (a, b) = s.scaled_residuals();
                    worst = worst.max(a.abs()).max(b.abs());
                }
                _ => failures += 1,
            }
        }
        RandomCheck { samples: cfg.samples, chain_failures: failures, max_scaled_residual: worst }
    });

    let report = RootsReport {
        p,
        h,
        epsilon: eps,
        lambda: r.lambda,
        lambda1: r.lambda1,
        lambda_inf: r.lambda_inf,
        residuals: Residuals { lambda: lam.residual, lambda1: res1, lambda_inf: res_inf },
        lemma12_bounds_ok: r.chain_holds(p),
        strip_counts: StripCounts { xi, total: fin.count + rhp.count, finite: fin, right_half_plane: rhp },
        epsilon_bound: epsilon_bound(p),
        critical_epsilon: critical_epsilon(p, h),
        double_root_scale: double_root_scale(p, h),
        limit_gaps_shrink: gaps_shrink(&limit_table),
        limit_table,
        random_check,
    };
    out.json("roots.json", "roots", &report)
}

#[derive(Serialize)]
struct HeteroReport {
    h: f64,
    equilibria: Equilibria,
    lambda: f64,
    dt: f64,
    samples: usize,
    t_start: f64,
    t_end: f64,
    clamp_events: usize,
    tail_fit: Option<TailFit>,
    tail_relative_error: Option<f64>,
    tail_fit_error: Option<String>,
    envelopes: Option<EnvelopeReport>,
    envelope_error: Option<String>,
    sign_changes_about_k: usize,
    largest_local_max: Option<f64>,
    max_g: f64,
}

pub fn hetero(cfg: HeteroConfig, out: &mut OutDir) -> Result<(), CliError> {
    let g = cfg.birth.build()?;
    let params = ModelParams::delay_ode(finite("h", cfg.h)?)?;
    if cfg.steps_per_delay == 0 {
        return Err(CliError::Validation("steps_per_delay must be positive".into()));
    }
    let opts = HeteroclinicOptions {
        seed_amplitude: cfg.seed_amplitude,
        t_span: cfg.t_span,
        steps_per_delay: cfg.steps_per_delay,
        override_attracting: cfg.override_attracting,
        ..Default::default()
    };
    let (traj, eq) = heteroclinic(&g, &params, &opts)?;
    let lambda = solve_lambda(eq.p, params.h)?.value;
    let times = traj.times();
    let (tail_fit, tail_fit_error) = match fit_left_tail(&times, &traj.values, eq.k, cfg.tail_fraction) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let p = eq.p;
    let (envelopes, envelope_error) =
        match validate_envelopes(&traj, &g, &params, cfg.p1_factor * p, cfg.p2_factor * p, cfg.tail_fraction * eq.k) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let report = HeteroReport {
        h: params.h,
        equilibria: eq,
        lambda,
        dt: traj.dt,
        samples: traj.len(),
        t_start: traj.t0,
        t_end: traj.t_end(),
        clamp_events: traj.clamp_events,
        tail_relative_error: tail_fit.map(|f| ((f.exponent - lambda) / lambda).abs()),
        tail_fit,
        tail_fit_error,
        envelopes,
        envelope_error,
        sign_changes_about_k: sign_changes_about(&traj.values, eq.k, 1e-9 * eq.k),
        largest_local_max: local_maxima(&traj).into_iter().reduce(f64::max),
        max_g: g.max_value(),
    };
    let rows = (0..traj.len()).map(|i| [times[i], traj.values[i], traj.derivatives[i]]);
    out.csv("hetero.csv", &["t", "x", "xprime"], rows)?;
    out.json("hetero.json", "hetero", &report)
}

#[derive(Serialize)]
struct WaveReport {
    h: f64,
    epsilon: f64,
    speed: f64,
    epsilon_bound: f64,
    critical_epsilon: Option<f64>,
    equilibria: Equilibria,
    t_min: f64,
    spacing: f64,
    points: usize,
    diagnostics: WaveDiagnostics,
    structure: Theorem1Report,
}

pub fn wave(cfg: WaveConfig, out: &mut OutDir) -> Result<(), CliError> {
    let g = cfg.birth.build()?;
    let params = ModelParams::new(finite("h", cfg.h)?, 1.0, finite("epsilon", cfg.epsilon)?)?;
    if cfg.steps_per_delay == 0 {
        return Err(CliError::Validation("steps_per_delay must be positive".into()));
    }
    let (psi0, eq) = delay_limit(&g, params.h, cfg.steps_per_delay)?;
    let init = initial_guess(&psi0, &eq, params.h, params.epsilon, &cfg.grid)?;
    let sol = solve_profile(&g, &params, &init, &cfg.solver)?;
    let structure = verify_theorem1_structure(&sol, &g, &params);
    let x = &sol.profile;
    let rows = (0..x.len()).map(|i| [x.time(i), x.values[i], x.values[i] - eq.k]);
    out.csv("wave.csv", &["t", "x", "x_minus_K"], rows)?;
    let report = WaveReport {
        h: params.h,
        epsilon: params.epsilon,
        speed: 1.0 / params.epsilon,
        epsilon_bound: epsilon_bound(eq.p),
        critical_epsilon: critical_epsilon(eq.p, params.h),
        equilibria: eq,
        t_min: x.t_min,
        spacing: x.spacing,
        points: x.len(),
        diagnostics: sol.diagnostics,
        structure,
    };
    out.json("wave.json", "wave", &report)
}

#[derive(Serialize)]
struct ContinuationOut {
    h: f64,
    equilibria: Equilibria,
    rows: Vec<ContinuationRow>,
    distances_increasing: bool,
}

pub fn continuation(cfg: ContinuationConfig, out: &mut OutDir) -> Result<(), CliError> {
    let g = cfg.birth.build()?;
    let base = ModelParams::delay_ode(finite("h", cfg.h)?)?;
    let report = epsilon_continuation(&g, &base, &cfg.epsilons, &cfg.grid, &cfg.solver)?;
    let rows = report.rows.iter().map(|r| {
        (r.epsilon, r.distance_to_limit, r.distance_to_previous, r.iterations, r.residual_sup, r.min_value, r.normalization_defect)
    });
    out.csv(
        "continuation.csv",
        &["epsilon", "distance_to_limit", "distance_to_previous", "iterations", "residual_sup", "min_value", "normalization_defect"],
        rows,
    )?;
    let mut profile_rows = Vec::new();
    if let Some(limit) = &report.limit {
        profile_rows.extend((0..limit.len()).map(|i| (0.0, limit.time(i), limit.values[i])));
    }
    for (e, x) in cfg.epsilons.iter().zip(&report.profiles) {
        profile_rows.extend((0..x.len()).map(|i| (*e, x.time(i), x.values[i])));
    }
    out.csv("continuation_profiles.csv", &["epsilon", "t", "x"], profile_rows)?;
    let summary = ContinuationOut {
        h: base.h,
        equilibria: report.equilibria,
        distances_increasing: report.distances_increasing,
        rows: report.rows,
    };
    out.json("continuation.json", "continuation", &summary)
}

#[derive(Serialize)]
struct PdeReport {
    h: f64,
    d: f64,
    dx: f64,
    dt: f64,
    delay_steps: usize,
    t_end: f64,
    equilibria: Equilibria,
    speed: f64,
    speed_stderr: f64,
    speed_valid: bool,
    fit_r_squared: f64,
    fit_window_start: f64,
    final_front: Option<f64>,
    sign_changes_behind_front: usize,
    max_value: f64,
    max_g: f64,
    clamp_events: usize,
    comparison: Option<ProfileComparison>,
    comparison_error: Option<String>,
}

pub fn pde(cfg: PdeRunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let g = cfg.birth.build()?;
    let d = finite("d", cfg.d)?;
    if d < 0.0 {
        return Err(CliError::Validation(format!("d must be >= 0, got {d}")));
    }
    // d = 0 is carried by the config override; the model parameters need d > 0
    let params = ModelParams::new(finite("h", cfg.h)?, if d > 0.0 { d } else { 1.0 }, 0.0)?;
    let mut core = PdeConfig::new(cfg.domain[0], cfg.domain[1], cfg.nx, cfg.t_end, cfg.initial.clone());
    core.dt = cfg.dt;
    core.boundary = cfg.boundary;
    core.sample_interval = cfg.sample_interval;
    core.snapshot_times = cfg.snapshot_times.clone();
    core.diffusion = Some(d);
    let run = simulate(&g, &params, &core)?;
    let floor = 1e-6 * run.equilibria.k;

    let mut comparison = None;
    let mut comparison_error = None;
    if cfg.compare && d > 0.0 {
        let attempt = if run.track.speed_valid {
            comoving_profile(&run, run.track.speed, d)
                .and_then(|cm| compare_with_profile(&cm, run.track.speed, &g, &params, &cfg.solver).map(|r| (cm, r)))
                .map_err(|e| e.to_string())
        } else {
            Err("front speed could not be measured".to_string())
        };
        match attempt {
            Ok((cm, (cmp, wave))) => {
                let rows = (0..cm.len()).map(|i| {
                    let t = cm.time(i) - cm.crossing(0.5 * run.equilibria.k).unwrap_or(0.0);
                    (t, cm.values[i], wave.profile.value_at(t))
                });
                out.csv("pde_profile.csv", &["tau", "pde", "wave"], rows)?;
                comparison = Some(cmp);
            }
            Err(e) => comparison_error = Some(e),
        }
    }

    let tr = &run.track;
    out.csv("pde_front.csv", &["t", "position"], tr.times.iter().zip(&tr.positions).map(|(t, x)| (*t, *x)))?;
    out.csv("pde_final.csv", &["x", "u"], run.final_field.iter().enumerate().map(|(i, u)| (run.x(i), *u)))?;
    if !run.snapshots.is_empty() {
        let rows = run
            .snapshots
            .iter()
            .flat_map(|s| s.values.iter().enumerate().map(move |(i, u)| (s.t, i, *u)))
            .map(|(t, i, u)| (t, run.x(i), u))
            .collect::<Vec<_>>();
        out.csv("pde_snapshots.csv", &["t", "x", "u"], rows)?;
    }
    let report = PdeReport {
        h: params.h,
        d,
        dx: run.dx,
        dt: run.dt,
        delay_steps: run.delay_steps,
        t_end: run.t_end,
        equilibria: run.equilibria,
        speed: tr.speed,
        speed_stderr: tr.speed_stderr,
        speed_valid: tr.speed_valid,
        fit_r_squared: tr.fit_r_squared,
        fit_window_start: tr.fit_window_start,
        final_front: run.final_front(),
        sign_changes_behind_front: run.sign_changes_behind_front(floor),
        max_value: run.max_value,
        max_g: g.max_value(),
        clamp_events: run.clamp_events,
        comparison,
        comparison_error,
    };
    out.json("pde.json", "pde", &report)
}

#[derive(Serialize)]
struct SweepReport {
    p_points: usize,
    h_points: usize,
    cells: usize,
    counts: Vec<(RegionClass, usize)>,
}

pub fn region_sweep(cfg: SweepConfig, out: &mut OutDir) -> Result<(), CliError> {
    let map = sweep(&cfg.birth, &cfg.p_axis, &cfg.h_axis)?;
    out.text("sweep.csv", &map.to_csv())?;
    let report =
        SweepReport { p_points: map.p_axis.len(), h_points: map.h_axis.len(), cells: map.cells.len(), counts: map.counts() };
    out.json("sweep.json", "sweep", &report)
}
