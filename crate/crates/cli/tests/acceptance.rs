//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavefront_core::birth::{BirthFunction, CustomBirth, ModelParams};
use wavefront_core::charroots::{
    check_k_hyperbolicity, epsilon_bound, gaps_shrink, limit_consistency, solve_lambda, solve_perturbed, RootError,
};
use wavefront_core::dde::{
    fit_tail_exponent, heteroclinic, integrate, validate_envelopes, History, HeteroclinicOptions,
};
use wavefront_core::pdesim::{compare_with_profile, run_front_experiment, simulate, Boundary, InitialProfile, PdeConfig, PdeRun};
use wavefront_core::waveprofile::{
    aligned_spacing, apply_wave_operator, epsilon_continuation, solve_from_delay_limit, verify_theorem1_structure,
    GridOptions, GridProfile, SolveOptions,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

const PS: [f64; 3] = [2.0, E, E * E];
const HS: [f64; 3] = [0.25, 0.5, 1.0];

fn root_chain() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut failures, mut worst) = (0, 0.0f64);
    let samples = 500;
    for _ in 0..samples {
        let p = 10.0 - 9.0 * rng.gen::<f64>();
        let h = 3.0 * rng.gen::<f64>();
        let eps = epsilon_bound(p) * rng.gen_range(f64::EPSILON..1.0);
        match solve_perturbed(p, h, eps) {
            Ok(r) if r.chain_holds(p) => {
                let (a, b) = r.scaled_residuals();
                let lam = solve_lambda(p, h).unwrap().residual;
                worst = worst.max(a.abs()).max(b.abs()).max(lam.abs());
            }
            _ => failures += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && worst <= 1e-10 && secs < 5.0,
        format!("{samples} samples, {failures} chain failures, max residual {worst:.1e}, {secs:.2} s"),
    )
}

fn limit_consistency_grid() -> Outcome {
    let mut bad = Vec::new();
    let mut widest: f64 = 0.0;
    for p in PS {
        for h in HS {
            match limit_consistency(p, h, &[0.2, 0.1, 0.05, 0.025]) {
                Ok(rows) if gaps_shrink(&rows) && rows[3].gap < rows[2].gap => widest = widest.max(rows[3].gap),
                _ => bad.push(format!("({p:.3}, {h})")),
            }
        }
    }
    outcome(bad.is_empty(), format!("9 cases, largest gap at 0.025 = {widest:.2e}, failing {bad:?}"))
}

fn heteroclinic_tails() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for p in PS {
        for h in HS {
            let g = BirthFunction::nicholson(p).unwrap();
            let params = ModelParams::delay_ode(h).unwrap();
            let res = heteroclinic(&g, &params, &HeteroclinicOptions::default()).and_then(|(traj, eq)| {
                let fit = fit_tail_exponent(&traj, eq.k)?;
                let env = validate_envelopes(&traj, &g, &params, 0.95 * p, 1.05 * p, 0.01 * eq.k)?;
                Ok((fit, env))
            });
            match res {
                Ok((fit, env)) => {
                    let lambda = solve_lambda(p, h).unwrap().value;
                    let rel = ((fit.exponent - lambda) / lambda).abs();
                    worst = worst.max(rel);
                    if !(rel < 0.01 && fit.accepted && env.sandwich_ok && env.window_inequality_ok) {
                        bad.push(format!("({p:.3}, {h})"));
                    }
                }
                Err(e) => bad.push(format!("({p:.3}, {h}): {e}")),
            }
        }
    }
    outcome(bad.is_empty(), format!("9 cases, worst tail error {:.3}%, failing {bad:?}", 100.0 * worst))
}

fn operator_identities() -> Outcome {
    let g = BirthFunction::nicholson(E * E).unwrap();
    let mut worst: f64 = 0.0;
    for eps in [0.01, 0.05, 0.1] {
        let params = ModelParams::new(0.5, 1.0, eps).unwrap();
        for c in [0.0, 2.0] {
            let x = GridProfile::constant(-20.0, 0.025, 1601, c).unwrap();
            let tx = apply_wave_operator(&x, &g, &params).unwrap();
            worst = tx.values.iter().map(|v| (v - c).abs()).fold(worst, f64::max);
        }
    }
    let (p, h, eps) = (2.0, 1.0, 0.1);
    let lambda1 = solve_perturbed(p, h, eps).unwrap().lambda1;
    let linear = BirthFunction::custom(
        CustomBirth {
            name: "linear".into(),
            g: Arc::new(move |u| p * u),
            d1: Arc::new(move |_| p),
            d2: Arc::new(|_| 0.0),
            d3: Some(Arc::new(|_| 0.0)),
        },
        1.0,
    )
    .unwrap();
    let params = ModelParams::new(h, 1.0, eps).unwrap();
    let spacing = aligned_spacing(h, 0.004);
    let n = (60.0 / spacing) as usize + 1;
    let x = GridProfile::sample(-60.0, spacing, n, 0.0, 0.0, |t| (lambda1 * t).exp()).unwrap();
    let x = GridProfile { right_tail: x.values[n - 1], ..x };
    let tx = apply_wave_operator(&x, &linear, &params).unwrap();
    let eig = (0..n)
        .filter(|&i| (-40.0..=-2.0).contains(&x.time(i)))
        .map(|i| (tx.values[i] - x.values[i]).abs() / x.values[i])
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-10 && eig <= 1e-6,
        format!("constants off by {worst:.1e}, eigenfunction relative error {eig:.1e}"),
    )
}

fn profile_structure() -> Outcome {
    let g = BirthFunction::nicholson(E * E).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for h in [0.5, 0.15] {
        let start = Instant::now();
        let params = ModelParams::new(h, 1.0, 0.05).unwrap();
        match solve_from_delay_limit(&g, &params, &GridOptions::default(), &SolveOptions::default()) {
            Ok((sol, _)) => {
                let r = verify_theorem1_structure(&sol, &g, &params);
                let secs = start.elapsed().as_secs_f64();
                let common = sol.diagnostics.positive
                    && r.tail_exponent_ok == Some(true)
                    && r.left_derivative_positive == Some(true)
                    && r.hump_ok
                    && secs < 60.0;
                let ok = if h == 0.5 { common && r.oscillation_ok == Some(true) } else { common };
                pass &= ok;
                let peak = if r.largest_local_max.is_finite() {
                    format!("{:.4}", r.largest_local_max)
                } else {
                    "none".to_string()
                };
                parts.push(format!(
                    "h={h}: tail {:.3}%, sign changes {}, largest local max {peak}, {secs:.2} s",
                    100.0 * r.tail_relative_error,
                    r.right_quarter_sign_changes,
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("h={h}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn continuation() -> Outcome {
    let g = BirthFunction::nicholson(E * E).unwrap();
    let base = ModelParams::delay_ode(0.5).unwrap();
    match epsilon_continuation(&g, &base, &[0.01, 0.02, 0.05, 0.1], &GridOptions::default(), &SolveOptions::default()) {
        Ok(r) => {
            let d: Vec<String> = r.rows.iter().map(|row| format!("{:.1e}", row.distance_to_limit)).collect();
            let first = r.rows[0].distance_to_limit;
            outcome(
                first <= 2e-2 * r.equilibria.k && r.distances_increasing,
                format!("distances to the limit {}", d.join(", ")),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn front_run(h: f64, nx: usize, t_end: f64) -> Result<PdeRun, String> {
    let g = BirthFunction::nicholson(E * E).unwrap();
    let params = ModelParams::new(h, 1.0, 0.0).unwrap();
    let cfg = PdeConfig::new(0.0, 400.0, nx, t_end, InitialProfile::Front { x0: 20.0, rate: None, cutoff: None });
    simulate(&g, &params, &cfg).map_err(|e| e.to_string())
}

fn pde_cross_validation() -> Outcome {
    let start = Instant::now();
    let g = BirthFunction::nicholson(E * E).unwrap();
    let params = ModelParams::new(0.5, 1.0, 0.0).unwrap();
    let run = || -> Result<(bool, String), String> {
        let coarse = front_run(0.5, 2001, 150.0)?;
        let fine_cfg = PdeConfig::new(0.0, 400.0, 4001, 150.0, InitialProfile::Front { x0: 20.0, rate: None, cutoff: None });
        let (fine, cm) = run_front_experiment(&g, &params, &fine_cfg).map_err(|e| e.to_string())?;
        let (c1, c2) = (coarse.track.speed, fine.track.speed);
        let speed_ok = coarse.track.speed_valid && ((c1 - c2) / c2).abs() <= 0.02;
        let (cmp, _) = compare_with_profile(&cm, c2, &g, &params, &SolveOptions::default()).map_err(|e| e.to_string())?;
        let k = fine.equilibria.k;
        let profile_ok = cmp.sup_discrepancy <= 0.05 * k;
        let short = front_run(0.1, 2001, 100.0)?;
        let long = front_run(1.0, 2001, 150.0)?;
        let (n_short, n_long) = (short.sign_changes_behind_front(1e-6 * k), long.sign_changes_behind_front(1e-6 * k));
        let secs = start.elapsed().as_secs_f64();
        let pass = speed_ok && profile_ok && n_short == 0 && n_long >= 2 && secs < 600.0;
        Ok((
            pass,
            format!(
                "speeds {c1:.4}/{c2:.4}, sup discrepancy {:.4} (eps {:.4}{}), sign changes h=0.1: {n_short}, h=1: {n_long}, {secs:.0} s",
                cmp.sup_discrepancy,
                cmp.epsilon_used,
                if cmp.epsilon_clamped { ", clamped" } else { "" }
            ),
        ))
    };
    match run() {
        Ok((pass, detail)) => outcome(pass, detail),
        Err(e) => outcome(false, e),
    }
}

fn zero_diffusion() -> Outcome {
    let g = BirthFunction::nicholson(E * E).unwrap();
    let params = ModelParams::new(0.5, 1.0, 0.0).unwrap();
    let dt = 0.01;
    let initial = vec![0.05, 0.3, 1.0, 2.0, 2.5, 4.0];
    let mut cfg = PdeConfig::new(0.0, 5.0, initial.len(), 20.0, InitialProfile::Samples { values: initial.clone() });
    cfg.boundary = Boundary::Neumann;
    cfg.diffusion = Some(0.0);
    cfg.dt = Some(dt);
    cfg.probes = (0..initial.len()).collect();
    let run = match simulate(&g, &params, &cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut worst: f64 = 0.0;
    for (i, &u0) in initial.iter().enumerate() {
        let traj = integrate(&g, &params, History::Constant { value: u0 }, 20.0, dt).unwrap();
        if traj.values.len() != run.probe_values[i].len() {
            return outcome(false, format!("node {i}: length mismatch"));
        }
        worst = run.probe_values[i].iter().zip(&traj.values).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    outcome(worst <= 1e-6, format!("{} nodes over [0, 20], max deviation {worst:.1e}", initial.len()))
}

fn hyperbolicity() -> Outcome {
    let mut bad = Vec::new();
    for h in [0.5, 1.0, 2.0] {
        for eps in [0.0, 0.01, 0.05] {
            match check_k_hyperbolicity(-1.0, h, eps, None) {
                Ok(r) if r.hyperbolic => {}
                Ok(_) => bad.push(format!("({h}, {eps}) not hyperbolic")),
                Err(e) => bad.push(format!("({h}, {eps}): {e}")),
            }
        }
    }
    let rejected = matches!(check_k_hyperbolicity(-1.0, 0.2, 0.0, None), Err(RootError::HypothesisNotMet { .. }));
    outcome(bad.is_empty() && rejected, format!("9 cases hyperbolic, h = 0.2 rejected: {rejected}, failing {bad:?}"))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap());
    }
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let pde_cfg = tmp.path().join("pde.json");
    fs::write(&pde_cfg, r#"{"domain": [0.0, 150.0], "nx": 751, "t_end": 40.0, "snapshot_times": [10.0, 40.0]}"#).unwrap();
    let roots_cfg = tmp.path().join("roots.json");
    fs::write(&roots_cfg, r#"{"samples": 200}"#).unwrap();
    let commands: [(&str, Option<&Path>); 7] = [
        ("analyze", None),
        ("roots", Some(&roots_cfg)),
        ("hetero", None),
        ("wave", None),
        ("sweep", None),
        ("continuation", None),
        ("pde", Some(&pde_cfg)),
    ];
    let mut bad = Vec::new();
    let mut files = 0;
    for (cmd, cfg) in commands {
        let mut trees = Vec::new();
        for rerun in 0..2 {
            let out = tmp.path().join(format!("{cmd}-{rerun}"));
            let mut c = Command::new(env!("CARGO_BIN_EXE_wavefront"));
            c.arg("--out").arg(&out).arg("--seed").arg("17");
            if let Some(cfg) = cfg {
                c.arg("--config").arg(cfg);
            }
            let status = c.arg(cmd).output().unwrap().status;
            if !status.success() {
                bad.push(format!("{cmd} exited with {status}"));
            }
            trees.push(read_tree(&out));
        }
        files += trees[0].len();
        if trees[0] != trees[1] || trees[0].is_empty() {
            bad.push(format!("{cmd} outputs differ"));
        }
    }
    outcome(bad.is_empty(), format!("7 commands, {files} files compared byte for byte, problems {bad:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("characteristic-root chain", root_chain),
        ("limit consistency", limit_consistency_grid),
        ("heteroclinic tail law", heteroclinic_tails),
        ("wave-operator identities", operator_identities),
        ("profile structure", profile_structure),
        ("epsilon continuation", continuation),
        ("PDE cross-validation", pde_cross_validation),
        ("zero diffusion", zero_diffusion),
        ("hyperbolicity scan", hyperbolicity),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
