//! Travelling-wave profiles at finite speed `c = 1/ε`.
//!
//! A bounded profile of `ε² x'' - x' - x + g(x(t-h)) = 0` is a fixed point of
//!
//! ```text
//! T_ε(x)(t) = 1/σ · ( ∫_{-∞}^t e^{-μ(t-s)} g(x(s-h)) ds + ∫_t^∞ e^{-ν(s-t)} g(x(s-h)) ds )
//! ```
//!
//! with `σ = √(1+4ε²)`, `μ = 2/(1+σ)` and `ν = (1+σ)/(2ε²)`. The operator
//! is evaluated by integrating the piecewise-linear interpolant of
//! `s ↦ g(x(s-h))` exactly against both kernels, so the stiff right kernel
//! (`ν ~ ε⁻²`) causes no trouble.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::birth::{find_positive_fixed_point, BirthError, BirthFunction, Equilibria, ModelParams};
use crate::charroots::{epsilon_bound, minimal_wave_root, solve_lambda, RootError};
use crate::dde::{fit_left_tail, heteroclinic, DdeError, DdeTrajectory, HeteroclinicOptions};
use crate::numeric::{bisect, Anderson, exp_moments, first_upward_crossing, local_maxima, sign_changes_about};

pub const MIN_GRID_POINTS: usize = 16;
/// Relative tolerance of the tail invariants `x(t_min) ≈ left`, `x(t_max) ≈ right`.
pub const TAIL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("epsilon = 0 is the delay-ODE limit; use the dde module")]
    EpsilonZero,
    #[error("epsilon = {epsilon} outside (0, {bound})")]
    EpsilonOutOfRange { epsilon: f64, bound: f64 },
    #[error("grid spacing {spacing} does not divide the delay {h}")]
    MisalignedGrid { spacing: f64, h: f64 },
    #[error("domain too short: {0}")]
    DomainTooShort(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no convergence after {iterations} iterations (last update {last_update:e})")]
    NoConvergence { iterations: usize, last_update: f64, profile: Box<GridProfile> },
    #[error("profile has no upward crossing of {level}")]
    NoCrossing { level: f64 },
    #[error(transparent)]
    Birth(#[from] BirthError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Dde(#[from] DdeError),
}

/// Samples of a profile on a uniform grid, extended by constants outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    pub t_min: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
    /// value assumed for `t < t_min`
    pub left_tail: f64,
    /// value assumed for `t > t_max`
    pub right_tail: f64,
}

impl GridProfile {
    pub fn new(t_min: f64, spacing: f64, values: Vec<f64>, left_tail: f64, right_tail: f64) -> Result<Self, WaveError> {
        if values.len() < MIN_GRID_POINTS {
            return Err(WaveError::InvalidGrid(format!("{} points, need {MIN_GRID_POINTS}", values.len())));
        }
        if !(spacing > 0.0 && spacing.is_finite() && t_min.is_finite()) {
            return Err(WaveError::InvalidGrid(format!("spacing {spacing}, t_min {t_min}")));
        }
        Ok(Self { t_min, spacing, values, left_tail, right_tail })
    }

    pub fn constant(t_min: f64, spacing: f64, n: usize, value: f64) -> Result<Self, WaveError> {
        Self::new(t_min, spacing, vec![value; n], value, value)
    }

    /// Samples `f` on `t_min + i·spacing`, `i < n`.
    pub fn sample<F: Fn(f64) -> f64>(
        t_min: f64,
        spacing: f64,
        n: usize,
        left_tail: f64,
        right_tail: f64,
        f: F,
    ) -> Result<Self, WaveError> {
        let values = (0..n).map(|i| f(t_min + i as f64 * spacing)).collect();
        Self::new(t_min, spacing, values, left_tail, right_tail)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.spacing
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Piecewise-linear interpolation, constant tails outside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let pos = (t - self.t_min) / self.spacing;
        if pos < 0.0 {
            return self.left_tail;
        }
        let last = self.len() - 1;
        if pos >= last as f64 {
            return if pos == last as f64 { self.values[last] } else { self.right_tail };
        }
        let i = pos.floor() as usize;
        let theta = pos - i as f64;
        if theta == 0.0 {
            self.values[i]
        } else {
            self.values[i] + theta * (self.values[i + 1] - self.values[i])
        }
    }

    /// Checks that the grid ends are within `TAIL_TOLERANCE` of the declared tails.
    pub fn check_tails(&self) -> Result<(), WaveError> {
        let scale = self.left_tail.abs().max(self.right_tail.abs());
        let tol = TAIL_TOLERANCE * scale;
        let first = self.values[0];
        let last = self.values[self.len() - 1];
        if (first - self.left_tail).abs() > tol {
            return Err(WaveError::DomainTooShort(format!("x(t_min) = {first}, left tail {}", self.left_tail)));
        }
        if (last - self.right_tail).abs() > tol {
            return Err(WaveError::DomainTooShort(format!("x(t_max) = {last}, right tail {}", self.right_tail)));
        }
        Ok(())
    }

    /// First upward crossing of `level` on the linear interpolant.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        first_upward_crossing(&self.times(), &self.values, level)
    }

    /// Profile translated so that `new(t) = old(t + shift)`.
    pub fn shifted(&self, shift: f64) -> Self {
        let values = (0..self.len()).map(|i| self.value_at(self.time(i) + shift)).collect();
        Self { values, ..self.clone() }
    }

    pub fn sup_distance(&self, other: &GridProfile) -> f64 {
        (0..self.len()).map(|i| (self.values[i] - other.value_at(self.time(i))).abs()).fold(0.0, f64::max)
    }
}

/// Grid spacing `h/m` with `m ≥ 20` and spacing at most `target`; `target`
/// itself when there is no delay.
pub fn aligned_spacing(h: f64, target: f64) -> f64 {
    if h == 0.0 {
        return target;
    }
    let m = ((h / target).ceil() as usize).max(20);
    h / m as f64
}

/// The operator `T_ε` bound to a birth function and parameters.
pub struct WaveOperator<'a> {
    g: &'a BirthFunction,
    params: ModelParams,
    sigma: f64,
    left_rate: f64,
    right_rate: f64,
    tail_rate: Option<f64>,
}

impl<'a> WaveOperator<'a> {
    pub fn new(g: &'a BirthFunction, params: &ModelParams) -> Result<Self, WaveError> {
        let eps = params.epsilon;
        if eps == 0.0 {
            return Err(WaveError::EpsilonZero);
        }
        let sigma = (1.0 + 4.0 * eps * eps).sqrt();
        let slope = g.d1(0.0);
        let tail_rate = if slope > 1.0 { minimal_wave_root(slope, params.h, eps) } else { None };
        Ok(Self {
            g,
            params: *params,
            sigma,
            left_rate: 2.0 / (1.0 + sigma),
            right_rate: (1.0 + sigma) / (2.0 * eps * eps),
            tail_rate,
        })
    }

    /// Multiplier of the discretised operator linearised at zero on `e^{zt}`.
    fn discrete_multiplier(&self, slope: f64, z: f64, dt: f64, m: usize) -> f64 {
        let (l0, l1) = exp_moments(self.left_rate, dt);
        let (r0, r1) = exp_moments(self.right_rate, dt);
        let left = (l0 + (-z * dt).exp_m1() * l1 / dt) / -(-(self.left_rate + z) * dt).exp_m1();
        let right = (r0 + (z * dt).exp_m1() * r1 / dt) / -((z - self.right_rate) * dt).exp_m1();
        slope * (-z * m as f64 * dt).exp() * (left + right) / self.sigma
    }

    /// Root of the discrete multiplier next to the continuous rate, so the
    /// continued tail is an exact eigenfunction of the discrete operator.
    fn discrete_tail_rate(&self, rate: f64, dt: f64, m: usize) -> f64 {
        let slope = self.g.d1(0.0);
        let f = |z: f64| self.discrete_multiplier(slope, z, dt, m) - 1.0;
        // first downward sign change above half the continuous rate; near the
        // critical speed the second root sits close by
        let (lo, hi) = (0.5 * rate, (2.0 * rate).min(0.5 * (rate + self.right_rate)));
        let n = 2000;
        let mut prev = lo;
        for k in 1..=n {
            let z = lo + (hi - lo) * k as f64 / n as f64;
            if f(z) < 0.0 {
                return bisect(f, prev, z, 200).map(|b| b.root).unwrap_or(rate);
            }
            prev = z;
        }
        rate
    }

    /// Growth rate used to continue a profile past its left end.
    pub fn tail_rate(&self) -> Option<f64> {
        self.tail_rate
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of grid cells in one delay.
    pub fn delay_cells(&self, spacing: f64) -> Result<usize, WaveError> {
        let ratio = self.params.h / spacing;
        let m = ratio.round();
        if (m * spacing - self.params.h).abs() > 1e-12 * self.params.h.max(1.0) {
            return Err(WaveError::MisalignedGrid { spacing, h: self.params.h });
        }
        Ok(m as usize)
    }

    /// `T_ε(x)` on the grid of `x`, without the tail check.
    pub fn apply_unchecked(&self, x: &GridProfile) -> Result<GridProfile, WaveError> {
        let n = x.len();
        let m = self.delay_cells(x.spacing)?;
        let dt = x.spacing;
        let g_right = self.g.value(x.right_tail);
        // a vanishing left state is continued by the exponential tail instead
        // of zero, which keeps translates of a profile equivalent
        let tail = match self.tail_rate {
            Some(rate) if x.left_tail == 0.0 && x.values[0] > 0.0 => Some(self.discrete_tail_rate(rate, dt, m)),
            _ => None,
        };
        let before = |i: usize| match tail {
            Some(rate) => self.g.value(x.values[0] * (-rate * (m - i) as f64 * dt).exp()),
            None => self.g.value(x.left_tail),
        };
        // f_i = g(x(t_i - h)) for i in 0..n+m; indices past n-1 reach the
        // last m grid values through the delay
        let f: Vec<f64> = (0..n + m)
            .into_par_iter()
            .map(|i| if i < m { before(i) } else { self.g.value(x.values[i - m]) })
            .collect();

        let (l0, l1) = exp_moments(self.left_rate, dt);
        let decay_l = (-self.left_rate * dt).exp();
        let mut left = vec![0.0; n];
        let mut acc = match tail {
            Some(rate) => f[0] * (l0 + (-rate * dt).exp_m1() * l1 / dt) / -(-(self.left_rate + rate) * dt).exp_m1(),
            None => f[0] / self.left_rate,
        };
        left[0] = acc;
        for i in 1..n {
            acc = decay_l * acc + f[i] * l0 + (f[i - 1] - f[i]) * l1 / dt;
            left[i] = acc;
        }

        let (r0, r1) = exp_moments(self.right_rate, dt);
        let decay_r = (-self.right_rate * dt).exp();
        let mut acc = g_right / self.right_rate;
        for i in (n - 1..n + m - 1).rev() {
            acc = decay_r * acc + f[i] * r0 + (f[i + 1] - f[i]) * r1 / dt;
        }
        let mut right = vec![0.0; n];
        right[n - 1] = acc;
        for i in (0..n - 1).rev() {
            acc = decay_r * acc + f[i] * r0 + (f[i + 1] - f[i]) * r1 / dt;
            right[i] = acc;
        }

        let inv_sigma = 1.0 / self.sigma;
        let values = left.iter().zip(&right).map(|(l, r)| (l + r) * inv_sigma).collect();
        Ok(GridProfile { values, ..x.clone() })
    }

    pub fn apply(&self, x: &GridProfile) -> Result<GridProfile, WaveError> {
        x.check_tails()?;
        self.apply_unchecked(x)
    }
}

/// `T_ε(x)` evaluated at every grid point of `x`.
pub fn apply_wave_operator(x: &GridProfile, g: &BirthFunction, params: &ModelParams) -> Result<GridProfile, WaveError> {
    WaveOperator::new(g, params)?.apply(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// damping `ω ∈ (0, 1]`
    pub omega: f64,
    pub max_iter: usize,
    /// sup-norm update at which iteration stops
    pub tol: f64,
    /// require `ε < 1/(2√(p-1))`
    pub enforce_epsilon_range: bool,
    /// history length of Anderson mixing on top of the damped step; 0 disables it
    pub anderson_depth: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { omega: 0.5, max_iter: 20_000, tol: 1e-10, enforce_epsilon_range: true, anderson_depth: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveDiagnostics {
    /// sup-norm of `x - T_ε(x)` on interior points
    pub residual_sup: f64,
    pub min_value: f64,
    pub positive: bool,
    pub sign_changes_about_k: usize,
    pub hump_max: f64,
    /// log-linear slope of the left tail; NaN if the tail is too short
    pub tail_exponent: f64,
    pub tail_r_squared: f64,
    /// where the profile crosses `K/2`
    pub phase_anchor: f64,
    pub iterations: usize,
    pub last_update: f64,
    pub noise_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSolution {
    pub profile: GridProfile,
    pub diagnostics: WaveDiagnostics,
    pub equilibria: Equilibria,
    pub epsilon: f64,
}

fn pin(x: &GridProfile, level: f64) -> GridProfile {
    match x.crossing(level) {
        // relabel the grid rather than resample, which would smear the profile
        Some(tc) if tc != 0.0 => GridProfile { t_min: x.t_min - tc, ..x.clone() },
        _ => x.clone(),
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Damped fixed-point iteration `x ← (1-ω)x + ω T_ε(x)`, re-pinned after
/// every step so that `x(0) = K/2` at the first upward crossing.
pub fn solve_profile(
    g: &BirthFunction,
    params: &ModelParams,
    init: &GridProfile,
    opts: &SolveOptions,
) -> Result<WaveSolution, WaveError> {
    let eq = find_positive_fixed_point(g, None)?;
    if params.epsilon == 0.0 {
        return Err(WaveError::EpsilonZero);
    }
    if opts.enforce_epsilon_range {
        let bound = epsilon_bound(eq.p);
        if params.epsilon >= bound {
            return Err(WaveError::EpsilonOutOfRange { epsilon: params.epsilon, bound });
        }
    }
    let op = WaveOperator::new(g, params)?;
    init.check_tails()?;
    let level = 0.5 * eq.k;
    let omega = opts.omega.clamp(f64::MIN_POSITIVE, 1.0);

    let mut x = pin(init, level);
    let mut mixer = Anderson::new(opts.anderson_depth);
    let mut iterations = 0;
    let mut last_update = f64::INFINITY;
    loop {
        let tx = op.apply_unchecked(&x)?;
        let raw_update = omega * sup_diff(&tx.values, &x.values);
        if raw_update < opts.tol {
            last_update = raw_update;
            break;
        }
        if iterations >= opts.max_iter {
            return Err(WaveError::NoConvergence { iterations, last_update, profile: Box::new(x) });
        }
        let blended: Vec<f64> =
            x.values.iter().zip(&tx.values).map(|(a, b)| (1.0 - omega) * a + omega * b).collect();
        let mut mixed = mixer.next(&x.values, &blended);
        if mixed.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || mixed[0] <= 0.0 {
            mixer.reset();
            mixed = blended;
        }
        let blended = mixed;
        let next = pin(&GridProfile { values: blended, ..x.clone() }, level);
        last_update = sup_diff(&next.values, &x.values);
        x = next;
        iterations += 1;
        if !last_update.is_finite() {
            return Err(WaveError::NoConvergence { iterations, last_update, profile: Box::new(x) });
        }
    }
    let diagnostics = diagnose(&op, &x, &eq, iterations, last_update, opts.tol)?;
    Ok(WaveSolution { profile: x, diagnostics, equilibria: eq, epsilon: params.epsilon })
}

fn diagnose(
    op: &WaveOperator<'_>,
    x: &GridProfile,
    eq: &Equilibria,
    iterations: usize,
    last_update: f64,
    tol: f64,
) -> Result<WaveDiagnostics, WaveError> {
    let tx = op.apply_unchecked(x)?;
    let n = x.len();
    let residual_sup = sup_diff(&x.values[1..n - 1], &tx.values[1..n - 1]);
    let min_value = x.values.iter().copied().fold(f64::INFINITY, f64::min);
    let noise_floor = (100.0 * tol).max(1e-12) * eq.k;
    let hump_max = x.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (tail_exponent, tail_r_squared) = match fit_left_tail(&x.times(), &x.values, eq.k, 0.01) {
        Ok(fit) => (fit.exponent, fit.r_squared),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(WaveDiagnostics {
        residual_sup,
        min_value,
        positive: min_value > 0.0,
        sign_changes_about_k: sign_changes_about(&x.values, eq.k, noise_floor),
        hump_max,
        tail_exponent,
        tail_r_squared,
        phase_anchor: x.crossing(0.5 * eq.k).unwrap_or(f64::NAN),
        iterations,
        last_update,
        noise_floor,
    })
}

/// Layout of the grid used for a wave solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOptions {
    /// upper bound on the spacing (the actual spacing divides `h`)
    pub target_spacing: f64,
    /// the left end sits at `-left_decades / λ₁`
    pub left_decades: f64,
    /// time past the settling point of the `ε = 0` orbit kept on the right
    pub right_margin: f64,
    /// `|ψ₀ - K|` below which the `ε = 0` orbit counts as settled
    pub settle_tolerance: f64,
    pub min_right_extent: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { target_spacing: 0.025, left_decades: 40.0, right_margin: 5.0, settle_tolerance: 1e-6, min_right_extent: 10.0 }
    }
}

/// Grid and initial guess for `ε > 0` built from the `ε = 0` heteroclinic.
pub fn initial_guess(
    psi0: &DdeTrajectory,
    eq: &Equilibria,
    h: f64,
    epsilon: f64,
    opts: &GridOptions,
) -> Result<GridProfile, WaveError> {
    let rate = minimal_wave_root(eq.p, h, epsilon).unwrap_or(solve_lambda(eq.p, h)?.value);
    let spacing = aligned_spacing(h, opts.target_spacing);
    let left = -(opts.left_decades / rate / spacing).ceil() * spacing;
    let tol = opts.settle_tolerance * eq.k;
    let settle = (0..psi0.len())
        .rev()
        .find(|&i| (psi0.values[i] - eq.k).abs() >= tol)
        .map(|i| psi0.time(i))
        .unwrap_or(0.0);
    let right = (settle + opts.right_margin).max(opts.min_right_extent);
    let n = ((right - left) / spacing).ceil() as usize + 1;
    GridProfile::sample(left, spacing, n, 0.0, eq.k, |t| psi0.value_at(t).unwrap_or(eq.k))
}

/// Heteroclinic of the delay ODE, the `ε = 0` member of the family.
pub fn delay_limit(g: &BirthFunction, h: f64, steps_per_delay: usize) -> Result<(DdeTrajectory, Equilibria), WaveError> {
    let params = ModelParams::delay_ode(h)?;
    let opts = HeteroclinicOptions { steps_per_delay, ..Default::default() };
    Ok(heteroclinic(g, &params, &opts)?)
}

/// Solves for the profile at `params.epsilon` starting from the `ε = 0` orbit.
pub fn solve_from_delay_limit(
    g: &BirthFunction,
    params: &ModelParams,
    grid: &GridOptions,
    opts: &SolveOptions,
) -> Result<(WaveSolution, DdeTrajectory), WaveError> {
    let (psi0, eq) = delay_limit(g, params.h, 100)?;
    let init = initial_guess(&psi0, &eq, params.h, params.epsilon, grid)?;
    Ok((solve_profile(g, params, &init, opts)?, psi0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub lambda1: f64,
    pub tail_exponent: f64,
    pub tail_relative_error: f64,
    /// `None` when the profile has no left tail below `0.01 K`
    pub tail_exponent_ok: Option<bool>,
    pub left_derivative_positive: Option<bool>,
    pub oscillation_criterion: bool,
    pub right_quarter_sign_changes: usize,
    /// `None` when the criterion fails and no claim is made
    pub oscillation_ok: Option<bool>,
    pub max_g: f64,
    pub largest_local_max: f64,
    pub hump_ok: bool,
    pub all_pass: bool,
}

/// Tolerance on local maxima versus `sup g`.
pub const HUMP_TOLERANCE: f64 = 1e-6;

/// Left-tail exponent, monotone left tail, persistent oscillation about `K`
/// (when `Γ h e^{h+1} < -1`), and local maxima bounded by `sup g`.
pub fn verify_theorem1_structure(
    solution: &WaveSolution,
    g: &BirthFunction,
    params: &ModelParams,
) -> Theorem1Report {
    let x = &solution.profile;
    let eq = &solution.equilibria;
    let lambda1 = minimal_wave_root(eq.p, params.h, params.epsilon).unwrap_or(f64::NAN);
    let d = &solution.diagnostics;

    let tail_region = x.values.iter().position(|&v| v >= 0.01 * eq.k).unwrap_or(x.len());
    let has_tail = tail_region >= 2 && d.tail_exponent.is_finite();
    let tail_relative_error = ((d.tail_exponent - lambda1) / lambda1).abs();
    let tail_exponent_ok = has_tail.then(|| tail_relative_error < 0.01);
    let left_derivative_positive = (tail_region >= 2).then(|| {
        x.values[..tail_region].windows(2).filter(|w| w[0] > 1e-300).all(|w| w[1] > w[0])
    });

    let criterion = crate::birth::check_oscillation_criterion(eq, params.h);
    let quarter = x.len() - x.len() / 4;
    let right_quarter_sign_changes = sign_changes_about(&x.values[quarter..], eq.k, d.noise_floor);
    let oscillation_ok = criterion.then_some(right_quarter_sign_changes >= 2);

    let max_g = g.max_value();
    let largest_local_max =
        local_maxima(&x.values).into_iter().map(|(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let hump_ok = !(largest_local_max > max_g + HUMP_TOLERANCE);

    let all_pass = tail_exponent_ok.unwrap_or(true)
        && left_derivative_positive.unwrap_or(true)
        && oscillation_ok.unwrap_or(true)
        && hump_ok
        && d.positive;
    Theorem1Report {
        lambda1,
        tail_exponent: d.tail_exponent,
        tail_relative_error,
        tail_exponent_ok,
        left_derivative_positive,
        oscillation_criterion: criterion,
        right_quarter_sign_changes,
        oscillation_ok,
        max_g,
        largest_local_max,
        hump_ok,
        all_pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRow {
    pub epsilon: f64,
    /// `sup |ψ_ε - ψ₀|` after pinning
    pub distance_to_limit: f64,
    /// `sup |ψ_ε - ψ_{previous ε}|`; for the first row, the same as `distance_to_limit`
    pub distance_to_previous: f64,
    pub iterations: usize,
    pub residual_sup: f64,
    pub min_value: f64,
    /// `∫_{-∞}^0 ψ_ε ψ₀' ds - ψ₀(0)²/2`
    pub normalization_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub rows: Vec<ContinuationRow>,
    pub distances_increasing: bool,
    pub equilibria: Equilibria,
    #[serde(skip)]
    pub profiles: Vec<GridProfile>,
    #[serde(skip)]
    pub limit: Option<GridProfile>,
}

/// Solves along an ascending list of `ε`, each solve seeded by the previous
/// one, and measures the distance to the `ε = 0` heteroclinic.
pub fn epsilon_continuation(
    g: &BirthFunction,
    params_base: &ModelParams,
    epsilons: &[f64],
    grid: &GridOptions,
    opts: &SolveOptions,
) -> Result<ContinuationReport, WaveError> {
    let eq = find_positive_fixed_point(g, None)?;
    let bound = epsilon_bound(eq.p);
    for &e in epsilons {
        if !(e > 0.0 && e < bound) {
            return Err(WaveError::EpsilonOutOfRange { epsilon: e, bound });
        }
    }
    if epsilons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(WaveError::InvalidGrid("epsilon list must be strictly ascending".into()));
    }
    let h = params_base.h;
    let (psi0, eq) = delay_limit(g, h, 200)?;
    let first = epsilons.first().copied().unwrap_or(bound / 2.0);
    let limit = initial_guess(&psi0, &eq, h, first, grid)?;

    // ψ₀' from the delay equation itself
    let psi0_at = |t: f64| psi0.value_at(t).unwrap_or(eq.k);
    let psi0_prime = |t: f64| -psi0_at(t) + g.value(psi0_at(t - h));
    let anchor = psi0_at(0.0);

    let mut rows = Vec::with_capacity(epsilons.len());
    let mut profiles: Vec<GridProfile> = Vec::with_capacity(epsilons.len());
    let mut current = limit.clone();
    for &e in epsilons {
        let params = params_base.with_epsilon(e)?;
        let sol = solve_profile(g, &params, &current, opts)?;
        let x = &sol.profile;
        let distance_to_limit = (0..x.len()).map(|i| (x.values[i] - psi0_at(x.time(i))).abs()).fold(0.0, f64::max);
        let distance_to_previous = match profiles.last() {
            Some(prev) => x.sup_distance(prev),
            None => distance_to_limit,
        };
        // trapezoid over t ≤ 0
        let mut integral = 0.0;
        for i in 1..x.len() {
            let (t0, t1) = (x.time(i - 1), x.time(i));
            if t0 >= 0.0 {
                break;
            }
            let t1c = t1.min(0.0);
            let v1 = x.value_at(t1c);
            integral += 0.5 * (x.values[i - 1] * psi0_prime(t0) + v1 * psi0_prime(t1c)) * (t1c - t0);
        }
        rows.push(ContinuationRow {
            epsilon: e,
            distance_to_limit,
            distance_to_previous,
            iterations: sol.diagnostics.iterations,
            residual_sup: sol.diagnostics.residual_sup,
            min_value: sol.diagnostics.min_value,
            normalization_defect: integral - 0.5 * anchor * anchor,
        });
        current = sol.profile.clone();
        profiles.push(sol.profile);
    }
    let distances_increasing = rows.windows(2).all(|w| w[1].distance_to_limit > w[0].distance_to_limit);
    Ok(ContinuationReport { rows, distances_increasing, equilibria: eq, profiles, limit: Some(limit) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;
    use std::sync::Arc;

    use crate::birth::CustomBirth;
    use crate::charroots::solve_perturbed;

    fn nicholson_params(h: f64, eps: f64) -> (BirthFunction, ModelParams) {
        (BirthFunction::nicholson(E * E).unwrap(), ModelParams::new(h, 1.0, eps).unwrap())
    }

    #[test]
    fn constant_profiles_are_fixed() {
        for eps in [0.01, 0.05, 0.1] {
            let (g, params) = nicholson_params(0.5, eps);
            let spacing = aligned_spacing(0.5, 0.025);
            for value in [0.0, 2.0] {
                let x = GridProfile::constant(-10.0, spacing, 801, value).unwrap();
                let tx = apply_wave_operator(&x, &g, &params).unwrap();
                let err = sup_diff(&tx.values, &x.values);
                assert!(err < 1e-10, "eps {eps} value {value}: {err}");
            }
        }
    }

    #[test]
    fn exponential_is_an_eigenfunction_of_the_linear_operator() {
        let (p, h, eps) = (2.0, 1.0, 0.1);
        let lambda1 = solve_perturbed(p, h, eps).unwrap().lambda1;
        let g = BirthFunction::custom(
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
        let tx = apply_wave_operator(&x, &g, &params).unwrap();
        for i in 0..n {
            let t = x.time(i);
            if t < -40.0 || t > -2.0 {
                continue;
            }
            let rel = (tx.values[i] - x.values[i]).abs() / x.values[i];
            assert!(rel < 1e-6, "t = {t}: {rel}");
        }
    }

    #[test]
    fn operator_rejects_zero_epsilon_and_misaligned_grid() {
        let (g, params) = nicholson_params(0.5, 0.0);
        let x = GridProfile::constant(0.0, 0.025, 100, 2.0).unwrap();
        assert!(matches!(apply_wave_operator(&x, &g, &params), Err(WaveError::EpsilonZero)));
        let (g, params) = nicholson_params(0.5, 0.05);
        let x = GridProfile::constant(0.0, 0.03, 100, 2.0).unwrap();
        assert!(matches!(apply_wave_operator(&x, &g, &params), Err(WaveError::MisalignedGrid { .. })));
    }

    #[test]
    fn short_domain_rejected() {
        let (g, params) = nicholson_params(0.5, 0.05);
        let x = GridProfile::sample(-1.0, 0.025, 81, 0.0, 2.0, |t| 1.0 + t.tanh()).unwrap();
        assert!(matches!(apply_wave_operator(&x, &g, &params), Err(WaveError::DomainTooShort(_))));
    }

    #[test]
    fn constant_init_is_a_fixed_point() {
        let (g, params) = nicholson_params(0.5, 0.05);
        let init = GridProfile::constant(-10.0, 0.025, 801, 2.0).unwrap();
        let sol = solve_profile(&g, &params, &init, &SolveOptions::default()).unwrap();
        assert_eq!(sol.diagnostics.iterations, 0);
        let report = verify_theorem1_structure(&sol, &g, &params);
        assert_eq!(report.tail_exponent_ok, None);
        assert!(report.hump_ok);
    }

    #[test]
    fn oscillating_profile_e_squared() {
        let (g, params) = nicholson_params(0.5, 0.05);
        let (sol, _) = solve_from_delay_limit(&g, &params, &GridOptions::default(), &SolveOptions::default()).unwrap();
        let d = &sol.diagnostics;
        assert!(d.positive);
        assert!(d.residual_sup < 1e-8, "{}", d.residual_sup);
        let report = verify_theorem1_structure(&sol, &g, &params);
        assert!(report.all_pass, "{report:?}");
        assert!(report.right_quarter_sign_changes >= 2);
        assert!(report.largest_local_max <= E);
    }

    #[test]
    fn monotone_tail_for_small_delay() {
        let g = BirthFunction::nicholson(2.0).unwrap();
        let params = ModelParams::new(0.25, 1.0, 0.05).unwrap();
        let (sol, _) = solve_from_delay_limit(&g, &params, &GridOptions::default(), &SolveOptions::default()).unwrap();
        assert!(sol.diagnostics.positive);
        let report = verify_theorem1_structure(&sol, &g, &params);
        assert!(!report.oscillation_criterion);
        assert_eq!(report.right_quarter_sign_changes, 0);
        assert_eq!(report.tail_exponent_ok, Some(true));
    }

    #[test]
    fn continuation_rejects_out_of_range_epsilon() {
        let g = BirthFunction::nicholson(E * E).unwrap();
        let params = ModelParams::delay_ode(0.5).unwrap();
        let res = epsilon_continuation(&g, &params, &[0.01, 0.3], &GridOptions::default(), &SolveOptions::default());
        assert!(matches!(res, Err(WaveError::EpsilonOutOfRange { .. })));
    }

    #[test]
    fn continuation_single_epsilon() {
        let g = BirthFunction::nicholson(E * E).unwrap();
        let params = ModelParams::delay_ode(0.5).unwrap();
        let r = epsilon_continuation(&g, &params, &[0.02], &GridOptions::default(), &SolveOptions::default()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].distance_to_previous, r.rows[0].distance_to_limit);
        assert!(r.rows[0].distance_to_limit < 2e-2 * 2.0);
    }
}
