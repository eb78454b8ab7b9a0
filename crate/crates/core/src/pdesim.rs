//! Method-of-lines simulation of `u_t = d u_xx - u + g(u(t-h, x))` on an
//! interval, with front tracking and comparison against `waveprofile`.
//!
//! Time stepping is classical RK4 with the same delayed-value treatment as
//! [`crate::dde::integrate`]: delayed fields are stored levels, and the
//! half-step delayed value is the cubic Hermite midpoint of two stored levels.
//! With `d = 0` each node therefore follows the delay-ODE integrator exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::birth::{find_positive_fixed_point, BirthError, BirthFunction, Equilibria, ModelParams};
use crate::charroots::{critical_epsilon, minimal_wave_root, solve_lambda, RootError};
use crate::dde::CLAMP_TOLERANCE;
use crate::numeric::{hermite_mid, linear_fit, sign_changes_about};
use crate::waveprofile::{aligned_spacing, solve_profile, GridProfile, SolveOptions, WaveError, WaveSolution};

const BLOW_UP: f64 = 1e6;
/// Diffusive stability margin, `dt ≤ CFL · dx² / d`.
pub const CFL: f64 = 0.4;
/// Step used when there is no diffusion and no step is given.
pub const DEFAULT_DT: f64 = 0.01;
const PAR_MIN_LEN: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dt = {dt} exceeds the diffusion limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("dt = {dt} does not divide the delay {h}")]
    MisalignedDelay { dt: f64, h: f64 },
    #[error("front at x = {position} reached the right end by t = {t}")]
    FrontExitedDomain { t: f64, position: f64 },
    #[error("front speed could not be measured ({samples} track samples in the fit window)")]
    SpeedUndetermined { samples: usize },
    #[error("solution blew up at t = {t} (|u| = {value})")]
    BlowUp { t: f64, value: f64 },
    #[error(transparent)]
    Birth(#[from] BirthError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Wave(#[from] WaveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `u = K` on the left, `u = 0` on the right
    #[default]
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    /// `K` up to `x0`, then `K e^{-rate (x - x0)}`, zero once below `cutoff·K`.
    /// `rate` defaults to the delay-ODE root `λ`.
    Front {
        x0: f64,
        #[serde(default)]
        rate: Option<f64>,
        #[serde(default)]
        cutoff: Option<f64>,
    },
    Uniform { value: f64 },
    Samples { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub x_min: f64,
    pub x_max: f64,
    /// grid points including both ends
    pub nx: usize,
    /// defaults to the largest step below both the diffusion limit and
    /// `DEFAULT_DT` that divides `h`
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub boundary: Boundary,
    pub initial: InitialProfile,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// node indices whose values are recorded at every step
    #[serde(default)]
    pub probes: Vec<usize>,
    /// replaces `params.d`; unlike the model parameters it may be zero
    #[serde(default)]
    pub diffusion: Option<f64>,
}

fn default_sample_interval() -> f64 {
    0.5
}

impl PdeConfig {
    pub fn new(x_min: f64, x_max: f64, nx: usize, t_end: f64, initial: InitialProfile) -> Self {
        Self {
            x_min,
            x_max,
            nx,
            dt: None,
            t_end,
            boundary: Boundary::Dirichlet,
            initial,
            sample_interval: default_sample_interval(),
            snapshot_times: Vec::new(),
            probes: Vec::new(),
            diffusion: None,
        }
    }

    pub fn diffusion(&self, params: &ModelParams) -> f64 {
        self.diffusion.unwrap_or(params.d)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    fn validate(&self) -> Result<(), PdeError> {
        if self.nx < 3 {
            return Err(PdeError::InvalidConfig(format!("nx = {} (need at least 3)", self.nx)));
        }
        if !(self.x_max > self.x_min && self.x_min.is_finite() && self.x_max.is_finite()) {
            return Err(PdeError::InvalidConfig(format!("domain [{}, {}]", self.x_min, self.x_max)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(PdeError::InvalidConfig(format!("t_end = {}", self.t_end)));
        }
        if !(self.sample_interval > 0.0) {
            return Err(PdeError::InvalidConfig(format!("sample_interval = {}", self.sample_interval)));
        }
        if let Some(d) = self.diffusion {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(PdeError::InvalidConfig(format!("diffusion = {d}")));
            }
        }
        if let Some(&bad) = self.probes.iter().find(|&&i| i >= self.nx) {
            return Err(PdeError::InvalidConfig(format!("probe {bad} outside 0..{}", self.nx)));
        }
        if let InitialProfile::Samples { values } = &self.initial {
            if values.len() != self.nx {
                return Err(PdeError::InvalidConfig(format!("{} initial samples for nx = {}", values.len(), self.nx)));
            }
        }
        Ok(())
    }
}

/// Time step and delay alignment for a configuration.
pub fn choose_dt(config: &PdeConfig, params: &ModelParams) -> Result<(f64, usize), PdeError> {
    let dx = config.dx();
    let d = config.diffusion(params);
    let limit = if d > 0.0 { CFL * dx * dx / d } else { f64::INFINITY };
    let h = params.h;
    let dt = match config.dt {
        Some(dt) => {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(PdeError::InvalidConfig(format!("dt = {dt}")));
            }
            if dt > limit {
                return Err(PdeError::CflViolation { dt, limit });
            }
            dt
        }
        None => {
            let cap = limit.min(DEFAULT_DT);
            if h > 0.0 {
                h / (h / cap).ceil()
            } else {
                cap
            }
        }
    };
    if h == 0.0 {
        return Ok((dt, 0));
    }
    let m = (h / dt).round();
    if m < 1.0 || (m * dt - h).abs() > 1e-9 * h {
        return Err(PdeError::MisalignedDelay { dt, h });
    }
    Ok((dt, m as usize))
}

fn initial_field(config: &PdeConfig, eq: &Equilibria, h: f64) -> Result<Vec<f64>, PdeError> {
    let dx = config.dx();
    let x = |i: usize| config.x_min + i as f64 * dx;
    let field = match &config.initial {
        InitialProfile::Front { x0, rate, cutoff } => {
            let rate = match rate {
                Some(r) => *r,
                None => solve_lambda(eq.p, h)?.value,
            };
            if !(rate > 0.0) {
                return Err(PdeError::InvalidConfig(format!("initial rate {rate}")));
            }
            let floor = cutoff.unwrap_or(1e-6) * eq.k;
            (0..config.nx)
                .map(|i| {
                    let xi = x(i);
                    if xi <= *x0 {
                        eq.k
                    } else {
                        let v = eq.k * (-rate * (xi - x0)).exp();
                        if v < floor {
                            0.0
                        } else {
                            v
                        }
                    }
                })
                .collect()
        }
        InitialProfile::Uniform { value } => vec![*value; config.nx],
        InitialProfile::Samples { values } => values.clone(),
    };
    if let Some(v) = field.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(PdeError::InvalidConfig(format!("initial value {v}")));
    }
    Ok(field)
}

/// Field history of one run: the current level and the `m` before it.
pub struct PdeState<'a> {
    g: &'a BirthFunction,
    d: f64,
    dx: f64,
    dt: f64,
    m: usize,
    boundary: Boundary,
    /// values pinned at the ends under Dirichlet conditions
    ends: (f64, f64),
    initial: Vec<f64>,
    ring_u: Vec<Vec<f64>>,
    ring_du: Vec<Vec<f64>>,
    steps_taken: usize,
    clamp_events: usize,
}

impl<'a> PdeState<'a> {
    pub fn new(
        g: &'a BirthFunction,
        params: &ModelParams,
        config: &PdeConfig,
        ends: (f64, f64),
        initial: Vec<f64>,
    ) -> Result<Self, PdeError> {
        config.validate()?;
        let (dt, m) = choose_dt(config, params)?;
        let mut state = Self {
            g,
            d: config.diffusion(params),
            dx: config.dx(),
            dt,
            m,
            boundary: config.boundary,
            ends,
            initial,
            ring_u: Vec::with_capacity(m + 1),
            ring_du: Vec::with_capacity(m + 1),
            steps_taken: 0,
            clamp_events: 0,
        };
        if state.boundary == Boundary::Dirichlet {
            let n = state.initial.len();
            state.initial[0] = ends.0;
            state.initial[n - 1] = ends.1;
        }
        let u0 = state.initial.clone();
        // constant history: the delayed field at t = 0 is u0 itself
        let du0 = state.rhs(&u0, &u0);
        state.ring_u.push(u0);
        state.ring_du.push(du0);
        Ok(state)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delay_steps(&self) -> usize {
        self.m
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.dt
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    fn slot(&self, level: usize) -> usize {
        level % (self.m + 1)
    }

    pub fn current(&self) -> &[f64] {
        &self.ring_u[self.slot(self.steps_taken)]
    }

    /// Stored field at `level`, or the initial field for negative levels.
    fn level(&self, level: isize) -> &[f64] {
        if level < 0 {
            &self.initial
        } else {
            &self.ring_u[self.slot(level as usize)]
        }
    }

    fn rhs(&self, u: &[f64], delayed: &[f64]) -> Vec<f64> {
        let n = u.len();
        let coef = self.d / (self.dx * self.dx);
        let diffusive = self.d > 0.0;
        let boundary = self.boundary;
        (0..n)
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|i| {
                let edge = i == 0 || i == n - 1;
                if edge && boundary == Boundary::Dirichlet {
                    return 0.0;
                }
                let reaction = -u[i] + self.g.value(delayed[i]);
                if !diffusive {
                    return reaction;
                }
                let left = if i == 0 { u[1] } else { u[i - 1] };
                let right = if i == n - 1 { u[n - 2] } else { u[i + 1] };
                coef * (left - 2.0 * u[i] + right) + reaction
            })
            .collect()
    }

    fn stage(u: &[f64], k: &[f64], scale: f64) -> Vec<f64> {
        u.par_iter().with_min_len(PAR_MIN_LEN).zip(k).map(|(a, b)| a + scale * b).collect()
    }

    /// One RK4 step.
    pub fn step(&mut self) -> Result<(), PdeError> {
        let dt = self.dt;
        let k = self.steps_taken;
        let u = self.ring_u[self.slot(k)].clone();
        let j = k as isize - self.m as isize;

        let (k1, k2, k3, k4);
        if self.m == 0 {
            k1 = self.rhs(&u, &u);
            let u2 = Self::stage(&u, &k1, 0.5 * dt);
            k2 = self.rhs(&u2, &u2);
            let u3 = Self::stage(&u, &k2, 0.5 * dt);
            k3 = self.rhs(&u3, &u3);
            let u4 = Self::stage(&u, &k3, dt);
            k4 = self.rhs(&u4, &u4);
        } else {
            let start = self.level(j).to_vec();
            let end = self.level(j + 1).to_vec();
            let mid: Vec<f64> = if j >= 0 {
                let (a, da) = (&self.ring_u[self.slot(j as usize)], &self.ring_du[self.slot(j as usize)]);
                let (b, db) = (&self.ring_u[self.slot(j as usize + 1)], &self.ring_du[self.slot(j as usize + 1)]);
                (0..u.len()).map(|i| hermite_mid(a[i], da[i], b[i], db[i], dt)).collect()
            } else {
                self.initial.clone()
            };
            k1 = self.rhs(&u, &start);
            let u2 = Self::stage(&u, &k1, 0.5 * dt);
            k2 = self.rhs(&u2, &mid);
            let u3 = Self::stage(&u, &k2, 0.5 * dt);
            k3 = self.rhs(&u3, &mid);
            let u4 = Self::stage(&u, &k3, dt);
            k4 = self.rhs(&u4, &end);
        }

        let mut next: Vec<f64> = (0..u.len())
            .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        let t_next = (k + 1) as f64 * dt;
        for v in next.iter_mut() {
            if !v.is_finite() || v.abs() > BLOW_UP {
                return Err(PdeError::BlowUp { t: t_next, value: *v });
            }
            if *v < 0.0 {
                if *v < -CLAMP_TOLERANCE {
                    self.clamp_events += 1;
                }
                *v = 0.0;
            }
        }
        if self.boundary == Boundary::Dirichlet {
            let n = next.len();
            next[0] = self.ends.0;
            next[n - 1] = self.ends.1;
        }
        let delayed_next = if self.m == 0 { next.clone() } else { self.level(j + 1).to_vec() };
        let dnext = self.rhs(&next, &delayed_next);

        self.steps_taken = k + 1;
        let slot = self.slot(k + 1);
        if slot < self.ring_u.len() {
            self.ring_u[slot] = next;
            self.ring_du[slot] = dnext;
        } else {
            self.ring_u.push(next);
            self.ring_du.push(dnext);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontTrack {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// NaN when fewer than three samples fall in the fit window
    pub speed: f64,
    pub speed_stderr: f64,
    pub speed_valid: bool,
    pub fit_r_squared: f64,
    pub fit_window_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeRun {
    pub x_min: f64,
    pub dx: f64,
    pub dt: f64,
    pub delay_steps: usize,
    pub t_end: f64,
    pub equilibria: Equilibria,
    pub final_field: Vec<f64>,
    pub track: FrontTrack,
    pub snapshots: Vec<Snapshot>,
    /// recorded values per probe, one per step including `t = 0`
    pub probe_values: Vec<Vec<f64>>,
    pub max_value: f64,
    pub clamp_events: usize,
}

impl PdeRun {
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// Rightmost `K/2` crossing of the final field.
    pub fn final_front(&self) -> Option<f64> {
        front_position(&self.final_field, self.x_min, self.dx, 0.5 * self.equilibria.k)
    }

    /// Sign changes of `u - K` between the left end and the front.
    pub fn sign_changes_behind_front(&self, floor: f64) -> usize {
        let Some(front) = self.final_front() else { return 0 };
        let end = (((front - self.x_min) / self.dx).floor() as usize).min(self.final_field.len());
        sign_changes_about(&self.final_field[..end], self.equilibria.k, floor)
    }
}

/// Rightmost position where the field crosses `level` downward; `None` when
/// the field is below `level` everywhere or still above it at the right end.
pub fn front_position(u: &[f64], x_min: f64, dx: f64, level: f64) -> Option<f64> {
    let i = u.iter().rposition(|&v| v >= level)?;
    if i + 1 >= u.len() {
        return None;
    }
    let frac = (u[i] - level) / (u[i] - u[i + 1]);
    Some(x_min + (i as f64 + frac) * dx)
}

/// Least-squares speed over samples with `t ≥ window_start`.
pub fn fit_speed(times: &[f64], positions: &[f64], window_start: f64) -> (f64, f64, f64, bool) {
    let (ts, xs): (Vec<f64>, Vec<f64>) =
        times.iter().zip(positions).filter(|(t, _)| **t >= window_start).map(|(t, x)| (*t, *x)).unzip();
    if ts.len() < 3 {
        return (f64::NAN, f64::NAN, f64::NAN, false);
    }
    match linear_fit(&ts, &xs) {
        Some(fit) => (fit.slope, fit.slope_stderr, fit.r_squared, true),
        None => (f64::NAN, f64::NAN, f64::NAN, false),
    }
}

/// Runs the simulation to `config.t_end`, tracking the `K/2` level set.
pub fn simulate(g: &BirthFunction, params: &ModelParams, config: &PdeConfig) -> Result<PdeRun, PdeError> {
    config.validate()?;
    let eq = find_positive_fixed_point(g, None)?;
    let init = initial_field(config, &eq, params.h)?;
    let mut state = PdeState::new(g, params, config, (eq.k, 0.0), init)?;
    let dt = state.dt();
    let dx = config.dx();
    let steps = (config.t_end / dt).round() as usize;
    let sample_every = ((config.sample_interval / dt).round() as usize).max(1);
    let level = 0.5 * eq.k;
    let margin = (10.0 * dx).max(0.02 * (config.x_max - config.x_min));
    let mut snapshot_steps: Vec<(usize, f64)> =
        config.snapshot_times.iter().map(|&t| (((t / dt).round() as usize).min(steps), t)).collect();
    snapshot_steps.sort_by(|a, b| a.0.cmp(&b.0));

    let mut times = Vec::new();
    let mut positions = Vec::new();
    let mut snapshots = Vec::new();
    let mut probe_values: Vec<Vec<f64>> = config.probes.iter().map(|_| Vec::with_capacity(steps + 1)).collect();
    let mut max_value = f64::NEG_INFINITY;
    let mut next_snapshot = 0;

    for k in 0..=steps {
        if k > 0 {
            state.step()?;
        }
        let u = state.current();
        for (rec, &i) in probe_values.iter_mut().zip(&config.probes) {
            rec.push(u[i]);
        }
        max_value = u.iter().copied().fold(max_value, f64::max);
        while next_snapshot < snapshot_steps.len() && snapshot_steps[next_snapshot].0 == k {
            snapshots.push(Snapshot { t: snapshot_steps[next_snapshot].1, values: u.to_vec() });
            next_snapshot += 1;
        }
        if k % sample_every == 0 || k == steps {
            let t = k as f64 * dt;
            match front_position(u, config.x_min, dx, level) {
                Some(x) => {
                    if x > config.x_max - margin {
                        return Err(PdeError::FrontExitedDomain { t, position: x });
                    }
                    if times.last() != Some(&t) {
                        times.push(t);
                        positions.push(x);
                    }
                }
                None if !positions.is_empty() && u[u.len() - 1] >= level => {
                    return Err(PdeError::FrontExitedDomain { t, position: config.x_max });
                }
                None => {}
            }
        }
    }
    let t_end = steps as f64 * dt;
    let window_start = 0.5 * t_end;
    let (speed, speed_stderr, fit_r_squared, speed_valid) = fit_speed(&times, &positions, window_start);
    Ok(PdeRun {
        x_min: config.x_min,
        dx,
        dt,
        delay_steps: state.delay_steps(),
        t_end,
        equilibria: eq,
        final_field: state.current().to_vec(),
        track: FrontTrack { times, positions, speed, speed_stderr, speed_valid, fit_r_squared, fit_window_start: window_start },
        snapshots,
        probe_values,
        max_value,
        clamp_events: state.clamp_events(),
    })
}

/// Final field in the wave variable `τ = -ε (x - x_front)`, `ε = √d / c`,
/// so the `K/2` crossing sits at `τ = 0` and `τ` increases behind the front.
pub fn comoving_profile(run: &PdeRun, speed: f64, d: f64) -> Result<GridProfile, PdeError> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(PdeError::InvalidConfig(format!("speed {speed}")));
    }
    let front = run
        .final_front()
        .ok_or_else(|| PdeError::InvalidConfig("final field has no front".into()))?;
    let eps = d.sqrt() / speed;
    let n = run.final_field.len();
    let x_max = run.x(n - 1);
    let values: Vec<f64> = run.final_field.iter().rev().copied().collect();
    Ok(GridProfile::new(-eps * (x_max - front), eps * run.dx, values, 0.0, run.equilibria.k)?)
}

/// Runs a front, measures its speed over the second half of the run and
/// returns the track with the final field in the co-moving variable.
pub fn run_front_experiment(
    g: &BirthFunction,
    params: &ModelParams,
    config: &PdeConfig,
) -> Result<(PdeRun, GridProfile), PdeError> {
    let run = simulate(g, params, config)?;
    if !run.track.speed_valid {
        let samples = run.track.times.iter().filter(|&&t| t >= run.track.fit_window_start).count();
        return Err(PdeError::SpeedUndetermined { samples });
    }
    let profile = comoving_profile(&run, run.track.speed, config.diffusion(params))?;
    Ok((run, profile))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileComparison {
    pub measured_speed: f64,
    pub epsilon_measured: f64,
    /// `ε` actually solved for; below `epsilon_measured` when the measured
    /// speed falls under the linear spreading speed
    pub epsilon_used: f64,
    pub epsilon_critical: f64,
    pub epsilon_clamped: bool,
    pub sup_discrepancy: f64,
    pub l2_discrepancy: f64,
    pub compared_points: usize,
    pub pde_sign_changes: usize,
    pub wave_sign_changes: usize,
    pub wave_iterations: usize,
    pub wave_residual: f64,
}

/// Relative distance kept below the critical `ε` when the measured speed is
/// slower than the linear spreading speed.
pub const CRITICAL_MARGIN: f64 = 1e-2;

/// Solves the wave equation at `ε = √d / c`, seeded with the PDE profile,
/// and measures the discrepancy where both profiles exceed `1e-3·K`.
pub fn compare_with_profile(
    co_moving: &GridProfile,
    measured_c: f64,
    g: &BirthFunction,
    params: &ModelParams,
    opts: &SolveOptions,
) -> Result<(ProfileComparison, WaveSolution), PdeError> {
    if !(measured_c > 0.0 && measured_c.is_finite()) {
        return Err(PdeError::InvalidConfig(format!("measured speed {measured_c}")));
    }
    let eq = find_positive_fixed_point(g, None)?;
    let h = params.h;
    let epsilon_measured = params.d.sqrt() / measured_c;
    let epsilon_critical = critical_epsilon(eq.p, h).unwrap_or(f64::INFINITY);
    let cap = epsilon_critical * (1.0 - CRITICAL_MARGIN);
    let epsilon_clamped = epsilon_measured > cap;
    let epsilon_used = epsilon_measured.min(cap);
    let wave_params = ModelParams::new(h, 1.0, epsilon_used)?;

    let anchor = co_moving
        .crossing(0.5 * eq.k)
        .ok_or(PdeError::Wave(WaveError::NoCrossing { level: 0.5 * eq.k }))?;
    let pde = GridProfile { t_min: co_moving.t_min - anchor, ..co_moving.clone() };

    let rate = minimal_wave_root(eq.p, h, epsilon_used).ok_or(RootError::HypothesisNotMet { value: epsilon_used })?;
    let target_min = -40.0 / rate;
    // keep the input grid when it already suits the operator
    let aligned = pde.spacing <= 0.05 && (h == 0.0 || ((h / pde.spacing).round() * pde.spacing - h).abs() <= 1e-12 * h.max(1.0));
    let (spacing, t_min) = if aligned {
        let extra = ((pde.t_min - target_min) / pde.spacing).ceil().max(0.0);
        (pde.spacing, pde.t_min - extra * pde.spacing)
    } else {
        let s = aligned_spacing(h, 0.025);
        (s, (target_min / s).floor() * s)
    };
    // seed: PDE data above 1e-8·K, exponential continuation ahead of it
    let seed_floor = 1e-8 * eq.k;
    let first = pde.values.iter().position(|&v| v >= seed_floor).unwrap_or(0);
    let (t_seed, v_seed) = (pde.time(first), pde.values[first].max(seed_floor));
    let settle = (0..pde.len())
        .rev()
        .find(|&i| (pde.values[i] - eq.k).abs() >= 1e-6 * eq.k)
        .map(|i| pde.time(i))
        .unwrap_or(0.0);
    let t_max = (settle + 5.0).max(10.0);
    let n = ((t_max - t_min) / spacing).ceil() as usize + 1;
    let init = GridProfile::sample(t_min, spacing, n, 0.0, eq.k, |t| {
        if t < t_seed {
            v_seed * (rate * (t - t_seed)).exp()
        } else if t > pde.t_max() {
            eq.k
        } else {
            pde.value_at(t)
        }
    })?;
    // near the critical speed plain damping stalls on slowly decaying tail modes
    let depth = if opts.anderson_depth == 0 { 10 } else { opts.anderson_depth };
    let opts = SolveOptions { enforce_epsilon_range: false, anderson_depth: depth, ..*opts };
    let wave = solve_profile(g, &wave_params, &init, &opts)?;

    let floor = 1e-3 * eq.k;
    let x = &wave.profile;
    let mut sup: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0;
    for i in 0..x.len() {
        let t = x.time(i);
        if t < pde.t_min || t > pde.t_max() {
            continue;
        }
        let (a, b) = (x.values[i], pde.value_at(t));
        if a < floor || b < floor {
            continue;
        }
        let diff = (a - b).abs();
        sup = sup.max(diff);
        sum_sq += diff * diff * x.spacing;
        count += 1;
    }
    let noise = 1e-6 * eq.k;
    let report = ProfileComparison {
        measured_speed: measured_c,
        epsilon_measured,
        epsilon_used,
        epsilon_critical,
        epsilon_clamped,
        sup_discrepancy: if count > 0 { sup } else { f64::NAN },
        l2_discrepancy: sum_sq.sqrt(),
        compared_points: count,
        pde_sign_changes: sign_changes_about(&pde.values, eq.k, noise),
        wave_sign_changes: sign_changes_about(&x.values, eq.k, noise),
        wave_iterations: wave.diagnostics.iterations,
        wave_residual: wave.diagnostics.residual_sup,
    };
    Ok((report, wave))
}
