//! The delay ODE `x' = -x + g(x(t-h))` and its heteroclinic connection
//! from `0` to `K`.
//!
//! Integration is classical RK4 on a grid aligned with the delay
//! (`h = m·dt`); delayed values at half steps come from the cubic Hermite
//! interpolant of the stored samples and their derivatives.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::birth::{
    check_corollary_conditions, default_scan_limit, find_positive_fixed_point, BirthError, BirthFunction,
    Equilibria, ModelParams,
};
use crate::charroots::{solve_lambda, RootError};
use crate::numeric::{bisect, hermite, hermite_mid, linear_fit};

/// Values below this are treated as numerical noise when clamping.
pub const CLAMP_TOLERANCE: f64 = 1e-12;
const BLOW_UP: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdeError {
    #[error("delay {h} is not an integer multiple of the step {dt}")]
    MisalignedStep { h: f64, dt: f64 },
    #[error("invalid step or horizon: dt = {dt}, t_end = {t_end}")]
    InvalidStep { dt: f64, t_end: f64 },
    #[error("history must be non-negative: {0}")]
    NegativeHistory(String),
    #[error("history is identically zero (the trivial equilibrium)")]
    ZeroHistory,
    #[error("solution blew up at t = {t}: x = {value}")]
    BlowUp { t: f64, value: f64 },
    #[error("no convergence to K = {k} by t = {t_end}: last value {last}")]
    NoConvergenceToK { k: f64, t_end: f64, last: f64 },
    #[error("positive equilibrium not shown to be attracting (corollary hypotheses failed)")]
    NotAttracting,
    #[error("tail window has {samples} samples, need at least {required}")]
    WindowTooShort { samples: usize, required: usize },
    #[error("sector bound p1 x <= g(x) <= p2 x fails at x = {x}: g(x)/x = {ratio}")]
    SectorViolated { x: f64, ratio: f64 },
    #[error("envelope bound violated at t = {t}: {detail}")]
    BoundsViolated { t: f64, detail: String },
    #[error(transparent)]
    Birth(#[from] BirthError),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Initial function on `[-h, 0]`, as a function of `s = t - t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum History {
    Constant { value: f64 },
    /// `amplitude · e^{rate s}`
    Exponential { amplitude: f64, rate: f64 },
}

impl History {
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            History::Constant { value } => value,
            History::Exponential { amplitude, rate } => amplitude * (rate * s).exp(),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            History::Constant { .. } => 0.0,
            History::Exponential { amplitude, rate } => amplitude * rate * (rate * s).exp(),
        }
    }

    fn validate(&self) -> Result<(), DdeError> {
        match *self {
            History::Constant { value } if value < 0.0 => Err(DdeError::NegativeHistory(format!("constant {value}"))),
            History::Constant { value } if value == 0.0 => Err(DdeError::ZeroHistory),
            History::Exponential { amplitude, .. } if amplitude < 0.0 => {
                Err(DdeError::NegativeHistory(format!("amplitude {amplitude}")))
            }
            History::Exponential { amplitude, .. } if amplitude == 0.0 => Err(DdeError::ZeroHistory),
            _ => Ok(()),
        }
    }
}

/// Dense solution of the delay ODE on the grid `t0 + i·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdeTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub delay: f64,
    pub delay_steps: usize,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub history: History,
    /// samples that dipped below `-CLAMP_TOLERANCE` and were reset to 0
    pub clamp_events: usize,
}

impl DdeTrajectory {
    /// Wraps externally produced samples (for instance an analytic solution).
    pub fn from_samples(t0: f64, dt: f64, delay: f64, values: Vec<f64>, derivatives: Vec<f64>) -> Self {
        let delay_steps = (delay / dt).round() as usize;
        let history = History::Constant { value: values.first().copied().unwrap_or(0.0) };
        Self { t0, dt, delay, delay_steps, values, derivatives, history, clamp_events: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    /// `x(t)`: the history before `t0`, Hermite interpolation inside the
    /// sampled range, `None` beyond it.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t < self.t0 {
            return Some(self.history.value(t - self.t0));
        }
        let pos = (t - self.t0) / self.dt;
        let i = pos.floor() as usize;
        let theta = pos - i as f64;
        let last = self.len().checked_sub(1)?;
        if i >= last {
            return (i == last && theta < 1e-9).then(|| self.values[last]);
        }
        if theta < 1e-9 {
            return Some(self.values[i]);
        }
        if theta > 1.0 - 1e-9 {
            return Some(self.values[i + 1]);
        }
        Some(hermite(
            self.values[i],
            self.derivatives[i],
            self.values[i + 1],
            self.derivatives[i + 1],
            self.dt,
            theta,
        ))
    }

    /// Same trajectory with the time axis moved by `shift` (`t ↦ t + shift`).
    pub fn shifted(mut self, shift: f64) -> Self {
        self.t0 += shift;
        self
    }

    /// First time the trajectory crosses `level` upward, refined on the
    /// Hermite interpolant.
    pub fn first_upward_crossing(&self, level: f64) -> Option<f64> {
        let i = (0..self.len().saturating_sub(1)).find(|&i| self.values[i] < level && self.values[i + 1] >= level)?;
        let f = |theta: f64| {
            hermite(
                self.values[i],
                self.derivatives[i],
                self.values[i + 1],
                self.derivatives[i + 1],
                self.dt,
                theta,
            ) - level
        };
        let theta = bisect(f, 0.0, 1.0, 100).map(|b| b.root).unwrap_or(0.5);
        Some(self.time(i) + theta * self.dt)
    }
}

fn delay_steps(h: f64, dt: f64) -> Result<usize, DdeError> {
    let ratio = h / dt;
    let m = ratio.round();
    if (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
        return Err(DdeError::MisalignedStep { h, dt });
    }
    Ok(m as usize)
}

/// Integrates `x' = -x + g(x(t-h))` on `[0, t_end]` from `history` on `[-h, 0]`.
pub fn integrate(
    g: &BirthFunction,
    params: &ModelParams,
    history: History,
    t_end: f64,
    dt: f64,
) -> Result<DdeTrajectory, DdeError> {
    if !(dt > 0.0 && t_end >= 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(DdeError::InvalidStep { dt, t_end });
    }
    history.validate()?;
    let m = delay_steps(params.h, dt)?;
    let steps = (t_end / dt).round() as usize;
    let rhs = |x: f64, delayed: f64| -x + g.value(delayed);

    let mut values = Vec::with_capacity(steps + 1);
    let mut derivatives = Vec::with_capacity(steps + 1);
    let x0 = history.value(0.0);
    values.push(x0);
    let first_delayed = if m == 0 { x0 } else { history.value(-params.h) };
    derivatives.push(rhs(x0, first_delayed));
    let mut clamp_events = 0;

    for k in 0..steps {
        let x = values[k];
        let j = k as isize - m as isize;
        let (d_start, d_mid, d_end) = if m == 0 {
            (None, None, None)
        } else {
            let at = |idx: isize| -> f64 {
                if idx >= 0 {
                    values[idx as usize]
                } else {
                    history.value(idx as f64 * dt)
                }
            };
            let mid = if j >= 0 {
                let j = j as usize;
                hermite_mid(values[j], derivatives[j], values[j + 1], derivatives[j + 1], dt)
            } else {
                history.value((j as f64 + 0.5) * dt)
            };
            (Some(at(j)), Some(mid), Some(at(j + 1)))
        };
        let k1 = rhs(x, d_start.unwrap_or(x));
        let x2 = x + 0.5 * dt * k1;
        let k2 = rhs(x2, d_mid.unwrap_or(x2));
        let x3 = x + 0.5 * dt * k2;
        let k3 = rhs(x3, d_mid.unwrap_or(x3));
        let x4 = x + dt * k3;
        let k4 = rhs(x4, d_end.unwrap_or(x4));
        let mut next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() || next.abs() > BLOW_UP {
            return Err(DdeError::BlowUp { t: (k + 1) as f64 * dt, value: next });
        }
        if next < 0.0 {
            if next < -CLAMP_TOLERANCE {
                clamp_events += 1;
            }
            next = 0.0;
        }
        values.push(next);
        let delayed_next = if m == 0 {
            next
        } else if j + 1 >= 0 {
            values[(j + 1) as usize]
        } else {
            history.value((j + 1) as f64 * dt)
        };
        derivatives.push(rhs(next, delayed_next));
    }

    Ok(DdeTrajectory { t0: 0.0, dt, delay: params.h, delay_steps: m, values, derivatives, history, clamp_events })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicOptions {
    /// defaults to `1e-6·K`
    pub seed_amplitude: Option<f64>,
    /// defaults to `ln(K/seed)/λ + 100`
    pub t_span: Option<f64>,
    pub steps_per_delay: usize,
    /// step used when `h = 0`
    pub dt_without_delay: f64,
    /// skip the global-attractivity check
    pub override_attracting: bool,
}

impl Default for HeteroclinicOptions {
    fn default() -> Self {
        Self {
            seed_amplitude: None,
            t_span: None,
            steps_per_delay: 100,
            dt_without_delay: 0.005,
            override_attracting: false,
        }
    }
}

impl HeteroclinicOptions {
    pub fn step(&self, h: f64) -> f64 {
        if h > 0.0 {
            h / self.steps_per_delay as f64
        } else {
            self.dt_without_delay
        }
    }
}

/// Numerical heteroclinic orbit `ψ`, `ψ(-∞) = 0`, `ψ(+∞) = K`.
///
/// Integration starts on the leading unstable direction
/// `seed·e^{λs}`, `s ∈ [-h, 0]`; the result is shifted so that its first
/// upward crossing of `K/2` sits at `t = 0`.
pub fn heteroclinic(
    g: &BirthFunction,
    params: &ModelParams,
    opts: &HeteroclinicOptions,
) -> Result<(DdeTrajectory, Equilibria), DdeError> {
    let eq = find_positive_fixed_point(g, None)?;
    if !opts.override_attracting {
        let report = check_corollary_conditions(g, &eq, params.h, default_scan_limit(g).min(50.0));
        // the monotone regime (Γ ≥ 0) is attracting without the corollary
        if !(report.all_pass || (eq.gamma >= 0.0 && eq.gamma < 1.0)) {
            return Err(DdeError::NotAttracting);
        }
    }
    let seed = opts.seed_amplitude.unwrap_or(1e-6 * eq.k);
    if !(seed > 0.0) {
        if seed == 0.0 {
            return Err(DdeError::ZeroHistory);
        }
        return Err(DdeError::NegativeHistory(format!("seed amplitude {seed}")));
    }
    let lambda = solve_lambda(eq.p, params.h)?.value;
    let t_span = opts.t_span.unwrap_or_else(|| (eq.k / seed).ln().max(0.0) / lambda + 100.0);
    let dt = opts.step(params.h);
    let traj = integrate(g, params, History::Exponential { amplitude: seed, rate: lambda }, t_span, dt)?;
    let last = *traj.values.last().unwrap();
    if (last - eq.k).abs() >= 1e-6 {
        return Err(DdeError::NoConvergenceToK { k: eq.k, t_end: traj.t_end(), last });
    }
    let crossing = traj
        .first_upward_crossing(0.5 * eq.k)
        .ok_or(DdeError::NoConvergenceToK { k: eq.k, t_end: traj.t_end(), last })?;
    Ok((traj.shifted(-crossing), eq))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// fitted growth rate of `ln x`
    pub exponent: f64,
    pub amplitude: f64,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    pub samples: usize,
    pub accepted: bool,
}

pub const TAIL_FIT_MIN_SAMPLES: usize = 50;
pub const TAIL_FIT_R2: f64 = 0.999;

/// Log-linear least squares over `t`/`x` pairs restricted to
/// `1e-10 < x < fraction·K`, taken before `x` first reaches `fraction·K`.
pub fn fit_left_tail(times: &[f64], values: &[f64], k: f64, fraction: f64) -> Result<TailFit, DdeError> {
    let upper = fraction * k;
    let end = values.iter().position(|&x| x >= upper).unwrap_or(values.len());
    let (ts, ls): (Vec<f64>, Vec<f64>) = times[..end]
        .iter()
        .zip(&values[..end])
        .filter(|(_, &x)| x > 1e-10)
        .map(|(&t, &x)| (t, x.ln()))
        .unzip();
    if ts.len() < TAIL_FIT_MIN_SAMPLES {
        return Err(DdeError::WindowTooShort { samples: ts.len(), required: TAIL_FIT_MIN_SAMPLES });
    }
    let fit = linear_fit(&ts, &ls).ok_or(DdeError::WindowTooShort { samples: ts.len(), required: 2 })?;
    Ok(TailFit {
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        fit_window: (ts[0], ts[ts.len() - 1]),
        r_squared: fit.r_squared,
        samples: ts.len(),
        accepted: fit.r_squared >= TAIL_FIT_R2,
    })
}

/// Exponential growth rate of the trajectory's leading tail, `x < 0.01·K`.
pub fn fit_tail_exponent(traj: &DdeTrajectory, k: f64) -> Result<TailFit, DdeError> {
    fit_left_tail(&traj.times(), &traj.values, k, 0.01)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub p1: f64,
    pub p2: f64,
    pub delta_tail: f64,
    /// roots of `z = -1 + p_i e^{-zh}`
    pub lambda_env1: f64,
    pub lambda_env2: f64,
    /// `min x e^{-λ₂ t}` over the tail
    pub c1: f64,
    /// `max x e^{-λ₁ t}` over the tail
    pub c2: f64,
    pub tail_samples: usize,
    pub windows_checked: usize,
    /// smallest `min/max` ratio over the delay windows, to compare with `e^{-h}/p₂`
    pub worst_window_ratio: f64,
    pub window_bound: f64,
    pub sandwich_ok: bool,
    pub window_inequality_ok: bool,
}

/// Checks the exponential sandwich `C₁e^{λ₂t} ≤ x(t) ≤ C₂e^{λ₁t}` and the
/// delay-window Harnack bound `min_{[t-h,t]} x ≥ e^{-h}/p₂ · max_{[t-h,t]} x`
/// on the tail `x < delta_tail`, given the sector `p₁x ≤ g(x) ≤ p₂x`.
pub fn validate_envelopes(
    traj: &DdeTrajectory,
    g: &BirthFunction,
    params: &ModelParams,
    p1: f64,
    p2: f64,
    delta_tail: f64,
) -> Result<EnvelopeReport, DdeError> {
    let p = g.p();
    if !(p1 > 1.0 && p1 <= p && p <= p2) {
        return Err(DdeError::BoundsViolated {
            t: f64::NAN,
            detail: format!("need 1 < p1 <= p <= p2, got p1 = {p1}, p = {p}, p2 = {p2}"),
        });
    }
    let slack = 1e-12;
    let check_sector = |x: f64| -> Result<(), DdeError> {
        let gx = g.value(x);
        if gx < p1 * x * (1.0 - slack) || gx > p2 * x * (1.0 + slack) {
            return Err(DdeError::SectorViolated { x, ratio: gx / x });
        }
        Ok(())
    };
    for k in 1..=1000 {
        check_sector(delta_tail * k as f64 / 1000.0)?;
    }
    let end = traj.values.iter().position(|&x| x >= delta_tail).unwrap_or(traj.len());
    for &x in traj.values[..end].iter().filter(|&&x| x > 0.0) {
        check_sector(x)?;
    }

    let l1 = solve_lambda(p1, params.h)?.value;
    let l2 = solve_lambda(p2, params.h)?.value;
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    let mut tail_samples = 0;
    for i in 0..end {
        let (t, x) = (traj.time(i), traj.values[i]);
        if x <= 0.0 {
            continue;
        }
        tail_samples += 1;
        c1 = c1.min(x * (-l2 * t).exp());
        c2 = c2.max(x * (-l1 * t).exp());
    }
    let sandwich_ok = tail_samples > 0 && c1.is_finite() && c1 > 0.0 && c2.is_finite();
    if !sandwich_ok {
        return Err(DdeError::BoundsViolated { t: traj.t0, detail: "no positive tail samples".into() });
    }

    let m = traj.delay_steps;
    let bound = (-params.h).exp() / p2;
    let mut worst = f64::INFINITY;
    let mut windows = 0;
    if m > 0 {
        for i in m..end {
            let window = &traj.values[i - m..=i];
            let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = window.iter().copied().fold(0.0, f64::max);
            if hi <= 0.0 {
                continue;
            }
            windows += 1;
            let ratio = lo / hi;
            worst = worst.min(ratio);
            if ratio < bound * (1.0 - slack) {
                return Err(DdeError::BoundsViolated {
                    t: traj.time(i),
                    detail: format!("window min/max = {ratio} below e^-h/p2 = {bound}"),
                });
            }
        }
    }
    Ok(EnvelopeReport {
        p1,
        p2,
        delta_tail,
        lambda_env1: l1,
        lambda_env2: l2,
        c1,
        c2,
        tail_samples,
        windows_checked: windows,
        worst_window_ratio: worst,
        window_bound: bound,
        sandwich_ok,
        window_inequality_ok: true,
    })
}

/// Local maxima of the sampled trajectory.
pub fn local_maxima(traj: &DdeTrajectory) -> Vec<f64> {
    crate::numeric::local_maxima(&traj.values).into_iter().map(|(_, v)| v).collect()
}
