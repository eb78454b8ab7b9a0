//! Birth functions `g`, their equilibria and the scalar stability criteria.
//!
//! All quantities are in rescaled variables: the Nicholson model
//! `N_t = D N_xx - δN + p N(t-h) e^{-bN(t-h)}` is reduced to `δ = b = 1`,
//! so that `g(u) = p u e^{-u}` and the linear death rate is one.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::bisect;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BirthError {
    #[error("invalid birth-function parameter: {0}")]
    InvalidParameter(String),
    #[error("g(0) = {0}, expected exactly 0")]
    NonzeroAtOrigin(f64),
    #[error("g({u}) = {value} is negative")]
    NegativeValue { u: f64, value: f64 },
    #[error("no positive fixed point of g on (0, {u_max}]")]
    NoPositiveFixedPoint { u_max: f64 },
    #[error("{count} positive fixed points of g on (0, {u_max}] (exactly one required)")]
    MultiplePositiveFixedPoints { count: usize, u_max: f64 },
    #[error("Schwarzian undefined at u = {u}: g'(u) = {derivative}")]
    CriticalPoint { u: f64, derivative: f64 },
}

/// User-supplied birth function with optional analytic derivatives.
#[derive(Clone)]
pub struct CustomBirth {
    pub name: String,
    pub g: ScalarFn,
    pub d1: ScalarFn,
    pub d2: ScalarFn,
    /// Falls back to a central difference of `d2` when absent.
    pub d3: Option<ScalarFn>,
}

impl fmt::Debug for CustomBirth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomBirth")
            .field("name", &self.name)
            .field("analytic_d3", &self.d3.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum BirthKind {
    /// `g(u) = p u e^{-u}`
    Nicholson { p: f64 },
    /// `g(u) = p u / (1 + u^n)`
    MackeyGlass { p: f64, n: f64 },
    Custom(CustomBirth),
}

/// Serializable description of a built-in birth function, as it appears in
/// run configs: `{"kind": "nicholson", "p": 7.389}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BirthSpec {
    Nicholson { p: f64 },
    MackeyGlass { p: f64, n: f64 },
}

impl BirthSpec {
    pub fn build(&self) -> Result<BirthFunction, BirthError> {
        match *self {
            BirthSpec::Nicholson { p } => BirthFunction::nicholson(p),
            BirthSpec::MackeyGlass { p, n } => BirthFunction::mackey_glass(p, n),
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            BirthSpec::Nicholson { p } | BirthSpec::MackeyGlass { p, .. } => p,
        }
    }

    pub fn with_p(&self, p: f64) -> Self {
        match *self {
            BirthSpec::Nicholson { .. } => BirthSpec::Nicholson { p },
            BirthSpec::MackeyGlass { n, .. } => BirthSpec::MackeyGlass { p, n },
        }
    }
}

/// The nonlinearity `g` of `u_t = d u_xx - u + g(u(t-h))`.
#[derive(Debug, Clone)]
pub struct BirthFunction {
    kind: BirthKind,
}

impl BirthFunction {
    pub fn nicholson(p: f64) -> Result<Self, BirthError> {
        if !(p.is_finite() && p > 0.0) {
            return Err(BirthError::InvalidParameter(format!("Nicholson p must be positive, got {p}")));
        }
        Ok(Self { kind: BirthKind::Nicholson { p } })
    }

    pub fn mackey_glass(p: f64, n: f64) -> Result<Self, BirthError> {
        if !(p.is_finite() && p > 0.0) {
            return Err(BirthError::InvalidParameter(format!("Mackey-Glass p must be positive, got {p}")));
        }
        if !(n.is_finite() && n >= 1.0) {
            return Err(BirthError::InvalidParameter(format!("Mackey-Glass n must be >= 1, got {n}")));
        }
        Ok(Self { kind: BirthKind::MackeyGlass { p, n } })
    }

    /// Wraps a custom function after checking `g(0) = 0` and `g ≥ 0` on a
    /// sample of `[0, check_range]`.
    pub fn custom(custom: CustomBirth, check_range: f64) -> Result<Self, BirthError> {
        let g0 = (custom.g)(0.0);
        if g0 != 0.0 {
            return Err(BirthError::NonzeroAtOrigin(g0));
        }
        let f = Self { kind: BirthKind::Custom(custom) };
        f.check_nonnegative(check_range, 1000)?;
        Ok(f)
    }

    pub fn kind(&self) -> &BirthKind {
        &self.kind
    }

    pub fn spec(&self) -> Option<BirthSpec> {
        match self.kind {
            BirthKind::Nicholson { p } => Some(BirthSpec::Nicholson { p }),
            BirthKind::MackeyGlass { p, n } => Some(BirthSpec::MackeyGlass { p, n }),
            BirthKind::Custom(_) => None,
        }
    }

    pub fn check_nonnegative(&self, range: f64, samples: usize) -> Result<(), BirthError> {
        for k in 0..=samples {
            let u = range * k as f64 / samples as f64;
            let v = self.value(u);
            if v < 0.0 || v.is_nan() {
                return Err(BirthError::NegativeValue { u, value: v });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match &self.kind {
            BirthKind::Nicholson { p } => p * u * (-u).exp(),
            BirthKind::MackeyGlass { p, n } => p * u / (1.0 + u.powf(*n)),
            BirthKind::Custom(c) => (c.g)(u),
        }
    }

    pub fn d1(&self, u: f64) -> f64 {
        match &self.kind {
            BirthKind::Nicholson { p } => p * (-u).exp() * (1.0 - u),
            BirthKind::MackeyGlass { p, n } => {
                let w = u.powf(*n);
                p * (1.0 + (1.0 - n) * w) / ((1.0 + w) * (1.0 + w))
            }
            BirthKind::Custom(c) => (c.d1)(u),
        }
    }

    pub fn d2(&self, u: f64) -> f64 {
        match &self.kind {
            BirthKind::Nicholson { p } => p * (-u).exp() * (u - 2.0),
            BirthKind::MackeyGlass { p, n } => {
                let n = *n;
                if n == 1.0 {
                    return -2.0 * p / (1.0 + u).powi(3);
                }
                let w = u.powf(n);
                -n * p * u.powf(n - 1.0) * (n + 1.0 + (1.0 - n) * w) / (1.0 + w).powi(3)
            }
            BirthKind::Custom(c) => (c.d2)(u),
        }
    }

    pub fn d3(&self, u: f64) -> f64 {
        match &self.kind {
            BirthKind::Nicholson { p } => p * (-u).exp() * (3.0 - u),
            BirthKind::MackeyGlass { p, n } => {
                let n = *n;
                if n == 1.0 {
                    return 6.0 * p / (1.0 + u).powi(4);
                }
                let w = u.powf(n);
                let poly = (1.0 - n * n) * w * w + (4.0 * n * n + 2.0) * w + 1.0 - n * n;
                n * p * u.powf(n - 2.0) * poly / (1.0 + w).powi(4)
            }
            BirthKind::Custom(c) => match &c.d3 {
                Some(d3) => d3(u),
                None => {
                    let step = 1e-4 * u.abs().max(1.0);
                    ((c.d2)(u + step) - (c.d2)(u - step)) / (2.0 * step)
                }
            },
        }
    }

    /// `g'(0)`.
    pub fn p(&self) -> f64 {
        self.d1(0.0)
    }

    /// Location of the interior maximum `x_M`, if the family has one.
    pub fn critical_point(&self) -> Option<f64> {
        match &self.kind {
            BirthKind::Nicholson { .. } => Some(1.0),
            BirthKind::MackeyGlass { n, .. } if *n > 1.0 => Some((1.0 / (n - 1.0)).powf(1.0 / n)),
            BirthKind::MackeyGlass { .. } => None,
            BirthKind::Custom(_) => {
                let xs = critical_points(self, 50.0, 4000);
                (xs.len() == 1).then(|| xs[0])
            }
        }
    }

    /// `sup_{u ≥ 0} g(u)`; for custom functions the supremum over `[0, 50]`
    /// sampled and refined.
    pub fn max_value(&self) -> f64 {
        match &self.kind {
            BirthKind::Nicholson { p } => p / std::f64::consts::E,
            BirthKind::MackeyGlass { p, n } if *n > 1.0 => {
                let xm = (1.0 / (n - 1.0)).powf(1.0 / n);
                p * xm * (n - 1.0) / n
            }
            BirthKind::MackeyGlass { p, .. } => *p,
            BirthKind::Custom(_) => {
                let samples = 20000;
                let u_max = 50.0;
                (0..=samples)
                    .map(|k| self.value(u_max * k as f64 / samples as f64))
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// Roots of `g'` on `(0, u_max]` located by sign changes on a uniform grid.
pub fn critical_points(g: &BirthFunction, u_max: f64, samples: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev_u = u_max / samples as f64;
    let mut prev = g.d1(prev_u);
    for k in 2..=samples {
        let u = u_max * k as f64 / samples as f64;
        let cur = g.d1(u);
        if cur == 0.0 {
            out.push(u);
        } else if prev != 0.0 && cur.signum() != prev.signum() {
            if let Some(b) = bisect(|x| g.d1(x), prev_u, u, 100) {
                out.push(b.root);
            }
        }
        prev_u = u;
        prev = cur;
    }
    out
}

/// Rescaled model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// delay
    pub h: f64,
    /// diffusion coefficient
    pub d: f64,
    /// inverse wave speed `1/c`; zero is the delay-ODE limit
    pub epsilon: f64,
}

impl ModelParams {
    pub fn new(h: f64, d: f64, epsilon: f64) -> Result<Self, BirthError> {
        if !(h.is_finite() && h >= 0.0) {
            return Err(BirthError::InvalidParameter(format!("delay h must be >= 0, got {h}")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(BirthError::InvalidParameter(format!("diffusion d must be > 0, got {d}")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(BirthError::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
        }
        Ok(Self { h, d, epsilon })
    }

    pub fn delay_ode(h: f64) -> Result<Self, BirthError> {
        Self::new(h, 1.0, 0.0)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self, BirthError> {
        Self::new(self.h, self.d, epsilon)
    }
}

/// Rescaled parameters of the raw Nicholson model
/// `N_t = D N_xx - δN + p N(t-h) e^{-bN(t-h)}`.
///
/// Time is measured in units of `1/δ` and density in units of `1/b`; the
/// spatial variable is kept, so the diffusion becomes `D/δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub p: f64,
    pub h: f64,
    pub d: f64,
    pub density_unit: f64,
    pub time_unit: f64,
}

pub fn rescale_nicholson(p: f64, delta: f64, b: f64, h: f64, diffusion: f64) -> Result<Rescaled, BirthError> {
    if !(delta > 0.0 && b > 0.0 && p > 0.0 && h >= 0.0 && diffusion > 0.0) {
        return Err(BirthError::InvalidParameter(
            "rescaling needs p, delta, b, diffusion > 0 and h >= 0".into(),
        ));
    }
    Ok(Rescaled { p: p / delta, h: delta * h, d: diffusion / delta, density_unit: 1.0 / b, time_unit: 1.0 / delta })
}

/// The positive equilibrium with the two derivatives that enter every criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibria {
    #[serde(rename = "K")]
    pub k: f64,
    /// `g'(0)`
    pub p: f64,
    /// `g'(K)`
    #[serde(rename = "Gamma")]
    pub gamma: f64,
}

pub fn default_scan_limit(g: &BirthFunction) -> f64 {
    50.0 * g.p().max(1.0)
}

/// Finds the unique positive fixed point of `g` on `(0, u_max]`.
///
/// A logarithmic scan on `(1e-8, u_max]` counts sign changes of `g(u) - u`;
/// exactly one is required, which is then refined by bisection.
pub fn find_positive_fixed_point(g: &BirthFunction, u_max: Option<f64>) -> Result<Equilibria, BirthError> {
    let u_max = u_max.unwrap_or_else(|| default_scan_limit(g));
    let f = |u: f64| g.value(u) - u;
    let samples = 4000;
    let (lo, ln_ratio) = (1e-8f64, (u_max / 1e-8).ln());
    let mut brackets = Vec::new();
    let mut prev_u = lo;
    let mut prev = f(lo);
    for k in 1..=samples {
        let u = lo * (ln_ratio * k as f64 / samples as f64).exp();
        let cur = f(u);
        if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
            brackets.push((prev_u, u));
        } else if cur == 0.0 {
            brackets.push((u, u));
        }
        prev_u = u;
        prev = cur;
    }
    match brackets.len() {
        0 => Err(BirthError::NoPositiveFixedPoint { u_max }),
        1 => {
            let (a, b) = brackets[0];
            let k = if a == b {
                a
            } else {
                bisect(f, a, b, 200).map(|r| r.root).ok_or(BirthError::NoPositiveFixedPoint { u_max })?
            };
            Ok(Equilibria { k, p: g.p(), gamma: g.d1(k) })
        }
        count => Err(BirthError::MultiplePositiveFixedPoints { count, u_max }),
    }
}

/// Schwarzian derivative `g'''/g' - (3/2)(g''/g')²`.
pub fn schwarzian(g: &BirthFunction, u: f64) -> Result<f64, BirthError> {
    let d1 = g.d1(u);
    let scale = g.p().abs().max(1.0);
    if d1.abs() < 1e-10 * scale {
        return Err(BirthError::CriticalPoint { u, derivative: d1 });
    }
    let r = g.d2(u) / d1;
    Ok(g.d3(u) / d1 - 1.5 * r * r)
}

/// Evaluation of the delay-dependent attractivity condition
/// `e^{-h} > -Γ ln((Γ² - Γ)/(Γ² + 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GscOutcome {
    pub holds: bool,
    /// `Γ ∈ [0, 1)`: the logarithm is undefined or the condition is void.
    pub vacuous: bool,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn check_gsc(eq: &Equilibria, h: f64) -> GscOutcome {
    let gamma = eq.gamma;
    let lhs = (-h).exp();
    if (0.0..1.0).contains(&gamma) {
        return GscOutcome { holds: true, vacuous: true, lhs, rhs: f64::NAN };
    }
    let arg = (gamma * gamma - gamma) / (gamma * gamma + 1.0);
    let rhs = if arg > 0.0 { -gamma * arg.ln() } else { f64::INFINITY };
    // strict inequality: the boundary counts as failure
    GscOutcome { holds: lhs > rhs, vacuous: false, lhs, rhs }
}

/// Left side `Γ h e^{h+1}` of the oscillation criterion.
pub fn oscillation_lhs(eq: &Equilibria, h: f64) -> f64 {
    eq.gamma * h * (h + 1.0).exp()
}

/// `Γ h e^{h+1} < -1`.
pub fn check_oscillation_criterion(eq: &Equilibria, h: f64) -> bool {
    oscillation_lhs(eq, h) < -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub critical_points: Vec<f64>,
    pub unique_maximum: bool,
    pub schwarzian_samples: usize,
    pub schwarzian_max: f64,
    pub schwarzian_negative: bool,
    pub gsc: GscOutcome,
    pub oscillation_lhs: f64,
    pub oscillation_criterion: bool,
    pub all_pass: bool,
}

/// Hypotheses of the global-attractivity corollary, sampled on `(0, u_max]`:
/// a single critical point of `g` which is a maximum, a negative Schwarzian
/// away from it, and the delay condition.
pub fn check_corollary_conditions(g: &BirthFunction, eq: &Equilibria, h: f64, u_max: f64) -> CorollaryReport {
    let samples = 4000;
    let crit = critical_points(g, u_max, samples);
    let unique_maximum = match crit.as_slice() {
        [c] => {
            let dx = 1e-3 * c.max(1e-3);
            g.d1(c - dx) > 0.0 && g.d1(c + dx) < 0.0
        }
        _ => false,
    };
    let mut s_max = f64::NEG_INFINITY;
    let mut counted = 0;
    for k in 1..=samples {
        let u = u_max * k as f64 / samples as f64;
        if crit.iter().any(|&c| (u - c).abs() < 1e-3 * (1.0 + c)) {
            continue;
        }
        if let Ok(s) = schwarzian(g, u) {
            if s.is_finite() {
                counted += 1;
                s_max = s_max.max(s);
            }
        }
    }
    let schwarzian_negative = counted > 0 && s_max < 0.0;
    let gsc = check_gsc(eq, h);
    let osc = oscillation_lhs(eq, h);
    CorollaryReport {
        critical_points: crit,
        unique_maximum,
        schwarzian_samples: counted,
        schwarzian_max: s_max,
        schwarzian_negative,
        gsc,
        oscillation_lhs: osc,
        oscillation_criterion: osc < -1.0,
        all_pass: unique_maximum && schwarzian_negative && gsc.holds,
    }
}
