//! Characteristic equations of the linearisations at `0` and `K`.
//!
//! At the zero equilibrium, exponential solutions `e^{zt}` of the wave
//! equation `ε² x'' - x' - x + g(x(t-h)) = 0` require
//! `ε² z² - z - 1 + p e^{-zh} = 0`; at `ε = 0` this is `z = -1 + p e^{-zh}`.
//! Real roots are bracketed analytically and found by bisection; complex
//! roots are only counted, with the argument principle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::bisect;

const MAX_BISECTION: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("epsilon = {epsilon} outside (0, {bound}) for p = {p}")]
    EpsilonOutOfRange { epsilon: f64, bound: f64, p: f64 },
    #[error("hypothesis |Gamma| h e^(h+1) > 1 not met: value {value}")]
    HypothesisNotMet { value: f64 },
    #[error("contour passes through a root after {attempts} perturbations")]
    ContourThroughRoot { attempts: usize },
}

/// `ε² z² - z - 1 + p e^{-zh}`.
#[inline]
pub fn char_zero(p: f64, h: f64, epsilon: f64, z: f64) -> f64 {
    epsilon * epsilon * z * z - z - 1.0 + p * (-z * h).exp()
}

#[inline]
pub fn char_complex(coef: f64, h: f64, epsilon: f64, z: Complex64) -> Complex64 {
    epsilon * epsilon * z * z - z - 1.0 + coef * (-z * h).exp()
}

#[inline]
fn char_complex_derivative(coef: f64, h: f64, epsilon: f64, z: Complex64) -> Complex64 {
    2.0 * epsilon * epsilon * z - 1.0 - coef * h * (-z * h).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealRootResult {
    pub value: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

fn bisect_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<RealRootResult, RootError> {
    let b = bisect(&f, lo, hi, MAX_BISECTION)
        .ok_or_else(|| RootError::BracketFailure { lo, hi, f_lo: f(lo), f_hi: f(hi) })?;
    Ok(RealRootResult { value: b.root, residual: f(b.root), bracket: b.bracket, iterations: b.iterations })
}

/// The unique positive root `λ ∈ (0, p-1]` of `z + 1 - p e^{-zh} = 0`.
pub fn solve_lambda(p: f64, h: f64) -> Result<RealRootResult, RootError> {
    if !(p.is_finite() && h.is_finite() && h >= 0.0) {
        return Err(RootError::InvalidParameter(format!("p = {p}, h = {h}")));
    }
    if p <= 1.0 {
        let f = |z| char_zero(p, h, 0.0, z);
        return Err(RootError::BracketFailure { lo: 0.0, hi: p - 1.0, f_lo: f(0.0), f_hi: f(p - 1.0) });
    }
    if h == 0.0 {
        return Ok(RealRootResult { value: p - 1.0, residual: 0.0, bracket: (0.0, p - 1.0), iterations: 0 });
    }
    bisect_root(|z| char_zero(p, h, 0.0, z), 0.0, p - 1.0)
}

/// `1/(2√(p-1))`, the largest `ε` for which the two real roots are bracketed.
pub fn epsilon_bound(p: f64) -> f64 {
    0.5 / (p - 1.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbedRoots {
    /// the `ε = 0` root
    pub lambda: f64,
    pub lambda1: f64,
    pub lambda_inf: f64,
    pub epsilon: f64,
    pub residuals: (f64, f64),
}

impl PerturbedRoots {
    /// `0 < λ < λ₁ < 2(p-1) < ε⁻² - 2(p-1) < λ_∞ < ε⁻² + 1`.
    pub fn chain_holds(&self, p: f64) -> bool {
        let inv = 1.0 / (self.epsilon * self.epsilon);
        let two = 2.0 * (p - 1.0);
        0.0 < self.lambda
            && self.lambda < self.lambda1
            && self.lambda1 < two
            && two < inv - two
            && inv - two < self.lambda_inf
            && self.lambda_inf < inv + 1.0
    }

    /// Residuals scaled by `max(1, ε² z²)`.
    pub fn scaled_residuals(&self) -> (f64, f64) {
        let e2 = self.epsilon * self.epsilon;
        let s = |z: f64| (e2 * z * z).max(1.0);
        (self.residuals.0 / s(self.lambda1), self.residuals.1 / s(self.lambda_inf))
    }
}

/// Both positive real roots of `ε² z² - z - 1 + p e^{-zh} = 0`.
pub fn solve_perturbed(p: f64, h: f64, epsilon: f64) -> Result<PerturbedRoots, RootError> {
    if !(p > 1.0) {
        return Err(RootError::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    let bound = epsilon_bound(p);
    if !(epsilon > 0.0 && epsilon < bound) {
        return Err(RootError::EpsilonOutOfRange { epsilon, bound, p });
    }
    let lambda = solve_lambda(p, h)?.value;
    let f = |z: f64| char_zero(p, h, epsilon, z);
    let two = 2.0 * (p - 1.0);
    let inv = 1.0 / (epsilon * epsilon);
    let r1 = bisect_root(f, lambda, two)?;
    let r_inf = bisect_root(f, inv - two, inv + 1.0)?;
    Ok(PerturbedRoots {
        lambda,
        lambda1: r1.value,
        lambda_inf: r_inf.value,
        epsilon,
        residuals: (r1.residual, r_inf.residual),
    })
}

/// Minimal positive root of the wave characteristic equation, without the
/// range restriction of [`solve_perturbed`].
///
/// Returns `None` once the two real roots have merged (the speed `1/ε` is
/// below the linear spreading speed).
pub fn minimal_wave_root(p: f64, h: f64, epsilon: f64) -> Option<f64> {
    if epsilon == 0.0 {
        return solve_lambda(p, h).ok().map(|r| r.value);
    }
    let lambda = solve_lambda(p, h).ok()?.value;
    let f = |z: f64| char_zero(p, h, epsilon, z);
    // f is convex; march from λ until it turns negative
    let inv = 1.0 / (epsilon * epsilon);
    let steps = 4000;
    let mut prev = lambda;
    for k in 1..=steps {
        let z = lambda + (inv - lambda) * k as f64 / steps as f64;
        if f(z) < 0.0 {
            return bisect(f, prev, z, MAX_BISECTION).map(|b| b.root);
        }
        prev = z;
    }
    None
}

/// Largest `ε` for which the characteristic equation at zero still has a
/// positive real root, i.e. `1/c*` for the linearised problem.
pub fn critical_epsilon(p: f64, h: f64) -> Option<f64> {
    if !(p > 1.0) {
        return None;
    }
    let mut hi = 1.0;
    while minimal_wave_root(p, h, hi).is_some() {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if minimal_wave_root(p, h, mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub epsilon: f64,
    pub lambda1: f64,
    pub gap: f64,
}

/// `λ₁(ε) - λ` for each `ε` of a descending list. Values of `ε` past the
/// existence range are allowed as long as the minimal root still exists.
pub fn limit_consistency(p: f64, h: f64, epsilons: &[f64]) -> Result<Vec<LimitRow>, RootError> {
    let lambda = solve_lambda(p, h)?.value;
    epsilons
        .iter()
        .map(|&e| {
            if !(e > 0.0 && e.is_finite()) {
                return Err(RootError::InvalidParameter(format!("epsilon must be positive, got {e}")));
            }
            let lambda1 = minimal_wave_root(p, h, e).ok_or(RootError::HypothesisNotMet { value: e })?;
            Ok(LimitRow { epsilon: e, lambda1, gap: lambda1 - lambda })
        })
        .collect()
}

/// True when gaps are positive and strictly decrease along the table.
pub fn gaps_shrink(rows: &[LimitRow]) -> bool {
    rows.iter().all(|r| r.gap > 0.0) && rows.windows(2).all(|w| w[1].gap < w[0].gap)
}

/// `ζ₀(p, h)`, the largest positive root of `p e^{-zh} = (2+z)/(2+hz)`, and
/// the scale `a(p, h) = 1/√(2 ζ₀)` below which no real root can be double.
pub fn double_root_scale(p: f64, h: f64) -> Option<(f64, f64)> {
    let f = |z: f64| p * (-z * h).exp() - (2.0 + z) / (2.0 + h * z);
    let zeta = if h == 0.0 {
        2.0 * (p - 1.0)
    } else {
        // beyond z_hi the exponential is negligible next to 1/h
        let z_hi = ((p * h * 1e6).max(1.0).ln() / h).max(10.0);
        let n = 20000;
        let mut last = None;
        let mut prev_z = 0.0;
        let mut prev = f(0.0);
        for k in 1..=n {
            let z = z_hi * k as f64 / n as f64;
            let cur = f(z);
            if prev.signum() != cur.signum() {
                last = bisect(f, prev_z, z, MAX_BISECTION).map(|b| b.root);
            }
            prev_z = z;
            prev = cur;
        }
        last?
    };
    (zeta > 0.0).then(|| (zeta, 1.0 / (2.0 * zeta).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub gamma: f64,
    pub h: f64,
    pub epsilon: f64,
    /// `|Γ| h e^{h+1}`
    pub hypothesis_value: f64,
    pub z_max: f64,
    /// Maximum of `Δ_ε(z)` over `z ∈ [-z_max, 0]`; negative means no root.
    pub negative_axis_max: f64,
    pub argmax: f64,
    pub no_negative_real_roots: bool,
    pub im_bound: f64,
    /// `min |Δ_ε(ib)|` over `b ∈ [-im_bound, im_bound]`.
    pub imaginary_axis_min: f64,
    pub no_imaginary_roots: bool,
    pub hyperbolic: bool,
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

const SCAN_STEP: f64 = 1e-3;
const ROOT_FLOOR: f64 = 1e-6;

/// Scans `Δ_ε(z) = ε² z² - z - 1 + Γ e^{-zh}` for roots on the non-positive
/// real axis and on the imaginary axis, where `Γ = g'(K)`.
pub fn check_k_hyperbolicity(
    gamma: f64,
    h: f64,
    epsilon: f64,
    im_bound: Option<f64>,
) -> Result<HyperbolicityReport, RootError> {
    let hyp = gamma.abs() * h * (h + 1.0).exp();
    if !(gamma < 0.0 && hyp > 1.0) {
        return Err(RootError::HypothesisNotMet { value: hyp });
    }
    let delta = |z: f64| char_zero(gamma, h, epsilon, z);
    let e2 = epsilon * epsilon;
    let mut z_max = 10.0;
    while gamma.abs() * (z_max * h).exp() < 10.0 * (e2 * z_max * z_max + z_max + 1.0) {
        z_max *= 2.0;
    }
    let n = (z_max / SCAN_STEP).ceil() as usize;
    let (mut best_z, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..=n {
        let z = -z_max + z_max * k as f64 / n as f64;
        let v = delta(z);
        if v > best {
            best = v;
            best_z = z;
        }
    }
    let (lo, hi) = ((best_z - SCAN_STEP).max(-z_max), (best_z + SCAN_STEP).min(0.0));
    let (argmax, refined) = golden_max(delta, lo, hi);
    let (argmax, negative_axis_max) = if refined > best { (argmax, refined) } else { (best_z, best) };

    let im_bound = im_bound.unwrap_or(2.0 * gamma.abs());
    let modulus = |b: f64| char_complex(gamma, h, epsilon, Complex64::new(0.0, b)).norm();
    let m = ((2.0 * im_bound) / SCAN_STEP).ceil().max(1.0) as usize;
    let (mut min_b, mut min_v) = (0.0, f64::INFINITY);
    for k in 0..=m {
        let b = -im_bound + 2.0 * im_bound * k as f64 / m as f64;
        let v = modulus(b);
        if v < min_v {
            min_v = v;
            min_b = b;
        }
    }
    let (_, neg) = golden_max(|b| -modulus(b), min_b - SCAN_STEP, min_b + SCAN_STEP);
    let imaginary_axis_min = min_v.min(-neg);

    let no_negative_real_roots = negative_axis_max < -ROOT_FLOOR;
    let no_imaginary_roots = imaginary_axis_min > ROOT_FLOOR;
    Ok(HyperbolicityReport {
        gamma,
        h,
        epsilon,
        hypothesis_value: hyp,
        z_max,
        negative_axis_max,
        argmax,
        no_negative_real_roots,
        im_bound,
        imaginary_axis_min,
        no_imaginary_roots,
        hyperbolic: no_negative_real_roots && no_imaginary_roots,
    })
}

/// Closed rectangle `[xi_lo, xi_hi] × [-im_bound, im_bound]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub im_bound: f64,
}

impl Strip {
    /// `[ξ, 2(p-1)] × [-3p e^{-ξh}, 3p e^{-ξh}]`, which holds every root with
    /// real part in `[ξ, 2(p-1)]`.
    pub fn finite(p: f64, h: f64, xi: f64) -> Self {
        Self { xi_lo: xi, xi_hi: 2.0 * (p - 1.0), im_bound: 3.0 * p * (-xi * h).exp() }
    }

    /// Bounded stand-in for the half-plane `Re z > 2(p-1)`.
    pub fn right_half_plane(p: f64, epsilon: f64) -> Self {
        let inv = 1.0 / (epsilon * epsilon);
        Self { xi_lo: 2.0 * (p - 1.0), xi_hi: inv + 2.0, im_bound: 2.0 * p / epsilon + 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripCount {
    pub strip: Strip,
    pub count: i64,
    /// winding number before rounding
    pub raw: f64,
    pub points_per_side: usize,
    pub perturbations: usize,
}

const CONTOUR_START: usize = 512;
const CONTOUR_MAX: usize = 1 << 16;
const INTEGER_SNAP: f64 = 1e-6;

enum Winding {
    Value(f64, f64),
    NearRoot,
}

fn winding(p: f64, h: f64, epsilon: f64, strip: &Strip, n: usize) -> Winding {
    let corners = [
        Complex64::new(strip.xi_lo, -strip.im_bound),
        Complex64::new(strip.xi_hi, -strip.im_bound),
        Complex64::new(strip.xi_hi, strip.im_bound),
        Complex64::new(strip.xi_lo, strip.im_bound),
    ];
    let mut total = Complex64::new(0.0, 0.0);
    for side in 0..4 {
        let (a, b) = (corners[side], corners[(side + 1) % 4]);
        let dz = (b - a) / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..=n {
            let z = a + dz * k as f64;
            let f = char_complex(p, h, epsilon, z);
            let scale = epsilon * epsilon * z.norm_sqr() + z.norm() + 1.0 + p * (-z.re * h).exp();
            if f.norm() < 1e-9 * scale {
                return Winding::NearRoot;
            }
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += w * char_complex_derivative(p, h, epsilon, z) / f;
        }
        total += acc * dz;
    }
    let w = total / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    Winding::Value(w.re, w.im)
}

/// Number of roots of `ε² z² - z - 1 + p e^{-zh}` inside a rectangle, by the
/// argument principle with trapezoidal integration of `F'/F`.
pub fn count_roots_in_strip(p: f64, h: f64, epsilon: f64, strip: Strip) -> Result<StripCount, RootError> {
    if strip.xi_hi <= strip.xi_lo || strip.im_bound <= 0.0 {
        return Ok(StripCount { strip, count: 0, raw: 0.0, points_per_side: 0, perturbations: 0 });
    }
    let max_attempts = 5;
    let mut rect = strip;
    for attempt in 0..=max_attempts {
        let mut n = CONTOUR_START;
        let mut previous: Option<i64> = None;
        while n <= CONTOUR_MAX {
            match winding(p, h, epsilon, &rect, n) {
                Winding::NearRoot => break,
                Winding::Value(re, im) => {
                    let rounded = re.round();
                    let snapped = (re - rounded).abs() < INTEGER_SNAP && im.abs() < INTEGER_SNAP;
                    if snapped && previous == Some(rounded as i64) {
                        return Ok(StripCount {
                            strip: rect,
                            count: rounded as i64,
                            raw: re,
                            points_per_side: n,
                            perturbations: attempt,
                        });
                    }
                    previous = snapped.then_some(rounded as i64);
                }
            }
            n *= 2;
        }
        let bump = 1e-3 * (attempt + 1) as f64;
        rect = Strip { xi_lo: strip.xi_lo - bump, xi_hi: strip.xi_hi + bump, im_bound: strip.im_bound + bump };
    }
    Err(RootError::ContourThroughRoot { attempts: max_attempts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_epsilon_matches_spreading_speed() {
        // c* = 2 for the undelayed Fisher equation with p - 1 = 1
        let e = critical_epsilon(2.0, 0.0).unwrap();
        assert!((e - 0.5).abs() < 1e-6, "{e}");
        let e = critical_epsilon(E * E, 0.5).unwrap();
        assert!((1.0 / e - 1.944).abs() < 2e-3, "{}", 1.0 / e);
        assert!(critical_epsilon(0.9, 1.0).is_none());
    }
    use std::f64::consts::E;

    // independent oracle: plain bisection with a fixed iteration count
    fn oracle(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let fa = f(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m) * fa > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn lambda_without_delay_is_p_minus_one() {
        assert_eq!(solve_lambda(2.0, 0.0).unwrap().value, 1.0);
        assert_eq!(solve_lambda(E * E, 0.0).unwrap().value, E * E - 1.0);
    }

    #[test]
    fn lambda_p2_h1() {
        let f = |z: f64| z + 1.0 - 2.0 * (-z).exp();
        assert!(f(0.35) < 0.0 && f(0.4) > 0.0);
        let r = solve_lambda(2.0, 1.0).unwrap();
        assert!((r.value - oracle(f, 0.35, 0.4)).abs() < 1e-14);
        // high-precision reference value
        assert!((r.value - 0.374_822_528_183_623).abs() < 1e-13);
        assert!(r.residual.abs() <= 1e-12 * r.value.max(1.0));
    }

    #[test]
    fn lambda_rejects_p_below_one() {
        assert!(matches!(solve_lambda(0.8, 1.0), Err(RootError::BracketFailure { .. })));
    }

    #[test]
    fn perturbed_p2_h1() {
        let r = solve_perturbed(2.0, 1.0, 0.1).unwrap();
        let f = |z: f64| 0.01 * z * z - z - 1.0 + 2.0 * (-z).exp();
        let l1 = oracle(f, r.lambda, 2.0);
        let linf = oracle(f, 100.0 - 2.0, 101.0);
        assert!((r.lambda1 - l1).abs() < 1e-12);
        assert!((r.lambda_inf - linf).abs() < 1e-9);
        assert!((r.lambda1 - 0.375_416_094_466_823).abs() < 1e-13);
        assert!(r.lambda1 > r.lambda);
        assert!((r.lambda_inf - 100.990_195_135_928).abs() < 1e-9);
        assert!(r.chain_holds(2.0));
    }

    #[test]
    fn perturbed_without_delay_matches_quadratic() {
        let r = solve_perturbed(2.0, 0.0, 0.1).unwrap();
        let disc = (1.0f64 - 4.0 * 0.01).sqrt();
        assert!((r.lambda1 - (1.0 - disc) / 0.02).abs() < 1e-12);
        assert!((r.lambda1 - 1.0102).abs() < 1e-4);
        assert!((r.lambda_inf - (1.0 + disc) / 0.02).abs() < 1e-9);
    }

    #[test]
    fn perturbed_rejects_large_epsilon() {
        assert!(matches!(solve_perturbed(2.0, 1.0, 0.6), Err(RootError::EpsilonOutOfRange { .. })));
        assert!(matches!(solve_perturbed(2.0, 1.0, 0.0), Err(RootError::EpsilonOutOfRange { .. })));
    }

    #[test]
    fn limit_table_gaps_shrink() {
        let rows = limit_consistency(2.0, 1.0, &[0.2, 0.1, 0.05]).unwrap();
        assert!(gaps_shrink(&rows));
        assert!(rows[2].gap < rows[1].gap);
        assert!(limit_consistency(2.0, 1.0, &[]).unwrap().is_empty());
        // 0.2 lies past the existence range for p = e² but the root is still there
        assert!(gaps_shrink(&limit_consistency(E * E, 0.25, &[0.2, 0.1, 0.05, 0.025]).unwrap()));
    }

    #[test]
    fn minimal_root_agrees_with_bracketed_solver() {
        let r = solve_perturbed(E * E, 0.5, 0.1).unwrap();
        let m = minimal_wave_root(E * E, 0.5, 0.1).unwrap();
        assert!((m - r.lambda1).abs() < 1e-12);
        // beyond the linear spreading speed the real roots are gone
        assert!(minimal_wave_root(E * E, 0.5, 0.6).is_none());
    }

    #[test]
    fn hyperbolicity_examples() {
        for eps in [0.0, 0.05] {
            let r = check_k_hyperbolicity(-1.0, 0.5, eps, None).unwrap();
            assert!(r.hyperbolic, "{r:?}");
        }
        assert!(matches!(check_k_hyperbolicity(-1.0, 0.2, 0.05, None), Err(RootError::HypothesisNotMet { .. })));
    }

    #[test]
    fn hyperbolicity_scan_maximum_matches_calculus() {
        // ε = 0: Δ' = -1 - hΓe^{-zh} vanishes at e^{-zh} = 1/(h|Γ|)
        let (gamma, h) = (-1.0, 0.5);
        let z0 = -(1.0f64 / (h * -gamma)).ln() / h;
        let expected = -z0 - 1.0 - 1.0 / h;
        let r = check_k_hyperbolicity(gamma, h, 0.0, None).unwrap();
        assert!((r.negative_axis_max - expected).abs() < 1e-9);
        assert!((r.argmax - z0).abs() < 1e-4);
    }

    #[test]
    fn strip_counts() {
        let (p, h, eps) = (2.0, 1.0, 0.1);
        let lambda = solve_lambda(p, h).unwrap().value;
        let c = count_roots_in_strip(p, h, eps, Strip::finite(p, h, lambda / 2.0)).unwrap();
        assert_eq!(c.count, 1);
        let c = count_roots_in_strip(p, h, eps, Strip::right_half_plane(p, eps)).unwrap();
        assert_eq!(c.count, 1);
        let degenerate = Strip { xi_lo: 1.0, xi_hi: 1.0, im_bound: 3.0 };
        assert_eq!(count_roots_in_strip(p, h, eps, degenerate).unwrap().count, 0);
    }

    #[test]
    fn strip_count_stable_in_epsilon() {
        let (p, h, xi) = (2.0, 1.0, -2.0);
        let base = count_roots_in_strip(p, h, 0.0, Strip::finite(p, h, xi)).unwrap().count;
        assert!(base >= 3, "expected complex roots left of zero, got {base}");
        for eps in [0.01, 0.02, 0.05] {
            let c = count_roots_in_strip(p, h, eps, Strip::finite(p, h, xi)).unwrap();
            assert_eq!(c.count, base, "eps = {eps}");
            let right = count_roots_in_strip(p, h, eps, Strip::right_half_plane(p, eps)).unwrap();
            assert_eq!(right.count, 1);
        }
    }

    #[test]
    fn double_root_scale_without_delay() {
        let (zeta, a) = double_root_scale(3.0, 0.0).unwrap();
        assert_eq!(zeta, 4.0);
        assert!((a - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        let (zeta, _) = double_root_scale(2.0, 1.0).unwrap();
        assert!((2.0 * (-zeta).exp() - (2.0 + zeta) / (2.0 + zeta)).abs() < 1e-12);
    }
}
