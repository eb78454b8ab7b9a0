//! Small numerical kernels shared by the solver modules.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

/// Outcome of a bracketed bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Bisection on `[lo, hi]`, which must straddle a sign change of `f`.
///
/// Returns `None` when the endpoint signs agree. Iteration stops after
/// `max_iter` halvings or as soon as the midpoint is no longer representable
/// between the endpoints.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, max_iter: usize) -> Option<Bisection> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(Bisection { root: a, bracket: (lo, hi), iterations: 0 });
    }
    if fb == 0.0 {
        return Some(Bisection { root: b, bracket: (lo, hi), iterations: 0 });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    let mut iterations = 0;
    while iterations < max_iter {
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        iterations += 1;
        let fm = f(mid);
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    // pick the endpoint with the smaller residual
    let root = if f(a).abs() <= f(b).abs() { a } else { b };
    Some(Bisection { root, bracket: (lo, hi), iterations })
}

/// Ordinary least squares fit of `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (slope * xi + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let slope_stderr = if n > 2 { (ss_res / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    Some(LinearFit { slope, intercept, r_squared, slope_stderr })
}

/// Number of sign changes in `values - level`, ignoring samples within
/// `floor` of the level.
pub fn sign_changes_about(values: &[f64], level: f64, floor: f64) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in values {
        let d = v - level;
        if d.abs() <= floor {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            count += 1;
        }
        last = d;
    }
    count
}

/// Values at interior local maxima (strict on the left, non-strict on the right).
pub fn local_maxima(values: &[f64]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            out.push((i, values[i]));
        }
    }
    out
}

/// Cubic Hermite interpolation on `[0, step]` at fraction `theta`.
#[inline]
pub fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, step: f64, theta: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * step * d0 + h01 * y1 + h11 * step * d1
}

/// Hermite interpolant at the midpoint of a step.
#[inline]
pub fn hermite_mid(y0: f64, d0: f64, y1: f64, d1: f64, step: f64) -> f64 {
    0.5 * (y0 + y1) + 0.125 * step * (d0 - d1)
}

/// Weights of `∫_0^L e^{-r u} (1, u) du` for `r ≥ 0`, computed without
/// cancellation for small `r L`.
pub fn exp_moments(rate: f64, len: f64) -> (f64, f64) {
    let y = rate * len;
    if y < 1e-3 {
        // series in y
        let w0 = len * (1.0 - y / 2.0 + y * y / 6.0 - y * y * y / 24.0);
        let w1 = len * len * (0.5 - y / 3.0 + y * y / 8.0 - y * y * y / 30.0);
        (w0, w1)
    } else {
        let e = (-y).exp();
        let w0 = -(-y).exp_m1() / rate;
        let w1 = (-(-y).exp_m1() - y * e) / (rate * rate);
        (w0, w1)
    }
}

/// First `t` in `(times[i], times[i+1])` where a piecewise-linear sampled
/// function crosses `level` upward.
pub fn first_upward_crossing(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    for i in 0..values.len().saturating_sub(1) {
        let (a, b) = (values[i], values[i + 1]);
        if a < level && b >= level {
            let frac = (level - a) / (b - a);
            return Some(times[i] + frac * (times[i + 1] - times[i]));
        }
    }
    None
}

/// Anderson mixing for a fixed-point map `x ↦ G(x)`.
///
/// Each call takes the current iterate and its image and returns the next
/// iterate, a combination of the last `depth + 1` images chosen to minimise
/// the linearised residual.
pub struct Anderson {
    depth: usize,
    last: Option<(Vec<f64>, Vec<f64>)>,
    d_res: VecDeque<Vec<f64>>,
    d_img: VecDeque<Vec<f64>>,
}

impl Anderson {
    pub fn new(depth: usize) -> Self {
        Self { depth, last: None, d_res: VecDeque::new(), d_img: VecDeque::new() }
    }

    pub fn reset(&mut self) {
        self.last = None;
        self.d_res.clear();
        self.d_img.clear();
    }

    pub fn next(&mut self, x: &[f64], image: &[f64]) -> Vec<f64> {
        let res: Vec<f64> = image.iter().zip(x).map(|(g, x)| g - x).collect();
        if self.depth == 0 {
            return image.to_vec();
        }
        if let Some((res_prev, img_prev)) = self.last.take() {
            self.d_res.push_back(res.iter().zip(&res_prev).map(|(a, b)| a - b).collect());
            self.d_img.push_back(image.iter().zip(&img_prev).map(|(a, b)| a - b).collect());
            if self.d_res.len() > self.depth {
                self.d_res.pop_front();
                self.d_img.pop_front();
            }
        }
        self.last = Some((res.clone(), image.to_vec()));
        let gamma = least_squares(&self.d_res, &res);
        let mut out = image.to_vec();
        for (g, col) in gamma.iter().zip(&self.d_img) {
            if *g != 0.0 {
                for (o, c) in out.iter_mut().zip(col) {
                    *o -= g * c;
                }
            }
        }
        out
    }
}

/// Least-squares coefficients of `b` on the columns; directions with
/// singular values below `1e-10` of the largest are dropped.
fn least_squares(cols: &VecDeque<Vec<f64>>, b: &[f64]) -> Vec<f64> {
    if cols.is_empty() {
        return Vec::new();
    }
    let a = DMatrix::from_fn(b.len(), cols.len(), |i, j| cols[j][i]);
    let svd = a.svd(true, true);
    let cutoff = 1e-10 * svd.singular_values.max();
    match svd.solve(&DVector::from_column_slice(b), cutoff) {
        Ok(x) => x.iter().copied().collect(),
        Err(_) => vec![0.0; cols.len()],
    }
}
