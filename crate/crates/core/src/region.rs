//! Classification of the `(p, h)` plane by the attractivity condition and
//! the oscillation criterion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::birth::{check_gsc, check_oscillation_criterion, find_positive_fixed_point, oscillation_lhs, BirthSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("axis {name} is empty")]
    EmptyAxis { name: &'static str },
    #[error("invalid axis {name}: {detail}")]
    InvalidAxis { name: &'static str, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionClass {
    NoPositiveEquilibrium,
    /// `Γ ≥ 0`: `g` is increasing up to `K`
    MonotoneRegime,
    GscHoldsNoOscillation,
    GscHoldsOscillatory,
    GscFails,
}

impl RegionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionClass::NoPositiveEquilibrium => "no_positive_equilibrium",
            RegionClass::MonotoneRegime => "monotone_regime",
            RegionClass::GscHoldsNoOscillation => "gsc_holds_no_oscillation",
            RegionClass::GscHoldsOscillatory => "gsc_holds_oscillatory",
            RegionClass::GscFails => "gsc_fails",
        }
    }

    pub fn gsc_holds(&self) -> bool {
        matches!(self, RegionClass::GscHoldsNoOscillation | RegionClass::GscHoldsOscillatory)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub p: f64,
    pub h: f64,
    pub class: RegionClass,
    /// NaN without a positive equilibrium
    pub gamma: f64,
    pub gsc_lhs: f64,
    /// NaN where the condition is vacuous
    pub gsc_rhs: f64,
    pub osc_lhs: f64,
}

/// Classifies one point; `spec` supplies the family, its `p` is replaced.
pub fn classify_region(spec: &BirthSpec, p: f64, h: f64) -> RegionCell {
    let none = RegionCell {
        p,
        h,
        class: RegionClass::NoPositiveEquilibrium,
        gamma: f64::NAN,
        gsc_lhs: (-h).exp(),
        gsc_rhs: f64::NAN,
        osc_lhs: f64::NAN,
    };
    if !(p > 1.0) {
        return none;
    }
    let Ok(g) = spec.with_p(p).build() else { return none };
    let Ok(eq) = find_positive_fixed_point(&g, None) else { return none };
    let gsc = check_gsc(&eq, h);
    let osc_lhs = oscillation_lhs(&eq, h);
    let class = if eq.gamma >= 0.0 {
        RegionClass::MonotoneRegime
    } else if !gsc.holds {
        RegionClass::GscFails
    } else if check_oscillation_criterion(&eq, h) {
        RegionClass::GscHoldsOscillatory
    } else {
        RegionClass::GscHoldsNoOscillation
    };
    RegionCell { p, h, class, gamma: eq.gamma, gsc_lhs: gsc.lhs, gsc_rhs: gsc.rhs, osc_lhs }
}

/// Evenly spaced values `min, …, max`; a single point sits at `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    fn validate(&self, name: &'static str) -> Result<(), RegionError> {
        if self.count == 0 {
            return Err(RegionError::EmptyAxis { name });
        }
        if !(self.min.is_finite() && self.max.is_finite()) || (self.count > 1 && self.max < self.min) {
            return Err(RegionError::InvalidAxis { name, detail: format!("[{}, {}]", self.min, self.max) });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub p_axis: Vec<f64>,
    pub h_axis: Vec<f64>,
    /// row-major: `cells[i * h_axis.len() + j]` is `(p_axis[i], h_axis[j])`
    pub cells: Vec<RegionCell>,
}

impl RegionMap {
    pub fn cell(&self, i: usize, j: usize) -> &RegionCell {
        &self.cells[i * self.h_axis.len() + j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,h,class,Gamma,gsc_lhs,gsc_rhs,osc_lhs\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.p,
                c.h,
                c.class.as_str(),
                c.gamma,
                c.gsc_lhs,
                c.gsc_rhs,
                c.osc_lhs
            );
        }
        out
    }

    /// Counts per class, in declaration order.
    pub fn counts(&self) -> Vec<(RegionClass, usize)> {
        [
            RegionClass::NoPositiveEquilibrium,
            RegionClass::MonotoneRegime,
            RegionClass::GscHoldsNoOscillation,
            RegionClass::GscHoldsOscillatory,
            RegionClass::GscFails,
        ]
        .into_iter()
        .map(|c| (c, self.cells.iter().filter(|x| x.class == c).count()))
        .collect()
    }
}

pub fn sweep(spec: &BirthSpec, p_axis: &Axis, h_axis: &Axis) -> Result<RegionMap, RegionError> {
    p_axis.validate("p")?;
    h_axis.validate("h")?;
    if h_axis.min < 0.0 {
        return Err(RegionError::InvalidAxis { name: "h", detail: format!("negative delay {}", h_axis.min) });
    }
    let ps = p_axis.values();
    let hs = h_axis.values();
    let cells = (0..ps.len() * hs.len())
        .into_par_iter()
        .map(|k| classify_region(spec, ps[k / hs.len()], hs[k % hs.len()]))
        .collect();
    Ok(RegionMap { p_axis: ps, h_axis: hs, cells })
}
