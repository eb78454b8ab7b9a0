use std::f64::consts::E;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use wavefront_core::birth::BirthSpec;
use wavefront_core::pdesim::{Boundary, InitialProfile};
use wavefront_core::region::Axis;
use wavefront_core::waveprofile::{GridOptions, SolveOptions};

use crate::error::CliError;

/// Reads a JSON config; a missing path yields the defaults.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn nicholson_e2() -> BirthSpec {
    BirthSpec::Nicholson { p: E * E }
}

/// Raw Nicholson parameters `N_t = D N_xx - δN + p N(t-h) e^{-bN(t-h)}`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNicholson {
    pub p: f64,
    pub delta: f64,
    pub b: f64,
    pub h: f64,
    #[serde(default = "one")]
    pub diffusion: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub birth: BirthSpec,
    pub h: f64,
    /// replaces `birth` and `h` when present
    pub raw: Option<RawNicholson>,
    pub u_max: Option<f64>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self { birth: nicholson_e2(), h: 0.5, raw: None, u_max: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootsConfig {
    pub p: f64,
    pub h: f64,
    pub epsilon: f64,
    /// left edge of the finite strip; defaults to `λ/2`
    pub xi: Option<f64>,
    pub limit_epsilons: Vec<f64>,
    /// random `(p, h, ε)` triples checked against the root chain
    pub samples: usize,
}

impl Default for RootsConfig {
    fn default() -> Self {
        Self { p: E * E, h: 0.5, epsilon: 0.05, xi: None, limit_epsilons: vec![0.2, 0.1, 0.05, 0.025], samples: 0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeteroConfig {
    pub birth: BirthSpec,
    pub h: f64,
    pub seed_amplitude: Option<f64>,
    pub t_span: Option<f64>,
    pub steps_per_delay: usize,
    pub override_attracting: bool,
    /// sector bounds `p1 = p1_factor·p`, `p2 = p2_factor·p` on the tail
    pub p1_factor: f64,
    pub p2_factor: f64,
    /// tail window as a fraction of `K`
    pub tail_fraction: f64,
}

impl Default for HeteroConfig {
    fn default() -> Self {
        Self {
            birth: nicholson_e2(),
            h: 0.5,
            seed_amplitude: None,
            t_span: None,
            steps_per_delay: 100,
            override_attracting: false,
            p1_factor: 0.95,
            p2_factor: 1.05,
            tail_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveConfig {
    pub birth: BirthSpec,
    pub h: f64,
    pub epsilon: f64,
    pub steps_per_delay: usize,
    pub grid: GridOptions,
    pub solver: SolveOptions,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            birth: nicholson_e2(),
            h: 0.5,
            epsilon: 0.05,
            steps_per_delay: 200,
            grid: GridOptions::default(),
            solver: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub birth: BirthSpec,
    pub h: f64,
    pub epsilons: Vec<f64>,
    pub grid: GridOptions,
    pub solver: SolveOptions,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            birth: nicholson_e2(),
            h: 0.5,
            epsilons: vec![0.01, 0.02, 0.05, 0.1],
            grid: GridOptions::default(),
            solver: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeRunConfig {
    pub birth: BirthSpec,
    pub h: f64,
    pub d: f64,
    pub domain: [f64; 2],
    pub nx: usize,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub boundary: Boundary,
    pub initial: InitialProfile,
    pub sample_interval: f64,
    pub snapshot_times: Vec<f64>,
    /// solve the wave equation at the measured speed and compare
    pub compare: bool,
    pub solver: SolveOptions,
}

impl Default for PdeRunConfig {
    fn default() -> Self {
        Self {
            birth: nicholson_e2(),
            h: 0.5,
            d: 1.0,
            domain: [0.0, 400.0],
            nx: 2001,
            t_end: 150.0,
            dt: None,
            boundary: Boundary::Dirichlet,
            initial: InitialProfile::Front { x0: 20.0, rate: None, cutoff: None },
            sample_interval: 0.5,
            snapshot_times: Vec::new(),
            compare: true,
            solver: SolveOptions { anderson_depth: 10, enforce_epsilon_range: false, ..SolveOptions::default() },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub birth: BirthSpec,
    pub p_axis: Axis,
    pub h_axis: Axis,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            birth: nicholson_e2(),
            p_axis: Axis { min: 1.1, max: 12.0, count: 50 },
            h_axis: Axis { min: 0.0, max: 3.0, count: 50 },
        }
    }
}
