//! Run configuration (a single JSON document) and initial-data presets.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{Thresholds, ALGEBRAIC_CHECKS, DIFFERENTIAL_CHECKS, RATE_CHECKS};
use crate::error::{Error, Result};
use crate::evolution::{Engine, EvolutionConfig};
use crate::field::StripConfig;
use crate::geometry::{build_state, sup_slope};
use crate::spectral::{Grid, SpectralProfile};

/// Mean-zero initial profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `A x exp(-(x/w)^2)`; the slope at the origin is `A`.
    GaussianBump { amplitude: f64, width: f64 },
    /// `A cos(k x)` with `k L / 2 pi` a positive integer.
    Mode { amplitude: f64, wavenumber: f64 },
    /// Even profile with `h_hat ~ |k|^{1/4} exp(-k^2 w^2 / 4)`, scaled so that
    /// `sup |h| = A`. Its spectrum vanishes slowly at `k = 0`, which gives the
    /// slowest algebraic decay compatible with finite distance.
    Wavelet { amplitude: f64, width: f64 },
}

impl InitialData {
    pub fn profile(&self, grid: &Grid) -> Result<SpectralProfile> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match *self {
            InitialData::GaussianBump { amplitude, width } => {
                if !(width > 0.0) {
                    return bad(format!("initial_data.width must be positive, got {width}"));
                }
                let p = SpectralProfile::from_fn(*grid, |x| amplitude * x * (-(x / width).powi(2)).exp());
                Ok(p.without_mean())
            }
            InitialData::Mode { amplitude, wavenumber } => {
                let m = wavenumber * grid.length() / (2.0 * PI);
                if !(m >= 0.5 && (m - m.round()).abs() < 1e-9) {
                    return bad(format!("initial_data.wavenumber {wavenumber} is not a positive multiple of 2 pi / L"));
                }
                if m.round() as usize >= grid.num_points() / 2 {
                    return bad(format!("initial_data.wavenumber {wavenumber} is not resolved by the grid"));
                }
                Ok(SpectralProfile::from_fn(*grid, |x| amplitude * (wavenumber * x).cos()))
            }
            InitialData::Wavelet { amplitude, width } => {
                if !(width > 0.0) {
                    return bad(format!("initial_data.width must be positive, got {width}"));
                }
                let nyq = grid.nyquist_index();
                let coeffs: Vec<Complex64> = (0..grid.num_points())
                    .map(|idx| {
                        let k = grid.wavenumber(idx).abs();
                        if idx == 0 || idx == nyq {
                            Complex64::new(0.0, 0.0)
                        } else {
                            Complex64::new(k.powf(0.25) * (-(k * width).powi(2) / 4.0).exp(), 0.0)
                        }
                    })
                    .collect();
                let shape = SpectralProfile::from_coeffs(*grid, &coeffs);
                let peak = shape.max_abs();
                Ok(shape.scaled(amplitude / peak))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub length: f64,
    pub num_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripSpec {
    pub depth: f64,
    pub num_layers: usize,
    pub grading: f64,
}

/// Log-spaced snapshot times `t_min .. t_max` (plus `t = 0`), linear engine only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleTimes {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

impl SampleTimes {
    pub fn times(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let (a, b) = (self.t_min.ln(), self.t_max.ln());
        let n = self.count;
        out.extend((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()));
        out
    }
}

fn default_mobility() -> f64 {
    2.0
}
fn default_true() -> bool {
    true
}
fn default_one() -> usize {
    1
}
fn default_gate() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub engine: Engine,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_mobility")]
    pub mobility: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub strip: Option<StripSpec>,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_one")]
    pub output_every: usize,
    #[serde(default = "default_gate")]
    pub slope_gate: f64,
    #[serde(default)]
    pub sample_times: Option<SampleTimes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    #[serde(default)]
    pub threshold: Option<f64>,
}

/// Late-time window for power-law fits in `rates`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSpec {
    pub window_start: f64,
    #[serde(default)]
    pub window_end: Option<f64>,
    /// RMS log residual above which a fit is reported as exponential.
    #[serde(default = "default_residual")]
    pub max_residual: f64,
}

fn default_residual() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub initial_data: InitialData,
    pub evolution: EvolutionSpec,
    #[serde(default)]
    pub checks: Option<Vec<CheckSpec>>,
    #[serde(default = "default_epsilon")]
    pub lyapunov_epsilon: f64,
    #[serde(default)]
    pub rates: Option<RatesSpec>,
    /// Reserved for randomised sweeps; runs themselves are deterministic.
    #[serde(default)]
    pub seed: u64,
}

/// Every check name the verifier knows.
pub fn known_checks() -> Vec<&'static str> {
    let mut v: Vec<&str> = ALGEBRAIC_CHECKS.to_vec();
    v.extend(DIFFERENTIAL_CHECKS);
    v.push("lyapunov");
    v.extend(RATE_CHECKS);
    v.push("neg_half_velocity");
    v
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.evolution.grid.length, self.evolution.grid.num_points)
    }

    pub fn evolution_config(&self) -> Result<EvolutionConfig> {
        let grid = self.grid()?;
        let ev = &self.evolution;
        let mut cfg = EvolutionConfig::new(ev.engine, grid, ev.dt, ev.t_end);
        cfg.mobility = ev.mobility;
        if let Some(s) = ev.strip {
            cfg.strip = StripConfig::new(s.depth, s.num_layers, s.grading)?;
        }
        cfg.dealias = ev.dealias;
        cfg.output_every = ev.output_every;
        cfg.slope_gate = ev.slope_gate;
        cfg.sample_times = ev.sample_times.map(|s| s.times());
        Ok(cfg)
    }

    pub fn initial_profile(&self) -> Result<SpectralProfile> {
        self.initial_data.profile(&self.grid()?)
    }

    pub fn thresholds(&self) -> Thresholds {
        let mut t = Thresholds::default();
        for c in self.checks.iter().flatten() {
            if let Some(v) = c.threshold {
                t = t.with(&c.name, v);
            }
        }
        t
    }

    /// Whether a named check is selected (all are when no list is given).
    pub fn selects(&self, name: &str) -> bool {
        match &self.checks {
            None => true,
            Some(list) => list.iter().any(|c| c.name == name),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ev = &self.evolution;
        if let Some(st) = &ev.sample_times {
            if ev.engine != Engine::Linear {
                return Err(Error::InvalidConfig("evolution.sample_times requires the linear engine".into()));
            }
            if !(st.t_min > 0.0 && st.t_max > st.t_min && st.count >= 2) {
                return Err(Error::InvalidConfig(
                    "evolution.sample_times needs 0 < t_min < t_max and count >= 2".into(),
                ));
            }
        }
        if !(self.lyapunov_epsilon > 0.0) {
            return Err(Error::InvalidConfig("lyapunov_epsilon must be positive".into()));
        }
        let known = known_checks();
        for c in self.checks.iter().flatten() {
            if !known.contains(&c.name.as_str()) {
                return Err(Error::InvalidConfig(format!("checks: unknown check name {:?}", c.name)));
            }
            if let Some(v) = c.threshold {
                if !v.is_finite() {
                    return Err(Error::InvalidConfig(format!("checks: threshold of {} must be finite", c.name)));
                }
            }
        }
        self.evolution_config()?.validate()?;
        let h0 = self.initial_profile()?;
        let slope = sup_slope(&build_state(h0));
        if slope > ev.slope_gate + 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "initial_data: sup|h_x| = {slope} exceeds the slope gate {}",
                ev.slope_gate
            )));
        }
        Ok(())
    }
}
