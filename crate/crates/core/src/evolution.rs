//! Time integration of the graph flow `h_t = -sqrt(1 + h_x^2) V`.
//!
//! Two engines share one [`Trajectory`] type: the linearised flow
//! `h_t = -mu |d/dx|^3 h`, solved exactly per Fourier mode, and the full
//! nonlinear flow, advanced by a first-order IMEX scheme that treats the
//! linear part implicitly.
//!
//! Time normalisation: the nonlinear engine evolves `h_t = -(mu/2) sqrt(1 + h_x^2) V`.
//! Both phases contribute `|k|` to the linearised normal derivative jump, so
//! `V ~ 2|k|^3 h` and the nonlinear linearisation is exactly the linear engine
//! with the same `mu`. The physical flow is `mu = 2`, the default.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{solve_interface, StripConfig};
use crate::geometry::{build_state, sup_slope, InterfaceState};
use crate::spectral::{Grid, SpectralProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub engine: Engine,
    pub dt: f64,
    pub t_end: f64,
    pub mobility: f64,
    pub grid: Grid,
    pub strip: StripConfig,
    pub dealias: bool,
    /// Steps between snapshots.
    pub output_every: usize,
    pub slope_gate: f64,
    /// Project every state to zero mean. Only the linear engine may turn
    /// this off (for self-similarity studies with massive data).
    pub enforce_mean_zero: bool,
    /// Explicit snapshot times for the linear engine; overrides the cadence.
    pub sample_times: Option<Vec<f64>>,
}

impl EvolutionConfig {
    /// Defaults: `mu = 2`, strip from the grid, dealiasing on, every step
    /// recorded, slope gate 1.
    pub fn new(engine: Engine, grid: Grid, dt: f64, t_end: f64) -> Self {
        Self {
            engine,
            dt,
            t_end,
            mobility: 2.0,
            grid,
            strip: StripConfig::for_grid(&grid),
            dealias: true,
            output_every: 1,
            slope_gate: 1.0,
            enforce_mean_zero: true,
            sample_times: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if !(self.mobility.is_finite() && self.mobility > 0.0) {
            return bad(format!("mobility must be positive, got {}", self.mobility));
        }
        if !(self.slope_gate > 0.0 && self.slope_gate <= 1.0) {
            return bad(format!("slope_gate must lie in (0, 1], got {}", self.slope_gate));
        }
        if self.output_every == 0 {
            return bad("output_every must be at least 1".into());
        }
        if !self.enforce_mean_zero && self.engine == Engine::Nonlinear {
            return bad("the nonlinear engine requires mean-zero states".into());
        }
        if let Some(ts) = &self.sample_times {
            if ts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || ts.windows(2).any(|w| w[1] <= w[0]) {
                return bad("sample_times must be nonnegative and strictly increasing".into());
            }
        }
        self.strip.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    SlopeBlowup { t: f64, slope: f64 },
    SolverFailure { t: f64, message: String },
}

/// Normal velocity and dissipation of a snapshot, when already known.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCache {
    pub velocity: SpectralProfile,
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: InterfaceState,
    pub field: Option<FieldCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub engine: Engine,
    pub mobility: f64,
    pub snapshots: Vec<Snapshot>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

/// `h_hat(k, t) = exp(-mu |k|^3 t) h_hat_0(k)`.
pub fn linear_solve_exact(h0: &SpectralProfile, t: f64, mu: f64) -> SpectralProfile {
    if t == 0.0 {
        return h0.clone();
    }
    h0.map_modes(|_, k, c| c * (-mu * k.abs().powi(3) * t).exp())
}

/// One IMEX step at the nominal new time `t_new` (used for reporting).
fn imex_step(state: &InterfaceState, cfg: &EvolutionConfig, t_new: f64) -> Result<(InterfaceState, FieldCache)> {
    let slope = sup_slope(state);
    if slope > cfg.slope_gate + 1e-12 {
        return Err(Error::SlopeGateViolation { slope, gate: cfg.slope_gate });
    }
    let sol = solve_interface(state, &cfg.strip)?;
    let mu = cfg.mobility;
    let grid = *state.grid();
    let ht: Vec<f64> = sol.velocity.samples().iter().zip(&state.line_element).map(|(v, l)| -0.5 * mu * l * v).collect();
    let mut explicit = SpectralProfile::from_samples(grid, ht);
    if cfg.dealias {
        explicit = explicit.dealiased();
    }
    let dt = cfg.dt;
    let hc = state.h.coeffs();
    let ec = explicit.coeffs();
    let coeffs: Vec<Complex64> = (0..grid.num_points())
        .map(|idx| {
            if idx == 0 && cfg.enforce_mean_zero {
                return Complex64::new(0.0, 0.0);
            }
            let lin = mu * grid.wavenumber(idx).abs().powi(3);
            // h_t = E(h) is split as (E + lin h) - lin h with the last term implicit
            (hc[idx] + dt * (ec[idx] + lin * hc[idx])) / (1.0 + dt * lin)
        })
        .collect();
    let next = build_state(SpectralProfile::from_coeffs(grid, &coeffs));
    let slope = sup_slope(&next);
    if slope > cfg.slope_gate + 1e-12 {
        return Err(Error::SlopeBlowup { t: t_new, slope, gate: cfg.slope_gate });
    }
    Ok((next, FieldCache { velocity: sol.velocity, dissipation: sol.dissipation }))
}

/// Advances the nonlinear flow by one step of size `cfg.dt`.
pub fn nonlinear_step(state: &InterfaceState, cfg: &EvolutionConfig) -> Result<InterfaceState> {
    imex_step(state, cfg, f64::NAN).map(|(s, _)| s)
}

fn check_initial(h0: &SpectralProfile, cfg: &EvolutionConfig) -> Result<()> {
    cfg.validate()?;
    if h0.grid() != &cfg.grid {
        return Err(Error::InvalidConfig("initial data does not live on the configured grid".into()));
    }
    if cfg.enforce_mean_zero && !h0.is_mean_zero() {
        return Err(Error::ZeroModeNonzero(h0.coeffs()[0].norm()));
    }
    Ok(())
}

fn status_of(err: Error, t: f64) -> RunStatus {
    match err {
        Error::SlopeBlowup { t, slope, .. } => RunStatus::SlopeBlowup { t, slope },
        Error::SlopeGateViolation { slope, .. } => RunStatus::SlopeBlowup { t, slope },
        other => RunStatus::SolverFailure { t, message: other.to_string() },
    }
}

fn run_linear(h0: &SpectralProfile, cfg: &EvolutionConfig) -> Trajectory {
    let times: Vec<f64> = match &cfg.sample_times {
        Some(ts) => ts.clone(),
        None => {
            let n = (cfg.t_end / cfg.dt).round() as usize;
            let mut ts: Vec<f64> = (0..=n).step_by(cfg.output_every).map(|i| i as f64 * cfg.dt).collect();
            if !n.is_multiple_of(cfg.output_every) {
                ts.push(n as f64 * cfg.dt);
            }
            ts
        }
    };
    let mut snapshots = Vec::with_capacity(times.len());
    let mut status = RunStatus::Completed;
    for t in times {
        let state = build_state(linear_solve_exact(h0, t, cfg.mobility));
        let slope = sup_slope(&state);
        if slope > cfg.slope_gate + 1e-12 {
            status = RunStatus::SlopeBlowup { t, slope };
            break;
        }
        snapshots.push(Snapshot { t, state, field: None });
    }
    Trajectory { engine: Engine::Linear, mobility: cfg.mobility, snapshots, status }
}

fn run_nonlinear(h0: &SpectralProfile, cfg: &EvolutionConfig) -> Trajectory {
    let n = (cfg.t_end / cfg.dt).round() as usize;
    let mut state = build_state(h0.clone());
    let mut snapshots = vec![Snapshot { t: 0.0, state: state.clone(), field: None }];
    let mut status = RunStatus::Completed;
    let mut last_is_current = true;
    for step in 1..=n {
        let t = step as f64 * cfg.dt;
        match imex_step(&state, cfg, t) {
            Ok((next, cache)) => {
                if last_is_current {
                    snapshots.last_mut().expect("nonempty").field = Some(cache);
                }
                state = next;
                last_is_current = step % cfg.output_every == 0 || step == n;
                if last_is_current {
                    snapshots.push(Snapshot { t, state: state.clone(), field: None });
                }
            }
            Err(e) => {
                status = status_of(e, t);
                break;
            }
        }
    }
    Trajectory { engine: Engine::Nonlinear, mobility: cfg.mobility, snapshots, status }
}

/// Runs either engine from `h0`. Failures during the run are reported in
/// [`Trajectory::status`]; only invalid inputs return an error.
pub fn run(h0: &SpectralProfile, cfg: &EvolutionConfig) -> Result<Trajectory> {
    check_initial(h0, cfg)?;
    let state = build_state(h0.clone());
    let slope = sup_slope(&state);
    if slope > cfg.slope_gate + 1e-12 {
        return Err(Error::SlopeGateViolation { slope, gate: cfg.slope_gate });
    }
    Ok(match cfg.engine {
        Engine::Linear => run_linear(h0, cfg),
        Engine::Nonlinear => run_nonlinear(h0, cfg),
    })
}

/// The self-similar mask with `G_hat(k) = exp(-|k|^3)`, periodised on the grid.
pub fn kernel_mask(grid: &Grid) -> SpectralProfile {
    let l = grid.length();
    let coeffs: Vec<Complex64> = (0..grid.num_points())
        .map(|idx| Complex64::new((-grid.wavenumber(idx).abs().powi(3)).exp() / l, 0.0))
        .collect();
    SpectralProfile::from_coeffs(*grid, &coeffs)
}

/// Closed-form observables of the linear flow at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearObservables {
    /// `|| |d/dx| h(t) ||^2`.
    pub energy: f64,
    /// `|| |d/dx|^{5/2} h(t) ||^2`.
    pub dissipation: f64,
    /// `|| |d/dx|^{-1/2} h_0 ||^2`.
    pub distance: f64,
}

/// Fourier sums for the quadratic linear observables; the unpaired Nyquist
/// mode is excluded.
pub fn exact_linear_observables(h0: &SpectralProfile, t: f64, mu: f64) -> Result<LinearObservables> {
    if !h0.is_mean_zero() {
        return Err(Error::ZeroModeNonzero(h0.coeffs()[0].norm()));
    }
    let grid = h0.grid();
    let nyq = grid.nyquist_index();
    let (mut e, mut d, mut h) = (0.0, 0.0, 0.0);
    for (idx, c) in h0.coeffs().iter().enumerate() {
        if idx == 0 || idx == nyq {
            continue;
        }
        let k = grid.wavenumber(idx).abs();
        let p = c.norm_sqr();
        let decay = (-2.0 * mu * k.powi(3) * t).exp();
        e += k * k * decay * p;
        d += k.powi(5) * decay * p;
        h += p / k;
    }
    let l = grid.length();
    Ok(LinearObservables { energy: l * e, dissipation: l * d, distance: l * h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::energy;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(2.0 * PI, n).unwrap()
    }

    fn rel_sup(a: &SpectralProfile, b: &SpectralProfile) -> f64 {
        let num = a.samples().iter().zip(b.samples()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        num / b.max_abs()
    }

    #[test]
    fn linear_solve_cases() {
        let g = grid(32);
        let h0 = SpectralProfile::from_fn(g, f64::cos);
        assert_eq!(linear_solve_exact(&h0, 0.0, 1.0), h0);
        let h1 = linear_solve_exact(&h0, 1.0, 1.0);
        for (j, x) in g.nodes().into_iter().enumerate() {
            assert!((h1.samples()[j] - (-1f64).exp() * x.cos()).abs() < 1e-14);
        }
        let p = SpectralProfile::from_fn(g, |x| (2.0 * x).sin() + 0.3 * (5.0 * x).cos());
        let a = linear_solve_exact(&linear_solve_exact(&p, 0.01, 2.0), 0.02, 2.0);
        let b = linear_solve_exact(&p, 0.03, 2.0);
        assert!(rel_sup(&a, &b) < 1e-12);
    }

    #[test]
    fn flat_state_is_equilibrium() {
        let g = grid(32);
        let cfg = EvolutionConfig::new(Engine::Nonlinear, g, 1e-3, 0.0);
        let s = nonlinear_step(&build_state(SpectralProfile::zeros(g)), &cfg).unwrap();
        assert!(s.h.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn small_amplitude_step_matches_linear_solution() {
        let g = grid(64);
        let h0 = SpectralProfile::from_fn(g, |x| 1e-3 * (2.0 * x).cos());
        let cfg = EvolutionConfig::new(Engine::Nonlinear, g, 1e-5, 1e-5);
        let s = nonlinear_step(&build_state(h0.clone()), &cfg).unwrap();
        let exact = linear_solve_exact(&h0, 1e-5, 2.0);
        assert!(rel_sup(&s.h, &exact) < 1e-6, "{}", rel_sup(&s.h, &exact));
    }

    #[test]
    fn imex_is_first_order() {
        let g = grid(32);
        let h0 = SpectralProfile::from_fn(g, |x| 0.1 * x.cos() + 0.05 * (2.0 * x).sin());
        let t_end = 0.04;
        let at = |dt: f64| {
            let mut cfg = EvolutionConfig::new(Engine::Nonlinear, g, dt, t_end);
            cfg.output_every = usize::MAX;
            let tr = run(&h0, &cfg).unwrap();
            assert_eq!(tr.status, RunStatus::Completed);
            tr.snapshots.last().unwrap().state.h.clone()
        };
        let reference = at(0.04 / 64.0);
        let e1 = rel_sup(&at(0.04 / 8.0), &reference);
        let e2 = rel_sup(&at(0.04 / 16.0), &reference);
        assert!(e1 / e2 >= 1.8, "{e1} {e2}");
    }

    #[test]
    fn nonlinear_run_decreases_energy_and_conserves_mass() {
        let g = Grid::new(16.0, 128).unwrap();
        let h0 = SpectralProfile::from_fn(g, |x| 0.2 * x * (-x * x).exp());
        let mut cfg = EvolutionConfig::new(Engine::Nonlinear, g, 5e-4, 0.01);
        cfg.output_every = 2;
        let tr = run(&h0, &cfg).unwrap();
        assert_eq!(tr.status, RunStatus::Completed);
        assert_eq!(tr.snapshots.len(), 11);
        let es: Vec<f64> = tr.snapshots.iter().map(|s| energy(&s.state)).collect();
        assert!(es.windows(2).all(|w| w[1] < w[0]));
        for s in &tr.snapshots {
            assert!(s.state.h.coeffs()[0].norm() <= 1e-8 * s.state.h.max_coeff());
        }
        assert!(tr.snapshots[..10].iter().all(|s| s.field.is_some()));
    }

    #[test]
    fn zero_duration_run() {
        let g = grid(32);
        let h0 = SpectralProfile::from_fn(g, |x| 0.1 * x.sin());
        for engine in [Engine::Linear, Engine::Nonlinear] {
            let tr = run(&h0, &EvolutionConfig::new(engine, g, 1e-3, 0.0)).unwrap();
            assert_eq!(tr.snapshots.len(), 1);
            assert_eq!(tr.snapshots[0].state.h, h0);
        }
    }

    #[test]
    fn linear_engine_delegates_to_exact_solution() {
        let g = grid(32);
        let h0 = SpectralProfile::from_fn(g, |x| 0.1 * x.sin() + 0.02 * (3.0 * x).cos());
        let mut cfg = EvolutionConfig::new(Engine::Linear, g, 0.01, 0.1);
        cfg.output_every = 3;
        let tr = run(&h0, &cfg).unwrap();
        assert_eq!(tr.times().len(), 5);
        for s in &tr.snapshots {
            assert_eq!(s.state.h, linear_solve_exact(&h0, s.t, 2.0));
        }
    }

    #[test]
    fn run_rejects_steep_or_massive_data() {
        let g = grid(32);
        let steep = SpectralProfile::from_fn(g, |x| 0.6 * (2.0 * x).sin());
        let cfg = EvolutionConfig::new(Engine::Nonlinear, g, 1e-3, 0.01);
        assert!(matches!(run(&steep, &cfg), Err(Error::SlopeGateViolation { .. })));
        let massive = SpectralProfile::from_fn(g, |x| 0.1 + 0.1 * x.sin());
        assert!(matches!(run(&massive, &cfg), Err(Error::ZeroModeNonzero(_))));
    }

    #[test]
    fn kernel_mask_is_even_with_unit_mass() {
        let g = Grid::new(128.0, 1024).unwrap();
        let k = kernel_mask(&g);
        let n = 1024;
        for j in 1..n {
            assert!((k.samples()[j] - k.samples()[n - j]).abs() < 1e-12);
        }
        assert!((k.integral() - 1.0).abs() < 1e-8);
        let trapezoid: f64 = k.samples().iter().sum::<f64>() * g.spacing();
        assert!((trapezoid - 1.0).abs() < 1e-8);
    }

    #[test]
    fn single_mode_observables() {
        let g = grid(64);
        let h0 = SpectralProfile::from_fn(g, f64::cos);
        for t in [0.0, 0.3, 1.0] {
            let o = exact_linear_observables(&h0, t, 1.0).unwrap();
            assert!((o.energy - PI * (-2.0 * t).exp()).abs() < 1e-12);
            assert!((o.dissipation - PI * (-2.0 * t).exp()).abs() < 1e-12);
            assert!((o.distance - PI).abs() < 1e-12);
        }
        let p = SpectralProfile::from_fn(g, |x| (2.0 * x).sin() + 0.5 * (3.0 * x).cos());
        let o = exact_linear_observables(&p, 0.0, 2.0).unwrap();
        let s1 = crate::spectral::seminorm(&p, 1.0).unwrap();
        let s52 = crate::spectral::seminorm(&p, 2.5).unwrap();
        assert!((o.energy - s1 * s1).abs() < 1e-10);
        assert!((o.dissipation - s52 * s52).abs() < 1e-9);
        let massive = SpectralProfile::from_fn(g, |x| 1.0 + x.cos());
        assert!(exact_linear_observables(&massive, 0.0, 1.0).is_err());
    }
}
