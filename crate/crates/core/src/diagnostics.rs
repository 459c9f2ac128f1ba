//! Energy, dissipation and distance along trajectories, and the checks that
//! compare them.
//!
//! Every inequality `LHS <~ RHS` is reported as the empirical supremum of
//! `LHS / RHS` over a trajectory, against a per-check threshold.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{FieldCache, Trajectory};
use crate::field::{solve_interface, StripConfig};
use crate::geometry::{arclength_l2_sq, arclength_seminorm, energy, sup_slope, InterfaceState};
use crate::spectral::{fft_forward, seminorm, SpectralProfile};

/// Samples whose right-hand side falls below this are left out of ratios.
pub const RHS_FLOOR: f64 = 1e-14;
/// Bins per sign used to resolve the region between graph and axis.
const H_BINS_PER_SIDE: usize = 32;

/// The monitored quantities at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriadSample {
    pub t: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Hhalf")]
    pub hhalf: f64,
    pub sup_slope: f64,
    pub sup_h: f64,
    #[serde(rename = "E2D")]
    pub e2d: f64,
    #[serde(rename = "intVs2")]
    pub int_vs2: f64,
    #[serde(rename = "curv_L2")]
    pub curv_l2: f64,
    /// Extra norms needed by some algebraic checks; absent when the sample
    /// was read back from a triad file alone.
    #[serde(skip)]
    pub aux: Option<AuxNorms>,
}

/// Norms entering the interpolation checks beyond the triad itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxNorms {
    /// `|| |d/ds|^{1/2} kappa ||^2` on the curve.
    pub trace_half_kappa: f64,
    /// `|| |d/ds|^{-1} kappa ||^2` on the curve.
    pub neg_one_kappa: f64,
    /// `|| h_x ||_2^2`.
    pub hx_l2sq: f64,
    /// `|| h ||_3`.
    pub h_l3: f64,
    /// `|| h_xx ||_2`.
    pub hxx_l2: f64,
    /// `|| |d/ds|^{-1/2} V ||^2` on the curve.
    pub neg_half_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub name: String,
    pub empirical_sup: f64,
    pub threshold: f64,
    pub pass: bool,
    pub num_samples: usize,
}

impl RatioReport {
    fn from_ratios(name: &str, threshold: f64, pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut sup = 0.0f64;
        let mut count = 0;
        for (lhs, rhs) in pairs {
            if rhs < RHS_FLOOR || !rhs.is_finite() {
                continue;
            }
            let r = lhs / rhs;
            sup = if count == 0 { r } else { sup.max(r) };
            count += 1;
        }
        if count == 0 {
            sup = 0.0;
        }
        Self::new(name, sup, threshold, count)
    }

    fn new(name: &str, empirical_sup: f64, threshold: f64, num_samples: usize) -> Self {
        Self { name: name.to_string(), empirical_sup, threshold, pass: empirical_sup <= threshold, num_samples }
    }
}

/// Default threshold of a named check.
pub fn default_threshold(name: &str) -> f64 {
    match name {
        "ee" => 2e-2,
        "energy_monotone" | "lyapunov" => 1e-3,
        "energy_hx" => 0.5 + 1e-9,
        "curvature_evolution" => 0.05,
        _ => 10.0,
    }
}

/// Per-check thresholds with defaults for anything not overridden.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Thresholds {
    overrides: Vec<(String, f64)>,
}

impl Thresholds {
    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.overrides.retain(|(n, _)| n != name);
        self.overrides.push((name.to_string(), value));
        self
    }

    pub fn get(&self, name: &str) -> f64 {
        self.overrides.iter().find(|(n, _)| n == name).map(|(_, v)| *v).unwrap_or_else(|| default_threshold(name))
    }
}

pub const ALGEBRAIC_CHECKS: [&str; 10] = [
    "trace_half_kappa",
    "neg_kappa_energy",
    "hx_energy",
    "energy_hx",
    "curvature_interp",
    "slope_ed2",
    "bess",
    "hH",
    "ehd",
    "height_interp",
];
pub const DIFFERENTIAL_CHECKS: [&str; 4] = ["ee", "dd", "dhdt", "energy_monotone"];
pub const RATE_CHECKS: [&str; 6] = ["rate_tE", "rate_H", "rate_t2D", "rate_slope", "rate_height", "height_HE"];
/// Checks that need [`AuxNorms`].
pub const AUX_CHECKS: [&str; 6] =
    ["trace_half_kappa", "neg_kappa_energy", "hx_energy", "energy_hx", "bess", "height_interp"];

/// Chebyshev-spaced edges on `[a, b]`, clustered at both ends.
fn chebyshev_edges(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut e: Vec<f64> =
        (0..=n).map(|i| a + (b - a) * 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / n as f64).cos())).collect();
    e[0] = a;
    e[n] = b;
    e
}

/// Squared `H^{-1}` distance `int chi (-Laplace)^{-1} chi` of the region between
/// the graph and the axis, `chi = sign(h)` there.
///
/// The region is cut into horizontal bins; the part of bin `i` above node
/// `x_j` has length `B_i(x_j)` and is spread uniformly over the bin. Per
/// Fourier mode the Green's function `exp(-|k||z - z'|) / (2|k|)` then
/// integrates in closed form over pairs of bins, and the zero mode uses the
/// one-dimensional kernel `-|z - z'| / 2` (the total charge vanishes).
pub fn compute_h(state: &InterfaceState) -> Result<f64> {
    let h = &state.h;
    if !h.is_mean_zero() {
        return Err(Error::ZeroModeNonzero(h.coeffs()[0].norm()));
    }
    let lo = h.samples().iter().cloned().fold(0.0f64, f64::min);
    let hi = h.samples().iter().cloned().fold(0.0f64, f64::max);
    if lo == 0.0 && hi == 0.0 {
        return Ok(0.0);
    }
    let grid = *h.grid();
    let n = grid.num_points();

    // bins sorted bottom to top with signed occupancies
    let mut bins: Vec<(f64, f64)> = Vec::new();
    if lo < 0.0 {
        let e = chebyshev_edges(lo, 0.0, H_BINS_PER_SIDE);
        bins.extend(e.windows(2).map(|w| (w[0], w[1])));
    }
    if hi > 0.0 {
        let e = chebyshev_edges(0.0, hi, H_BINS_PER_SIDE);
        bins.extend(e.windows(2).map(|w| (w[0], w[1])));
    }
    // per-bin charge density coefficients q_i(m) = B_hat_i(m) / d_i
    let density: Vec<Vec<Complex64>> = bins
        .par_iter()
        .map(|&(a, b)| {
            let d = b - a;
            let mut buf: Vec<Complex64> = h
                .samples()
                .iter()
                .map(|&v| {
                    let occ = if a >= 0.0 { (v - a).clamp(0.0, d) } else { -(b - v).clamp(0.0, d) };
                    Complex64::new(occ / d, 0.0)
                })
                .collect();
            fft_forward(&mut buf);
            buf.iter_mut().for_each(|z| *z /= n as f64);
            buf
        })
        .collect();
    let widths: Vec<f64> = bins.iter().map(|(a, b)| b - a).collect();
    let centers: Vec<f64> = bins.iter().map(|(a, b)| 0.5 * (a + b)).collect();

    // zero mode: sum_ij q_i q_j K0_ij, K0 = -(1/2) int int |z - z'|
    let q0: Vec<f64> = density.iter().map(|c| c[0].re).collect();
    let mut zero = 0.0;
    for i in 0..bins.len() {
        zero += -q0[i] * q0[i] * widths[i].powi(3) / 6.0;
        for j in (i + 1)..bins.len() {
            zero += -q0[i] * q0[j] * widths[i] * widths[j] * (centers[j] - centers[i]);
        }
    }

    // nonzero modes, using that pairs of contiguous bins factorise
    let mut modes = 0.0;
    for idx in 1..n {
        let k = grid.wavenumber(idx).abs();
        let mut acc = 0.0;
        let mut running = Complex64::new(0.0, 0.0);
        for (i, d) in widths.iter().enumerate() {
            let kd = k * d;
            let em = -(-kd).exp_m1();
            let q = density[i][idx];
            let self_term = if kd < 1e-3 {
                d * d * (1.0 - kd / 3.0 + kd * kd / 12.0)
            } else {
                2.0 * (kd + (-kd).exp_m1()) / (k * k)
            };
            acc += q.norm_sqr() * self_term;
            acc += 2.0 * (q.conj() * running).re * em / k;
            running = running * (-kd).exp() + q * em / k;
        }
        modes += acc / (2.0 * k);
    }
    Ok(grid.length() * (modes + zero))
}

fn field_at(snapshot_field: Option<&FieldCache>, state: &InterfaceState, strip: &StripConfig) -> Result<FieldCache> {
    match snapshot_field {
        Some(c) => Ok(c.clone()),
        None => {
            let sol = solve_interface(state, strip)?;
            Ok(FieldCache { velocity: sol.velocity, dissipation: sol.dissipation })
        }
    }
}

/// Triad and auxiliary norms of one state with its field data.
pub fn triad_sample(t: f64, state: &InterfaceState, field: &FieldCache) -> Result<TriadSample> {
    let e = energy(state);
    let d = field.dissipation;
    let v = &field.velocity;
    let kappa = &state.curvature;
    let hx_l2sq = state.slope.l2_norm_sq();
    let dx = state.grid().spacing();
    let h_l3 = (state.h.samples().iter().map(|v| v.abs().powi(3)).sum::<f64>() * dx).cbrt();
    let aux = AuxNorms {
        trace_half_kappa: arclength_seminorm(state, kappa, 0.5)?.powi(2),
        neg_one_kappa: arclength_seminorm(state, kappa, -1.0)?.powi(2),
        hx_l2sq,
        h_l3,
        hxx_l2: state.h.derivative(2).l2_norm_sq().sqrt(),
        neg_half_v: arclength_seminorm(state, v, -0.5)?.powi(2),
    };
    Ok(TriadSample {
        t,
        e,
        d,
        h: compute_h(state)?,
        hhalf: seminorm(&state.h, -0.5)?.powi(2),
        sup_slope: sup_slope(state),
        sup_h: state.h.max_abs(),
        e2d: e * e * d,
        int_vs2: arclength_seminorm(state, v, 1.0)?.powi(2),
        curv_l2: arclength_l2_sq(state, kappa),
        aux: Some(aux),
    })
}

/// Triad samples for every snapshot; field data cached by the run is reused.
pub fn triad_series(traj: &Trajectory, strip: &StripConfig) -> Result<Vec<TriadSample>> {
    traj.snapshots
        .par_iter()
        .map(|s| {
            let f = field_at(s.field.as_ref(), &s.state, strip)?;
            triad_sample(s.t, &s.state, &f)
        })
        .collect()
}

fn need(check: &'static str, samples: &[TriadSample], n: usize) -> Result<()> {
    if samples.len() < n {
        return Err(Error::InsufficientSamples { check, got: samples.len(), need: n });
    }
    Ok(())
}

/// Interpolation inequalities between the triad and auxiliary norms. Checks
/// needing auxiliary norms are skipped when any sample lacks them.
pub fn check_algebraic(samples: &[TriadSample], thresholds: &Thresholds) -> Result<Vec<RatioReport>> {
    need("algebraic", samples, 3)?;
    let have_aux = samples.iter().all(|s| s.aux.is_some());
    let mut out = Vec::new();
    for name in ALGEBRAIC_CHECKS {
        if AUX_CHECKS.contains(&name) && !have_aux {
            continue;
        }
        let pairs = samples.iter().map(|s| {
            let a = s.aux.unwrap_or(AuxNorms {
                trace_half_kappa: 0.0,
                neg_one_kappa: 0.0,
                hx_l2sq: 0.0,
                h_l3: 0.0,
                hxx_l2: 0.0,
                neg_half_v: 0.0,
            });
            match name {
                "trace_half_kappa" => (a.trace_half_kappa, s.d),
                "neg_kappa_energy" => (a.neg_one_kappa, s.e),
                "hx_energy" => (a.hx_l2sq, s.e),
                "energy_hx" => (s.e, a.hx_l2sq),
                "curvature_interp" => (s.curv_l2, s.e.cbrt() * s.d.powf(2.0 / 3.0)),
                "slope_ed2" => (s.sup_slope, s.e2d.powf(1.0 / 6.0)),
                "bess" => (a.h_l3, s.hhalf.cbrt() * a.hx_l2sq.powf(1.0 / 12.0) * a.hxx_l2.powf(1.0 / 6.0)),
                "hH" => (s.hhalf, s.h),
                "ehd" => (s.e, (s.h * s.d).sqrt()),
                "height_interp" => (s.sup_h, s.hhalf.powf(1.0 / 6.0) * a.hx_l2sq.cbrt()),
                _ => unreachable!(),
            }
        });
        out.push(RatioReport::from_ratios(name, thresholds.get(name), pairs));
    }
    Ok(out)
}

/// Bound `|| |d/ds|^{-1/2} V ||^2 <~ D` on the flux.
pub fn check_velocity_negative_norm(samples: &[TriadSample], threshold: f64) -> Option<RatioReport> {
    if samples.iter().any(|s| s.aux.is_none()) {
        return None;
    }
    Some(RatioReport::from_ratios(
        "neg_half_velocity",
        threshold,
        samples.iter().map(|s| (s.aux.map_or(0.0, |a| a.neg_half_v), s.d)),
    ))
}

fn centered(samples: &[TriadSample], i: usize, f: impl Fn(&TriadSample) -> f64, time_scale: f64) -> f64 {
    let (a, b) = (&samples[i - 1], &samples[i + 1]);
    (f(b) - f(a)) / ((b.t - a.t) * time_scale)
}

/// Differential relations along the series, by centered differences at
/// interior samples. `time_scale` converts the series time to the physical
/// time of the flow (`mu / 2` for the engines).
pub fn check_differential(
    samples: &[TriadSample],
    time_scale: f64,
    thresholds: &Thresholds,
) -> Result<Vec<RatioReport>> {
    need("differential", samples, 3)?;
    let interior = 1..samples.len() - 1;
    let ee = interior.clone().map(|i| {
        let s = &samples[i];
        ((centered(samples, i, |s| s.e, time_scale) + s.d).abs(), s.d)
    });
    let dd = interior.clone().map(|i| {
        let s = &samples[i];
        (centered(samples, i, |s| s.d, time_scale) + s.int_vs2, s.d.powf(2.5) + s.e * s.d.powi(3))
    });
    let dhdt = interior.map(|i| {
        let s = &samples[i];
        (centered(samples, i, |s| s.h, time_scale), s.h.sqrt() * s.e.powf(1.0 / 6.0) * s.d.powf(7.0 / 12.0))
    });
    let mono = samples.windows(2).map(|w| (w[1].e - w[0].e, w[0].e));
    Ok(vec![
        RatioReport::from_ratios("ee", thresholds.get("ee"), ee),
        RatioReport::from_ratios("dd", thresholds.get("dd"), dd),
        RatioReport::from_ratios("dhdt", thresholds.get("dhdt"), dhdt),
        RatioReport::from_ratios("energy_monotone", thresholds.get("energy_monotone"), mono),
    ])
}

/// `E^2 D` is nonincreasing from the first sample with `E^2 D <= epsilon` on.
pub fn check_lyapunov(samples: &[TriadSample], epsilon: f64, threshold: f64) -> Result<RatioReport> {
    need("lyapunov", samples, 2)?;
    let start = samples.iter().position(|s| s.e2d <= epsilon).ok_or_else(|| Error::RegimeNeverEntered {
        min: samples.iter().map(|s| s.e2d).fold(f64::INFINITY, f64::min),
        epsilon,
    })?;
    let pairs = samples[start..].windows(2).map(|w| (w[1].e2d - w[0].e2d, w[0].e2d));
    Ok(RatioReport::from_ratios("lyapunov", threshold, pairs))
}

/// Algebraic decay rates relative to the initial distance `h0`; `time_scale`
/// as in [`check_differential`].
pub fn check_decay_rates(
    samples: &[TriadSample],
    h0: f64,
    time_scale: f64,
    thresholds: &Thresholds,
) -> Result<Vec<RatioReport>> {
    if !(h0 >= 0.0 && h0.is_finite()) {
        return Err(Error::InvalidConfig(format!("initial distance must be nonnegative, got {h0}")));
    }
    let t_late = 5.0 * h0.powf(0.75);
    let late: Vec<&TriadSample> = samples.iter().filter(|s| s.t * time_scale >= t_late).collect();
    let sqrt_h0 = h0.sqrt();
    let mk = |name: &str, pairs: Vec<(f64, f64)>| RatioReport::from_ratios(name, thresholds.get(name), pairs);
    Ok(vec![
        mk("rate_tE", samples.iter().map(|s| (s.t * time_scale * s.e, h0)).collect()),
        mk("rate_H", samples.iter().map(|s| (s.h, h0)).collect()),
        mk("rate_t2D", late.iter().map(|s| ((s.t * time_scale).powi(2) * s.d, h0)).collect()),
        mk("rate_slope", late.iter().map(|s| ((s.t * time_scale).powf(2.0 / 3.0) * s.sup_slope, sqrt_h0)).collect()),
        mk("rate_height", late.iter().map(|s| ((s.t * time_scale).cbrt() * s.sup_h, sqrt_h0)).collect()),
        mk("height_HE", samples.iter().map(|s| (s.sup_h, (s.h * s.e * s.e).powf(1.0 / 6.0))).collect()),
    ])
}

/// Keeps modes with `|m| <= cutoff`.
fn low_pass(p: &SpectralProfile, cutoff: i64) -> SpectralProfile {
    let grid = *p.grid();
    p.map_modes(|idx, _, c| if grid.mode(idx).abs() <= cutoff { c } else { Complex64::new(0.0, 0.0) })
}

/// Material derivative of the curvature along normal particle paths against
/// `-V_ss - kappa^2 V`, as the sup over interior snapshots of the relative L2
/// defect restricted to `|m| <= N/8`.
pub fn check_curvature_evolution(traj: &Trajectory, strip: &StripConfig, threshold: f64) -> Result<RatioReport> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InsufficientSamples { check: "curvature_evolution", got: snaps.len(), need: 3 });
    }
    let scale = 0.5 * traj.mobility;
    let fields: Vec<FieldCache> = snaps[1..snaps.len() - 1]
        .par_iter()
        .map(|s| field_at(s.field.as_ref(), &s.state, strip))
        .collect::<Result<_>>()?;
    let mut pairs = Vec::with_capacity(fields.len());
    for (offset, f) in fields.iter().enumerate() {
        let i = offset + 1;
        let st = &snaps[i].state;
        let grid = *st.grid();
        let cutoff = grid.num_points() as i64 / 8;
        let (prev, next) = (&snaps[i - 1], &snaps[i + 1]);
        let span = next.t - prev.t;
        let kx = st.curvature.derivative(1);
        let v = &f.velocity;
        let ell = &st.line_element;
        let lhs: Vec<f64> = (0..grid.num_points())
            .map(|j| {
                let kt = (next.state.curvature.samples()[j] - prev.state.curvature.samples()[j]) / span;
                let xdot = scale * v.samples()[j] * st.slope.samples()[j] / ell[j];
                kt + kx.samples()[j] * xdot
            })
            .collect();
        let vs = SpectralProfile::from_samples(
            grid,
            v.derivative(1).samples().iter().zip(ell).map(|(a, l)| a / l).collect(),
        );
        let vss = vs.derivative(1);
        let rhs: Vec<f64> = (0..grid.num_points())
            .map(|j| {
                let k = st.curvature.samples()[j];
                scale * (-vss.samples()[j] / ell[j] - k * k * v.samples()[j])
            })
            .collect();
        let lhs = low_pass(&SpectralProfile::from_samples(grid, lhs), cutoff);
        let rhs = low_pass(&SpectralProfile::from_samples(grid, rhs), cutoff);
        let defect = lhs.zip_samples(&rhs, |a, b| a - b).l2_norm_sq().sqrt();
        pairs.push((defect, rhs.l2_norm_sq().sqrt()));
    }
    Ok(RatioReport::from_ratios("curvature_evolution", threshold, pairs))
}

/// Least-squares fit of `log y = a + p log t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Root-mean-square residual in `log y`.
    pub residual: f64,
    pub num_points: usize,
}

pub fn fit_power_law(t: &[f64], y: &[f64]) -> Option<PowerLawFit> {
    let pts: Vec<(f64, f64)> =
        t.iter().zip(y).filter(|(t, y)| **t > 0.0 && **y > 0.0).map(|(t, y)| (t.ln(), y.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    if sxx == 0.0 {
        return None;
    }
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let slope = sxy / sxx;
    let res = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Some(PowerLawFit { exponent: slope, residual: res, num_points: pts.len() })
}
