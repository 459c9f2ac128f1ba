//! Geometry of the graph interface `z = h(x)`.

use crate::error::{Error, Result};
use crate::spectral::{seminorm, Grid, SpectralProfile};

/// Slack allowed on the slope gate for round-off in the grid maximum.
const GATE_SLACK: f64 = 1e-12;

/// A height profile together with its cached geometric fields.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceState {
    pub h: SpectralProfile,
    /// `h_x`.
    pub slope: SpectralProfile,
    /// Tangent angle `arctan(h_x)` at the nodes.
    pub angle: Vec<f64>,
    /// `h_xx / (1 + h_x^2)^{3/2}`.
    pub curvature: SpectralProfile,
    /// `sqrt(1 + h_x^2)` at the nodes.
    pub line_element: Vec<f64>,
}

impl InterfaceState {
    pub fn grid(&self) -> &Grid {
        self.h.grid()
    }
}

pub fn build_state(h: SpectralProfile) -> InterfaceState {
    let slope = h.derivative(1);
    let hxx = h.derivative(2);
    let line_element: Vec<f64> = slope.samples().iter().map(|s| s.hypot(1.0)).collect();
    let angle = slope.samples().iter().map(|s| s.atan()).collect();
    let curvature = SpectralProfile::from_samples(
        *h.grid(),
        hxx.samples().iter().zip(&line_element).map(|(a, l)| a / (l * l * l)).collect(),
    );
    InterfaceState { h, slope, angle, curvature, line_element }
}

/// Excess length `int (sqrt(1 + h_x^2) - 1) dx`, evaluated through the
/// cancellation-free form `h_x^2 / (sqrt(1 + h_x^2) + 1)`.
pub fn energy(state: &InterfaceState) -> f64 {
    let dx = state.grid().spacing();
    state.slope.samples().iter().zip(&state.line_element).map(|(s, l)| s * s / (l + 1.0)).sum::<f64>() * dx
}

/// Largest `|h_x|` over the grid nodes.
pub fn sup_slope(state: &InterfaceState) -> f64 {
    state.slope.max_abs()
}

pub(crate) fn check_slope_gate(state: &InterfaceState, gate: f64) -> Result<()> {
    let slope = sup_slope(state);
    if slope > gate + GATE_SLACK {
        Err(Error::SlopeGateViolation { slope, gate })
    } else {
        Ok(())
    }
}

/// Arclength `s(x) = int_{x0}^{x} sqrt(1 + h_y^2) dy` as a callable, with the
/// total length of one period.
struct ArclengthMap {
    origin: f64,
    mean_element: f64,
    fluct: crate::spectral::Interpolant,
    fluct_at_origin: f64,
    element: crate::spectral::Interpolant,
}

impl ArclengthMap {
    fn new(state: &InterfaceState) -> Self {
        let grid = *state.grid();
        let ell = SpectralProfile::from_samples(grid, state.line_element.clone());
        let fluct = ell.antiderivative();
        let fluct_at_origin = fluct.samples()[0];
        Self {
            origin: grid.origin(),
            mean_element: ell.mean(),
            fluct: fluct.interpolant(),
            fluct_at_origin,
            element: ell.interpolant(),
        }
    }

    fn s(&self, x: f64) -> f64 {
        self.mean_element * (x - self.origin) + self.fluct.eval(x) - self.fluct_at_origin
    }

    /// Solves `s(x) = target` by Newton iteration.
    fn invert(&self, target: f64, scale: f64) -> f64 {
        let mut x = self.origin + target / self.mean_element;
        for _ in 0..60 {
            let step = (self.s(x) - target) / self.element.eval(x);
            x -= step;
            if step.abs() <= 1e-15 * scale {
                break;
            }
        }
        x
    }
}

/// Total arclength of one period of the interface.
pub fn total_arclength(state: &InterfaceState) -> f64 {
    state.line_element.iter().sum::<f64>() * state.grid().spacing()
}

/// Resamples `q(x)` onto `N` points uniformly spaced in arclength; the result
/// lives on a grid whose length is the total arclength.
pub fn to_arclength(state: &InterfaceState, q: &SpectralProfile) -> Result<SpectralProfile> {
    check_slope_gate(state, 1.0)?;
    assert_eq!(state.grid(), q.grid(), "profile must share the interface grid");
    let grid = *state.grid();
    let n = grid.num_points();
    let map = ArclengthMap::new(state);
    let total = map.mean_element * grid.length();
    let arc_grid = Grid::new(total, n)?;
    let qi = q.interpolant();
    let samples = (0..n)
        .map(|j| {
            let x = map.invert(j as f64 * total / n as f64, grid.length());
            qi.eval(x)
        })
        .collect();
    Ok(SpectralProfile::from_samples(arc_grid, samples))
}

/// `|| |d/ds|^sigma q ||_{L^2(Gamma)}` via uniform-arclength resampling. For
/// negative orders the arclength mean of `q` is removed first.
pub fn arclength_seminorm(state: &InterfaceState, q: &SpectralProfile, sigma: f64) -> Result<f64> {
    let resampled = to_arclength(state, q)?;
    if sigma < 0.0 {
        seminorm(&resampled.without_mean(), sigma)
    } else {
        seminorm(&resampled, sigma)
    }
}

/// `int_Gamma q^2 ds` by nodal quadrature.
pub fn arclength_l2_sq(state: &InterfaceState, q: &SpectralProfile) -> f64 {
    q.samples().iter().zip(&state.line_element).map(|(v, l)| v * v * l).sum::<f64>() * state.grid().spacing()
}
