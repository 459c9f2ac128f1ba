//! Two-phase exterior problem for the Mullins-Sekerka field.
//!
//! Each phase is mapped to a half-strip by the straightening `zeta = z - h(x)`
//! (plus side) or `zeta = h(x) - z` (minus side). The Laplacian becomes
//! `-div(a grad F) = 0` with
//!
//! ```text
//! a = [[1, -s h_x], [-s h_x, 1 + h_x^2]],   s = +1 (plus), -1 (minus),
//! ```
//!
//! posed on `[0, Z]` with `F = kappa` at `zeta = 0` and `F = 0` at `zeta = Z`.
//!
//! Discretisation: Fourier collocation in `x`, second-order finite volumes on
//! a geometrically graded grid in `zeta`. The discrete operator is the Hessian
//! of a discrete Dirichlet energy, so it is symmetric positive definite and
//! the energy itself is the dissipation quadrature. It is solved by conjugate
//! gradients preconditioned with the flat (`h_x = 0`) operator, which is
//! diagonal in Fourier modes and tridiagonal in depth.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{check_slope_gate, InterfaceState};
use crate::spectral::{fft_forward, fft_inverse, Grid, SpectralProfile};

/// Relative tolerance of the preconditioned CG iteration.
const CG_TOL: f64 = 1e-12;
const CG_MAX_ITER: usize = 2000;
/// Accepted relative max-norm residual of the discrete equation.
const RESIDUAL_TOL: f64 = 1e-8;
/// Allowed relative gap between volume and boundary dissipation.
const CROSS_CHECK_TOL: f64 = 0.02;

/// Truncation and grading of the half-strip in the straightened coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripConfig {
    pub depth: f64,
    pub num_layers: usize,
    /// Ratio of consecutive layer thicknesses (1 = uniform).
    pub grading: f64,
}

impl StripConfig {
    pub fn new(depth: f64, num_layers: usize, grading: f64) -> Result<Self> {
        let cfg = Self { depth, num_layers, grading };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.depth.is_finite() && self.depth > 0.0) {
            return Err(Error::InvalidConfig(format!("strip.depth must be positive, got {}", self.depth)));
        }
        if self.num_layers < 16 {
            return Err(Error::InvalidConfig(format!("strip.num_layers must be >= 16, got {}", self.num_layers)));
        }
        if !(self.grading.is_finite() && self.grading >= 1.0) {
            return Err(Error::InvalidConfig(format!("strip.grading must be >= 1, got {}", self.grading)));
        }
        Ok(())
    }

    /// Default strip for a grid: depth `1.5 L` (the slowest mode decays
    /// below `1e-4`), 80 layers, first layer an eighth of the grid spacing.
    pub fn for_grid(grid: &Grid) -> Self {
        Self::with_first_layer(1.5 * grid.length(), 80, 0.125 * grid.spacing())
    }

    /// Strip whose grading is chosen so the first layer has thickness `first`.
    pub fn with_first_layer(depth: f64, num_layers: usize, first: f64) -> Self {
        let uniform = depth / num_layers as f64;
        if first >= uniform {
            return Self { depth, num_layers, grading: 1.0 };
        }
        let thickness = |r: f64| depth * (r - 1.0) / (r.powi(num_layers as i32) - 1.0);
        let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
        while thickness(hi) > first {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if thickness(mid) > first {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self { depth, num_layers, grading: 0.5 * (lo + hi) }
    }

    /// Twice the layers, same depth, grading refined so the layer map stays smooth.
    pub fn refined(&self) -> Self {
        Self { depth: self.depth, num_layers: 2 * self.num_layers, grading: self.grading.sqrt() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { depth: self.depth * factor, ..*self }
    }

    /// Level positions `0 = zeta_0 < ... < zeta_M = depth`.
    pub fn levels(&self) -> Vec<f64> {
        let m = self.num_layers;
        let r = self.grading;
        let mut out: Vec<f64> = if r == 1.0 {
            (0..=m).map(|i| self.depth * i as f64 / m as f64).collect()
        } else {
            let rm = r.powi(m as i32) - 1.0;
            (0..=m).map(|i| self.depth * (r.powi(i as i32) - 1.0) / rm).collect()
        };
        out[m] = self.depth;
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// Discrete field on one straightened half-strip.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfStripField {
    pub side: Side,
    pub levels: Vec<f64>,
    /// `values[i][j]` = `F(x_j, zeta_i)`; row 0 is the Dirichlet data.
    pub values: Vec<Vec<f64>>,
    /// Off-diagonal coefficient `a_12` at the nodes (`a_11 = 1`).
    pub a12: Vec<f64>,
    /// `a_22 = 1 + h_x^2` at the nodes.
    pub a22: Vec<f64>,
    /// Discrete conormal flux `a12 F_x + a22 F_zeta` at the interface.
    pub conormal_flux: Vec<f64>,
    /// Relative max-norm residual of the discrete equation.
    pub residual: f64,
    pub iterations: usize,
}

impl HalfStripField {
    /// Smallest eigenvalue of `a` over the nodes.
    pub fn min_coefficient_eigenvalue(&self) -> f64 {
        self.a12
            .iter()
            .zip(&self.a22)
            .map(|(&b, &d)| {
                let tr = 1.0 + d;
                let det = d - b * b;
                0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt())
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Second-order one-sided `dF/dzeta` at `zeta = 0`.
    pub fn boundary_normal_derivative(&self) -> Vec<f64> {
        let h1 = self.levels[1];
        let h2 = self.levels[2];
        let w0 = -(h1 + h2) / (h1 * h2);
        let w1 = h2 / (h1 * (h2 - h1));
        let w2 = -h1 / (h2 * (h2 - h1));
        (0..self.values[0].len())
            .map(|j| w0 * self.values[0][j] + w1 * self.values[1][j] + w2 * self.values[2][j])
            .collect()
    }
}

/// Grid-dependent data shared by the discrete operator and preconditioner.
struct Layout {
    n: usize,
    m: usize,
    /// Layer thicknesses, one per cell.
    cell: Vec<f64>,
    /// Dual (control-volume) thickness of each level.
    dual: Vec<f64>,
    /// Derivative wavenumber per FFT slot (Nyquist zeroed).
    kt: Vec<f64>,
    length: f64,
}

impl Layout {
    fn new(grid: &Grid, strip: &StripConfig) -> Self {
        let levels = strip.levels();
        let m = strip.num_layers;
        let cell: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
        let mut dual = vec![0.0; m + 1];
        for (c, d) in cell.iter().enumerate() {
            dual[c] += 0.5 * d;
            dual[c + 1] += 0.5 * d;
        }
        let n = grid.num_points();
        let nyq = grid.nyquist_index();
        let kt = (0..n).map(|i| if i == nyq { 0.0 } else { grid.wavenumber(i) }).collect();
        Self { n, m, cell, dual, kt, length: grid.length() }
    }

    fn neg(&self, idx: usize) -> usize {
        (self.n - idx) % self.n
    }
}

/// Tridiagonal factors of the flat operator for every `|k|`.
struct Preconditioner {
    /// `[slot][r]` modified super-diagonal.
    cp: Vec<Vec<f64>>,
    den: Vec<Vec<f64>>,
    lower: Vec<f64>,
    slot_of: Vec<usize>,
}

impl Preconditioner {
    fn new(layout: &Layout) -> Self {
        let nint = layout.m - 1;
        let half = layout.n / 2;
        let mut cp = Vec::with_capacity(half + 1);
        let mut den = Vec::with_capacity(half + 1);
        let lower: Vec<f64> = (0..nint).map(|r| -1.0 / layout.cell[r]).collect();
        for slot in 0..=half {
            let k2 = layout.kt[slot].powi(2);
            let mut c = vec![0.0; nint];
            let mut d = vec![0.0; nint];
            for r in 0..nint {
                let i = r + 1;
                let diag = layout.dual[i] * k2 + 1.0 / layout.cell[i - 1] + 1.0 / layout.cell[i];
                let upper = -1.0 / layout.cell[i];
                let dr = if r == 0 { diag } else { diag - lower[r] * c[r - 1] };
                d[r] = dr;
                c[r] = upper / dr;
            }
            cp.push(c);
            den.push(d);
        }
        let slot_of = (0..layout.n).map(|i| i.min(layout.n - i)).collect();
        Self { cp, den, lower, slot_of }
    }

    fn apply(&self, rhs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let nint = rhs.len();
        let n = rhs[0].len();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; nint];
        let mut work = vec![Complex64::new(0.0, 0.0); nint];
        for idx in 0..n {
            let s = self.slot_of[idx];
            let (cp, den) = (&self.cp[s], &self.den[s]);
            for r in 0..nint {
                let prev = if r == 0 { Complex64::new(0.0, 0.0) } else { self.lower[r] * work[r - 1] };
                work[r] = (rhs[r][idx] - prev) / den[r];
            }
            for r in (0..nint).rev() {
                if r + 1 < nint {
                    let next = work[r + 1];
                    work[r] -= cp[r] * next;
                }
                out[r][idx] = work[r];
            }
        }
        out
    }
}

/// Discrete operator for one side.
struct StripOperator<'a> {
    layout: &'a Layout,
    a12: Vec<f64>,
    a22: Vec<f64>,
}

impl StripOperator<'_> {
    /// Real-space `(U_c, A_c)` = (`dF/dzeta`, mean of `dF/dx`) on cell `c`.
    fn cell_gradients(&self, full: &[Vec<Complex64>], c: usize) -> Vec<Complex64> {
        let l = self.layout;
        let d = l.cell[c];
        let mut buf: Vec<Complex64> = (0..l.n)
            .map(|idx| {
                let u = (full[c + 1][idx] - full[c][idx]) / d;
                let a = Complex64::new(0.0, 0.5 * l.kt[idx]) * (full[c][idx] + full[c + 1][idx]);
                u + Complex64::new(0.0, 1.0) * a
            })
            .collect();
        fft_inverse(&mut buf);
        buf
    }

    /// Fourier coefficients of `P = a12 U` and `Q = a12 A + a22 U` on cell `c`.
    fn cell_fluxes(&self, full: &[Vec<Complex64>], c: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let l = self.layout;
        let mut buf = self.cell_gradients(full, c);
        for (j, z) in buf.iter_mut().enumerate() {
            let (u, a) = (z.re, z.im);
            *z = Complex64::new(self.a12[j] * u, self.a12[j] * a + self.a22[j] * u);
        }
        fft_forward(&mut buf);
        let inv_n = 1.0 / l.n as f64;
        let mut p = vec![Complex64::new(0.0, 0.0); l.n];
        let mut q = vec![Complex64::new(0.0, 0.0); l.n];
        for idx in 0..l.n {
            let z = buf[idx] * inv_n;
            let zc = buf[l.neg(idx)].conj() * inv_n;
            p[idx] = 0.5 * (z + zc);
            q[idx] = (z - zc) * Complex64::new(0.0, -0.5);
        }
        (p, q)
    }

    /// Energy gradient (halved, per unit `dx`) at the interior levels.
    fn apply(&self, full: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let l = self.layout;
        let m = l.m;
        let fluxes: Vec<(Vec<Complex64>, Vec<Complex64>)> =
            (0..m).into_par_iter().map(|c| self.cell_fluxes(full, c)).collect();
        let mut out: Vec<Vec<Complex64>> =
            (1..m).map(|i| (0..l.n).map(|idx| l.dual[i] * l.kt[idx] * l.kt[idx] * full[i][idx]).collect()).collect();
        for (c, (p, q)) in fluxes.iter().enumerate() {
            let half = 0.5 * l.cell[c];
            for idx in 0..l.n {
                let dp = -half * Complex64::new(0.0, l.kt[idx]) * p[idx];
                if c >= 1 {
                    out[c - 1][idx] += dp - q[idx];
                }
                if c + 1 < m {
                    out[c][idx] += dp + q[idx];
                }
            }
        }
        out
    }

    /// Discrete conormal flux `a12 F_x + a22 F_zeta` at `zeta = 0`: minus the
    /// energy gradient with respect to the Dirichlet row, so that
    /// `Q(F) = -dx sum_j F_0 flux_0` holds exactly.
    fn boundary_flux(&self, full: &[Vec<Complex64>]) -> Vec<f64> {
        let l = self.layout;
        let (p, q) = self.cell_fluxes(full, 0);
        let mut buf: Vec<Complex64> = (0..l.n)
            .map(|idx| {
                let g0 = l.dual[0] * l.kt[idx] * l.kt[idx] * full[0][idx]
                    - 0.5 * l.cell[0] * Complex64::new(0.0, l.kt[idx]) * p[idx]
                    - q[idx];
                -g0
            })
            .collect();
        fft_inverse(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Discrete Dirichlet energy of the full field.
    fn energy(&self, full: &[Vec<Complex64>]) -> f64 {
        let l = self.layout;
        let rows: f64 = (0..=l.m)
            .map(|i| {
                l.dual[i] * l.length * (0..l.n).map(|idx| l.kt[idx].powi(2) * full[i][idx].norm_sqr()).sum::<f64>()
            })
            .sum();
        let dx = l.length / l.n as f64;
        let cells: f64 = (0..l.m)
            .into_par_iter()
            .map(|c| {
                let g = self.cell_gradients(full, c);
                l.cell[c]
                    * dx
                    * g.iter()
                        .enumerate()
                        .map(|(j, z)| 2.0 * self.a12[j] * z.im * z.re + self.a22[j] * z.re * z.re)
                        .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .sum();
        rows + cells
    }
}

fn dot(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x.conj() * y).re).sum::<f64>()).sum()
}

fn axpy(alpha: f64, x: &[Vec<Complex64>], y: &mut [Vec<Complex64>]) {
    for (rx, ry) in x.iter().zip(y.iter_mut()) {
        for (a, b) in rx.iter().zip(ry.iter_mut()) {
            *b += alpha * a;
        }
    }
}

fn max_abs_real(rows: &[Vec<Complex64>]) -> f64 {
    rows.iter()
        .map(|r| {
            let mut buf = r.clone();
            fft_inverse(&mut buf);
            buf.iter().fold(0.0f64, |m, z| m.max(z.re.abs()))
        })
        .fold(0.0, f64::max)
}

fn solve_side(
    side: Side,
    slope: &[f64],
    boundary: &[Complex64],
    layout: &Layout,
    pre: &Preconditioner,
    strip: &StripConfig,
) -> Result<(HalfStripField, f64)> {
    let n = layout.n;
    let m = layout.m;
    let s = side.sign();
    let op = StripOperator {
        layout,
        a12: slope.iter().map(|hx| -s * hx).collect(),
        a22: slope.iter().map(|hx| 1.0 + hx * hx).collect(),
    };
    let zero_row = vec![Complex64::new(0.0, 0.0); n];
    let assemble = |interior: &[Vec<Complex64>], bnd: &[Complex64]| -> Vec<Vec<Complex64>> {
        let mut full = Vec::with_capacity(m + 1);
        full.push(bnd.to_vec());
        full.extend(interior.iter().cloned());
        full.push(zero_row.clone());
        full
    };

    let zero_interior = vec![zero_row.clone(); m - 1];
    let mut b = op.apply(&assemble(&zero_interior, boundary));
    for row in b.iter_mut() {
        for z in row.iter_mut() {
            *z = -*z;
        }
    }
    let b_norm = dot(&b, &b).sqrt();
    let mut x = zero_interior.clone();
    let mut iterations = 0;
    if b_norm > 0.0 {
        let mut r = b.clone();
        let mut z = pre.apply(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            let ap = op.apply(&assemble(&p, &zero_row));
            let alpha = rz / dot(&p, &ap);
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            iterations += 1;
            let rel = dot(&r, &r).sqrt() / b_norm;
            if rel <= CG_TOL {
                break;
            }
            if iterations >= CG_MAX_ITER || !rel.is_finite() {
                return Err(Error::SolverDivergence { residual: rel, iterations });
            }
            z = pre.apply(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pr, zr) in p.iter_mut().zip(&z) {
                for (pv, zv) in pr.iter_mut().zip(zr) {
                    *pv = zv + beta * *pv;
                }
            }
        }
    }
    let full = assemble(&x, boundary);
    let residual = if b_norm > 0.0 {
        let res = op.apply(&full);
        max_abs_real(&res) / max_abs_real(&b)
    } else {
        0.0
    };
    if residual > RESIDUAL_TOL {
        return Err(Error::SolverDivergence { residual, iterations });
    }
    let energy = op.energy(&full);
    let conormal_flux = op.boundary_flux(&full);
    let values = full
        .iter()
        .map(|row| {
            let mut buf = row.clone();
            fft_inverse(&mut buf);
            buf.into_iter().map(|z| z.re).collect()
        })
        .collect();
    Ok((
        HalfStripField {
            side,
            levels: strip.levels(),
            values,
            a12: op.a12,
            a22: op.a22,
            conormal_flux,
            residual,
            iterations,
        },
        energy,
    ))
}

fn solve_with_data(
    state: &InterfaceState,
    data: &SpectralProfile,
    strip: &StripConfig,
) -> Result<((HalfStripField, f64), (HalfStripField, f64))> {
    strip.validate()?;
    check_slope_gate(state, 1.0)?;
    let grid = state.grid();
    let layout = Layout::new(grid, strip);
    let pre = Preconditioner::new(&layout);
    let mut boundary: Vec<Complex64> = data.samples().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_forward(&mut boundary);
    let inv_n = 1.0 / layout.n as f64;
    boundary.iter_mut().for_each(|z| *z *= inv_n);
    let slope = state.slope.samples();
    let (plus, minus) = rayon::join(
        || solve_side(Side::Plus, slope, &boundary, &layout, &pre, strip),
        || solve_side(Side::Minus, slope, &boundary, &layout, &pre, strip),
    );
    let (mut plus, mut minus) = (plus?, minus?);
    plus.0.values[0] = data.samples().to_vec();
    minus.0.values[0] = data.samples().to_vec();
    Ok((plus, minus))
}

/// Solves both phases with Dirichlet data `kappa` on the interface.
pub fn solve_exterior_fields(state: &InterfaceState, strip: &StripConfig) -> Result<(HalfStripField, HalfStripField)> {
    let ((p, _), (m, _)) = solve_with_data(state, &state.curvature, strip)?;
    Ok((p, m))
}

/// Solves both phases with arbitrary Dirichlet data in place of the curvature.
pub fn solve_with_boundary_data(
    state: &InterfaceState,
    data: &SpectralProfile,
    strip: &StripConfig,
) -> Result<(HalfStripField, HalfStripField)> {
    let ((p, _), (m, _)) = solve_with_data(state, data, strip)?;
    Ok((p, m))
}

/// Normal velocity `V = -[grad f . n]` with `n` the outward normal of the
/// upper phase. The tangential parts of the two conormal fluxes cancel, so
/// `V = (flux+ + flux-) / sqrt(1 + h_x^2)` and the interface obeys
/// `h_t = -sqrt(1 + h_x^2) V`.
pub fn normal_velocity(fields: &(HalfStripField, HalfStripField), state: &InterfaceState) -> SpectralProfile {
    let v = state
        .line_element
        .iter()
        .enumerate()
        .map(|(j, l)| (fields.0.conormal_flux[j] + fields.1.conormal_flux[j]) / l)
        .collect();
    SpectralProfile::from_samples(*state.grid(), v)
}

/// `V` from one-sided differences of the solved fields,
/// `sqrt(1 + h_x^2) (dF+/dzeta + dF-/dzeta)`; independent of the flux form.
pub fn normal_velocity_stencil(fields: &(HalfStripField, HalfStripField), state: &InterfaceState) -> SpectralProfile {
    let dp = fields.0.boundary_normal_derivative();
    let dm = fields.1.boundary_normal_derivative();
    let v = state.line_element.iter().enumerate().map(|(j, l)| l * (dp[j] + dm[j])).collect();
    SpectralProfile::from_samples(*state.grid(), v)
}

/// Discrete Dirichlet energy of one solved side.
pub fn side_energy(field: &HalfStripField, grid: &Grid, strip: &StripConfig) -> f64 {
    let layout = Layout::new(grid, strip);
    let op = StripOperator { layout: &layout, a12: field.a12.clone(), a22: field.a22.clone() };
    let full: Vec<Vec<Complex64>> = field
        .values
        .iter()
        .map(|row| {
            let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_forward(&mut buf);
            buf.iter().map(|z| z / layout.n as f64).collect()
        })
        .collect();
    op.energy(&full)
}

/// `-int_Gamma kappa V ds`, the boundary form of the dissipation.
pub fn boundary_dissipation(state: &InterfaceState, velocity: &SpectralProfile) -> f64 {
    -state
        .curvature
        .samples()
        .iter()
        .zip(velocity.samples())
        .zip(&state.line_element)
        .map(|((k, v), l)| k * v * l)
        .sum::<f64>()
        * state.grid().spacing()
}

fn cross_check(volume: f64, boundary: f64) -> Result<()> {
    let scale = volume.abs().max(boundary.abs());
    if scale > 0.0 && (volume - boundary).abs() > CROSS_CHECK_TOL * scale {
        return Err(Error::CrossCheckFailure { volume, boundary });
    }
    Ok(())
}

/// Dissipation `D = int |grad f|^2` over both phases, by volume quadrature,
/// cross-checked against `-int_Gamma kappa V ds` with `V` from one-sided
/// differences.
pub fn dissipation(
    fields: &(HalfStripField, HalfStripField),
    state: &InterfaceState,
    strip: &StripConfig,
) -> Result<f64> {
    let grid = state.grid();
    let volume = side_energy(&fields.0, grid, strip) + side_energy(&fields.1, grid, strip);
    let boundary = boundary_dissipation(state, &normal_velocity_stencil(fields, state));
    cross_check(volume, boundary)?;
    Ok(volume)
}

/// Fields, velocity and dissipation of one interface state.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub fields: (HalfStripField, HalfStripField),
    pub velocity: SpectralProfile,
    pub dissipation: f64,
    pub boundary_dissipation: f64,
}

/// Solves the field problem and evaluates `V` and `D` in one pass.
pub fn solve_interface(state: &InterfaceState, strip: &StripConfig) -> Result<FieldSolution> {
    let ((p, ep), (m, em)) = solve_with_data(state, &state.curvature, strip)?;
    let fields = (p, m);
    let velocity = normal_velocity(&fields, state);
    let volume = ep + em;
    let boundary = boundary_dissipation(state, &normal_velocity_stencil(&fields, state));
    cross_check(volume, boundary)?;
    Ok(FieldSolution { fields, velocity, dissipation: volume, boundary_dissipation: boundary })
}

/// Linearised right-hand side `-mu |k|^3 h_hat` per mode.
pub fn linear_dtn(grid: &Grid, hhat: &[Complex64], mobility: f64) -> Vec<Complex64> {
    assert_eq!(hhat.len(), grid.num_points());
    hhat.iter().enumerate().map(|(idx, c)| -mobility * grid.wavenumber(idx).abs().powi(3) * c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_state;
    use std::f64::consts::PI;

    fn flat(n: usize, length: f64) -> InterfaceState {
        build_state(SpectralProfile::zeros(Grid::new(length, n).unwrap()))
    }

    /// Closed-form flat-interface solution with Dirichlet data `cos(kx)`
    /// at 0 and zero at depth `Z`.
    fn flat_oracle(k: f64, depth: f64, x: f64, z: f64) -> f64 {
        (-k * z).exp() * (k * x).cos() * (1.0 - (-2.0 * k * (depth - z)).exp()) / (1.0 - (-2.0 * k * depth).exp())
    }

    #[test]
    fn levels_are_graded() {
        let s = StripConfig::new(10.0, 32, 1.1).unwrap();
        let lv = s.levels();
        assert_eq!(lv.len(), 33);
        assert_eq!(lv[0], 0.0);
        assert_eq!(lv[32], 10.0);
        let d: Vec<f64> = lv.windows(2).map(|w| w[1] - w[0]).collect();
        for w in d.windows(2) {
            assert!((w[1] / w[0] - 1.1).abs() < 1e-9);
        }
        let f = StripConfig::with_first_layer(10.0, 32, 0.01);
        assert!((f.levels()[1] - 0.01).abs() < 1e-9);
        assert!(StripConfig::new(1.0, 8, 1.0).is_err());
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let st = flat(32, 2.0 * PI);
        let strip = StripConfig::for_grid(st.grid());
        let sol = solve_interface(&st, &strip).unwrap();
        assert!(sol.fields.0.values.iter().flatten().all(|&v| v == 0.0));
        assert!(sol.velocity.samples().iter().all(|&v| v == 0.0));
        assert_eq!(sol.dissipation, 0.0);
    }

    #[test]
    fn flat_interface_matches_closed_form() {
        let (n, k) = (64, 2.0);
        let st = flat(n, 2.0 * PI);
        let strip = StripConfig::new(6.0, 64, 1.04).unwrap();
        let g = SpectralProfile::from_fn(*st.grid(), |x| (k * x).cos());
        let (p, m) = solve_with_boundary_data(&st, &g, &strip).unwrap();
        assert_eq!(p.iterations, 1);
        let lv = strip.levels();
        let mut err: f64 = 0.0;
        for (i, z) in lv.iter().enumerate() {
            for (j, x) in st.grid().nodes().into_iter().enumerate() {
                let e = flat_oracle(k, strip.depth, x, *z);
                err = err.max((p.values[i][j] - e).abs()).max((m.values[i][j] - e).abs());
            }
        }
        assert!(err < 2e-3, "max error {err}");
    }

    #[test]
    fn coefficient_is_uniformly_elliptic() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let st = build_state(SpectralProfile::from_fn(g, |x| 0.5 * (2.0 * x).sin()));
        assert!((crate::geometry::sup_slope(&st) - 1.0).abs() < 1e-12);
        let strip = StripConfig::for_grid(&g);
        let (p, m) = solve_exterior_fields(&st, &strip).unwrap();
        let bound = (3.0 - 5f64.sqrt()) / 2.0;
        assert!(p.min_coefficient_eigenvalue() >= bound - 1e-12);
        assert!(m.min_coefficient_eigenvalue() >= bound - 1e-12);
        assert!(p.residual <= 1e-8 && m.residual <= 1e-8);
        for (a, b) in p.values[0].iter().zip(st.curvature.samples()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn steep_interface_is_rejected() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let st = build_state(SpectralProfile::from_fn(g, |x| 0.6 * (2.0 * x).sin()));
        assert!(matches!(
            solve_exterior_fields(&st, &StripConfig::for_grid(&g)),
            Err(Error::SlopeGateViolation { .. })
        ));
    }

    #[test]
    fn linear_dtn_cases() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let mut hhat = vec![Complex64::new(0.0, 0.0); 16];
        hhat[0] = Complex64::new(1.0, 0.0);
        assert!(linear_dtn(&g, &hhat, 2.0).iter().all(|c| c.norm() == 0.0));
        let mut hhat = vec![Complex64::new(0.0, 0.0); 16];
        hhat[2] = Complex64::new(1.0, 0.0);
        assert_eq!(linear_dtn(&g, &hhat, 2.0)[2], Complex64::new(-16.0, 0.0));
    }

    #[test]
    fn velocity_parity_follows_height() {
        let g = Grid::new(16.0, 128).unwrap();
        let strip = StripConfig::for_grid(&g);
        let even = build_state(SpectralProfile::from_fn(g, |x| 0.2 * (-x * x).exp() - 0.2 * (PI.sqrt() / 16.0)));
        let v = solve_interface(&even.clone(), &strip).unwrap().velocity;
        let odd = build_state(SpectralProfile::from_fn(g, |x| 0.2 * x * (-x * x).exp()));
        let w = solve_interface(&odd, &strip).unwrap().velocity;
        let n = 128;
        let scale_v = v.max_abs();
        let scale_w = w.max_abs();
        for j in 1..n {
            assert!((v.samples()[j] - v.samples()[n - j]).abs() <= 1e-8 * scale_v);
            assert!((w.samples()[j] + w.samples()[n - j]).abs() <= 1e-8 * scale_w);
        }
    }

    #[test]
    fn velocity_conserves_area() {
        let g = Grid::new(16.0, 128).unwrap();
        let st = build_state(SpectralProfile::from_fn(g, |x| 0.3 * x * (-x * x).exp()).without_mean());
        let v = solve_interface(&st, &StripConfig::for_grid(&g)).unwrap().velocity;
        let flux: f64 = v.samples().iter().zip(&st.line_element).map(|(a, l)| a * l).sum::<f64>() * g.spacing();
        assert!(flux.abs() <= 1e-6 * v.l2_norm_sq().sqrt(), "net flux {flux:e}");
    }

    #[test]
    fn small_mode_dissipation_and_linearisation() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let (eps, k) = (1e-3, 3.0);
        let h = SpectralProfile::from_fn(g, |x| eps * (k * x).cos());
        let st = build_state(h.clone());
        let sol = solve_interface(&st, &StripConfig::for_grid(&g)).unwrap();
        let expected = 2.0 * eps * eps * k.powi(5) * PI;
        assert!((sol.dissipation - expected).abs() < 2e-3 * expected);

        let mu = 2.0;
        let rate = SpectralProfile::from_coeffs(g, &linear_dtn(&g, h.coeffs(), mu));
        let scale = rate.max_abs();
        for (v, r) in sol.velocity.samples().iter().zip(rate.samples()) {
            assert!((-0.5 * mu * v - r).abs() < 1e-2 * scale);
        }
    }

    #[test]
    fn dissipation_scales_inversely_with_area() {
        let g = Grid::new(16.0, 128).unwrap();
        let h = SpectralProfile::from_fn(g, |x| 0.2 * x * (-x * x).exp());
        let d = dissipation_of(&h);
        let lambda = 2.0;
        let big =
            SpectralProfile::from_samples(g.scaled(lambda).unwrap(), h.samples().iter().map(|v| lambda * v).collect());
        let d_big = dissipation_of(&big);
        assert!((d_big * lambda * lambda - d).abs() < 1e-6 * d);
    }

    fn dissipation_of(h: &SpectralProfile) -> f64 {
        let st = build_state(h.clone());
        solve_interface(&st, &StripConfig::for_grid(st.grid())).unwrap().dissipation
    }

    #[test]
    fn truncation_depth_is_converged() {
        let g = Grid::new(16.0, 128).unwrap();
        let st = build_state(SpectralProfile::from_fn(g, |x| 0.2 * x * (-x * x).exp()));
        let base = StripConfig::for_grid(&g);
        let deep = StripConfig::with_first_layer(2.0 * base.depth, base.num_layers + 8, base.levels()[1]);
        let a = solve_interface(&st, &base).unwrap();
        let b = solve_interface(&st, &deep).unwrap();
        assert!((a.dissipation - b.dissipation).abs() < 1e-4 * b.dissipation);
        let diff = a.velocity.zip_samples(&b.velocity, |x, y| x - y).max_abs();
        assert!(diff < 1e-3 * b.velocity.max_abs(), "{diff:e}");
    }
}
