//! Periodic spectral calculus on a uniform grid.
//!
//! A [`SpectralProfile`] holds a real periodic function both as samples at the
//! grid nodes and as Fourier coefficients `c_m` normalised so that
//!
//! ```text
//! p(x_j) = sum_m c_m exp(i k_m x_j),    k_m = 2 pi m / L,
//! ```
//!
//! with `x_j` the absolute node coordinate. Under this convention
//! `dx * sum_j p_j^2 = L * sum_m |c_m|^2` and `|d/dx|^2 = -d^2/dx^2` exactly.
//!
//! The unpaired Nyquist mode `m = -N/2` is dropped by every operator of
//! nonzero order, and the zero mode of `|d/dx|^sigma` is zero for all
//! `sigma != 0`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Relative tolerance below which the zero mode counts as absent.
pub const MEAN_ZERO_TOL: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalised forward DFT in place: `X_m = sum_j x_j e^{-2 pi i jm/N}`.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Unnormalised inverse DFT in place: `x_j = sum_m X_m e^{2 pi i jm/N}`.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}

/// Uniform periodic grid on the cell `[-L/2, L/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    num_points: usize,
}

impl Grid {
    pub fn new(length: f64, num_points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if num_points < 8 || !num_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("num_points must be a power of two >= 8, got {num_points}")));
        }
        Ok(Self { length, num_points })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.num_points as f64
    }

    /// Left end of the cell.
    pub fn origin(&self) -> f64 {
        -0.5 * self.length
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.node(j)).collect()
    }

    /// Index of the unpaired `m = -N/2` mode in FFT order.
    pub fn nyquist_index(&self) -> usize {
        self.num_points / 2
    }

    /// Signed mode number of FFT slot `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        let n = self.num_points as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Angular wavenumber of FFT slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> f64 {
        2.0 * PI * self.mode(idx) as f64 / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.num_points).map(|i| self.wavenumber(i)).collect()
    }

    /// Same resolution, cell scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.length * factor, self.num_points)
    }

    fn origin_phase(&self, idx: usize) -> f64 {
        // exp(-i k_m x0) with x0 = -L/2 equals (-1)^m
        if self.mode(idx).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// A real periodic function held jointly as samples and Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    grid: Grid,
    samples: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl SpectralProfile {
    pub fn from_samples(grid: Grid, samples: Vec<f64>) -> Self {
        assert_eq!(samples.len(), grid.num_points(), "sample count must match the grid");
        let n = grid.num_points() as f64;
        let mut coeffs: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_forward(&mut coeffs);
        for (idx, c) in coeffs.iter_mut().enumerate() {
            *c *= grid.origin_phase(idx) / n;
        }
        Self { grid, samples, coeffs }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let samples = grid.nodes().into_iter().map(f).collect();
        Self::from_samples(grid, samples)
    }

    /// Builds a profile from coefficients. The imaginary part of the synthesis
    /// is discarded, so the stored coefficients are the Hermitian projection.
    pub fn from_coeffs(grid: Grid, coeffs: &[Complex64]) -> Self {
        assert_eq!(coeffs.len(), grid.num_points(), "coefficient count must match the grid");
        let mut buf: Vec<Complex64> = coeffs.iter().enumerate().map(|(idx, c)| c * grid.origin_phase(idx)).collect();
        fft_inverse(&mut buf);
        Self::from_samples(grid, buf.into_iter().map(|z| z.re).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, samples: vec![0.0; grid.num_points()], coeffs: vec![Complex64::new(0.0, 0.0); grid.num_points()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `|c_0| <= 1e-12 * max |c_m|`.
    pub fn is_mean_zero(&self) -> bool {
        self.coeffs[0].norm() <= MEAN_ZERO_TOL * self.max_coeff()
    }

    pub fn without_mean(&self) -> Self {
        let mut c = self.coeffs.clone();
        c[0] = Complex64::new(0.0, 0.0);
        Self::from_coeffs(self.grid, &c)
    }

    /// Applies `f(k, c_m)` to every coefficient.
    pub fn map_modes(&self, f: impl Fn(usize, f64, Complex64) -> Complex64) -> Self {
        let c: Vec<Complex64> =
            self.coeffs.iter().enumerate().map(|(idx, &c)| f(idx, self.grid.wavenumber(idx), c)).collect();
        Self::from_coeffs(self.grid, &c)
    }

    pub fn map_samples(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_samples(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two profiles on the same grid.
    pub fn zip_samples(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid);
        Self::from_samples(self.grid, self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|v| v * factor).collect(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Spectral derivative of the given order; the Nyquist mode is dropped.
    pub fn derivative(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let nyq = self.grid.nyquist_index();
        self.map_modes(
            |idx, k, c| {
                if idx == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, k).powu(order)
                }
            },
        )
    }

    /// Periodic antiderivative of the mean-free part, normalised to zero mean.
    pub fn antiderivative(&self) -> Self {
        let nyq = self.grid.nyquist_index();
        self.map_modes(
            |idx, k, c| {
                if idx == 0 || idx == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    c / Complex64::new(0.0, k)
                }
            },
        )
    }

    /// Two-thirds rule: zero every mode with `|m| > N/3`.
    pub fn dealiased(&self) -> Self {
        let cutoff = self.grid.num_points() as i64 / 3;
        let grid = self.grid;
        self.map_modes(|idx, _, c| if grid.mode(idx).abs() > cutoff { Complex64::new(0.0, 0.0) } else { c })
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid quadrature of `p^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.spacing() * self.samples.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn integral(&self) -> f64 {
        self.grid.length() * self.coeffs[0].re
    }

    /// Band-limited interpolant for evaluation between nodes.
    pub fn interpolant(&self) -> Interpolant {
        Interpolant::new(self)
    }

    /// Direct evaluation of the trigonometric interpolant at `x`.
    /// Costs O(N); use [`Interpolant`] for many points.
    pub fn eval_direct(&self, x: f64) -> f64 {
        let nyq = self.grid.nyquist_index();
        let mut acc = self.coeffs[0].re;
        for idx in 1..nyq {
            let k = self.grid.wavenumber(idx);
            acc += 2.0 * (self.coeffs[idx] * Complex64::from_polar(1.0, k * x)).re;
        }
        acc + self.coeffs[nyq].re * (PI * (x - self.grid.origin()) / self.grid.spacing()).cos()
    }
}

const OVERSAMPLE: usize = 8;
const STENCIL: usize = 12;

/// Evaluates the trigonometric interpolant of a profile at arbitrary points by
/// 8x spectral oversampling followed by local 12-point Lagrange interpolation.
#[derive(Debug, Clone)]
pub struct Interpolant {
    origin: f64,
    fine_spacing: f64,
    values: Vec<f64>,
    weights: [f64; STENCIL],
}

impl Interpolant {
    fn new(p: &SpectralProfile) -> Self {
        let grid = p.grid;
        let n = grid.num_points();
        let nf = n * OVERSAMPLE;
        let nyq = grid.nyquist_index();
        let mut buf = vec![Complex64::new(0.0, 0.0); nf];
        for idx in 0..n {
            let m = grid.mode(idx);
            let c = p.coeffs[idx] * grid.origin_phase(idx);
            if idx == nyq {
                // split the cosine between +N/2 and -N/2
                buf[n / 2] += 0.5 * c;
                buf[nf - n / 2] += 0.5 * c;
            } else {
                buf[m.rem_euclid(nf as i64) as usize] += c;
            }
        }
        fft_inverse(&mut buf);
        let mut weights = [0.0; STENCIL];
        let mut binom = 1.0;
        for (i, w) in weights.iter_mut().enumerate() {
            *w = if i % 2 == 0 { binom } else { -binom };
            binom = binom * (STENCIL - 1 - i) as f64 / (i + 1) as f64;
        }
        Self {
            origin: grid.origin(),
            fine_spacing: grid.spacing() / OVERSAMPLE as f64,
            values: buf.into_iter().map(|z| z.re).collect(),
            weights,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let nf = self.values.len() as i64;
        let u = (x - self.origin) / self.fine_spacing;
        let base = u.floor() as i64 - (STENCIL as i64 / 2 - 1);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..STENCIL {
            let node = base + i as i64;
            let y = self.values[node.rem_euclid(nf) as usize];
            let d = u - node as f64;
            if d == 0.0 {
                return y;
            }
            let w = self.weights[i] / d;
            num += w * y;
            den += w;
        }
        num / den
    }
}

fn check_mean(p: &SpectralProfile, sigma: f64) -> Result<()> {
    if p.is_mean_zero() {
        Ok(())
    } else {
        Err(Error::NegativeOrderOnNonzeroMean { sigma, mean: p.coeffs[0].norm() })
    }
}

/// Multiplier `|k|^sigma` applied per mode. `sigma = 0` is the identity;
/// otherwise the zero and Nyquist modes map to zero.
pub fn fractional_operator(p: &SpectralProfile, sigma: f64) -> Result<SpectralProfile> {
    if sigma == 0.0 {
        return Ok(p.clone());
    }
    if sigma < 0.0 {
        check_mean(p, sigma)?;
    }
    let nyq = p.grid.nyquist_index();
    Ok(p.map_modes(|idx, k, c| if idx == 0 || idx == nyq { Complex64::new(0.0, 0.0) } else { c * k.abs().powf(sigma) }))
}

/// `|| |d/dx|^sigma p ||_2` by discrete Parseval.
pub fn seminorm(p: &SpectralProfile, sigma: f64) -> Result<f64> {
    if sigma < 0.0 {
        check_mean(p, sigma)?;
    }
    let grid = p.grid;
    let nyq = grid.nyquist_index();
    let sum: f64 = p
        .coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            if sigma == 0.0 {
                c.norm_sqr()
            } else if idx == 0 || idx == nyq {
                0.0
            } else {
                grid.wavenumber(idx).abs().powf(2.0 * sigma) * c.norm_sqr()
            }
        })
        .sum();
    Ok((sum * grid.length()).sqrt())
}

/// Norm of `p` in the dual of `H^sigma`, i.e.
/// `sup { int p z : || |d/dx|^sigma z ||_2 = 1 }`, which equals the
/// `-sigma` seminorm.
pub fn dual_pairing_norm(p: &SpectralProfile, sigma: f64) -> Result<f64> {
    check_mean(p, -sigma)?;
    seminorm(p, -sigma)
}

/// Hölder ratio `|p|_{theta s1 + (1-theta) s2} / (|p|_{s1}^theta |p|_{s2}^{1-theta})`,
/// which never exceeds one.
pub fn interpolation_gap(p: &SpectralProfile, s1: f64, s2: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidConfig(format!("theta must lie in (0,1), got {theta}")));
    }
    let mid = seminorm(p, theta * s1 + (1.0 - theta) * s2)?;
    let a = seminorm(p, s1)?;
    let b = seminorm(p, s2)?;
    if mid == 0.0 {
        return Ok(0.0);
    }
    let den = a.powf(theta) * b.powf(1.0 - theta);
    if den == 0.0 {
        return Err(Error::DivisionByZero("interpolation_gap"));
    }
    Ok(mid / den)
}

/// Samples of the Poisson extension of `g` into the half-strip.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionField {
    pub depths: Vec<f64>,
    /// `values[d][j]` is the field at depth `depths[d]` and node `j`.
    pub values: Vec<Vec<f64>>,
}

/// Harmonic extension by per-mode damping `c_m exp(-|k_m| z)`; the zero mode
/// is carried unchanged to every depth.
pub fn harmonic_extension(g: &SpectralProfile, depths: &[f64]) -> ExtensionField {
    let values = depths.iter().map(|&z| g.map_modes(|_, k, c| c * (-k.abs() * z).exp()).samples().to_vec()).collect();
    ExtensionField { depths: depths.to_vec(), values }
}
