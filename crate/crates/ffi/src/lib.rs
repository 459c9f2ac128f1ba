//! C ABI over the `msrelax` solver.
//!
//! Every fallible entry point returns an [`MsStatus`]; on failure the message
//! is available from [`ms_last_error_message`] on the same thread. Objects
//! are handed out as opaque pointers and must be released with the matching
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use msrelax::cli::simulate_config;
use msrelax::config::RunConfig;
use msrelax::diagnostics::TriadSample;
use msrelax::evolution::{kernel_mask, RunStatus, Trajectory};
use msrelax::field::{solve_interface, StripConfig};
use msrelax::geometry::{build_state, energy, sup_slope};
use msrelax::spectral::{seminorm, Grid, SpectralProfile};
use msrelax::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NegativeOrderOnNonzeroMean = 3,
    ZeroModeNonzero = 4,
    DivisionByZero = 5,
    SlopeGateViolation = 6,
    SlopeBlowup = 7,
    SolverDivergence = 8,
    CrossCheckFailure = 9,
    InsufficientSamples = 10,
    RegimeNeverEntered = 11,
    InvalidGrid = 12,
    InvalidConfig = 13,
    Panic = 14,
}

impl From<&Error> for MsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NegativeOrderOnNonzeroMean { .. } => MsStatus::NegativeOrderOnNonzeroMean,
            Error::ZeroModeNonzero(_) => MsStatus::ZeroModeNonzero,
            Error::DivisionByZero(_) => MsStatus::DivisionByZero,
            Error::SlopeGateViolation { .. } => MsStatus::SlopeGateViolation,
            Error::SlopeBlowup { .. } => MsStatus::SlopeBlowup,
            Error::SolverDivergence { .. } => MsStatus::SolverDivergence,
            Error::CrossCheckFailure { .. } => MsStatus::CrossCheckFailure,
            Error::InsufficientSamples { .. } => MsStatus::InsufficientSamples,
            Error::RegimeNeverEntered { .. } => MsStatus::RegimeNeverEntered,
            Error::InvalidGrid(_) => MsStatus::InvalidGrid,
            Error::InvalidConfig(_) => MsStatus::InvalidConfig,
        }
    }
}

/// One row of the triad series.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MsTriadSample {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub distance: f64,
    pub distance_half: f64,
    pub sup_slope: f64,
    pub sup_h: f64,
    pub e2d: f64,
    pub int_vs2: f64,
    pub curv_l2: f64,
}

impl From<&TriadSample> for MsTriadSample {
    fn from(s: &TriadSample) -> Self {
        MsTriadSample {
            t: s.t,
            energy: s.e,
            dissipation: s.d,
            distance: s.h,
            distance_half: s.hhalf,
            sup_slope: s.sup_slope,
            sup_h: s.sup_h,
            e2d: s.e2d,
            int_vs2: s.int_vs2,
            curv_l2: s.curv_l2,
        }
    }
}

/// A periodic height profile sampled on a uniform grid.
pub struct MsProfile(SpectralProfile);

/// A completed run together with its triad series.
pub struct MsTrajectory {
    traj: Trajectory,
    samples: Vec<TriadSample>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: MsStatus, msg: &str) -> MsStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), MsStatus>) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MsStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(MsStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: msrelax::Result<T>) -> Result<T, MsStatus> {
    r.map_err(|e| fail(MsStatus::from(&e), &e.to_string()))
}

fn null() -> MsStatus {
    fail(MsStatus::NullPointer, "null pointer argument")
}

fn check_out<T>(p: *mut T) -> Result<(), MsStatus> {
    if p.is_null() {
        Err(null())
    } else {
        Ok(())
    }
}

unsafe fn profile_ref<'a>(p: *const MsProfile) -> Result<&'a SpectralProfile, MsStatus> {
    p.as_ref().map(|p| &p.0).ok_or_else(null)
}

/// Message describing the most recent failure on this thread, or an empty
/// string. The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn ms_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a profile from `n` samples at nodes `x_j = -L/2 + j L/n`.
///
/// # Safety
/// `samples` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_profile_new(
    length: f64,
    n: usize,
    samples: *const f64,
    out: *mut *mut MsProfile,
) -> MsStatus {
    guard(|| {
        check_out(out)?;
        if samples.is_null() {
            return Err(null());
        }
        let grid = lift(Grid::new(length, n))?;
        let data = std::slice::from_raw_parts(samples, n).to_vec();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(fail(MsStatus::InvalidArgument, "samples must be finite"));
        }
        *out = Box::into_raw(Box::new(MsProfile(SpectralProfile::from_samples(grid, data))));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a pointer from [`ms_profile_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ms_profile_free(p: *mut MsProfile) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live profile.
#[no_mangle]
pub unsafe extern "C" fn ms_profile_len(p: *const MsProfile) -> usize {
    p.as_ref().map_or(0, |p| p.0.samples().len())
}

/// Homogeneous Sobolev seminorm `||h||_{H^sigma}`.
///
/// # Safety
/// `p` must be a live profile and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ms_seminorm(p: *const MsProfile, sigma: f64, out: *mut f64) -> MsStatus {
    guard(|| {
        check_out(out)?;
        let h = profile_ref(p)?;
        *out = lift(seminorm(h, sigma))?;
        Ok(())
    })
}

/// Interface length excess `E = int (sqrt(1 + h_x^2) - 1) dx`.
///
/// # Safety
/// `p` must be a live profile and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ms_energy(p: *const MsProfile, out: *mut f64) -> MsStatus {
    guard(|| {
        check_out(out)?;
        *out = energy(&build_state(profile_ref(p)?.clone()));
        Ok(())
    })
}

/// # Safety
/// `p` must be a live profile and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ms_sup_slope(p: *const MsProfile, out: *mut f64) -> MsStatus {
    guard(|| {
        check_out(out)?;
        *out = sup_slope(&build_state(profile_ref(p)?.clone()));
        Ok(())
    })
}

/// Solves both phases on the default strip and writes the normal velocity
/// at the grid nodes into `velocity` and the dissipation into `dissipation`.
///
/// # Safety
/// `velocity` must hold `len` doubles, `len` must equal the profile length,
/// and `dissipation` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_normal_velocity(
    p: *const MsProfile,
    velocity: *mut f64,
    len: usize,
    dissipation: *mut f64,
) -> MsStatus {
    guard(|| {
        check_out(velocity)?;
        check_out(dissipation)?;
        let h = profile_ref(p)?;
        if len != h.samples().len() {
            return Err(fail(MsStatus::InvalidArgument, "output length does not match the grid"));
        }
        let state = build_state(h.clone());
        let sol = lift(solve_interface(&state, &StripConfig::for_grid(h.grid())))?;
        std::slice::from_raw_parts_mut(velocity, len).copy_from_slice(sol.velocity.samples());
        *dissipation = sol.dissipation;
        Ok(())
    })
}

/// Samples of the self-similar kernel on `n` nodes of a period `length`.
///
/// # Safety
/// `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ms_kernel_mask(length: f64, n: usize, out: *mut f64) -> MsStatus {
    guard(|| {
        check_out(out)?;
        let grid = lift(Grid::new(length, n))?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(kernel_mask(&grid).samples());
        Ok(())
    })
}

/// Runs the simulation described by a JSON configuration.
///
/// A run stopped early by slope blow-up or solver failure still yields a
/// trajectory; query it with [`ms_trajectory_status`].
///
/// # Safety
/// `config_json` must be a NUL-terminated UTF-8 string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ms_simulate_json(config_json: *const c_char, out: *mut *mut MsTrajectory) -> MsStatus {
    guard(|| {
        check_out(out)?;
        if config_json.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|_| fail(MsStatus::InvalidArgument, "configuration is not valid UTF-8"))?;
        let cfg = lift(RunConfig::from_json(text))?;
        let (traj, samples) = lift(simulate_config(&cfg))?;
        *out = Box::into_raw(Box::new(MsTrajectory { traj, samples }));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a pointer from [`ms_simulate_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ms_trajectory_free(t: *mut MsTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// How the run ended: `Ok`, `SlopeBlowup` or `SolverDivergence`.
///
/// # Safety
/// `t` must be a live trajectory.
#[no_mangle]
pub unsafe extern "C" fn ms_trajectory_status(t: *const MsTrajectory) -> MsStatus {
    let Some(t) = t.as_ref() else {
        return null();
    };
    match &t.traj.status {
        RunStatus::Completed => MsStatus::Ok,
        RunStatus::SlopeBlowup { t, slope } => {
            fail(MsStatus::SlopeBlowup, &format!("slope blow-up at t = {t}: sup|h_x| = {slope}"))
        }
        RunStatus::SolverFailure { message, .. } => fail(MsStatus::SolverDivergence, message),
    }
}

/// # Safety
/// `t` must be a live trajectory.
#[no_mangle]
pub unsafe extern "C" fn ms_trajectory_num_samples(t: *const MsTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.samples.len())
}

/// # Safety
/// `t` must be a live trajectory and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ms_trajectory_sample(
    t: *const MsTrajectory,
    index: usize,
    out: *mut MsTriadSample,
) -> MsStatus {
    guard(|| {
        check_out(out)?;
        let t = t.as_ref().ok_or_else(null)?;
        let s = t.samples.get(index).ok_or_else(|| fail(MsStatus::InvalidArgument, "sample index out of range"))?;
        *out = MsTriadSample::from(s);
        Ok(())
    })
}

/// Copies the final height samples into `out`, which must hold `len` doubles.
///
/// # Safety
/// `t` must be a live trajectory and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ms_trajectory_final_height(t: *const MsTrajectory, out: *mut f64, len: usize) -> MsStatus {
    guard(|| {
        check_out(out)?;
        let t = t.as_ref().ok_or_else(null)?;
        let last = t.traj.snapshots.last().ok_or_else(|| fail(MsStatus::InvalidArgument, "trajectory is empty"))?;
        let h = last.state.h.samples();
        if len != h.len() {
            return Err(fail(MsStatus::InvalidArgument, "output length does not match the grid"));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(h);
        Ok(())
    })
}
