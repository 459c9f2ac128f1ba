//! Command-line front end: `simulate`, `verify`, `rates` and `kernel`.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::diagnostics::{
    check_algebraic, check_decay_rates, check_differential, check_lyapunov, check_velocity_negative_norm,
    fit_power_law, triad_series, RatioReport, TriadSample,
};
use crate::error::Error;
use crate::evolution::{kernel_mask, run, RunStatus, Trajectory};
use crate::io;
use crate::spectral::Grid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SLOPE_BLOWUP: i32 = 3;
pub const EXIT_SOLVER_FAILURE: i32 = 4;
pub const EXIT_VERIFY_FAILED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "msrelax", version, about = "Mullins-Sekerka graph relaxation: simulate and verify")]
pub struct Cli {
    /// Worker threads for the field solves (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a trajectory and write triad.csv, norms.csv and trajectory.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a triad series and write a JSON report.
    Verify {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Auxiliary norms file; defaults to norms.csv next to the triad file.
        #[arg(long)]
        norms: Option<PathBuf>,
    },
    /// Simulate, then report decay-rate suprema and late-time power-law fits.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the self-similar mask G as `x,G` rows.
    Kernel {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        length: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure with its exit code.
struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SlopeBlowup { .. } => EXIT_SLOPE_BLOWUP,
            Error::SolverDivergence { .. } | Error::CrossCheckFailure { .. } => EXIT_SOLVER_FAILURE,
            _ => EXIT_INPUT,
        };
        Failure(code, e.to_string())
    }
}

fn input(msg: impl Into<String>) -> Failure {
    Failure(EXIT_INPUT, msg.into())
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    io::write_atomic(path, contents).map_err(|e| input(format!("cannot write {}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::load(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn status_code(status: &RunStatus) -> i32 {
    match status {
        RunStatus::Completed => EXIT_OK,
        RunStatus::SlopeBlowup { .. } => EXIT_SLOPE_BLOWUP,
        RunStatus::SolverFailure { .. } => EXIT_SOLVER_FAILURE,
    }
}

fn report_status(status: &RunStatus) {
    match status {
        RunStatus::Completed => {}
        RunStatus::SlopeBlowup { t, slope } => {
            eprintln!("run halted at t = {t}: sup|h_x| = {slope} left the slope gate")
        }
        RunStatus::SolverFailure { t, message } => eprintln!("run halted at t = {t}: {message}"),
    }
}

/// Runs the configured trajectory and its triad series.
pub fn simulate_config(cfg: &RunConfig) -> crate::Result<(Trajectory, Vec<TriadSample>)> {
    let h0 = cfg.initial_profile()?;
    let ecfg = cfg.evolution_config()?;
    let traj = run(&h0, &ecfg)?;
    let samples = triad_series(&traj, &ecfg.strip)?;
    Ok((traj, samples))
}

fn cmd_simulate(config: &Path, out: &Path) -> Result<i32, Failure> {
    let cfg = load_config(config)?;
    let (traj, samples) = simulate_config(&cfg)?;
    std::fs::create_dir_all(out).map_err(|e| input(format!("cannot create {}: {e}", out.display())))?;
    write(&out.join("triad.csv"), &io::triad_csv(&samples))?;
    write(&out.join("norms.csv"), &io::norms_csv(&samples))?;
    write(&out.join("trajectory.csv"), &io::trajectory_csv(&traj))?;
    report_status(&traj.status);
    Ok(status_code(&traj.status))
}

/// The verification suite selected by `cfg`, in a fixed order.
pub fn verify_samples(samples: &[TriadSample], cfg: &RunConfig) -> crate::Result<Vec<RatioReport>> {
    let th = cfg.thresholds();
    let time_scale = 0.5 * cfg.evolution.mobility;
    let mut reports = check_algebraic(samples, &th)?;
    reports.extend(check_differential(samples, time_scale, &th)?);
    reports.push(match check_lyapunov(samples, cfg.lyapunov_epsilon, th.get("lyapunov")) {
        Ok(r) => r,
        Err(Error::RegimeNeverEntered { min, epsilon }) => RatioReport {
            name: "lyapunov".into(),
            empirical_sup: min / epsilon,
            threshold: th.get("lyapunov"),
            pass: false,
            num_samples: 0,
        },
        Err(e) => return Err(e),
    });
    reports.extend(check_decay_rates(samples, samples[0].h, time_scale, &th)?);
    if let Some(r) = check_velocity_negative_norm(samples, th.get("neg_half_velocity")) {
        reports.push(r);
    }
    reports.retain(|r| cfg.selects(&r.name));
    Ok(reports)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    checks: &'a [RatioReport],
    overall_pass: bool,
}

fn cmd_verify(traj: &Path, config: &Path, out: &Path, norms: Option<&Path>) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(traj).map_err(|e| input(format!("cannot read {}: {e}", traj.display())))?;
    let mut samples = io::parse_triad_csv(&text).map_err(|e| input(format!("{}: {e}", traj.display())))?;
    if samples.len() < 3 {
        return Err(input(format!("{}: need at least 3 rows, found {}", traj.display(), samples.len())));
    }
    let cfg = load_config(config)?;
    let sibling = traj.parent().unwrap_or(Path::new(".")).join("norms.csv");
    let norms_path = match norms {
        Some(p) => Some(p.to_path_buf()),
        None if sibling.exists() => Some(sibling),
        None => None,
    };
    match norms_path {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| input(format!("cannot read {}: {e}", p.display())))?;
            io::attach_norms(&mut samples, &text).map_err(|e| input(format!("{}: {e}", p.display())))?;
        }
        None => eprintln!("warning: no norms file found; checks needing auxiliary norms are omitted"),
    }
    let reports = verify_samples(&samples, &cfg)?;
    let overall_pass = reports.iter().all(|r| r.pass);
    let body = serde_json::to_string_pretty(&VerifyReport { checks: &reports, overall_pass }).expect("serialisable");
    write(out, &(body + "\n"))?;
    for r in reports.iter().filter(|r| !r.pass) {
        eprintln!("check {} failed: {} > {}", r.name, r.empirical_sup, r.threshold);
    }
    Ok(if overall_pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Decay-rate suprema and late-time fits as a JSON value, plus whether all
/// rate checks passed.
pub fn rates_report(cfg: &RunConfig, traj: &Trajectory, samples: &[TriadSample]) -> crate::Result<(Value, bool)> {
    let th = cfg.thresholds();
    let h0 = samples.first().map_or(0.0, |s| s.h);
    let time_scale = 0.5 * cfg.evolution.mobility;
    let rates = check_decay_rates(samples, h0, time_scale, &th)?;
    let t_last = samples.last().map_or(0.0, |s| s.t);
    let (start, end, max_res) = match cfg.rates {
        Some(r) => (r.window_start, r.window_end.unwrap_or(f64::INFINITY), r.max_residual),
        None => (0.1 * t_last, f64::INFINITY, 0.05),
    };
    let window: Vec<&TriadSample> = samples.iter().filter(|s| s.t >= start && s.t <= end && s.t > 0.0).collect();
    let t: Vec<f64> = window.iter().map(|s| s.t).collect();
    let mut slopes = serde_json::Map::new();
    let mut fits = serde_json::Map::new();
    type Series = (&'static str, fn(&TriadSample) -> f64);
    let series: [Series; 4] = [("E", |s| s.e), ("D", |s| s.d), ("sup_h", |s| s.sup_h), ("sup_slope", |s| s.sup_slope)];
    for (name, get) in series {
        let y: Vec<f64> = window.iter().map(|s| get(s)).collect();
        match fit_power_law(&t, &y) {
            Some(f) => {
                let v = if f.residual > max_res { json!("exponential") } else { json!(f.exponent) };
                slopes.insert(name.into(), v);
                fits.insert(name.into(), serde_json::to_value(f).expect("serialisable"));
            }
            None => {
                slopes.insert(name.into(), Value::Null);
            }
        }
    }
    let pass = rates.iter().all(|r| r.pass);
    let status = match &traj.status {
        RunStatus::Completed => json!("completed"),
        RunStatus::SlopeBlowup { t, .. } => json!(format!("slope_blowup at t = {t}")),
        RunStatus::SolverFailure { t, .. } => json!(format!("solver_failure at t = {t}")),
    };
    let value = json!({
        "status": status,
        "H0": h0,
        "window": {"start": start, "end": if end.is_finite() { json!(end) } else { Value::Null }, "num_points": t.len()},
        "rates": rates,
        "slopes": slopes,
        "fits": fits,
        "overall_pass": pass,
    });
    Ok((value, pass))
}

fn cmd_rates(config: &Path, out: &Path) -> Result<i32, Failure> {
    let cfg = load_config(config)?;
    let (traj, samples) = simulate_config(&cfg)?;
    let (value, pass) = rates_report(&cfg, &traj, &samples)?;
    write(out, &(serde_json::to_string_pretty(&value).expect("serialisable") + "\n"))?;
    report_status(&traj.status);
    let code = status_code(&traj.status);
    Ok(if code != EXIT_OK {
        code
    } else if pass {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn cmd_kernel(n: usize, length: f64, out: &Path) -> Result<i32, Failure> {
    let grid = Grid::new(length, n)?;
    let g = kernel_mask(&grid);
    let mut text = String::from("x,G\n");
    for (j, v) in g.samples().iter().enumerate() {
        text.push_str(&format!("{:.16e},{:.16e}\n", grid.node(j), v));
    }
    write(out, &text)?;
    Ok(EXIT_OK)
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_INPUT;
        }
        // a second initialisation in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let result = match &cli.command {
        Command::Simulate { config, out } => cmd_simulate(config, out),
        Command::Verify { traj, config, out, norms } => cmd_verify(traj, config, out, norms.as_deref()),
        Command::Rates { config, out } => cmd_rates(config, out),
        Command::Kernel { n, length, out } => cmd_kernel(*n, *length, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

/// Parses `std::env::args` and runs; clap usage errors exit with code 2.
pub fn main() -> i32 {
    execute(Cli::parse())
}
