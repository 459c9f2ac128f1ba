use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use msrelax::config::RunConfig;
use msrelax::evolution::exact_linear_observables;
use msrelax::io::parse_triad_csv;

fn msrelax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msrelax")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn simulate(config: &Path, out: &Path) -> Output {
    msrelax(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

const LINEAR_MODE: &str = r#"{
  "initial_data": {"preset": "mode", "amplitude": 0.002, "wavenumber": 2.0},
  "evolution": {"engine": "linear", "dt": 0.005, "t_end": 0.05,
                "grid": {"length": 6.283185307179586, "num_points": 64}}
}"#;

const NONLINEAR_BUMP: &str = r#"{
  "initial_data": {"preset": "gaussian_bump", "amplitude": 0.1, "width": 1.0},
  "evolution": {"engine": "nonlinear", "dt": 5e-4, "t_end": 0.005,
                "grid": {"length": 16.0, "num_points": 64}},
  "seed": 7
}"#;

#[test]
fn zero_data_gives_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.json",
        r#"{"initial_data": {"preset": "mode", "amplitude": 0.0, "wavenumber": 1.0},
            "evolution": {"engine": "nonlinear", "dt": 0.01, "t_end": 0.03,
                          "grid": {"length": 6.283185307179586, "num_points": 32}}}"#,
    );
    let out = dir.path().join("out");
    let o = simulate(&cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("triad.csv")).unwrap();
    assert!(text.starts_with("t,E,D,H,Hhalf,sup_slope,sup_h,E2D,intVs2,curv_L2\n"));
    let rows = parse_triad_csv(&text).unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!([r.e, r.d, r.h, r.hhalf, r.sup_slope, r.sup_h, r.e2d, r.int_vs2, r.curv_l2], [0.0; 9]);
    }
}

#[test]
fn linear_mode_rows_match_fourier_observables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "mode.json", LINEAR_MODE);
    let out = dir.path().join("out");
    assert_eq!(simulate(&cfg_path, &out).status.code(), Some(0));
    let rows = parse_triad_csv(&fs::read_to_string(out.join("triad.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 11);

    let cfg = RunConfig::load(&cfg_path).unwrap();
    let h0 = cfg.initial_profile().unwrap();
    for r in &rows {
        let o = exact_linear_observables(&h0, r.t, 2.0).unwrap();
        // small-slope dictionary: E ~ |h|_1^2 / 2, D ~ 2 |h|_{5/2}^2, Hhalf = |h|_{-1/2}^2
        assert!((r.e - 0.5 * o.energy).abs() < 1e-4 * r.e, "E at t={}", r.t);
        assert!((r.d - 2.0 * o.dissipation).abs() < 2e-3 * r.d, "D at t={}", r.t);
        assert!((r.hhalf - o.distance * (-4.0 * 8.0 * r.t).exp()).abs() < 1e-10 * r.hhalf);
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bump.json", NONLINEAR_BUMP);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(simulate(&cfg, &a).status.code(), Some(0));
    assert_eq!(simulate(&cfg, &b).status.code(), Some(0));
    for f in ["triad.csv", "norms.csv", "trajectory.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let c = dir.path().join("c");
    let o = msrelax(&["--jobs", "1", "simulate", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(a.join("triad.csv")).unwrap(), fs::read(c.join("triad.csv")).unwrap());
}

#[test]
fn verify_passes_a_clean_run_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bump.json", NONLINEAR_BUMP);
    let out = dir.path().join("out");
    assert_eq!(simulate(&cfg, &out).status.code(), Some(0));
    let report = dir.path().join("report.json");
    let o = msrelax(&[
        "verify",
        "--traj",
        out.join("triad.csv").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["overall_pass"], true);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"ee") && names.contains(&"bess") && names.contains(&"lyapunov"));

    // without the norms sidecar the auxiliary checks are dropped with a warning
    fs::remove_file(out.join("norms.csv")).unwrap();
    let o = msrelax(&[
        "verify",
        "--traj",
        out.join("triad.csv").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["name"] != "bess"));
}

#[test]
fn malformed_triad_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mode.json", LINEAR_MODE);
    let triad = dir.path().join("triad.csv");
    fs::write(&triad, "t,E,D\n0,1,2\n").unwrap();
    let o = msrelax(&[
        "verify",
        "--traj",
        triad.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_configs_exit_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"initial_data": {"preset": "mode", "amplitude": 0.1, "wavenumber": 1.0, "phase": 1},
            "evolution": {"engine": "linear", "dt": 0.1, "t_end": 1.0, "grid": {"length": 6.283185307179586, "num_points": 32}}}"#,
        r#"{"initial_data": {"preset": "gaussian_bump", "amplitude": 3.0, "width": 1.0},
            "evolution": {"engine": "nonlinear", "dt": 0.1, "t_end": 1.0, "grid": {"length": 16.0, "num_points": 64}}}"#,
        r#"{"initial_data": {"preset": "mode", "amplitude": 0.1, "wavenumber": 1.0},
            "evolution": {"engine": "linear", "dt": 0.1, "t_end": 1.0, "grid": {"length": 6.283185307179586, "num_points": 31}}}"#,
        "{ not json",
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.json"), body);
        let o = simulate(&cfg, &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "case {i}");
        assert!(!o.stderr.is_empty(), "case {i} printed no diagnostic");
    }
    let o = msrelax(&["simulate", "--config", "/nonexistent/run.json", "--out", "/tmp/x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kernel_command_writes_unit_mass_mask() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = msrelax(&["kernel", "--n", "256", "--length", "40", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,G"));
    let g: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(g.len(), 256);
    let mass: f64 = g.iter().sum::<f64>() * 40.0 / 256.0;
    assert!((mass - 1.0).abs() < 1e-10);
}

#[test]
fn rates_command_reports_fits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "wavelet.json",
        r#"{"initial_data": {"preset": "wavelet", "amplitude": 0.01, "width": 1.0},
            "evolution": {"engine": "linear", "dt": 1.0, "t_end": 100.0,
                          "grid": {"length": 100.0, "num_points": 512},
                          "sample_times": {"t_min": 0.1, "t_max": 100.0, "count": 16}},
            "rates": {"window_start": 5.0}}"#,
    );
    let out = dir.path().join("rates.json");
    let o = msrelax(&["rates", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["status"], "completed");
    assert_eq!(v["overall_pass"], true);
    let e = v["slopes"]["E"].as_f64().unwrap();
    assert!((-1.4..-0.9).contains(&e), "E slope {e}");
}
