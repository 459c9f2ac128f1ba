//! CSV emitters and readers for trajectories and triad series.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::diagnostics::{AuxNorms, TriadSample};
use crate::evolution::Trajectory;

pub const TRIAD_HEADER: &str = "t,E,D,H,Hhalf,sup_slope,sup_h,E2D,intVs2,curv_L2";
pub const NORMS_HEADER: &str = "t,trace_half_kappa,neg_one_kappa,hx_l2sq,h_l3,hxx_l2,neg_half_v";

/// Seventeen significant digits: exact round trip for doubles.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

pub fn triad_csv(samples: &[TriadSample]) -> String {
    let mut out = String::from(TRIAD_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&join(&[s.t, s.e, s.d, s.h, s.hhalf, s.sup_slope, s.sup_h, s.e2d, s.int_vs2, s.curv_l2]));
        out.push('\n');
    }
    out
}

/// Auxiliary norms, one row per sample; samples without norms are skipped.
pub fn norms_csv(samples: &[TriadSample]) -> String {
    let mut out = String::from(NORMS_HEADER);
    out.push('\n');
    for s in samples {
        if let Some(a) = s.aux {
            out.push_str(&join(&[s.t, a.trace_half_kappa, a.neg_one_kappa, a.hx_l2sq, a.h_l3, a.hxx_l2, a.neg_half_v]));
            out.push('\n');
        }
    }
    out
}

/// Long format `t,x,h`, one row per node per snapshot.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,x,h\n");
    for s in &traj.snapshots {
        let grid = s.state.grid();
        for (j, h) in s.state.h.samples().iter().enumerate() {
            out.push_str(&join(&[s.t, grid.node(j), *h]));
            out.push('\n');
        }
    }
    out
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn check_header(found: &csv::StringRecord, expected: &str) -> Result<(), String> {
    let found: Vec<&str> = found.iter().collect();
    let expected: Vec<&str> = expected.split(',').collect();
    if found != expected {
        return Err(format!("unexpected header {:?}, expected {:?}", found.join(","), expected.join(",")));
    }
    Ok(())
}

pub fn parse_triad_csv(text: &str) -> Result<Vec<TriadSample>, String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    check_header(rdr.headers().map_err(|e| e.to_string())?, TRIAD_HEADER)?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<TriadSample>().enumerate() {
        let s = row.map_err(|e| format!("row {}: {e}", i + 1))?;
        let vals = [s.t, s.e, s.d, s.h, s.hhalf, s.sup_slope, s.sup_h, s.e2d, s.int_vs2, s.curv_l2];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(format!("row {}: non-finite value", i + 1));
        }
        if let Some(prev) = out.last().map(|p: &TriadSample| p.t) {
            if s.t <= prev {
                return Err(format!("row {}: times must be strictly increasing", i + 1));
            }
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct NormsRow {
    t: f64,
    trace_half_kappa: f64,
    neg_one_kappa: f64,
    hx_l2sq: f64,
    h_l3: f64,
    hxx_l2: f64,
    neg_half_v: f64,
}

/// Attaches norms rows to samples with matching times.
pub fn attach_norms(samples: &mut [TriadSample], text: &str) -> Result<(), String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    check_header(rdr.headers().map_err(|e| e.to_string())?, NORMS_HEADER)?;
    let rows: Vec<NormsRow> = rdr
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| format!("norms row {}: {e}", i + 1)))
        .collect::<Result<_, _>>()?;
    if rows.len() != samples.len() {
        return Err(format!("norms file has {} rows, triad has {}", rows.len(), samples.len()));
    }
    for (s, r) in samples.iter_mut().zip(rows) {
        if r.t != s.t {
            return Err(format!("norms row at t = {} does not match triad time {}", r.t, s.t));
        }
        s.aux = Some(AuxNorms {
            trace_half_kappa: r.trace_half_kappa,
            neg_one_kappa: r.neg_one_kappa,
            hx_l2sq: r.hx_l2sq,
            h_l3: r.h_l3,
            hxx_l2: r.hxx_l2,
            neg_half_v: r.neg_half_v,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64) -> TriadSample {
        TriadSample {
            t,
            e: 0.1 / 3.0,
            d: std::f64::consts::PI,
            h: 1e-300,
            hhalf: 2.0,
            sup_slope: 0.1,
            sup_h: 0.2,
            e2d: 1.0 / 7.0,
            int_vs2: 5.0,
            curv_l2: 6.0,
            aux: Some(AuxNorms {
                trace_half_kappa: 1.0 / 9.0,
                neg_one_kappa: 2.0,
                hx_l2sq: 3.0,
                h_l3: 4.0,
                hxx_l2: 5.0,
                neg_half_v: 6.0,
            }),
        }
    }

    #[test]
    fn triad_round_trip_is_exact() {
        let s = vec![sample(0.0), sample(0.1), sample(0.3)];
        let text = triad_csv(&s);
        assert!(text.starts_with("t,E,D,H,Hhalf,sup_slope,sup_h,E2D,intVs2,curv_L2\n"));
        let mut back = parse_triad_csv(&text).unwrap();
        attach_norms(&mut back, &norms_csv(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(parse_triad_csv("t,E\n1,2\n").is_err());
        let s = vec![sample(0.0), sample(0.1)];
        let text = triad_csv(&s).replace("1.0000000000000001e-1,", "abc,");
        assert!(parse_triad_csv(&text).is_err());
        let rev = triad_csv(&[sample(0.1), sample(0.0)]);
        assert!(parse_triad_csv(&rev).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert!(!dir.path().join("a.csv.tmp").exists());
    }
}
