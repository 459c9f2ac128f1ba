use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use msrelax::diagnostics::{compute_h, TriadSample};
use msrelax::evolution::linear_solve_exact;
use msrelax::geometry::{build_state, energy, sup_slope};
use msrelax::io::{parse_triad_csv, triad_csv};
use msrelax::spectral::{fractional_operator, interpolation_gap, seminorm, Grid, SpectralProfile};

/// Mean-zero profile on a `2 pi` period from cosine and sine amplitudes.
fn profile(n: usize, amps: &[(f64, f64)]) -> SpectralProfile {
    let grid = Grid::new(2.0 * PI, n).unwrap();
    SpectralProfile::from_fn(grid, |x| {
        amps.iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let k = (i + 1) as f64;
                (a * (k * x).cos() + b * (k * x).sin()) / (k * k)
            })
            .sum()
    })
}

fn amplitudes(max: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-max..max, -max..max), 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seminorm_is_homogeneous(amps in amplitudes(1.0), lambda in -5.0f64..5.0, sigma in -1.0f64..2.5) {
        let p = profile(64, &amps);
        let a = seminorm(&p.scaled(lambda), sigma).unwrap();
        let b = lambda.abs() * seminorm(&p, sigma).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn interpolation_gap_never_exceeds_one(
        amps in amplitudes(1.0), s1 in -1.0f64..2.0, s2 in -1.0f64..2.0, theta in 0.01f64..0.99,
    ) {
        let p = profile(64, &amps);
        prop_assert!(interpolation_gap(&p, s1, s2, theta).unwrap() <= 1.0 + 1e-10);
    }

    #[test]
    fn operators_compose(amps in amplitudes(1.0), a in -1.5f64..1.5, b in -1.5f64..1.5) {
        let p = profile(32, &amps);
        let two = fractional_operator(&fractional_operator(&p, a).unwrap(), b).unwrap();
        let one = fractional_operator(&p, a + b).unwrap();
        let scale = one.max_abs().max(1e-300);
        for (x, y) in two.samples().iter().zip(one.samples()) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn energy_is_bounded_by_quadratic_proxy(amps in amplitudes(0.5)) {
        let p = profile(64, &amps);
        let st = build_state(p.clone());
        let e = energy(&st);
        let quad = 0.5 * st.slope.l2_norm_sq();
        prop_assert!(e >= 0.0);
        prop_assert!(e <= quad * (1.0 + 1e-12));
        prop_assert!(sup_slope(&st) >= 0.0);
    }

    #[test]
    fn distance_scales_with_fourth_power(amps in amplitudes(0.3), lambda in 0.2f64..4.0) {
        let p = profile(64, &amps);
        let h = compute_h(&build_state(p.clone())).unwrap();
        let grid = p.grid().scaled(lambda).unwrap();
        let q = SpectralProfile::from_samples(grid, p.samples().iter().map(|v| lambda * v).collect());
        let hq = compute_h(&build_state(q)).unwrap();
        prop_assert!((hq - lambda.powi(4) * h).abs() <= 1e-9 * lambda.powi(4) * h.max(1e-300));
    }

    #[test]
    fn linear_flow_is_a_semigroup(amps in amplitudes(1.0), t1 in 0.0f64..0.2, t2 in 0.0f64..0.2) {
        let p = profile(32, &amps);
        let two = linear_solve_exact(&linear_solve_exact(&p, t1, 2.0), t2, 2.0);
        let one = linear_solve_exact(&p, t1 + t2, 2.0);
        for (x, y) in two.samples().iter().zip(one.samples()) {
            prop_assert!((x - y).abs() <= 1e-13 * p.max_abs().max(1e-300));
        }
    }

    #[test]
    fn triad_csv_round_trips(rows in prop::collection::vec(prop::array::uniform9(-1e300f64..1e300), 1..20)) {
        let samples: Vec<TriadSample> = rows
            .iter()
            .enumerate()
            .map(|(i, v)| TriadSample {
                t: i as f64 * 0.1,
                e: v[0], d: v[1], h: v[2], hhalf: v[3], sup_slope: v[4],
                sup_h: v[5], e2d: v[6], int_vs2: v[7], curv_l2: v[8],
                aux: None,
            })
            .collect();
        prop_assert_eq!(parse_triad_csv(&triad_csv(&samples)).unwrap(), samples);
    }

    #[test]
    fn coefficients_round_trip(re in prop::collection::vec(-1.0f64..1.0, 15), im in prop::collection::vec(-1.0f64..1.0, 15)) {
        let grid = Grid::new(3.0, 32).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 32];
        for m in 1..16 {
            c[m] = Complex64::new(re[m - 1], im[m - 1]);
            c[32 - m] = c[m].conj();
        }
        let p = SpectralProfile::from_coeffs(grid, &c);
        let back = SpectralProfile::from_samples(grid, p.samples().to_vec());
        for (a, b) in back.coeffs().iter().zip(p.coeffs()) {
            prop_assert!((a - b).norm() < 1e-14);
        }
    }
}
