mod common;

use proptest::prelude::*;

use atf_core::fading::{cdf_h_rd_max, cdf_h_sd, cdf_h_sr, marcum_q, sum_snr_cdf, RicianSumSpec};
use atf_core::{
    analyze, build_transition_matrix, dbm_to_watts, derive_link_gains, stationary_distribution, BatteryGrid, Error,
    SystemParams,
};
use common::{ln_bessel_i, marcum_q_quadrature};

#[test]
fn bessel_reference_values() {
    assert!((ln_bessel_i(0, 1.0).exp() - 1.266_065_877_752_008_4).abs() < 1e-14);
    assert!((ln_bessel_i(1, 2.0).exp() - 1.590_636_854_637_329).abs() < 1e-14);
    assert!((ln_bessel_i(3, 0.5).exp() - 2.645_111_968_990_9e-3).abs() < 1e-15);
}

#[test]
fn quadrature_reproduces_rayleigh_tail() {
    for b in [0.3f64, 1.0, 2.5] {
        let q = marcum_q_quadrature(1, 0.0, b);
        assert!((q - (-0.5 * b * b).exp()).abs() < 1e-12);
    }
}

fn moderate_params() -> impl Strategy<Value = SystemParams> {
    (15.0..40.0f64, 1u32..=6, 2usize..=30, 0.0..15.0f64, 1e-3..2e-2f64).prop_map(|(dbm, n, l, k, c)| SystemParams {
        p_s: dbm_to_watts(dbm),
        antennas: n,
        levels: l,
        k_factor: k,
        capacity: c,
        e_t: c / l as f64,
        ..SystemParams::paper_defaults()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn marcum_matches_quadrature(n in 1u32..=5, a in 0.0..6.0f64, b in 0.05..8.0f64) {
        let lib = marcum_q(n, a, b).unwrap();
        prop_assert!((lib - marcum_q_quadrature(n, a, b)).abs() < 1e-9);
    }

    #[test]
    fn cdfs_are_cdfs(n in 1u32..=8, k in 0.0..20.0f64, omega in 1e-3..2.0f64, x in 0.0..10.0f64, dx in 0.0..5.0f64) {
        let spec = RicianSumSpec::new(n, k, omega).unwrap();
        let cdfs: [&dyn Fn(f64) -> f64; 3] = [
            &|x| cdf_h_sr(&spec, x).unwrap(),
            &|x| cdf_h_sd(omega, x).unwrap(),
            &|x| cdf_h_rd_max(n, omega, x).unwrap(),
        ];
        for f in cdfs {
            prop_assert_eq!(f(0.0), 0.0);
            let (lo, hi) = (f(x), f(x + dx));
            prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
            prop_assert!(hi >= lo - 1e-14);
            prop_assert!(f(1e4 * (1.0 + n as f64) * omega) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn single_rayleigh_antenna_is_exponential(omega in 1e-3..2.0f64, x in 0.0..10.0f64) {
        let spec = RicianSumSpec::new(1, 0.0, omega).unwrap();
        prop_assert!((cdf_h_sr(&spec, x).unwrap() - cdf_h_sd(omega, x).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn sum_snr_cdf_is_monotone(n in 1u32..=8, sd in 0.1..100.0f64, rd in 0.1..100.0f64, g in 0.0..50.0f64, dg in 0.0..10.0f64) {
        let lo = sum_snr_cdf(g, sd, rd, n).unwrap();
        let hi = sum_snr_cdf(g + dg, sd, rd, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi >= lo - 1e-12);
    }

    #[test]
    fn stationary_distribution_invariants(p in moderate_params()) {
        let g = derive_link_gains(&p).unwrap();
        let grid = BatteryGrid::from_params(&p).unwrap();
        let m = build_transition_matrix(&p, &g, &grid).unwrap();
        let t = grid.transmit_index();
        for i in 0..m.size() {
            prop_assert!((m.row_sums()[i] - 1.0).abs() <= 1e-9);
            for j in 0..i {
                if m.get(i, j) != 0.0 {
                    prop_assert_eq!(i - j, t);
                }
            }
        }
        let pi = stationary_distribution(&m).unwrap();
        prop_assert!(pi.probabilities().iter().all(|&v| v >= 0.0));
        prop_assert!((pi.probabilities().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(pi.residual(&m) <= 1e-8);
    }

    #[test]
    fn raising_threshold_never_raises_cooperation(p in moderate_params()) {
        let mut prev = f64::INFINITY;
        for k in 1..=p.levels {
            let q = SystemParams { e_t: p.capacity * k as f64 / p.levels as f64, ..p };
            // a battery that (numerically) never charges past a low level has
            // several absorbing states and no unique P_E
            let a = analyze(&q);
            prop_assume!(!matches!(a, Err(Error::SingularSystem(_))));
            let p_e = a.unwrap().report.p_e;
            prop_assert!(p_e <= prev + 1e-9, "E_T index {}: {} > {}", k, p_e, prev);
            prev = p_e;
        }
    }

    #[test]
    fn report_reassembles(p in moderate_params()) {
        let r = analyze(&p).unwrap().report;
        prop_assert!((r.reassembled() - r.p_out).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.p_out));
    }
}

#[test]
fn outage_falls_with_source_power_on_preset_grid() {
    for n in [2u32, 4, 6] {
        for levels in [10usize, 100] {
            let mut prev = 1.0;
            for dbm in (10..=36).step_by(2) {
                let p = SystemParams {
                    antennas: n,
                    levels,
                    p_s: dbm_to_watts(dbm as f64),
                    ..SystemParams::paper_defaults()
                };
                let v = analyze(&p).unwrap().report.p_out;
                assert!(v <= prev, "N={n} L={levels} at {dbm} dBm: {v} > {prev}");
                prev = v;
            }
        }
    }
}
