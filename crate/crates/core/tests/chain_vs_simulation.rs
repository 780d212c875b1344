//! The discrete-battery simulator and the analytical chain describe the same
//! process; these tests compare them transition by transition.

use atf_core::sim::{run_traced, Mode};
use atf_core::{analyze, dbm_to_watts, BatteryModel, SimConfig, SystemParams};

fn level_of(energy: f64, p: &SystemParams) -> usize {
    (energy / p.capacity * p.levels as f64).round() as usize
}

#[test]
fn empirical_transitions_match_matrix() {
    // low enough power that every level is visited often
    let p = SystemParams { levels: 4, e_t: 2.5e-3, p_s: dbm_to_watts(24.0), ..SystemParams::paper_defaults() };
    let a = analyze(&p).unwrap();
    let cfg = SimConfig { blocks: 1_000_000, warmup: 0, seed: 11, stream: 0, battery_model: BatteryModel::Discrete };

    let states = p.levels + 1;
    let mut counts = vec![vec![0u64; states]; states];
    let mut prev: Option<usize> = None;
    run_traced(&p, &a.gains, &a.grid, &cfg, |rec| {
        let now = level_of(rec.battery, &p);
        if let Some(i) = prev {
            counts[i][now] += 1;
        }
        prev = Some(now);
    })
    .unwrap();

    let mut checked = 0;
    for (i, row) in counts.iter().enumerate() {
        let visits: u64 = row.iter().sum();
        if visits < 5_000 {
            continue;
        }
        for (j, &c) in row.iter().enumerate() {
            let m = a.matrix.get(i, j);
            let emp = c as f64 / visits as f64;
            let se = (m * (1.0 - m) / visits as f64).sqrt();
            assert!((emp - m).abs() <= 4.0 * se + 1e-12, "P[{i}][{j}]: empirical {emp} vs {m} over {visits} visits");
            checked += 1;
        }
    }
    assert!(checked >= 15, "only {checked} entries had enough visits");
}

#[test]
fn cooperation_probability_matches_simulation() {
    for (levels, e_t) in [(10usize, 1e-3), (25, 2e-4)] {
        let p = SystemParams { levels, e_t, p_s: dbm_to_watts(26.0), ..SystemParams::paper_defaults() };
        let a = analyze(&p).unwrap();
        let cfg =
            SimConfig { blocks: 410_000, warmup: 10_000, seed: 5, stream: 0, battery_model: BatteryModel::Discrete };
        // batch means over 1000-block batches absorb the battery's memory
        let mut batches = Vec::new();
        let (mut acc, mut len) = (0u32, 0u32);
        run_traced(&p, &a.gains, &a.grid, &cfg, |rec| {
            if rec.block < cfg.warmup {
                return;
            }
            acc += (rec.mode != Mode::I) as u32;
            len += 1;
            if len == 1000 {
                batches.push(acc as f64 / 1000.0);
                acc = 0;
                len = 0;
            }
        })
        .unwrap();
        let k = batches.len() as f64;
        let mean = batches.iter().sum::<f64>() / k;
        let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let se = (var / k).sqrt();
        assert!(
            (mean - a.report.p_e).abs() <= 3.0 * se,
            "L={levels}: simulated P_E {mean} ± {se}, analytic {}",
            a.report.p_e
        );
    }
}
