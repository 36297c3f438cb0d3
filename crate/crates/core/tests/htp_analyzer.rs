use htplab_core::families::{werner, WernerParams};
use htplab_core::fef::{fef_auto, FefOptions};
use htplab_core::filter::{apply_filter, werner_filter};
use htplab_core::htp::*;

#[test]
fn werner_htp_interval_is_exact() {
    let tol = Tolerances::default();
    for d in 3..=5 {
        let v_cr = werner_vcr(d);
        for k in 0..=100 {
            let v = k as f64 * 0.01;
            if (v - v_cr).abs() <= 1e-9 {
                continue;
            }
            let spec = StateSpec::Werner(WernerParams::new(d, v).unwrap());
            let verdict = htp_check(&spec, &FilterStrategy::Named, &tol).unwrap();
            assert_eq!(verdict.has_htp, v < v_cr, "d={d} v={v}");
            assert!(verdict.useless_before);
        }
    }
}

#[test]
fn gain_falls_while_probability_rises() {
    for d in 3..=5 {
        let v_cr = werner_vcr(d);
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).filter(|&v| v < v_cr).collect();
        let rows = werner_sweep(d, &grid, None).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].delta_f < w[0].delta_f, "d={d} v={}", w[1].param);
            assert!(w[1].p_success > w[0].p_success, "d={d} v={}", w[1].param);
        }
    }
}

#[test]
fn filtered_werner_is_useful_at_every_smaller_dimension() {
    let opts = FefOptions::default();
    for d in 3..=5 {
        for &v in &[0.0, 0.1, 0.2, werner_vcr(d) - 0.01] {
            let out = apply_filter(&werner(WernerParams::new(d, v).unwrap()), &werner_filter(d).unwrap()).unwrap();
            for d2 in 2..=5 {
                let embedded = out.filtered.resize_local(d2, d2).unwrap();
                let f = fef_auto(&embedded, &opts).unwrap().value;
                assert!(f > 1.0 / d2 as f64 - 1e-6, "d={d} v={v} d'={d2}: {f}");
            }
        }
    }
}

#[test]
fn rank2_always_useful_from_four() {
    let grid: Vec<f64> = (1..=19).map(|k| k as f64 * 0.05).collect();
    for d in 4..=5 {
        for row in rank2_sweep(d, &grid, None).unwrap() {
            assert!(row.f_before > 1.0 / d as f64, "d={d} q={}", row.param);
        }
    }
}

#[test]
fn sweep_rows_satisfy_delta_identity() {
    let grid: Vec<f64> = (1..=14).map(|k| k as f64 / 15.0).collect();
    for row in rank2_sweep(2, &grid, None).unwrap().iter().chain(&werner_sweep(3, &grid, None).unwrap()) {
        assert!((row.delta_f - (row.f_after_named - row.f_before)).abs() <= 1e-12);
    }
}

#[test]
fn optimized_strategy_matches_named_on_werner() {
    let spec = StateSpec::Werner(WernerParams::new(3, 0.3).unwrap());
    let opts = htplab_core::filter::OptimizeOptions {
        sides: default_sides(&spec),
        restarts: 8,
        ..Default::default()
    };
    let verdict = htp_check(&spec, &FilterStrategy::Optimized(opts), &Tolerances::default()).unwrap();
    assert!(verdict.has_htp);
}
