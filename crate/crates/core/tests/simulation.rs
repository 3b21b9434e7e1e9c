//! Monte Carlo behaviour: reproducibility, size control, and agreement with
//! exact finite-n miss probabilities where those are available.

use corrdetect::detector::{min_calibration_trials, perfect_corr_miss};
use corrdetect::montecarlo::{
    estimate_miss, estimate_perfect_corr_miss, estimate_slope, linear_fit,
};
use corrdetect::SampledModel;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Exact miss probability for i.i.d. samples (a = 0): the LLR is increasing
/// in sum y^2, so both error probabilities are chi-square tails.
fn exact_iid_miss(gamma: f64, n: usize, alpha: f64) -> f64 {
    let chi = ChiSquared::new(n as f64).unwrap();
    let t = chi.inverse_cdf(1.0 - alpha);
    chi.cdf(t / (1.0 + gamma))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let m = SampledModel::from_snr(0.5, 2.0, 1.0).unwrap();
    let one = in_pool(1, || estimate_miss(&m, 12, 0.01, 10_000, 4_000, 21).unwrap());
    let three = in_pool(3, || estimate_miss(&m, 12, 0.01, 10_000, 4_000, 21).unwrap());
    assert_eq!(one, three);
    assert_eq!(one.threshold.to_bits(), three.threshold.to_bits());
}

#[test]
fn held_out_false_alarm_tracks_size() {
    for a in [0.0, 0.5, 0.9] {
        for n in [5, 20] {
            for alpha in [0.01, 0.1] {
                let m = SampledModel::from_snr(a, 1.0, 1.0).unwrap();
                let h0 = 4 * min_calibration_trials(alpha);
                let est = estimate_miss(&m, n, alpha, h0, 1000, 3).unwrap();
                let se = (alpha * (1.0 - alpha) / h0 as f64).sqrt();
                // the held-out rate also inherits the calibration quantile's noise
                let band = 3.0 * (2.0f64).sqrt() * se;
                assert!(
                    (est.false_alarm - alpha).abs() < band,
                    "a={a} n={n} alpha={alpha}: {}",
                    est.false_alarm
                );
            }
        }
    }
}

#[test]
fn iid_miss_matches_chi_square() {
    let gamma = 1.0;
    let alpha = 0.01;
    let m = SampledModel::from_snr(0.0, gamma, 1.0).unwrap();
    for n in [5, 20, 40] {
        let est = estimate_miss(&m, n, alpha, 100_000, 20_000, 8).unwrap();
        let exact = exact_iid_miss(gamma, n, alpha);
        // binomial noise plus threshold-calibration noise
        assert!(
            (est.p_miss - exact).abs() < 4.0 * est.stderr + 0.05 * exact,
            "n={n}: {} vs {exact}",
            est.p_miss
        );
    }
}

#[test]
fn ten_db_anchor_order_of_magnitude() {
    let m = SampledModel::from_snr(0.0, 10.0, 1.0).unwrap();
    let est = estimate_miss(&m, 20, 0.001, 100_000, 200_000, 1).unwrap();
    assert!(est.p_miss > 1e-5 && est.p_miss < 1e-3, "{}", est.p_miss);
}

#[test]
fn minus_three_db_stays_above_one_percent_at_200_sensors() {
    let gamma = 10f64.powf(-0.3);
    let a_m = corrdetect::scheduler::optimal_correlation(gamma, 1e-12).unwrap();
    let m = SampledModel::from_snr(a_m, gamma, 1.0).unwrap();
    let est = estimate_miss(&m, 200, 0.001, 100_000, 2_000, 4).unwrap();
    assert!(est.p_miss > 1e-2, "{}", est.p_miss);
}

#[test]
fn slope_tracks_exact_finite_n_curve() {
    // i.i.d. at 0 dB over n = 25..100: compare against the exact chi-square curve
    let gamma = 1.0;
    let alpha = 0.001;
    let ns = [25, 50, 75, 100];
    let m = SampledModel::from_snr(0.0, gamma, 1.0).unwrap();
    let fit = estimate_slope(&m, &ns, alpha, 20_000, 6).unwrap();
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = ns.iter().map(|&n| exact_iid_miss(gamma, n, alpha).ln()).collect();
    let (exact_slope, _, _) = linear_fit(&x, &y);
    assert!(
        ((fit.slope - exact_slope) / exact_slope).abs() < 0.1,
        "{} vs {exact_slope}",
        fit.slope
    );
    assert!(fit.r_squared > 0.95 && fit.r_squared <= 1.0);
    assert_eq!(fit.log_pm.len(), 4);
}

#[test]
fn weaker_correlation_decays_faster_at_high_snr() {
    let ns = [2, 4, 6, 8];
    let slope = |a: f64| {
        let m = SampledModel::from_snr(a, 10.0, 1.0).unwrap();
        estimate_slope(&m, &ns, 0.001, 20_000, 2).unwrap().slope
    };
    let iid = slope(0.0);
    let strong = slope(0.9);
    assert!(iid < strong, "{iid} vs {strong}");
}

#[test]
fn perfectly_correlated_detector_matches_closed_form() {
    for n in [1, 10, 50] {
        let est = estimate_perfect_corr_miss(1.0, 1.0, n, 0.05, 50_000, 10).unwrap();
        let exact = perfect_corr_miss(1.0, 1.0, n, 0.05).unwrap();
        assert!((est.p_miss - exact).abs() < 3.0 * est.stderr, "n={n}");
    }
}

#[test]
fn slope_fit_rejects_sparse_misses() {
    let m = SampledModel::from_snr(0.0, 10.0, 1.0).unwrap();
    assert!(estimate_slope(&m, &[10, 15, 20], 0.001, 2_000, 0).is_err());
}
