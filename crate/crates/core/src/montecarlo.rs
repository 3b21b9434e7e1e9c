//! Monte Carlo simulation of the detector.
//!
//! Every trial regenerates its own path from `(seed, stream, trial)`, so
//! results depend only on inputs and seed, never on the number of worker
//! threads. Counts are reduced with integer sums.

use rayon::prelude::*;

use crate::detector::{
    calibrate_threshold, check_alpha, h0_llrs, llr_value, min_calibration_trials,
    PerfectCorrDetector,
};
use crate::error::{Error, Result};
use crate::field_model::SampledModel;
use crate::rng::{CounterRng, Stream};

/// Minimum H1 trial count for a miss estimate.
pub const MIN_H1_TRIALS: usize = 1000;
/// Minimum miss count per point in a slope fit.
pub const MIN_MISSES_FOR_SLOPE: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Fills `out` with one observation path.
///
/// Counter `2i` drives the signal increment at step `i`, counter `2i + 1`
/// the sensor noise, so an H0 path is the noise component of the H1 path
/// with the same key.
pub fn fill_path(model: &SampledModel, hypothesis: Hypothesis, rng: &CounterRng, out: &mut [f64]) {
    fill_components(model, hypothesis, rng, out, |_, _| {});
}

fn fill_components(
    model: &SampledModel,
    hypothesis: Hypothesis,
    rng: &CounterRng,
    out: &mut [f64],
    mut signal: impl FnMut(usize, f64),
) {
    let sigma = model.sigma2().sqrt();
    match hypothesis {
        Hypothesis::H0 => {
            for (i, y) in out.iter_mut().enumerate() {
                *y = sigma * rng.gaussian_at(2 * i as u64 + 1);
            }
        }
        Hypothesis::H1 => {
            let a = model.a();
            let drive = model.q().sqrt();
            let mut s = 0.0;
            for (i, y) in out.iter_mut().enumerate() {
                let z = rng.gaussian_at(2 * i as u64);
                s = if i == 0 {
                    model.pi0().sqrt() * z
                } else {
                    a * s + drive * z
                };
                signal(i, s);
                *y = s + sigma * rng.gaussian_at(2 * i as u64 + 1);
            }
        }
    }
}

/// One observation path of length `n` under `hypothesis`.
pub fn generate_path(
    model: &SampledModel,
    n: usize,
    hypothesis: Hypothesis,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("path length must be at least 1"));
    }
    let rng = CounterRng::new(seed, Stream::Other(0), 0);
    let mut out = vec![0.0; n];
    fill_path(model, hypothesis, &rng, &mut out);
    Ok(out)
}

/// H1 path together with its hidden signal component `(s, y)`.
pub fn generate_signal_and_path(
    model: &SampledModel,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::domain("path length must be at least 1"));
    }
    let rng = CounterRng::new(seed, Stream::Other(0), 0);
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    fill_components(model, Hypothesis::H1, &rng, &mut y, |i, v| s[i] = v);
    Ok((s, y))
}

/// Monte Carlo miss probability at fixed size.
#[derive(Debug, Clone, PartialEq)]
pub struct MissEstimate {
    pub p_miss: f64,
    pub n: usize,
    /// H1 trials.
    pub trials: usize,
    /// Binomial standard error of `p_miss`.
    pub stderr: f64,
    /// LLR threshold (nats); for the perfectly correlated detector, `z_n`.
    pub threshold: f64,
    pub seed: u64,
    /// False-alarm rate on held-out H0 paths (the nominal size when the
    /// threshold is analytic).
    pub false_alarm: f64,
    pub trials_h0: usize,
}

fn binomial_stderr(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

fn zero_miss_error(n: usize, trials: usize) -> Error {
    Error::numeric(
        format!(
            "no misses in {trials} H1 trials at n = {n}; the miss probability is below \
             Monte Carlo resolution, increase the trial count or reduce n"
        ),
        Some(0.0),
    )
}

/// Calibrates the threshold on H0 paths, counts H1 paths whose LLR falls
/// below it, and checks the size on a held-out H0 set.
pub fn estimate_miss(
    model: &SampledModel,
    n: usize,
    alpha: f64,
    trials_h0: usize,
    trials_h1: usize,
    seed: u64,
) -> Result<MissEstimate> {
    check_alpha(alpha)?;
    if model.a() >= 1.0 {
        return Err(Error::domain(
            "a = 1 has no innovations likelihood; use estimate_perfect_corr_miss",
        ));
    }
    if n == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    if trials_h1 < MIN_H1_TRIALS {
        return Err(Error::domain(format!(
            "need at least {MIN_H1_TRIALS} H1 trials, got {trials_h1}"
        )));
    }
    if trials_h0 < min_calibration_trials(alpha) {
        return Err(Error::domain(format!(
            "size {alpha} needs at least {} H0 trials, got {trials_h0}",
            min_calibration_trials(alpha)
        )));
    }
    let threshold = calibrate_threshold(model, n, alpha, trials_h0, seed)?;

    let misses: u64 = (0..trials_h1 as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, t| {
                let rng = CounterRng::new(seed, Stream::Alternative, t);
                fill_path(model, Hypothesis::H1, &rng, buf);
                u64::from(llr_value(buf, model) < threshold)
            },
        )
        .sum();
    if misses == 0 {
        return Err(zero_miss_error(n, trials_h1));
    }

    let alarms = h0_llrs(model, n, trials_h0, seed, Stream::HeldOut)
        .into_iter()
        .filter(|&l| l >= threshold)
        .count();

    let p_miss = misses as f64 / trials_h1 as f64;
    Ok(MissEstimate {
        p_miss,
        n,
        trials: trials_h1,
        stderr: binomial_stderr(p_miss, trials_h1),
        threshold,
        seed,
        false_alarm: alarms as f64 / trials_h0 as f64,
        trials_h0,
    })
}

/// Miss rate of [`PerfectCorrDetector`] on simulated `a = 1` paths.
pub fn estimate_perfect_corr_miss(
    pi0: f64,
    sigma2: f64,
    n: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<MissEstimate> {
    let model = SampledModel::new(1.0, pi0, sigma2)?;
    let detector = PerfectCorrDetector::new(sigma2, n, alpha)?;
    if trials < MIN_H1_TRIALS {
        return Err(Error::domain(format!(
            "need at least {MIN_H1_TRIALS} H1 trials, got {trials}"
        )));
    }
    let misses: u64 = (0..trials as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, t| {
                let rng = CounterRng::new(seed, Stream::Alternative, t);
                fill_path(&model, Hypothesis::H1, &rng, buf);
                u64::from(!detector.decide(buf))
            },
        )
        .sum();
    if misses == 0 {
        return Err(zero_miss_error(n, trials));
    }
    let p_miss = misses as f64 / trials as f64;
    Ok(MissEstimate {
        p_miss,
        n,
        trials,
        stderr: binomial_stderr(p_miss, trials),
        threshold: detector.z_n,
        seed,
        false_alarm: alpha,
        trials_h0: 0,
    })
}

/// Least-squares fit of `ln P_M` against `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimate {
    /// Nats per sample; estimates `-K`.
    pub slope: f64,
    pub intercept: f64,
    pub n_values: Vec<usize>,
    pub log_pm: Vec<f64>,
    pub r_squared: f64,
    pub estimates: Vec<MissEstimate>,
}

/// Ordinary least squares `y = intercept + slope * x`, returning
/// `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r_squared)
}

/// Empirical exponent: the slope of `ln P_M` against `n`.
///
/// Uses `trials` H1 paths and the minimum admissible number of H0 paths
/// (`ceil(100 / alpha)`) at each `n`. Every point must record at least
/// [`MIN_MISSES_FOR_SLOPE`] misses.
pub fn estimate_slope(
    model: &SampledModel,
    n_values: &[usize],
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<SlopeEstimate> {
    let mut distinct = n_values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::domain("a slope fit needs at least 3 distinct sample counts"));
    }
    let trials_h0 = min_calibration_trials(alpha);
    let mut estimates = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let est = estimate_miss(model, n, alpha, trials_h0, trials, seed)?;
        let misses = (est.p_miss * trials as f64).round() as u64;
        if misses < MIN_MISSES_FOR_SLOPE {
            return Err(Error::numeric(
                format!(
                    "only {misses} misses at n = {n}; a slope fit needs at least \
                     {MIN_MISSES_FOR_SLOPE} per point, increase the trial count"
                ),
                Some(est.p_miss),
            ));
        }
        estimates.push(est);
    }
    let x: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    let log_pm: Vec<f64> = estimates.iter().map(|e| e.p_miss.ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&x, &log_pm);
    Ok(SlopeEstimate {
        slope,
        intercept,
        n_values: n_values.to_vec(),
        log_pm,
        r_squared,
        estimates,
    })
}
