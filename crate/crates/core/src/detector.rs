//! Neyman-Pearson detectors.
//!
//! For `a < 1` the log-likelihood ratio is accumulated from the innovations
//! of the H1 Kalman predictor: under H1 the observations factor into
//! `N(e_i; 0, R_i)` terms, under H0 into white `N(y_i; 0, sigma2)` terms.
//! For `a = 1` the signal is a single Gaussian level and the optimal test
//! thresholds `|sum y_i|`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field_model::SampledModel;
use crate::montecarlo::{fill_path, Hypothesis};
use crate::normal::{q_function, try_q_inverse};
use crate::rng::{CounterRng, Stream};

/// Per-sample view of one log-likelihood ratio evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBreakdown {
    /// `ln p1(y) - ln p0(y)`, nats.
    pub llr: f64,
    /// Innovations `e_i = y_i - E[y_i | y_1..y_{i-1}]` under H1.
    pub innovations: Vec<f64>,
    /// Their variances `R_i`.
    pub innovation_vars: Vec<f64>,
    pub n: usize,
}

fn check_filterable(model: &SampledModel) -> Result<()> {
    if model.a() >= 1.0 {
        return Err(Error::domain(
            "the innovations likelihood needs a < 1; use PerfectCorrDetector for a = 1",
        ));
    }
    Ok(())
}

/// Runs the predictor over `y`, calling `visit(e_i, R_i)` per sample, and
/// returns the log-likelihood ratio.
#[inline]
fn filter_llr(y: &[f64], model: &SampledModel, mut visit: impl FnMut(f64, f64)) -> f64 {
    let a = model.a();
    let q = model.q();
    let s2 = model.sigma2();
    let mut x_pred = 0.0;
    let mut p_pred = model.pi0();
    let mut llr = 0.0;
    for &yi in y {
        let r = p_pred + s2;
        let e = yi - x_pred;
        llr += 0.5 * (s2 / r).ln() + yi * yi / (2.0 * s2) - e * e / (2.0 * r);
        visit(e, r);
        let gain = p_pred / r;
        let x_filt = x_pred + gain * e;
        let p_filt = p_pred * s2 / r;
        x_pred = a * x_filt;
        p_pred = a * a * p_filt + q;
    }
    llr
}

/// Log-likelihood ratio without the per-sample breakdown.
pub(crate) fn llr_value(y: &[f64], model: &SampledModel) -> f64 {
    filter_llr(y, model, |_, _| {})
}

/// Exact log-likelihood ratio of H1 (AR(1) signal plus noise) against H0
/// (noise only) via Kalman innovations.
pub fn kalman_llr(y: &[f64], model: &SampledModel) -> Result<LlrBreakdown> {
    check_filterable(model)?;
    if y.is_empty() {
        return Err(Error::domain("empty observation sequence"));
    }
    let mut innovations = Vec::with_capacity(y.len());
    let mut innovation_vars = Vec::with_capacity(y.len());
    let llr = filter_llr(y, model, |e, r| {
        innovations.push(e);
        innovation_vars.push(r);
    });
    Ok(LlrBreakdown {
        llr,
        innovations,
        innovation_vars,
        n: y.len(),
    })
}

/// Sample quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
pub fn interpolated_quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("size must lie in (0, 1), got {alpha}")))
    }
}

/// Smallest H0 trial count accepted for size `alpha`.
pub fn min_calibration_trials(alpha: f64) -> usize {
    (100.0 / alpha - 1e-9).ceil() as usize
}

/// LLRs of `trials` H0 paths drawn from `stream`, in trial order.
pub(crate) fn h0_llrs(
    model: &SampledModel,
    n: usize,
    trials: usize,
    seed: u64,
    stream: Stream,
) -> Vec<f64> {
    (0..trials as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, t| {
                let rng = CounterRng::new(seed, stream, t);
                fill_path(model, Hypothesis::H0, &rng, buf);
                llr_value(buf, model)
            },
        )
        .collect()
}

/// Threshold on the log-likelihood ratio giving size `alpha` at `n` samples:
/// the empirical `(1 - alpha)`-quantile of the LLR over `trials` seeded H0
/// paths.
pub fn calibrate_threshold(
    model: &SampledModel,
    n: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_filterable(model)?;
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    let needed = min_calibration_trials(alpha);
    if trials < needed {
        return Err(Error::domain(format!(
            "size {alpha} needs at least {needed} calibration trials, got {trials}"
        )));
    }
    let mut llrs = h0_llrs(model, n, trials, seed, Stream::Calibration);
    llrs.sort_unstable_by(f64::total_cmp);
    Ok(interpolated_quantile(&llrs, 1.0 - alpha))
}

/// Optimal size-`alpha` test for a perfectly correlated signal: decide H1
/// when `|sum y_i| >= z_n`, `z_n = sqrt(n) sigma Q^-1(alpha / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfectCorrDetector {
    pub alpha: f64,
    pub n: usize,
    pub z_n: f64,
}

impl PerfectCorrDetector {
    pub fn new(sigma2: f64, n: usize, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if n == 0 {
            return Err(Error::domain("sample count must be at least 1"));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::domain(format!("noise variance must be positive, got {sigma2}")));
        }
        let z_n = (n as f64).sqrt() * sigma2.sqrt() * try_q_inverse(0.5 * alpha)?;
        Ok(Self { alpha, n, z_n })
    }

    /// Sufficient statistic `T = (sum y_i)^2`.
    pub fn statistic(y: &[f64]) -> f64 {
        let s: f64 = y.iter().sum();
        s * s
    }

    /// `true` means H1.
    pub fn decide(&self, y: &[f64]) -> bool {
        y.iter().sum::<f64>().abs() >= self.z_n
    }
}

/// Miss probability of [`PerfectCorrDetector`] under a perfectly
/// correlated signal, where `sum y_i ~ N(0, n^2 Pi0 + n sigma2)`.
pub fn perfect_corr_miss(pi0: f64, sigma2: f64, n: usize, alpha: f64) -> Result<f64> {
    if !(pi0 > 0.0) {
        return Err(Error::domain(format!("signal variance must be positive, got {pi0}")));
    }
    let det = PerfectCorrDetector::new(sigma2, n, alpha)?;
    let nf = n as f64;
    let spread = (nf * nf * pi0 + nf * sigma2).sqrt();
    Ok(1.0 - 2.0 * q_function(det.z_n / spread))
}
