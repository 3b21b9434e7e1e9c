//! Error exponent of the miss probability.
//!
//! The closed form runs through the steady-state Kalman predictor: the
//! Riccati fixed point `P` gives the innovation variance under H1,
//! `Re = P + sigma2`, and under H0, `Rte`; then
//! `K = 0.5 * (ln(Re / sigma2) + Rte / Re - 1)`.
//!
//! The spectral route integrates the Gaussian relative entropy between
//! white noise and the H1 observation spectrum over frequency. The two are
//! computed independently so either can check the other.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field_model::SampledModel;

/// Correlations above `1 - ONE_MINUS_A_CLAMP` are treated as `a = 1`.
pub const ONE_MINUS_A_CLAMP: f64 = 1e-9;

pub const DEFAULT_QUADRATURE_POINTS: usize = 8192;
pub const MIN_QUADRATURE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Spectral,
}

/// Exponent together with the quantities that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentReport {
    /// Error exponent, nats per sample.
    pub k: f64,
    /// Steady-state one-step prediction-error variance.
    pub p: f64,
    /// Steady-state innovation variance under H1.
    pub re: f64,
    /// Steady-state variance of the H1 predictor's innovations under H0.
    pub rte: f64,
    pub method: Method,
}

#[inline]
fn is_perfectly_correlated(model: &SampledModel) -> bool {
    model.a() > 1.0 - ONE_MINUS_A_CLAMP
}

/// Relative entropy `D(N(0, var0) || N(0, var1))` in nats.
pub fn kl_gaussian(var0: f64, var1: f64) -> Result<f64> {
    if !(var0 > 0.0) || !(var1 > 0.0) {
        return Err(Error::domain(format!(
            "variances must be positive, got {var0} and {var1}"
        )));
    }
    Ok(kl_unchecked(var0, var1))
}

#[inline]
fn kl_unchecked(var0: f64, var1: f64) -> f64 {
    let ratio = var0 / var1;
    0.5 * (ratio - 1.0 - ratio.ln())
}

/// Steady-state prediction-error variance: the nonnegative root of
/// `P = a^2 P sigma2 / (P + sigma2) + Q`.
pub fn riccati_steady_state(model: &SampledModel) -> f64 {
    if is_perfectly_correlated(model) {
        return 0.0;
    }
    let a = model.a();
    let s2 = model.sigma2();
    let q = model.q();
    let b = s2 * (1.0 - a) * (1.0 + a) - q;
    let d = (b * b + 4.0 * s2 * q).sqrt();
    if b > 0.0 {
        // rationalized to avoid cancellation in d - b
        2.0 * s2 * q / (d + b)
    } else {
        0.5 * (d - b)
    }
}

/// One application of the prediction-error Riccati map.
#[inline]
pub fn riccati_map(model: &SampledModel, p: f64) -> f64 {
    let a2 = model.a() * model.a();
    let s2 = model.sigma2();
    a2 * p * s2 / (p + s2) + model.q()
}

/// `|P - map(P)|` relative to `P` (absolute when `P == 0`).
pub fn riccati_residual(model: &SampledModel, p: f64) -> f64 {
    let r = (p - riccati_map(model, p)).abs();
    if p > 0.0 {
        r / p
    } else {
        r
    }
}

/// Fixed point of the Riccati map by plain iteration from `P0 = Pi0`,
/// stopping once the relative change drops below `tol`.
///
/// For `a` within [`ONE_MINUS_A_CLAMP`] of one the iteration only decays
/// harmonically to zero, so the limit is returned directly.
pub fn riccati_iterate(model: &SampledModel, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if is_perfectly_correlated(model) {
        return Ok(0.0);
    }
    let mut p = model.pi0();
    for _ in 0..max_iter {
        let next = riccati_map(model, p);
        if (next - p).abs() <= tol * next {
            return Ok(next);
        }
        p = next;
    }
    Err(Error::numeric(
        format!("Riccati iteration did not converge in {max_iter} steps"),
        Some(p),
    ))
}

/// Steady-state innovation variances `(Re, Rte)` under H1 and H0.
pub fn innovation_variances(model: &SampledModel) -> (f64, f64) {
    let s2 = model.sigma2();
    if is_perfectly_correlated(model) {
        return (s2, s2);
    }
    let p = riccati_steady_state(model);
    innovation_variances_at(model, p)
}

fn innovation_variances_at(model: &SampledModel, p: f64) -> (f64, f64) {
    let a = model.a();
    let s2 = model.sigma2();
    let re = p + s2;
    let denom = p * p + 2.0 * s2 * p + (1.0 - a) * (1.0 + a) * s2 * s2;
    let rte = s2 * (1.0 + a * a * p * p / denom);
    (re, rte)
}

/// Closed-form error exponent.
pub fn error_exponent(model: &SampledModel) -> ExponentReport {
    let s2 = model.sigma2();
    if is_perfectly_correlated(model) {
        return ExponentReport {
            k: 0.0,
            p: 0.0,
            re: s2,
            rte: s2,
            method: Method::ClosedForm,
        };
    }
    let p = riccati_steady_state(model);
    let (re, rte) = innovation_variances_at(model, p);
    let k = 0.5 * ((re / s2).ln() + rte / re - 1.0);
    ExponentReport {
        k: k.max(0.0),
        p,
        re,
        rte,
        method: Method::ClosedForm,
    }
}

/// Observation spectrum under H1:
/// `S(w) = sigma2 + Pi0 (1 - a^2) / (1 - 2 a cos w + a^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    a: f64,
    q: f64,
    sigma2: f64,
}

impl SpectralDensity {
    pub fn new(model: &SampledModel) -> Self {
        Self {
            a: model.a(),
            q: model.q(),
            sigma2: model.sigma2(),
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if self.q == 0.0 {
            return self.sigma2;
        }
        let half = (0.5 * omega).sin();
        // 1 - 2a cos w + a^2 written as (1-a)^2 + 4a sin^2(w/2)
        let denom = (1.0 - self.a).powi(2) + 4.0 * self.a * half * half;
        self.sigma2 + self.q / denom
    }

    /// `(1/2pi) * integral of S over [0, 2pi)`, by Simpson's rule.
    pub fn mean_power(&self, points: usize) -> f64 {
        simpson(|w| self.eval(w), 0.0, PI, points) / PI
    }
}

/// Composite Simpson rule with `intervals` rounded up to an even count.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = (hi - lo) / m as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for j in 1..m {
        let v = f(lo + j as f64 * h);
        if j % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(lo) + f(hi) + 4.0 * odd + 2.0 * even)
}

/// Error exponent as the frequency average of
/// `D(N(0, sigma2) || N(0, S(w)))`.
///
/// The integrand is symmetric about `pi`, so Simpson's rule runs over
/// `[0, pi]` with `quadrature_points` intervals. `P`, `Re` and `Rte` in the
/// report come from the closed-form path.
pub fn error_exponent_spectral(
    model: &SampledModel,
    quadrature_points: usize,
) -> Result<ExponentReport> {
    if quadrature_points < MIN_QUADRATURE_POINTS {
        return Err(Error::domain(format!(
            "need at least {MIN_QUADRATURE_POINTS} quadrature points, got {quadrature_points}"
        )));
    }
    let density = SpectralDensity::new(model);
    let s2 = model.sigma2();
    let k = simpson(
        |w| kl_unchecked(s2, density.eval(w)),
        0.0,
        PI,
        quadrature_points,
    ) / PI;
    let closed = error_exponent(model);
    Ok(ExponentReport {
        k,
        method: Method::Spectral,
        ..closed
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    fn model(a: f64, pi0: f64, s2: f64) -> SampledModel {
        SampledModel::new(a, pi0, s2).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_gaussian(1.0, 1.0).unwrap(), 0.0);
        let half_ln2 = 0.5 * std::f64::consts::LN_2;
        assert!(rel(kl_gaussian(1.0, 2.0).unwrap(), half_ln2 - 0.25) < 1e-14);
        assert!(rel(kl_gaussian(2.0, 1.0).unwrap(), 0.5 * (1.0 - std::f64::consts::LN_2)) < 1e-14);
        assert!(kl_gaussian(0.0, 1.0).is_err());
        assert!(kl_gaussian(1.0, -1.0).is_err());
    }

    #[test]
    fn riccati_examples() {
        assert!(rel(riccati_steady_state(&model(0.0, 1.0, 1.0)), 1.0) < 1e-15);
        assert!(rel(riccati_steady_state(&model(0.5, 1.0, 1.0)), SQRT3 / 2.0) < 1e-15);
        assert_eq!(riccati_steady_state(&model(1.0, 1.0, 1.0)), 0.0);
    }

    #[test]
    fn riccati_iterate_examples() {
        let p = riccati_iterate(&model(0.5, 1.0, 1.0), 1e-12, 10_000).unwrap();
        assert!(rel(p, SQRT3 / 2.0) < 1e-11);
        // a = 0: P0 = Pi0 is already the fixed point
        assert_eq!(riccati_iterate(&model(0.0, 1.0, 1.0), 1e-12, 1).unwrap(), 1.0);
        assert_eq!(riccati_iterate(&model(1.0, 2.0, 1.0), 1e-12, 10).unwrap(), 0.0);
    }

    #[test]
    fn riccati_iterate_reports_last_iterate() {
        match riccati_iterate(&model(0.99, 0.01, 1.0), 1e-15, 3) {
            Err(Error::Numeric { last: Some(p), .. }) => assert!(p > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
        assert!(riccati_iterate(&model(0.5, 1.0, 1.0), 0.0, 10).is_err());
    }

    #[test]
    fn innovation_variance_examples() {
        assert_eq!(innovation_variances(&model(0.0, 1.0, 1.0)), (2.0, 1.0));
        assert_eq!(innovation_variances(&model(1.0, 1.0, 1.0)), (1.0, 1.0));
        let (re, rte) = innovation_variances(&model(0.5, 1.0, 1.0));
        assert!(rel(re, 1.0 + SQRT3 / 2.0) < 1e-15);
        // P^2 = 3/4, 2 sigma2 P = sqrt3, (1-a^2) sigma^4 = 3/4
        let expected_rte = 1.0 + 0.25 * 0.75 / (1.5 + SQRT3);
        assert!(rel(rte, expected_rte) < 1e-15);
        assert!(rel(rte, 1.058_012_701_892_219_3) < 1e-12);
    }

    #[test]
    fn exponent_examples() {
        let iid = error_exponent(&model(0.0, 1.0, 1.0));
        assert!(rel(iid.k, kl_gaussian(1.0, 2.0).unwrap()) < 1e-14);
        assert!(rel(iid.k, 0.096_573_590_279_972_7) < 1e-12);
        for (pi0, s2) in [(1.0, 1.0), (10.0, 0.5), (0.01, 3.0)] {
            assert_eq!(error_exponent(&model(1.0, pi0, s2)).k, 0.0);
        }
        let mid = error_exponent(&model(0.5, 1.0, 1.0));
        let re = 1.0 + SQRT3 / 2.0;
        let rte = 1.0 + 0.25 * 0.75 / (1.5 + SQRT3);
        let chained = -0.5 * (1.0 / re).ln() + 0.5 * rte / re - 0.5;
        assert!(rel(mid.k, chained) < 1e-14);
        assert!(rel(mid.k, 0.095_399_007_236_326) < 1e-12);
        assert_eq!(mid.method, Method::ClosedForm);
    }

    #[test]
    fn spectral_examples() {
        let iid = error_exponent_spectral(&model(0.0, 1.0, 1.0), 64).unwrap();
        assert!(rel(iid.k, 0.096_573_590_279_972_7) < 1e-14);
        let flat = error_exponent_spectral(&model(1.0, 1.0, 1.0), 4096).unwrap();
        assert!(flat.k.abs() <= 1e-9);
        let mid = error_exponent_spectral(&model(0.5, 1.0, 1.0), 4096).unwrap();
        assert!((mid.k - error_exponent(&model(0.5, 1.0, 1.0)).k).abs() < 1e-12);
        assert_eq!(mid.method, Method::Spectral);
        assert!(error_exponent_spectral(&model(0.5, 1.0, 1.0), 63).is_err());
    }

    #[test]
    fn spectral_report_carries_closed_form_variances() {
        let m = model(0.3, 2.0, 0.7);
        let c = error_exponent(&m);
        let s = error_exponent_spectral(&m, 1024).unwrap();
        assert_eq!((c.p, c.re, c.rte), (s.p, s.re, s.rte));
    }

    #[test]
    fn clamp_near_one() {
        let m = model(1.0 - 1e-10, 1.0, 1.0);
        let r = error_exponent(&m);
        assert_eq!((r.k, r.p), (0.0, 0.0));
        assert!(error_exponent(&model(1.0 - 1e-6, 1.0, 1.0)).k > 0.0);
    }

    #[test]
    fn density_bounds_and_symmetry() {
        let d = SpectralDensity::new(&model(0.9, 2.0, 0.5));
        for j in 0..200 {
            let w = j as f64 * PI / 200.0;
            assert!(d.eval(w) >= 0.5);
            assert!(rel(d.eval(w), d.eval(2.0 * PI - w)) < 1e-12);
        }
    }
}
