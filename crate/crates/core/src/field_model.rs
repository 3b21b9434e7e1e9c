//! Continuous diffusion field and its sampling at uniform spacing.
//!
//! The field obeys `ds/dx = -A s + B u` with white `u`, started in its
//! stationary law `s(0) ~ N(0, Pi0)`, `Pi0 = B^2 / (2A)`. Sampling at spacing
//! `delta` yields the AR(1) recursion `s_{i+1} = a s_i + u_i` with
//! `a = exp(-A delta)` and `Var(u_i) = Pi0 (1 - a^2)`.

use crate::error::{Error, Result};

/// Stationary variance `B^2 / (2A)` of the diffusion.
pub fn stationary_variance(drift: f64, gain: f64) -> Result<f64> {
    if !(drift > 0.0) || !drift.is_finite() {
        return Err(Error::domain(format!(
            "no stationary solution for drift rate A = {drift}"
        )));
    }
    if !gain.is_finite() || gain == 0.0 {
        return Err(Error::domain(format!("input gain B must be finite and nonzero, got {gain}")));
    }
    Ok(gain * gain / (2.0 * drift))
}

fn check_noise(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("noise variance must be positive, got {sigma2}")))
    }
}

fn check_signal(pi0: f64) -> Result<()> {
    if pi0 > 0.0 && pi0.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("signal variance must be positive, got {pi0}")))
    }
}

/// Physical field parameters: drift rate `A`, input gain `B`, stationary
/// variance `Pi0` and sensor noise variance `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionField {
    drift: f64,
    gain: f64,
    pi0: f64,
    sigma2: f64,
}

impl DiffusionField {
    /// Field specified by its dynamics; `Pi0` follows from stationarity.
    pub fn from_dynamics(drift: f64, gain: f64, sigma2: f64) -> Result<Self> {
        let pi0 = stationary_variance(drift, gain)?;
        check_noise(sigma2)?;
        Ok(Self { drift, gain, pi0, sigma2 })
    }

    /// Field specified by drift rate and stationary variance. `A = 0` is
    /// allowed and describes a spatially constant field (`B = 0`).
    pub fn new(drift: f64, pi0: f64, sigma2: f64) -> Result<Self> {
        if !(drift >= 0.0) || !drift.is_finite() {
            return Err(Error::domain(format!("drift rate must be >= 0, got {drift}")));
        }
        check_signal(pi0)?;
        check_noise(sigma2)?;
        let gain = (2.0 * drift * pi0).sqrt();
        Ok(Self { drift, gain, pi0, sigma2 })
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// SNR `Pi0 / sigma2`.
    pub fn gamma(&self) -> f64 {
        self.pi0 / self.sigma2
    }

    pub fn discretize(&self, delta: f64) -> Result<SampledModel> {
        discretize(self, delta)
    }
}

/// AR(1)-plus-noise model seen by equally spaced sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledModel {
    a: f64,
    q: f64,
    pi0: f64,
    sigma2: f64,
}

impl SampledModel {
    /// Model from the correlation coefficient directly.
    pub fn new(a: f64, pi0: f64, sigma2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::domain(format!("correlation must lie in [0, 1], got {a}")));
        }
        check_signal(pi0)?;
        check_noise(sigma2)?;
        // (1 - a)(1 + a) keeps precision as a -> 1
        let q = pi0 * (1.0 - a) * (1.0 + a);
        Ok(Self { a, q, pi0, sigma2 })
    }

    /// Model from correlation and SNR, with the given noise variance.
    pub fn from_snr(a: f64, gamma: f64, sigma2: f64) -> Result<Self> {
        check_noise(sigma2)?;
        Self::new(a, gamma * sigma2, sigma2)
    }

    /// Correlation coefficient `a`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Process-noise variance `Q = Pi0 (1 - a^2)`.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// SNR `Pi0 / sigma2`.
    pub fn gamma(&self) -> f64 {
        self.pi0 / self.sigma2
    }

    /// Variance of `s_i` under the recursion started from `Pi0`, for each of
    /// the first `n` indices. Constant at `Pi0` for a stationary model.
    pub fn signal_variances(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut v = self.pi0;
        for _ in 0..n {
            out.push(v);
            v = self.a * self.a * v + self.q;
        }
        out
    }
}

/// Samples `field` at spacing `delta`: `a = exp(-A delta)`, `Q = Pi0 (1 - a^2)`.
pub fn discretize(field: &DiffusionField, delta: f64) -> Result<SampledModel> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("spacing must be >= 0, got {delta}")));
    }
    let a = (-field.drift * delta).exp();
    // exp(-x) for x >= 0 never exceeds 1, so `new` only re-checks variances
    SampledModel::new(a, field.pi0, field.sigma2)
}
