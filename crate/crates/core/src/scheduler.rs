//! Optimal sensor correlation and spacing.
//!
//! Above unit SNR the exponent decreases in the correlation `a`, so sensors
//! should be as far apart as the field allows. Below unit SNR it has an
//! interior maximum `a_m`, the root in `(0, 1)` of
//!
//! ```text
//! [1 + a^2 + G (1 - a^2)]^2 - 2 (r_e + a^4 / r_e) = 0,   r_e = Re / sigma2,
//! ```
//!
//! and the best spacing is `-ln(a_m) / A`.

use std::fmt;

use crate::error::{Error, Result};
use crate::exponent::{error_exponent, innovation_variances};
use crate::field_model::{DiffusionField, SampledModel};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Bracket for the optimality root.
pub const BRACKET_LO: f64 = 1e-6;
pub const BRACKET_HI: f64 = 1.0 - 1e-6;

const LINEAR_SCAN: usize = 1000;
const TAIL_SCAN: usize = 400;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    HighSnr,
    LowSnr,
    Boundary,
}

impl Regime {
    pub fn classify(gamma: f64) -> Self {
        if gamma > 1.0 {
            Regime::HighSnr
        } else if gamma < 1.0 {
            Regime::LowSnr
        } else {
            Regime::Boundary
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::HighSnr => "high_snr",
            Regime::LowSnr => "low_snr",
            Regime::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Placement recommendation for one field.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePlan {
    pub regime: Regime,
    pub gamma: f64,
    /// Optimal correlation; low SNR only.
    pub a_m: Option<f64>,
    /// Optimal spacing; low SNR with positive drift only.
    pub delta_star: Option<f64>,
    /// Exponent at the recommended correlation (at `a = 0` outside low SNR).
    pub k_at_optimum: f64,
}

/// Root of the optimality condition and how it was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationOptimum {
    pub a_m: f64,
    pub residual: f64,
    pub k: f64,
    /// Other roots found in the bracket, with lower exponent. Normally empty.
    pub other_roots: Vec<f64>,
}

fn unit_noise_model(a: f64, gamma: f64) -> Result<SampledModel> {
    SampledModel::from_snr(a, gamma, 1.0)
}

/// Left-hand side of the optimality condition at correlation `a`.
pub fn optimality_residual(a: f64, gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::domain(format!("correlation must lie in [0, 1), got {a}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!("SNR must be positive, got {gamma}")));
    }
    let model = unit_noise_model(a, gamma)?;
    let (re, _) = innovation_variances(&model);
    let a2 = a * a;
    let lead = 1.0 + a2 + gamma * (1.0 - a) * (1.0 + a);
    Ok(lead * lead - 2.0 * (re + a2 * a2 / re))
}

fn scan_grid() -> Vec<f64> {
    let mut grid = Vec::with_capacity(LINEAR_SCAN + TAIL_SCAN + 1);
    let top = 0.99;
    for j in 0..LINEAR_SCAN {
        grid.push(BRACKET_LO + (top - BRACKET_LO) * j as f64 / LINEAR_SCAN as f64);
    }
    // geometric in 1 - a from 1e-2 down to the bracket end
    let (lo_exp, hi_exp) = (-2.0f64, (1.0 - BRACKET_HI).log10());
    for j in 0..=TAIL_SCAN {
        let e = lo_exp + (hi_exp - lo_exp) * j as f64 / TAIL_SCAN as f64;
        grid.push(1.0 - 10f64.powf(e));
    }
    *grid.last_mut().unwrap() = BRACKET_HI;
    grid
}

fn bisect(gamma: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = optimality_residual(lo, gamma)?;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = optimality_residual(mid, gamma)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Finds `a_m` with full diagnostics.
///
/// The residual is scanned over the bracket for sign changes, each one is
/// refined by bisection to an interval of width `tol`, and the root with
/// the largest exponent wins.
pub fn solve_optimal_correlation(gamma: f64, tol: f64) -> Result<CorrelationOptimum> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::domain(format!(
            "an interior optimum exists only for 0 < SNR < 1, got {gamma}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let grid = scan_grid();
    let values = grid
        .iter()
        .map(|&a| optimality_residual(a, gamma))
        .collect::<Result<Vec<_>>>()?;

    let mut roots = Vec::new();
    for j in 1..grid.len() {
        let (f0, f1) = (values[j - 1], values[j]);
        if f0 == 0.0 {
            roots.push(grid[j - 1]);
        } else if (f0 < 0.0) != (f1 < 0.0) && f1 != 0.0 {
            roots.push(bisect(gamma, grid[j - 1], grid[j], tol)?);
        }
    }
    if roots.is_empty() {
        return Err(Error::numeric(
            format!(
                "optimality condition has no sign change on [{BRACKET_LO}, {BRACKET_HI}] at SNR {gamma}"
            ),
            None,
        ));
    }

    let mut scored = roots
        .into_iter()
        .map(|a| Ok((a, error_exponent(&unit_noise_model(a, gamma)?).k)))
        .collect::<Result<Vec<_>>>()?;
    // largest exponent first; ties keep scan order
    scored.sort_by(|x, y| y.1.total_cmp(&x.1));
    let (a_m, k) = scored[0];
    Ok(CorrelationOptimum {
        a_m,
        residual: optimality_residual(a_m, gamma)?,
        k,
        other_roots: scored[1..].iter().map(|r| r.0).collect(),
    })
}

/// Correlation that maximizes the exponent at SNR `gamma < 1`.
pub fn optimal_correlation(gamma: f64, tol: f64) -> Result<f64> {
    solve_optimal_correlation(gamma, tol).map(|o| o.a_m)
}

/// Spacing `-ln(a_m) / A` that realizes the optimal correlation.
pub fn optimal_spacing(drift: f64, gamma: f64, tol: f64) -> Result<f64> {
    if !(drift > 0.0) || !drift.is_finite() {
        return Err(Error::domain(format!("drift rate must be positive, got {drift}")));
    }
    let a_m = optimal_correlation(gamma, tol)?;
    Ok(-a_m.ln() / drift)
}

/// Classifies the field's SNR regime and fills in the optimum when one exists.
pub fn make_plan(field: &DiffusionField) -> Result<SchedulePlan> {
    let gamma = field.gamma();
    let regime = Regime::classify(gamma);
    match regime {
        Regime::LowSnr => {
            let opt = solve_optimal_correlation(gamma, DEFAULT_TOLERANCE)?;
            let delta_star = (field.drift() > 0.0).then(|| -opt.a_m.ln() / field.drift());
            Ok(SchedulePlan {
                regime,
                gamma,
                a_m: Some(opt.a_m),
                delta_star,
                k_at_optimum: opt.k,
            })
        }
        Regime::HighSnr | Regime::Boundary => {
            let iid = SampledModel::new(0.0, field.pi0(), field.sigma2())?;
            Ok(SchedulePlan {
                regime,
                gamma,
                a_m: None,
                delta_star: None,
                k_at_optimum: error_exponent(&iid).k,
            })
        }
    }
}
