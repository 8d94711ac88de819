//! Closed-form failure probabilities for the statistical isometry and the
//! coherence estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A failure probability together with whether the hypotheses that make it
/// meaningful hold. Vacuous bounds carry `delta = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaBound {
    pub delta: f64,
    pub vacuous: bool,
}

impl DeltaBound {
    fn vacuous() -> Self {
        DeltaBound { delta: 2.0, vacuous: true }
    }

    /// True when the bound says something, i.e. `delta < 1`.
    pub fn informative(&self) -> bool {
        !self.vacuous && self.delta < 1.0
    }
}

fn check_common(n: usize, c: usize, eta: f64, epsilon: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    if c < 2 {
        return Err(Error::param("c", format!("need at least 2 columns, got {c}")));
    }
    if !(eta > 0.0 && eta <= 2.0) {
        return Err(Error::param("eta", format!("must be in (0, 2], got {eta}")));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::param("epsilon", format!("must be finite and nonnegative, got {epsilon}")));
    }
    Ok(())
}

/// `delta = 2 exp(-[eps - (k-1)/(C-1)]^2 N^eta / (8k))`, vacuous when `eps <= (k-1)/(C-1)`.
pub fn strip_delta(n: usize, c: usize, k: usize, epsilon: f64, eta: f64) -> Result<DeltaBound> {
    check_common(n, c, eta, epsilon)?;
    if k == 0 || k > c {
        return Err(Error::param("k", format!("must be in 1..={c}, got {k}")));
    }
    let gap = epsilon - (k - 1) as f64 / (c - 1) as f64;
    if gap <= 0.0 {
        return Ok(DeltaBound::vacuous());
    }
    let delta = 2.0 * (-gap * gap * (n as f64).powf(eta) / (8.0 * k as f64)).exp();
    Ok(DeltaBound { delta, vacuous: false })
}

/// Bound for signals with `rho = ||alpha||_1 / ||alpha||_2`:
/// `2 exp(-N^eta/8 [(eps - 1/(C-1))/rho - chi(rho > sqrt 2)(rho^2 - 2)/(rho (C-1))]^2)`.
pub fn strip_delta_sharpened(n: usize, c: usize, k: usize, eta: f64, epsilon: f64, rho: f64) -> Result<DeltaBound> {
    check_common(n, c, eta, epsilon)?;
    let max_rho = (k as f64).sqrt();
    if !(rho >= 1.0 - 1e-12 && rho <= max_rho + 1e-12) {
        return Err(Error::param("rho", format!("must be in [1, sqrt(k)] = [1, {max_rho}], got {rho}")));
    }
    let cm1 = (c - 1) as f64;
    let correction = if rho > std::f64::consts::SQRT_2 { (rho * rho - 2.0) / (rho * cm1) } else { 0.0 };
    let bracket = (epsilon - 1.0 / cm1) / rho - correction;
    if bracket <= 0.0 {
        return Ok(DeltaBound::vacuous());
    }
    let delta = 2.0 * (-(n as f64).powf(eta) / 8.0 * bracket * bracket).exp();
    Ok(DeltaBound { delta, vacuous: false })
}

/// Expected squared coherence `(k/N)(C-N)/(C-1)` between k random columns and another column.
pub fn coherence_mean(n: usize, c: usize, k: usize) -> f64 {
    k as f64 / n as f64 * (c as f64 - n as f64) / (c as f64 - 1.0)
}

/// Coherence level exceeded with probability at most `delta`:
/// `(k/N)(C-N)/(C-1) + sqrt(2k ln(C/delta)) / N^eta`.
pub fn coherence_threshold(n: usize, c: usize, k: usize, eta: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", format!("must be positive, got {delta}")));
    }
    let log = (c as f64 / delta).ln().max(0.0);
    Ok(coherence_mean(n, c, k) + (2.0 * k as f64 * log).sqrt() / (n as f64).powf(eta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub c: usize,
    pub k: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    pub vacuous: bool,
    pub coherence_mean: f64,
    /// Coherence tail threshold at the report's delta (absent when vacuous).
    pub coherence_tail: Option<f64>,
    /// Sharpened bound at rho = 1 (single dominant entry) and rho = sqrt(k).
    pub sharpened_delta_rho1: f64,
    pub sharpened_delta_rho_sqrt_k: f64,
}

pub fn bound_report(n: usize, c: usize, k: usize, epsilon: f64, eta: f64) -> Result<BoundReport> {
    let main = strip_delta(n, c, k, epsilon, eta)?;
    let s1 = strip_delta_sharpened(n, c, k, eta, epsilon, 1.0)?;
    let sk = strip_delta_sharpened(n, c, k, eta, epsilon, (k as f64).sqrt())?;
    Ok(BoundReport {
        n,
        c,
        k,
        epsilon,
        eta,
        delta: main.delta,
        vacuous: main.vacuous,
        coherence_mean: coherence_mean(n, c, k),
        coherence_tail: if main.vacuous { None } else { Some(coherence_threshold(n, c, k, eta, main.delta)?) },
        sharpened_delta_rho1: s1.delta,
        sharpened_delta_rho_sqrt_k: sk.delta,
    })
}
