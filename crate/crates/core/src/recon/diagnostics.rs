//! Cross-term energy in the Walsh-Hadamard domain, the recovery error bound,
//! and compressible test signals.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadratic::shift_multiply;
use super::{apply, SparseSignal, ValueModel};
use crate::ensembles::SensingMatrix;
use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, distinct_tuple, trial_rng};
use crate::wht::fwht_in_place;

const STREAM_CROSSTERM: u64 = 0x6372_6f73_7300;
const STREAM_COMPRESSIBLE: u64 = 0x636f_6d70_7200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosstermReport {
    pub a: u64,
    pub trials: usize,
    /// `sum_{j != t} |alpha_j|^2 |alpha_t|^2`.
    pub target: f64,
    /// Mean of `N^2 |Gamma_a^l|^2` per tone over the trials where `l` is not a peak.
    pub per_tone: Vec<f64>,
    pub mean: f64,
    /// Largest `|per_tone[l] / target - 1|` (0 when the target is 0 and all tones vanish).
    pub max_relative_deviation: f64,
    /// Same, when only the diagonal peaks are excluded. A pair of support columns
    /// sharing `P` puts its whole cross term on one tone, and with few trials that
    /// single event moves the tone average by about `2N / trials`.
    pub max_relative_deviation_diagonal_only: f64,
    /// Trials in which some pair of support columns shared `P`.
    pub coherent_pairs: usize,
    /// Largest over trials of max/mean of the non-peak spectrum.
    pub max_flatness_ratio: f64,
}

/// `sum_{j != t} |alpha_j|^2 |alpha_t|^2`.
pub fn crossterm_target(values: &[Complex64]) -> f64 {
    let s: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    let s2: f64 = values.iter().map(|v| v.norm_sqr().powi(2)).sum();
    s * s - s2
}

/// Resamples the support of `alpha` (values fixed) `trials` times and averages
/// `N^2 |Gamma_a^l|^2 = N |W(l)|^2` at every tone `l` away from the peaks: the
/// diagonal tones `l = a P_j` and, for pairs with `P_j = P_t`, the tone
/// `a P_j + b_j + b_t` where their cross term concentrates. Only quadratic (DG, RM2) matrices.
pub fn crossterm_energy_check(matrix: &SensingMatrix, alpha: &SparseSignal, a: u64, trials: usize, seed: u64) -> Result<CrosstermReport> {
    let n = matrix.rows();
    if matrix.cols() != alpha.dim() {
        return Err(Error::DimensionMismatch { expected: matrix.cols(), got: alpha.dim() });
    }
    if a == 0 || a as usize >= n {
        return Err(Error::param("a", format!("offset must be in 1..{n}, got {a}")));
    }
    matrix.quadratic_parts(0)?;
    let values = alpha.values();
    let k = values.len();
    let per_trial: Vec<(Vec<f64>, Vec<u8>, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, STREAM_CROSSTERM, t as u64);
            let support = distinct_tuple(&mut rng, matrix.cols(), k);
            let sig = SparseSignal::new(matrix.cols(), support.iter().copied().zip(values.iter().copied()).collect())?;
            let f = apply(matrix, &sig)?;
            let mut w = shift_multiply(&f, a)?;
            fwht_in_place(&mut w)?;
            // 0 floor, 1 coherent cross tone, 2 diagonal peak
            let mut peak = vec![0u8; n];
            let parts: Vec<_> = support.iter().map(|&j| matrix.quadratic_parts(j)).collect::<Result<_>>()?;
            for (i, (p, b)) in parts.iter().enumerate() {
                peak[p.left_mul(a) as usize] = 2;
                for (q, c) in &parts[..i] {
                    if q == p {
                        let l = (p.left_mul(a) ^ b ^ c) as usize;
                        peak[l] = peak[l].max(1);
                    }
                }
            }
            let energy: Vec<f64> = w.iter().map(|z| n as f64 * z.norm_sqr()).collect();
            let rest: Vec<f64> = energy.iter().zip(&peak).filter(|(_, &p)| p == 0).map(|(e, _)| *e).collect();
            let mean = rest.iter().sum::<f64>() / rest.len().max(1) as f64;
            let max = rest.iter().copied().fold(0.0, f64::max);
            let ratio = if mean > 0.0 { max / mean } else { 0.0 };
            Ok((energy, peak, ratio))
        })
        .collect::<Result<_>>()?;

    let target = crossterm_target(&values);
    let deviation = |per_tone: &[f64]| {
        per_tone
            .iter()
            .map(|&v| if target > 0.0 { (v / target - 1.0).abs() } else { v.abs() })
            .fold(0.0, f64::max)
    };
    // level 0 excludes coherent tones too; level 1 only the diagonal peaks
    let average = |level: u8| {
        let mut sum = vec![0.0; n];
        let mut count = vec![0usize; n];
        for (energy, peak, _) in &per_trial {
            for l in 0..n {
                if peak[l] <= level {
                    sum[l] += energy[l];
                    count[l] += 1;
                }
            }
        }
        let per_tone: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        let mean = sum.iter().sum::<f64>() / count.iter().sum::<usize>().max(1) as f64;
        (per_tone, mean)
    };
    let (per_tone, mean) = average(0);
    let (diagonal_only, _) = average(1);
    let max_ratio = per_trial.iter().map(|t| t.2).fold(0.0, f64::max);
    let coherent_pairs = per_trial.iter().filter(|t| t.1.contains(&1)).count();
    Ok(CrosstermReport {
        a,
        trials,
        target,
        max_relative_deviation: deviation(&per_tone),
        max_relative_deviation_diagonal_only: deviation(&diagonal_only),
        coherent_pairs,
        per_tone,
        mean,
        max_flatness_ratio: max_ratio,
    })
}

/// `(5+eps)/(1-eps) ||alpha - alpha_k|| + 2/(1-eps) ||nu||`.
pub fn error_bound(alpha: &SparseSignal, alpha_k: &SparseSignal, nu_norm: f64, epsilon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::param("epsilon", format!("must be in [0, 1), got {epsilon}")));
    }
    if !(nu_norm >= 0.0) {
        return Err(Error::param("nu_norm", format!("must be nonnegative, got {nu_norm}")));
    }
    let tail = alpha.distance(alpha_k);
    Ok((5.0 + epsilon) / (1.0 - epsilon) * tail + 2.0 / (1.0 - epsilon) * nu_norm)
}

/// `k` significant entries drawn from `model` plus `tail` small entries, complex
/// Gaussian with standard deviation `sigma_tail` per component, on a uniform support.
pub fn compressible_signal(c: usize, k: usize, tail: usize, sigma_tail: f64, model: ValueModel, seed: u64) -> Result<SparseSignal> {
    if k + tail > c {
        return Err(Error::param("tail", format!("k + tail = {} exceeds dimension {c}", k + tail)));
    }
    if !(sigma_tail > 0.0) {
        return Err(Error::param("sigma_tail", format!("must be positive, got {sigma_tail}")));
    }
    let mut rng = trial_rng(seed, STREAM_COMPRESSIBLE, 0);
    let support = distinct_tuple(&mut rng, c, k + tail);
    let mut values = model.sample(&mut rng, k);
    values.extend((0..tail).map(|_| loop {
        let z = complex_gaussian(&mut rng, sigma_tail);
        if z.norm() > 0.0 {
            break z;
        }
    }));
    SparseSignal::new(c, support.into_iter().zip(values).collect())
}
