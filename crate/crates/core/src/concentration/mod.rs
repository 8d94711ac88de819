//! Concentration inequalities for functions of distinct random coordinates,
//! Hoeffding utilities, and the chi-distribution tail used for noise.

mod tail;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{distinct_tuple, trial_rng, TrialRng};

pub use tail::{gaussian_tail_s, ln_gamma, regularized_gamma_q, noise_bound_probability, noise_bound_probability_dof};

const STREAM_TUPLES: u64 = 0x7475_706c_6573;
const STREAM_PROBE: u64 = 0x7072_6f62_6500;

/// Uniform samples from the distinct m-tuples of `0..c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinctTupleSampler {
    pub c: usize,
    pub m: usize,
    pub seed: u64,
}

impl DistinctTupleSampler {
    pub fn new(c: usize, m: usize, seed: u64) -> Result<Self> {
        if m > c {
            return Err(Error::param("m", format!("cannot draw {m} distinct values from {c}")));
        }
        Ok(DistinctTupleSampler { c, m, seed })
    }

    fn rng(&self, trial: u64) -> TrialRng {
        trial_rng(self.seed, STREAM_TUPLES, trial)
    }

    /// Tuple number `trial`; independent of any other call.
    pub fn sample(&self, trial: u64) -> Vec<usize> {
        distinct_tuple(&mut self.rng(trial), self.c, self.m)
    }
}

/// `2 exp(-2 gamma^2 / sum c_i^2)`.
pub fn mcdiarmid_bound(c: &[f64], gamma: f64) -> Result<f64> {
    if let Some((i, &v)) = c.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::param("c", format!("c[{i}] = {v} must be positive")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", format!("must be nonnegative, got {gamma}")));
    }
    let s: f64 = c.iter().map(|v| v * v).sum();
    Ok(2.0 * (-2.0 * gamma * gamma / s).exp())
}

/// Hoeffding's lemma, `E[e^{tX}] <= exp(t^2 (b-a)^2 / 8)` for `X` in `[a, b]` with mean zero.
pub fn hoeffding_bound(t: f64, a: f64, b: f64) -> Result<f64> {
    if a > b {
        return Err(Error::param("a", format!("need a <= b, got a={a}, b={b}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be finite and nonnegative, got {t}")));
    }
    Ok((t * t * (b - a) * (b - a) / 8.0).exp())
}

/// Union bound `4 C exp(-2 N eps^2)` on some column average of a partial
/// Fourier matrix exceeding `eps`.
pub fn hoeffding_column_average_bound(c: usize, n: usize, eps: f64) -> f64 {
    4.0 * c as f64 * (-2.0 * n as f64 * eps * eps).exp()
}

/// Standard deviation of a binomial proportion.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / trials.max(1) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub gamma: f64,
    pub exceed: usize,
    pub empirical_tail: f64,
    pub bound: f64,
    /// Binomial standard deviation at the bound (capped at 1).
    pub sigma: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McDiarmidReport {
    pub trials: usize,
    pub mean: f64,
    /// Largest |f(t) - f(t')| seen per coordinate while probing.
    pub observed_sensitivity: Vec<f64>,
    pub checks: Vec<TailCheck>,
}

impl McDiarmidReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Probes the declared bounded differences of `f`, then estimates
/// `Pr[|f - E f| >= gamma]` for each gamma and compares with the bound.
///
/// Probing replaces one coordinate of a sampled tuple by a value outside the
/// tuple, `probes` times per coordinate; any change above `c_i` rejects the
/// configuration.
pub fn mcdiarmid_empirical<F>(f: F, c_ground: usize, c: &[f64], gammas: &[f64], trials: usize, probes: usize, seed: u64) -> Result<McDiarmidReport>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let m = c.len();
    if m >= c_ground {
        return Err(Error::param("c", format!("tuple length {m} leaves no free value in a ground set of {c_ground}")));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let sampler = DistinctTupleSampler::new(c_ground, m, seed)?;

    let observed: Vec<Vec<f64>> = (0..probes)
        .into_par_iter()
        .map(|p| {
            let mut rng = trial_rng(seed, STREAM_PROBE, p as u64);
            let base = distinct_tuple(&mut rng, c_ground, m);
            let f0 = f(&base);
            (0..m)
                .map(|i| {
                    // uniform value outside the tuple, by rejection
                    let v = loop {
                        let v = rand::Rng::gen_range(&mut rng, 0..c_ground);
                        if !base.contains(&v) {
                            break v;
                        }
                    };
                    let mut t = base.clone();
                    t[i] = v;
                    (f(&t) - f0).abs()
                })
                .collect()
        })
        .collect();
    let mut sensitivity = vec![0.0f64; m];
    for row in &observed {
        for (s, &v) in sensitivity.iter_mut().zip(row) {
            *s = s.max(v);
        }
    }
    for (i, (&obs, &declared)) in sensitivity.iter().zip(c).enumerate() {
        if obs > declared * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::SensitivityExceeded { coordinate: i, observed: obs, declared });
        }
    }

    let values: Vec<f64> = (0..trials).into_par_iter().map(|t| f(&sampler.sample(t as u64))).collect();
    let mean = values.iter().sum::<f64>() / trials as f64;
    let checks = gammas
        .iter()
        .map(|&gamma| {
            let bound = mcdiarmid_bound(c, gamma)?;
            let exceed = values.iter().filter(|&&v| (v - mean).abs() >= gamma).count();
            let empirical_tail = exceed as f64 / trials as f64;
            let sigma = binomial_sigma(bound.min(1.0), trials);
            Ok(TailCheck { gamma, exceed, empirical_tail, bound, sigma, pass: empirical_tail <= bound + 3.0 * sigma })
        })
        .collect::<Result<_>>()?;
    Ok(McDiarmidReport { trials, mean, observed_sensitivity: sensitivity, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mcdiarmid_examples() {
        assert_eq!(mcdiarmid_bound(&[1.0, 1.0], 0.0).unwrap(), 2.0);
        assert!((mcdiarmid_bound(&[1.0, 1.0], 1.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(mcdiarmid_bound(&[1.0, 0.0], 1.0).is_err());
        let a = mcdiarmid_bound(&[0.3, 1.0, 2.0], 0.7).unwrap();
        let b = mcdiarmid_bound(&[2.0, 0.3, 1.0], 0.7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_bound(3.0, 1.0, 1.0).unwrap(), 1.0);
        assert!(hoeffding_bound(1.0, 2.0, 1.0).is_err());
        let mut prev = f64::INFINITY;
        for t in [1.0, 0.5, 0.1, 0.01, 1e-4] {
            let v = hoeffding_bound(t, -1.0, 1.0).unwrap();
            assert!(v < prev && v >= 1.0);
            prev = v;
        }
        assert!((prev - 1.0).abs() < 1e-8);
        let eps = (256f64.ln() / 32.0).sqrt();
        let v = hoeffding_column_average_bound(256, 32, eps);
        assert!((v - 4.0 * 256.0 * (-2.0 * 256f64.ln()).exp()).abs() < 1e-12);
    }

    #[test]
    fn sampler_marginals_uniform() {
        let s = DistinctTupleSampler::new(10, 4, 8).unwrap();
        let draws = 100_000;
        let mut counts = vec![vec![0usize; 10]; 4];
        for t in 0..draws {
            let tuple = s.sample(t);
            let mut sorted = tuple.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 4);
            for (i, &v) in tuple.iter().enumerate() {
                counts[i][v] += 1;
            }
        }
        let p = 0.1;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for row in counts {
            for c in row {
                assert!((c as f64 - draws as f64 * p).abs() < 4.0 * sd);
            }
        }
        assert!(DistinctTupleSampler::new(3, 4, 0).is_err());
    }

    #[test]
    fn constant_function_has_empty_tail() {
        let r = mcdiarmid_empirical(|_| 1.5, 20, &[1.0; 5], &[0.1, 1.0], 1000, 20, 0).unwrap();
        assert!(r.checks.iter().all(|c| c.exceed == 0 && c.pass));
    }

    #[test]
    fn sensitivity_violation_rejected() {
        let f = |t: &[usize]| t.iter().sum::<usize>() as f64;
        let err = mcdiarmid_empirical(f, 100, &[1.0; 3], &[1.0], 100, 20, 0).unwrap_err();
        assert!(matches!(err, Error::SensitivityExceeded { .. }));
    }
}
