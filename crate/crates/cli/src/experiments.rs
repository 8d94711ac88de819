//! Experiment drivers shared by the command line and the acceptance tests.
//! Each returns typed records; formatting lives in `run`.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stripcs::concentration::{binomial_sigma, gaussian_tail_s};
use stripcs::ensembles::{Family, MatrixSpec, SensingMatrix};
use stripcs::recon::{
    compressible_signal, error_bound, measure, quadratic_reconstruct, sample_signal, sample_signal_with, Association, Noise, ReconConfig,
    ReconResult, SparseSignal, ValueModel,
};
use stripcs::rng::{derive_seed, trial_rng};
use stripcs::stripcheck::{
    coherence_stats, coherence_threshold, coherence_mean, distortion_samples, count_violations, eta_from_column_sum, strip_delta, DeltaBound,
    WPolicy,
};
use stripcs::Result;

use crate::config::McFunction;

const STREAM_K: u64 = 0x6b5f_7374_7265;
const STREAM_RECON: u64 = 0x7265_636f_6e00;
const STREAM_RECON_NOISE: u64 = 0x7265_636e_6f69;
const STREAM_NOISE_EXP: u64 = 0x6e6f_6973_6578;
const STREAM_MC_VALUES: u64 = 0x6d63_7661_6c00;

/// Column-sum exponent known in closed form for the structured families.
pub fn family_eta(spec: &MatrixSpec) -> Option<f64> {
    match spec.family {
        Family::Chirp { .. } => Some(1.0),
        Family::Dg { m, r } => Some(1.0 - 2.0 * r as f64 / m as f64),
        _ => None,
    }
}

/// eta from the largest squared sum over columns other than column 0.
pub fn estimate_eta(matrix: &SensingMatrix) -> Result<f64> {
    let n = matrix.rows();
    let max = (1..matrix.cols())
        .into_par_iter()
        .map(|j| {
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            matrix.column_into(j, &mut col)?;
            Ok(col.iter().sum::<Complex64>().norm_sqr())
        })
        .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))?;
    Ok(eta_from_column_sum(max, n))
}

pub fn eta_for(spec: &MatrixSpec, matrix: &SensingMatrix, given: Option<f64>) -> Result<f64> {
    match given.or_else(|| family_eta(spec)) {
        Some(eta) => Ok(eta),
        None => estimate_eta(matrix),
    }
}

fn k_seed(seed: u64, k: usize) -> u64 {
    derive_seed(seed, STREAM_K, k as u64)
}

/// A bound check on a proportion: `rate <= bound + 3 sigma` when the bound is informative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub count: usize,
    pub trials: usize,
    pub rate: f64,
    pub bound: f64,
    pub sigma: f64,
    /// Bound below 1, so the comparison means something.
    pub informative: bool,
    pub pass: bool,
}

impl RateCheck {
    pub fn new(count: usize, trials: usize, bound: f64) -> RateCheck {
        let rate = count as f64 / trials as f64;
        let informative = bound < 1.0;
        let sigma = binomial_sigma(bound.min(1.0), trials);
        RateCheck { count, trials, rate, bound, sigma, informative, pass: !informative || rate <= bound + 3.0 * sigma }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripCell {
    pub k: usize,
    pub epsilon: f64,
    pub delta: DeltaBound,
    pub check: RateCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    pub eta: f64,
    pub cells: Vec<StripCell>,
    /// Distortion ratios per k, in trial order.
    pub samples: Vec<(usize, Vec<f64>)>,
}

pub fn strip_grid(matrix: &SensingMatrix, ks: &[usize], epsilons: &[f64], eta: f64, model: ValueModel, trials: usize, seed: u64) -> Result<StripGrid> {
    let (n, c) = (matrix.rows(), matrix.cols());
    let mut cells = Vec::new();
    let mut samples = Vec::new();
    for &k in ks {
        let d = distortion_samples(matrix, k, model, trials, k_seed(seed, k))?;
        for &eps in epsilons {
            let delta = strip_delta(n, c, k, eps, eta)?;
            cells.push(StripCell { k, epsilon: eps, delta, check: RateCheck::new(count_violations(&d, eps), trials, delta.delta) });
        }
        samples.push((k, d));
    }
    Ok(StripGrid { eta, cells, samples })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceCell {
    pub k: usize,
    pub epsilon: f64,
    pub delta: DeltaBound,
    /// Level exceeded with probability at most delta; absent when delta is vacuous.
    pub threshold: Option<f64>,
    pub mean: f64,
    pub std_error: f64,
    pub expected_mean: f64,
    pub check: RateCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceGrid {
    pub eta: f64,
    pub cells: Vec<CoherenceCell>,
    pub samples: Vec<(usize, Vec<f64>)>,
}

pub fn coherence_grid(matrix: &SensingMatrix, ks: &[usize], epsilons: &[f64], eta: f64, trials: usize, seed: u64) -> Result<CoherenceGrid> {
    let (n, c) = (matrix.rows(), matrix.cols());
    let mut cells = Vec::new();
    let mut samples = Vec::new();
    for &k in ks {
        let stats = coherence_stats(matrix, k, WPolicy::All, trials, k_seed(seed, k), None)?;
        for &eps in epsilons {
            let delta = strip_delta(n, c, k, eps, eta)?;
            let threshold = if delta.vacuous { None } else { Some(coherence_threshold(n, c, k, eta, delta.delta)?) };
            let exceed = threshold.map_or(0, |th| stats.samples.iter().filter(|&&s| s >= th).count());
            cells.push(CoherenceCell {
                k,
                epsilon: eps,
                delta,
                threshold,
                mean: stats.mean,
                std_error: stats.std_error,
                expected_mean: coherence_mean(n, c, k),
                check: RateCheck::new(exceed, trials, if threshold.is_some() { delta.delta } else { 2.0 }),
            });
        }
        samples.push((k, stats.samples));
    }
    Ok(CoherenceGrid { eta, cells, samples })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconTrial {
    pub k: usize,
    pub trial: usize,
    /// Exact support and values (noiseless, exactly sparse) or error within the bound otherwise.
    pub success: bool,
    pub exact: bool,
    pub error: f64,
    pub bound: f64,
    pub noise_norm: f64,
    pub iterations: usize,
    pub wall_time: Option<f64>,
}

/// Reconstruction settings shared by every trial of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconSetup {
    pub model: ValueModel,
    pub noise: Noise,
    pub tail: usize,
    pub sigma_tail: f64,
    pub epsilon: f64,
    pub association: Association,
    pub timing: bool,
}

impl ReconSetup {
    pub fn noiseless(association: Association) -> ReconSetup {
        ReconSetup { model: ValueModel::UnitPhase, noise: Noise::None, tail: 0, sigma_tail: 0.01, epsilon: 0.1, association, timing: false }
    }
}

/// Relative tolerance for calling a noiseless reconstruction exact.
pub const EXACT_TOL: f64 = 1e-6;

pub fn recon_trial(matrix: &SensingMatrix, k: usize, trial: usize, setup: &ReconSetup, seed: u64) -> Result<(ReconTrial, SparseSignal, ReconResult)> {
    let index = ((k as u64) << 32) | trial as u64;
    let sig_seed = derive_seed(seed, STREAM_RECON, index);
    let alpha = if setup.tail > 0 {
        compressible_signal(matrix.cols(), k, setup.tail, setup.sigma_tail, setup.model, sig_seed)?
    } else {
        sample_signal(matrix.cols(), k, setup.model, sig_seed)?
    };
    let meas = measure(matrix, &alpha, setup.noise, derive_seed(seed, STREAM_RECON_NOISE, index))?;
    let start = Instant::now();
    let cfg = ReconConfig::new(k.max(1)).with_association(setup.association);
    let result = quadratic_reconstruct(matrix, &meas.values, &cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let error = alpha.distance(&result.alpha_hat);
    let bound = error_bound(&alpha, &alpha.best_k_term(k), meas.noise_norm(), setup.epsilon)?;
    let exact = result.matches(&alpha, EXACT_TOL);
    let success = if setup.tail == 0 && setup.noise == Noise::None { exact } else { error <= bound };
    let row = ReconTrial {
        k,
        trial,
        success,
        exact,
        error,
        bound,
        noise_norm: meas.noise_norm(),
        iterations: result.iterations.len(),
        wall_time: setup.timing.then_some(wall),
    };
    Ok((row, alpha, result))
}

pub fn recon_sweep(matrix: &SensingMatrix, ks: &[usize], trials: usize, setup: &ReconSetup, seed: u64) -> Result<Vec<ReconTrial>> {
    let jobs: Vec<(usize, usize)> = ks.iter().flat_map(|&k| (0..trials).map(move |t| (k, t))).collect();
    jobs.into_par_iter().map(|(k, t)| recon_trial(matrix, k, t, setup, seed).map(|r| r.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrial {
    /// `||f|| / ||alpha||`.
    pub ratio: f64,
    pub noise_norm: f64,
    pub tail: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub k: usize,
    pub sigma: f64,
    pub gamma: f64,
    pub eps_prime: f64,
    /// Isometry level `eps'(2 - eps')` at which delta is evaluated.
    pub epsilon: f64,
    pub delta: DeltaBound,
    pub mean_tail: f64,
    pub check: RateCheck,
    pub trials: Vec<NoiseTrial>,
}

/// Counts `||f||` outside `[(1-eps'-gamma) ||alpha||, (1+eps'+gamma) ||alpha||]` under
/// complex measurement noise and compares with `2(delta + S)`.
#[allow(clippy::too_many_arguments)]
pub fn noise_experiment(
    matrix: &SensingMatrix,
    k: usize,
    model: ValueModel,
    sigma: f64,
    gamma: f64,
    eps_prime: f64,
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<NoiseReport> {
    let (n, c) = (matrix.rows(), matrix.cols());
    let epsilon = eps_prime * (2.0 - eps_prime);
    let delta = strip_delta(n, c, k, epsilon, eta)?;
    let rows: Vec<NoiseTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, STREAM_NOISE_EXP, t as u64);
            let alpha = sample_signal_with(&mut rng, c, k, model)?;
            let meas = stripcs::recon::measure_with(matrix, &alpha, Noise::Measurement { sigma }, &mut rng)?;
            let a = alpha.norm();
            let ratio = meas.norm() / a;
            let violation = ratio < 1.0 - eps_prime - gamma || ratio > 1.0 + eps_prime + gamma;
            Ok(NoiseTrial { ratio, noise_norm: meas.noise_norm(), tail: gaussian_tail_s(gamma * a / sigma, 2 * n)?, violation })
        })
        .collect::<Result<_>>()?;
    let mean_tail = rows.iter().map(|r| r.tail).sum::<f64>() / trials as f64;
    let violations = rows.iter().filter(|r| r.violation).count();
    let bound = 2.0 * (delta.delta + mean_tail);
    Ok(NoiseReport { k, sigma, gamma, eps_prime, epsilon, delta, mean_tail, check: RateCheck::new(violations, trials, bound), trials: rows })
}

/// A bounded-difference function over distinct tuples with its declared sensitivities.
pub struct McSetup<'a> {
    pub ground: usize,
    pub c: Vec<f64>,
    pub f: Box<dyn Fn(&[usize]) -> f64 + Sync + 'a>,
    pub description: String,
}

pub fn mcdiarmid_setup<'a>(function: McFunction, matrix: Option<&'a SensingMatrix>, k: usize, eta: f64, ground: usize, seed: u64) -> Result<McSetup<'a>> {
    let need = || matrix.ok_or_else(|| stripcs::Error::InvalidParameter { name: "family", reason: "this function needs a matrix".into() });
    match function {
        McFunction::HalfSum => {
            let half = ground / 2;
            Ok(McSetup {
                ground,
                c: vec![1.0; k],
                f: Box::new(move |t: &[usize]| t.iter().map(|&i| if i < half { 0.5 } else { -0.5 }).sum()),
                description: format!("half-sum of +-1 labels, C={ground}, m={k}"),
            })
        }
        McFunction::Energy => {
            let mat = need()?;
            let n = mat.rows();
            let mut rng = trial_rng(seed, STREAM_MC_VALUES, 0);
            let values = ValueModel::UnitSphere.sample(&mut rng, k);
            let abs: Vec<f64> = values.iter().map(|v| v.norm()).collect();
            let total: f64 = abs.iter().sum();
            let scale = 4.0 * (n as f64).powf(-eta / 2.0);
            let c = abs.iter().map(|&a| scale * a * (total - a)).collect();
            let f = move |t: &[usize]| {
                let mut acc = vec![Complex64::new(0.0, 0.0); n];
                let mut col = vec![Complex64::new(0.0, 0.0); n];
                for (&j, &v) in t.iter().zip(&values) {
                    mat.column_into(j, &mut col).expect("index in range");
                    for (a, x) in acc.iter_mut().zip(&col) {
                        *a += v * x;
                    }
                }
                acc.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64
            };
            Ok(McSetup { ground: mat.cols(), c, f: Box::new(f), description: format!("||f||^2 on {}, k={k}", mat.spec()) })
        }
        McFunction::Coherence => {
            let mat = need()?;
            let n = mat.rows();
            let probe = mat.column(0)?;
            let weights: Vec<f64> = (1..mat.cols())
                .into_par_iter()
                .map(|j| {
                    let col = mat.column(j)?;
                    let ip: Complex64 = col.iter().zip(&probe).map(|(a, b)| a.conj() * b).sum();
                    Ok(ip.norm_sqr() / (n * n) as f64)
                })
                .collect::<Result<_>>()?;
            let c = vec![(n as f64).powf(-eta); k];
            Ok(McSetup {
                ground: mat.cols() - 1,
                c,
                f: Box::new(move |t: &[usize]| t.iter().map(|&i| weights[i]).sum()),
                description: format!("coherence with column 0 on {}, k={k}", mat.spec()),
            })
        }
    }
}

/// `gamma = q sqrt(sum c_i^2)` for each multiplier.
pub fn gammas_for(c: &[f64], q: &[f64]) -> Vec<f64> {
    let s = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.iter().map(|q| q * s).collect()
}

pub fn sparse_values(signal: &SparseSignal) -> Vec<(usize, f64, f64)> {
    signal.entries().iter().map(|(j, v)| (*j, v.re, v.im)).collect()
}
