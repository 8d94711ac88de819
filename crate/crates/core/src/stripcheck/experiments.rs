//! Monte-Carlo and enumeration experiments over random supports.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{hermitian_eigenvalues, least_squares, ComplexMatrix};
use crate::ensembles::ColumnOracle;
use crate::error::{Error, Result};
use crate::recon::{SparseSignal, ValueModel};
use crate::rng::{distinct_tuple, trial_rng};

const STREAM_ENERGY: u64 = 0x656e_6572_6779;
const STREAM_STRIP: u64 = 0x7374_7269_7000;
const STREAM_COHERENCE: u64 = 0x636f_6865_7200;
const STREAM_CONDITION: u64 = 0x636f_6e64_0000;

/// Largest number of ordered supports enumerated in exact mode.
pub const ENUMERATION_LIMIT: usize = 2_000_000;
/// Gram eigenvalues at or below this are treated as zero.
pub const SINGULAR_EIGENVALUE: f64 = 1e-14;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `||N^{-1/2} sum_i values_i phi_{support_i}||^2`.
fn energy_of<M: ColumnOracle + ?Sized>(matrix: &M, support: &[usize], values: &[Complex64], acc: &mut [Complex64], col: &mut [Complex64]) -> Result<f64> {
    acc.iter_mut().for_each(|a| *a = zero());
    for (&j, &v) in support.iter().zip(values) {
        matrix.column_into(j, col)?;
        for (a, c) in acc.iter_mut().zip(col.iter()) {
            *a += v * c;
        }
    }
    Ok(acc.iter().map(|z| z.norm_sqr()).sum::<f64>() / matrix.rows() as f64)
}

fn ordered_tuple_count(c: usize, k: usize) -> Option<usize> {
    (0..k).try_fold(1usize, |acc, i| acc.checked_mul(c - i))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EnergyMode {
    /// Average over every ordered placement of the values on distinct columns.
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub mean: f64,
    /// Zero in exact mode.
    pub std_error: f64,
    pub samples: usize,
    /// `(1 - (k-1)/(C-1)) ||alpha||^2`
    pub lower_bracket: f64,
    /// `(1 + 1/(C-1)) ||alpha||^2`
    pub upper_bracket: f64,
}

/// Expected `||f||^2` over uniformly random placements of fixed values.
pub fn expected_energy<M: ColumnOracle + ?Sized>(matrix: &M, values: &[Complex64], mode: EnergyMode) -> Result<EnergyEstimate> {
    let (n, c, k) = (matrix.rows(), matrix.cols(), values.len());
    if k > c {
        return Err(Error::param("values", format!("{k} values do not fit in {c} columns")));
    }
    let norm2: f64 = values.iter().map(|z| z.norm_sqr()).sum();
    let cm1 = (c.max(2) - 1) as f64;
    let lower_bracket = (1.0 - (k.max(1) - 1) as f64 / cm1) * norm2;
    let upper_bracket = (1.0 + 1.0 / cm1) * norm2;

    let (mean, std_error, samples) = match mode {
        EnergyMode::Exact => {
            let count = ordered_tuple_count(c, k).filter(|&t| t <= ENUMERATION_LIMIT).ok_or_else(|| Error::TooLarge {
                reason: format!("{c} columns with k={k} exceeds {ENUMERATION_LIMIT} ordered supports"),
            })?;
            let columns: Vec<Vec<Complex64>> = (0..c).map(|j| matrix.column(j)).collect::<Result<_>>()?;
            let mut total = 0.0;
            let mut tuple = vec![0usize; k];
            let mut used = vec![false; c];
            let mut acc = vec![zero(); n];
            enumerate_tuples(0, &mut tuple, &mut used, &mut |t| {
                acc.iter_mut().for_each(|a| *a = zero());
                for (&j, &v) in t.iter().zip(values) {
                    for (a, x) in acc.iter_mut().zip(&columns[j]) {
                        *a += v * x;
                    }
                }
                total += acc.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
            });
            (total / count as f64, 0.0, count)
        }
        EnergyMode::MonteCarlo { trials, seed } => {
            let samples: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, STREAM_ENERGY, t as u64);
                    let support = distinct_tuple(&mut rng, c, k);
                    let (mut acc, mut col) = (vec![zero(); n], vec![zero(); n]);
                    energy_of(matrix, &support, values, &mut acc, &mut col)
                })
                .collect::<Result<_>>()?;
            let (mean, sd) = mean_std(&samples);
            (mean, sd / (trials.max(1) as f64).sqrt(), trials)
        }
    };
    Ok(EnergyEstimate { mean, std_error, samples, lower_bracket, upper_bracket })
}

fn enumerate_tuples(depth: usize, tuple: &mut [usize], used: &mut [bool], visit: &mut impl FnMut(&[usize])) {
    if depth == tuple.len() {
        visit(tuple);
        return;
    }
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            tuple[depth] = j;
            enumerate_tuples(depth + 1, tuple, used, visit);
            used[j] = false;
        }
    }
}

/// Sample mean and (population-corrected) standard deviation, summed in index order.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripMonteCarlo {
    pub k: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub violations: usize,
    pub failure_rate: f64,
    /// `||f||^2 / ||alpha||^2` per trial, in trial order.
    pub distortions: Vec<f64>,
}

/// Distortion ratios `||f||^2 / ||alpha||^2` for random supports and values.
pub fn distortion_samples<M: ColumnOracle + ?Sized>(matrix: &M, k: usize, model: ValueModel, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let (n, c) = (matrix.rows(), matrix.cols());
    if k == 0 || k > c {
        return Err(Error::param("k", format!("must be in 1..={c}, got {k}")));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, STREAM_STRIP, t as u64);
            let support = distinct_tuple(&mut rng, c, k);
            let values = model.sample(&mut rng, k);
            let norm2: f64 = values.iter().map(|z| z.norm_sqr()).sum();
            let (mut acc, mut col) = (vec![zero(); n], vec![zero(); n]);
            Ok(energy_of(matrix, &support, &values, &mut acc, &mut col)? / norm2)
        })
        .collect()
}

/// Counts ratios outside `[1 - eps, 1 + eps]`.
pub fn count_violations(distortions: &[f64], epsilon: f64) -> usize {
    distortions.iter().filter(|&&d| d < 1.0 - epsilon || d > 1.0 + epsilon).count()
}

pub fn strip_montecarlo<M: ColumnOracle + ?Sized>(
    matrix: &M,
    k: usize,
    epsilon: f64,
    model: ValueModel,
    trials: usize,
    seed: u64,
) -> Result<StripMonteCarlo> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let distortions = distortion_samples(matrix, k, model, trials, seed)?;
    let violations = count_violations(&distortions, epsilon);
    Ok(StripMonteCarlo {
        k,
        epsilon,
        trials,
        violations,
        failure_rate: violations as f64 / trials as f64,
        distortions,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum WPolicy {
    /// The probe column is fixed.
    Fixed { w: usize },
    /// A fresh probe column is drawn uniformly from all columns each trial.
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceStats {
    pub k: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
    pub max: f64,
    pub threshold: Option<f64>,
    pub exceed_count: usize,
    pub exceed_fraction: f64,
    pub samples: Vec<f64>,
}

/// `||N^{-1/2} Phi_kappa^H N^{-1/2} phi_w||^2`.
fn coherence_of<M: ColumnOracle + ?Sized>(matrix: &M, kappa: &[usize], w: &[Complex64], col: &mut [Complex64]) -> Result<f64> {
    let n = matrix.rows() as f64;
    let mut total = 0.0;
    for &j in kappa {
        matrix.column_into(j, col)?;
        let ip: Complex64 = col.iter().zip(w).map(|(a, b)| a.conj() * b).sum();
        total += ip.norm_sqr();
    }
    Ok(total / (n * n))
}

/// Samples coherence between k random columns and a probe column w outside them.
/// `threshold`, when given, is the level whose exceedances are counted.
pub fn coherence_stats<M: ColumnOracle + ?Sized>(
    matrix: &M,
    k: usize,
    policy: WPolicy,
    trials: usize,
    seed: u64,
    threshold: Option<f64>,
) -> Result<CoherenceStats> {
    let (n, c) = (matrix.rows(), matrix.cols());
    if k >= c {
        return Err(Error::param("k", format!("must be below C = {c}, got {k}")));
    }
    if let WPolicy::Fixed { w } = policy {
        if w >= c {
            return Err(Error::ColumnOutOfRange { index: w, cols: c });
        }
    }
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, STREAM_COHERENCE, t as u64);
            let w = match policy {
                WPolicy::Fixed { w } => w,
                WPolicy::All => rng.gen_range(0..c),
            };
            let kappa: Vec<usize> = distinct_tuple(&mut rng, c - 1, k)
                .into_iter()
                .map(|j| if j >= w { j + 1 } else { j })
                .collect();
            let mut col = vec![zero(); n];
            let wcol = matrix.column(w)?;
            coherence_of(matrix, &kappa, &wcol, &mut col)
        })
        .collect::<Result<_>>()?;
    let (mean, sd) = mean_std(&samples);
    let max = samples.iter().copied().fold(0.0, f64::max);
    let exceed_count = threshold.map_or(0, |th| samples.iter().filter(|&&s| s >= th).count());
    Ok(CoherenceStats {
        k,
        trials,
        mean: if trials == 0 { 0.0 } else { mean },
        std_error: if trials > 1 { sd / (trials as f64).sqrt() } else { 0.0 },
        max,
        threshold,
        exceed_count,
        exceed_fraction: if trials == 0 { 0.0 } else { exceed_count as f64 / trials as f64 },
        samples,
    })
}

/// Exact mean coherence for probe `w`, enumerating every k-subset of the other columns.
pub fn coherence_exact_mean<M: ColumnOracle + ?Sized>(matrix: &M, k: usize, w: usize) -> Result<f64> {
    let (n, c) = (matrix.rows(), matrix.cols());
    if w >= c {
        return Err(Error::ColumnOutOfRange { index: w, cols: c });
    }
    if k == 0 {
        return Ok(0.0);
    }
    if k >= c {
        return Err(Error::param("k", format!("must be below C = {c}, got {k}")));
    }
    let wcol = matrix.column(w)?;
    let others: Vec<usize> = (0..c).filter(|&j| j != w).collect();
    let weights: Vec<f64> = others
        .iter()
        .map(|&j| {
            let col = matrix.column(j)?;
            let ip: Complex64 = col.iter().zip(&wcol).map(|(a, b)| a.conj() * b).sum();
            Ok(ip.norm_sqr() / (n * n) as f64)
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut count = 0usize;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        total += subset.iter().map(|&i| weights[i]).sum::<f64>();
        count += 1;
        if count > ENUMERATION_LIMIT {
            return Err(Error::TooLarge { reason: format!("more than {ENUMERATION_LIMIT} subsets") });
        }
        // next k-subset in lexicographic order
        let m = others.len();
        let mut i = k;
        while i > 0 && subset[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        subset[i - 1] += 1;
        for j in i..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    Ok(total / count as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionStats {
    pub k: usize,
    pub trials: usize,
    /// sqrt(lambda_max / lambda_min) of `(1/N) Phi_lambda^H Phi_lambda`; infinite when singular.
    pub conditions: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub singular: usize,
}

pub fn condition_number(eigenvalues: &[f64]) -> f64 {
    let (lo, hi) = (eigenvalues[0], eigenvalues[eigenvalues.len() - 1]);
    if lo <= SINGULAR_EIGENVALUE {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    }
}

pub fn condition_experiment<M: ColumnOracle + ?Sized>(matrix: &M, k: usize, trials: usize, seed: u64) -> Result<ConditionStats> {
    let (n, c) = (matrix.rows(), matrix.cols());
    if k == 0 || k > n || k > c {
        return Err(Error::param("k", format!("must be in 1..=min(N, C) = {}, got {k}", n.min(c))));
    }
    let conditions: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, STREAM_CONDITION, t as u64);
            let support = distinct_tuple(&mut rng, c, k);
            let cols: Vec<Vec<Complex64>> = support.iter().map(|&j| matrix.column(j)).collect::<Result<_>>()?;
            let gram = ComplexMatrix::gram(&cols, 1.0 / n as f64);
            Ok(condition_number(&hermitian_eigenvalues(&gram)?))
        })
        .collect::<Result<_>>()?;
    let singular = conditions.iter().filter(|c| c.is_infinite()).count();
    let (mean, std) = if singular > 0 { (f64::INFINITY, f64::INFINITY) } else { mean_std(&conditions) };
    Ok(ConditionStats { k, trials, conditions, mean, std, singular })
}

pub const UNIQUENESS_MAX_COLUMNS: usize = 64;
pub const UNIQUENESS_MAX_K: usize = 3;

/// A k-subset of columns that also explains `Phi alpha`, if any; `None` means alpha is
/// the unique k-sparse preimage of its measurement.
pub fn competing_support<M: ColumnOracle + ?Sized>(matrix: &M, alpha: &SparseSignal) -> Result<Option<Vec<usize>>> {
    let (n, c, k) = (matrix.rows(), matrix.cols(), alpha.k());
    if c > UNIQUENESS_MAX_COLUMNS || k > UNIQUENESS_MAX_K {
        return Err(Error::TooLarge {
            reason: format!("brute force needs C <= {UNIQUENESS_MAX_COLUMNS} and k <= {UNIQUENESS_MAX_K}, got C={c}, k={k}"),
        });
    }
    if alpha.dim() != c {
        return Err(Error::DimensionMismatch { expected: c, got: alpha.dim() });
    }
    if k == 0 {
        return Ok(None);
    }
    let columns: Vec<Vec<Complex64>> = (0..c).map(|j| matrix.column(j)).collect::<Result<_>>()?;
    let mut y = vec![zero(); n];
    for &(j, v) in alpha.entries() {
        for (a, x) in y.iter_mut().zip(&columns[j]) {
            *a += v * x;
        }
    }
    let y_norm = crate::recon::l2(&y);
    let scale = alpha.norm();

    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let cols: Vec<Vec<Complex64>> = subset.iter().map(|&j| columns[j].clone()).collect();
        let (rank, residual) = span_residual(&cols, &y);
        if residual <= 1e-9 * y_norm.max(1e-300) {
            if rank < k {
                return Ok(Some(subset));
            }
            let beta = least_squares(&cols, &y).expect("full-rank support");
            let differs = subset.iter().zip(&beta).any(|(&j, b)| (b - alpha.get(j)).norm() > 1e-8 * scale)
                || alpha.indices().iter().any(|j| !subset.contains(j));
            if differs {
                return Ok(Some(subset));
            }
        }
        let mut i = k;
        while i > 0 && subset[i - 1] == c - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return Ok(None);
        }
        subset[i - 1] += 1;
        for j in i..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Rank of the span of `cols` (modified Gram-Schmidt) and the distance from `y` to it.
fn span_residual(cols: &[Vec<Complex64>], y: &[Complex64]) -> (usize, f64) {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for col in cols {
        let mut v = col.clone();
        for q in &basis {
            let p: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(q).for_each(|(x, qq)| *x -= p * qq);
        }
        let norm = crate::recon::l2(&v);
        if norm > 1e-9 * crate::recon::l2(col).max(1e-300) {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    let mut r = y.to_vec();
    for q in &basis {
        let p: Complex64 = q.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
        r.iter_mut().zip(q).for_each(|(x, qq)| *x -= p * qq);
    }
    (basis.len(), crate::recon::l2(&r))
}

pub fn uniqueness_bruteforce<M: ColumnOracle + ?Sized>(matrix: &M, alpha: &SparseSignal) -> Result<bool> {
    Ok(competing_support(matrix, alpha)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{build_chirp, build_delsarte_goethals, build_gaussian, ExplicitMatrix};
    use crate::recon::sample_signal_with;
    use crate::stripcheck::bounds::coherence_mean;

    #[test]
    fn energy_single_column_is_exact() {
        let mat = build_chirp(5).unwrap();
        let v = [Complex64::new(0.6, -0.8)];
        let e = expected_energy(&mat, &v, EnergyMode::Exact).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_bracket_and_monte_carlo() {
        let mat = build_chirp(5).unwrap();
        let v = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let exact = expected_energy(&mat, &v, EnergyMode::Exact).unwrap();
        assert_eq!(exact.samples, 600);
        assert!(exact.mean >= exact.lower_bracket - 1e-12 && exact.mean <= exact.upper_bracket + 1e-12);
        let mc = expected_energy(&mat, &v, EnergyMode::MonteCarlo { trials: 100_000, seed: 3 }).unwrap();
        assert!((mc.mean - exact.mean).abs() <= 3.0 * mc.std_error, "{} vs {}", mc.mean, exact.mean);
    }

    #[test]
    fn zero_width_band_always_fails() {
        let mat = build_delsarte_goethals(5, 0).unwrap();
        let r = strip_montecarlo(&mat, 3, 0.0, ValueModel::UnitSphere, 200, 1).unwrap();
        assert!(r.failure_rate > 0.99);
        let again = strip_montecarlo(&mat, 3, 0.0, ValueModel::UnitSphere, 200, 1).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn coherence_exact_matches_closed_form() {
        let mat = build_chirp(5).unwrap();
        for w in [0, 7, 24] {
            let exact = coherence_exact_mean(&mat, 3, w).unwrap();
            assert!((exact - 0.5).abs() < 1e-12, "w={w}: {exact}");
        }
        assert_eq!(coherence_exact_mean(&mat, 0, 3).unwrap(), 0.0);
        let dg = build_delsarte_goethals(3, 1).unwrap();
        let exact = coherence_exact_mean(&dg, 2, 5).unwrap();
        assert!((exact - coherence_mean(8, 512, 2)).abs() < 1e-12);
    }

    #[test]
    fn coherence_sampling() {
        let mat = build_delsarte_goethals(5, 0).unwrap();
        let s = coherence_stats(&mat, 4, WPolicy::All, 4000, 2, Some(10.0)).unwrap();
        let want = coherence_mean(32, 1024, 4);
        assert!((s.mean - want).abs() < 4.0 * s.std_error, "{} vs {want}", s.mean);
        assert_eq!(s.exceed_count, 0);
        let z = coherence_stats(&mat, 0, WPolicy::Fixed { w: 3 }, 10, 2, None).unwrap();
        assert_eq!(z.mean, 0.0);
    }

    #[test]
    fn condition_numbers() {
        let mat = build_delsarte_goethals(5, 0).unwrap();
        let one = condition_experiment(&mat, 1, 20, 0).unwrap();
        assert!(one.conditions.iter().all(|&c| (c - 1.0).abs() < 1e-12));
        let many = condition_experiment(&mat, 8, 50, 0).unwrap();
        assert!(many.mean.is_finite() && many.mean >= 1.0);
        let g = condition_experiment(&build_gaussian(32, 1024, 1).unwrap(), 8, 50, 0).unwrap();
        assert!(g.mean.is_finite());
        assert!(condition_experiment(&mat, 33, 1, 0).is_err());
    }

    #[test]
    fn singular_gram_is_infinite() {
        let mut mat = ExplicitMatrix::from_oracle(&build_chirp(5).unwrap()).unwrap();
        let c0 = mat.columns_mut()[0].clone();
        for col in mat.columns_mut().iter_mut() {
            *col = c0.clone();
        }
        let s = condition_experiment(&mat, 2, 3, 0).unwrap();
        assert_eq!(s.singular, 3);
        assert!(s.mean.is_infinite());
    }

    #[test]
    fn uniqueness_cases() {
        let mat = build_chirp(5).unwrap();
        let mut rng = trial_rng(1, 0, 0);
        for _ in 0..20 {
            let a = sample_signal_with(&mut rng, 25, 1, ValueModel::Gaussian).unwrap();
            assert!(uniqueness_bruteforce(&mat, &a).unwrap());
        }
        let mut dup = ExplicitMatrix::from_oracle(&mat).unwrap();
        let copy = dup.columns_mut()[4].clone();
        dup.columns_mut()[9] = copy;
        let a = SparseSignal::new(25, vec![(4, Complex64::new(1.0, 0.0)), (13, Complex64::new(0.5, 0.5))]).unwrap();
        assert!(!uniqueness_bruteforce(&dup, &a).unwrap());
        assert!(uniqueness_bruteforce(&build_delsarte_goethals(9, 0).unwrap(), &SparseSignal::zero(1 << 18)).is_err());
    }
}
