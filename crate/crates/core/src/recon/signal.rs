//! Sparse signals, value models, and measurement with optional noise.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::SensingMatrix;
use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, distinct_tuple, trial_rng, unit_phase};

const STREAM_SIGNAL: u64 = 0x7369_676e_616c;
const STREAM_NOISE: u64 = 0x6e6f_6973_6500;

/// Distribution of the nonzero values of a sparse signal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueModel {
    /// Uniform on the unit sphere of C^k.
    #[default]
    UnitSphere,
    /// i.i.d. standard complex Gaussian (unit variance per component).
    Gaussian,
    /// Unit magnitude with uniform random phase.
    UnitPhase,
}

impl ValueModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, k: usize) -> Vec<Complex64> {
        match self {
            ValueModel::UnitSphere => {
                if k == 0 {
                    return Vec::new();
                }
                loop {
                    let v: Vec<Complex64> = (0..k).map(|_| complex_gaussian(rng, 1.0)).collect();
                    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    if norm > 1e-300 {
                        return v.into_iter().map(|z| z / norm).collect();
                    }
                }
            }
            ValueModel::Gaussian => (0..k)
                .map(|_| loop {
                    let z = complex_gaussian(rng, 1.0);
                    if z.norm() > 0.0 {
                        break z;
                    }
                })
                .collect(),
            ValueModel::UnitPhase => (0..k).map(|_| unit_phase(rng)).collect(),
        }
    }
}

impl std::str::FromStr for ValueModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_sphere" | "sphere" => Ok(ValueModel::UnitSphere),
            "gaussian" => Ok(ValueModel::Gaussian),
            "unit_phase" | "phase" => Ok(ValueModel::UnitPhase),
            _ => Err(Error::param("value_model", format!("unknown model `{s}`"))),
        }
    }
}

/// k-sparse vector in C^C stored as sorted (index, value) pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    dim: usize,
    entries: Vec<(usize, Complex64)>,
}

impl SparseSignal {
    pub fn new(dim: usize, mut entries: Vec<(usize, Complex64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::param("entries", format!("index {} repeated", w[0].0)));
            }
        }
        if let Some(&(j, _)) = entries.iter().find(|e| e.0 >= dim) {
            return Err(Error::ColumnOutOfRange { index: j, cols: dim });
        }
        if let Some(&(j, _)) = entries.iter().find(|e| e.1 == Complex64::new(0.0, 0.0)) {
            return Err(Error::param("entries", format!("value at index {j} is zero")));
        }
        Ok(SparseSignal { dim, entries })
    }

    pub fn zero(dim: usize) -> Self {
        SparseSignal { dim, entries: Vec::new() }
    }

    /// Ambient dimension C.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, Complex64)] {
        &self.entries
    }

    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn get(&self, index: usize) -> Complex64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map_or(Complex64::new(0.0, 0.0), |i| self.entries[i].1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm()).sum()
    }

    /// `||alpha||_1 / ||alpha||_2`, between 1 and sqrt(k).
    pub fn rho(&self) -> f64 {
        self.l1_norm() / self.norm()
    }

    /// The `k` largest-magnitude entries.
    pub fn best_k_term(&self, k: usize) -> SparseSignal {
        let mut by_mag = self.entries.clone();
        by_mag.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()).then(a.0.cmp(&b.0)));
        by_mag.truncate(k);
        by_mag.sort_by_key(|e| e.0);
        SparseSignal { dim: self.dim, entries: by_mag }
    }

    /// `||self - other||_2` over the union of supports.
    pub fn distance(&self, other: &SparseSignal) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut acc = 0.0;
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                acc += a[i].1.norm_sqr();
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                acc += b[j].1.norm_sqr();
                j += 1;
            } else {
                acc += (a[i].1 - b[j].1).norm_sqr();
                i += 1;
                j += 1;
            }
        }
        acc.sqrt()
    }

    /// Sum of two signals on the same ambient space, dropping exact zeros.
    pub fn add(&self, other: &SparseSignal) -> Result<SparseSignal> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut map: std::collections::BTreeMap<usize, Complex64> = self.entries.iter().copied().collect();
        for &(j, v) in &other.entries {
            *map.entry(j).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        let entries = map.into_iter().filter(|e| e.1 != Complex64::new(0.0, 0.0)).collect();
        Ok(SparseSignal { dim: self.dim, entries })
    }
}

/// Uniform support among k-subsets of `0..c`, values per `model`, reproducible from `seed`.
pub fn sample_signal(c: usize, k: usize, model: ValueModel, seed: u64) -> Result<SparseSignal> {
    let mut rng = trial_rng(seed, STREAM_SIGNAL, 0);
    sample_signal_with(&mut rng, c, k, model)
}

pub fn sample_signal_with<R: Rng + ?Sized>(rng: &mut R, c: usize, k: usize, model: ValueModel) -> Result<SparseSignal> {
    if k > c {
        return Err(Error::param("k", format!("sparsity {k} exceeds dimension {c}")));
    }
    let support = distinct_tuple(rng, c, k);
    let values = model.sample(rng, k);
    SparseSignal::new(c, support.into_iter().zip(values).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    None,
    /// i.i.d. complex Gaussian added to every measurement, variance `sigma^2` per component.
    Measurement { sigma: f64 },
    /// Gaussian noise `mu` on every one of the C signal coordinates, pushed through the matrix.
    Signal { sigma: f64 },
}

/// `f = N^{-1/2} Phi alpha` plus optional noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub values: Vec<Complex64>,
    pub noise: Noise,
    /// The noise vector that was added, kept so experiments can report its norm.
    #[serde(skip)]
    pub noise_vector: Option<Vec<Complex64>>,
}

impl Measurement {
    pub fn norm(&self) -> f64 {
        l2(&self.values)
    }

    pub fn noise_norm(&self) -> f64 {
        self.noise_vector.as_deref().map_or(0.0, l2)
    }
}

pub(crate) fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Adds `scale * phi_j` to `acc` without allocating.
pub(crate) fn accumulate_column(matrix: &SensingMatrix, j: usize, scale: Complex64, acc: &mut [Complex64], scratch: &mut [Complex64]) -> Result<()> {
    matrix.column_into(j, scratch)?;
    for (a, c) in acc.iter_mut().zip(scratch.iter()) {
        *a += scale * c;
    }
    Ok(())
}

/// Noiseless `N^{-1/2} Phi alpha`.
pub fn apply(matrix: &SensingMatrix, alpha: &SparseSignal) -> Result<Vec<Complex64>> {
    if matrix.cols() != alpha.dim() {
        return Err(Error::DimensionMismatch { expected: matrix.cols(), got: alpha.dim() });
    }
    let n = matrix.rows();
    let scale = 1.0 / (n as f64).sqrt();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for &(j, v) in alpha.entries() {
        accumulate_column(matrix, j, v * scale, &mut acc, &mut scratch)?;
    }
    Ok(acc)
}

pub fn measure(matrix: &SensingMatrix, alpha: &SparseSignal, noise: Noise, seed: u64) -> Result<Measurement> {
    let mut rng = trial_rng(seed, STREAM_NOISE, 0);
    measure_with(matrix, alpha, noise, &mut rng)
}

pub fn measure_with<R: Rng + ?Sized>(matrix: &SensingMatrix, alpha: &SparseSignal, noise: Noise, rng: &mut R) -> Result<Measurement> {
    let mut values = apply(matrix, alpha)?;
    let n = matrix.rows();
    let noise_vector = match noise {
        Noise::None => None,
        Noise::Measurement { sigma } => {
            check_sigma(sigma)?;
            Some((0..n).map(|_| complex_gaussian(rng, sigma)).collect::<Vec<_>>())
        }
        Noise::Signal { sigma } => {
            check_sigma(sigma)?;
            let c = matrix.cols();
            if c > 1 << 22 {
                return Err(Error::TooLarge {
                    reason: format!("signal-domain noise needs all {c} columns"),
                });
            }
            let scale = 1.0 / (n as f64).sqrt();
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..c {
                let mu = complex_gaussian(rng, sigma);
                accumulate_column(matrix, j, mu * scale, &mut acc, &mut scratch)?;
            }
            Some(acc)
        }
    };
    if let Some(nu) = &noise_vector {
        for (v, e) in values.iter_mut().zip(nu) {
            *v += e;
        }
    }
    Ok(Measurement { values, noise, noise_vector })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be finite and nonnegative, got {sigma}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{build_chirp, build_delsarte_goethals};

    #[test]
    fn empty_and_deterministic() {
        assert_eq!(sample_signal(100, 0, ValueModel::UnitSphere, 1).unwrap().k(), 0);
        let a = sample_signal(1 << 18, 40, ValueModel::UnitPhase, 9).unwrap();
        let b = sample_signal(1 << 18, 40, ValueModel::UnitPhase, 9).unwrap();
        assert_eq!(a, b);
        assert!(sample_signal(3, 4, ValueModel::Gaussian, 0).is_err());
    }

    #[test]
    fn value_models() {
        let mut rng = trial_rng(1, 0, 0);
        let v = ValueModel::UnitSphere.sample(&mut rng, 7);
        assert!((l2(&v) - 1.0).abs() < 1e-12);
        let v = ValueModel::UnitPhase.sample(&mut rng, 7);
        assert!(v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn signal_validation_and_helpers() {
        let one = Complex64::new(1.0, 0.0);
        assert!(SparseSignal::new(4, vec![(1, one), (1, one)]).is_err());
        assert!(SparseSignal::new(4, vec![(4, one)]).is_err());
        assert!(SparseSignal::new(4, vec![(2, Complex64::new(0.0, 0.0))]).is_err());
        let s = SparseSignal::new(10, vec![(7, one * 3.0), (2, one), (5, one * -2.0)]).unwrap();
        assert_eq!(s.indices(), vec![2, 5, 7]);
        assert_eq!(s.best_k_term(2).indices(), vec![5, 7]);
        assert!((s.distance(&s.best_k_term(2)) - 1.0).abs() < 1e-15);
        assert!((s.rho() - 6.0 / 14f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.get(5), one * -2.0);
    }

    #[test]
    fn measure_basics() {
        let mat = build_delsarte_goethals(5, 0).unwrap();
        let zero = SparseSignal::zero(mat.cols());
        let f = measure(&mat, &zero, Noise::None, 0).unwrap();
        assert!(f.values.iter().all(|z| z.norm() == 0.0));
        let single = SparseSignal::new(mat.cols(), vec![(777, Complex64::new(1.0, 0.0))]).unwrap();
        let f = measure(&mat, &single, Noise::None, 0).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-12);
        assert!(measure(&build_chirp(5).unwrap(), &single, Noise::None, 0).is_err());
    }

    #[test]
    fn signal_noise_covariance() {
        let mat = build_chirp(5).unwrap();
        let (n, c) = (mat.rows(), mat.cols());
        let sigma = 0.3;
        let zero = SparseSignal::zero(c);
        let trials = 10_000;
        let mut cov = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        let mut rng = trial_rng(4, 0, 0);
        for _ in 0..trials {
            let f = measure_with(&mat, &zero, Noise::Signal { sigma }, &mut rng).unwrap();
            for x in 0..n {
                for y in 0..n {
                    cov[x][y] += f.values[x] * f.values[y].conj();
                }
            }
        }
        let expected = 2.0 * sigma * sigma * c as f64 / n as f64;
        for x in 0..n {
            for y in 0..n {
                let e = cov[x][y] / trials as f64;
                let want = if x == y { expected } else { 0.0 };
                // standard error of each entry is about expected / sqrt(trials)
                assert!((e - want).norm() < 5.0 * expected / (trials as f64).sqrt(), "({x},{y}) {e} vs {want}");
            }
        }
    }
}
