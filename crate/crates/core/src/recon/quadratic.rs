//! Quadratic reconstruction for Delsarte-Goethals measurements: shift,
//! multiply, Walsh-Hadamard transform, dechirp, peel.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::signal::l2;
use super::SparseSignal;
use crate::algebra::{least_squares, BinarySymmetricMatrix};
use crate::ensembles::{quadratic_column, FamilyTag, SensingMatrix};
use crate::error::{Error, Result};
use crate::wht::fwht_in_place;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest DG set (number of matrices) scored exhaustively by voting.
pub const VOTING_SET_LIMIT: u64 = 1 << 16;

/// `g_a(x) = f(x xor a) conj(f(x))`.
pub fn shift_multiply(f: &[Complex64], a: u64) -> Result<Vec<Complex64>> {
    let mut out = vec![ZERO; f.len()];
    shift_multiply_into(f, a, &mut out)?;
    Ok(out)
}

fn shift_multiply_into(f: &[Complex64], a: u64, out: &mut [Complex64]) -> Result<()> {
    let n = f.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::param("f", format!("length {n} is not a power of two")));
    }
    if a as usize >= n {
        return Err(Error::param("a", format!("offset {a} outside 0..{n}")));
    }
    for (x, o) in out.iter_mut().enumerate() {
        *o = f[x ^ a as usize] * f[x].conj();
    }
    Ok(())
}

/// How the spectra at different offsets are combined into a matrix estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Association {
    /// Offsets `e_1..e_m`; row `i` of the estimate is a top peak at offset `e_i`.
    /// Tries the all-dominant choice first, then single substitutions from the
    /// `width` strongest peaks per offset.
    OffsetPeaks { width: usize },
    /// Scores every matrix `P` of the set by `sum_a |W_a(aP)|^2` over offsets
    /// `a = 1..=offsets` (all nonzero offsets when `None`) and dechirps the best
    /// `candidates`. Falls back to `OffsetPeaks { width: 3 }` on sets larger
    /// than [`VOTING_SET_LIMIT`].
    Voting { offsets: Option<usize>, candidates: usize },
}

impl Default for Association {
    fn default() -> Self {
        Association::Voting { offsets: None, candidates: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconConfig {
    pub k_max: usize,
    /// Residual norm at which to stop; `1e-6 ||f||` when `None`.
    pub stop_eps: Option<f64>,
    /// Iteration cap; `2 k_max` when `None`.
    pub max_iterations: Option<usize>,
    pub association: Association,
    /// Least-squares re-fit of the detected support (pruned to `k_max`) at the end.
    pub refine: bool,
}

impl ReconConfig {
    pub fn new(k_max: usize) -> Self {
        ReconConfig { k_max, stop_eps: None, max_iterations: None, association: Association::default(), refine: true }
    }

    pub fn with_association(mut self, association: Association) -> Self {
        self.association = association;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    /// Flat column index of the detected `(P, b)`.
    pub column: usize,
    pub p_index: u64,
    pub b: u64,
    pub beta: Complex64,
    /// Residual norm after peeling.
    pub residual: f64,
    /// The column had been peeled before and was restored first.
    pub restored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconResult {
    pub alpha_hat: SparseSignal,
    pub iterations: Vec<IterationLog>,
    /// Residual `||f - N^{-1/2} Phi alpha_hat||` of the returned estimate.
    pub residual: f64,
    /// The residual fell below the stopping threshold.
    pub success: bool,
}

impl ReconResult {
    /// Same support as `truth` and every value within `tol * ||truth||`.
    pub fn matches(&self, truth: &SparseSignal, tol: f64) -> bool {
        self.alpha_hat.indices() == truth.indices() && self.alpha_hat.distance(truth) <= tol * truth.norm().max(1e-300)
    }
}

struct Decoder<'a> {
    matrix: &'a SensingMatrix,
    m: u32,
    n: usize,
    // P e_i for every matrix in the set, when voting
    columns: Option<Vec<Vec<u64>>>,
    association: Association,
}

impl<'a> Decoder<'a> {
    fn new(matrix: &'a SensingMatrix, association: Association) -> Result<Self> {
        if matrix.family() != FamilyTag::Dg {
            return Err(Error::WrongFamily { family: matrix.family().to_string() });
        }
        if matrix.is_subsampled() {
            return Err(Error::param("matrix", "reconstruction needs every column of the set"));
        }
        let set = matrix.dg_set().expect("dg family carries its set");
        let m = set.m();
        let size = 1u64 << set.dimension();
        let (columns, association) = match association {
            Association::Voting { .. } if size > VOTING_SET_LIMIT => (None, Association::OffsetPeaks { width: 3 }),
            Association::Voting { candidates, .. } if candidates == 0 => {
                return Err(Error::param("candidates", "must be at least 1"));
            }
            Association::Voting { .. } => {
                let cols = (0..size).map(|p| set.matrix(p).rows().to_vec()).collect();
                (Some(cols), association)
            }
            Association::OffsetPeaks { width } if width == 0 => return Err(Error::param("width", "must be at least 1")),
            other => (None, other),
        };
        Ok(Decoder { matrix, m, n: 1 << m, columns, association })
    }

    /// Candidate matrices for the strongest component of `f`, best first.
    fn candidates(&self, f: &[Complex64], spec: &mut [Complex64]) -> Vec<BinarySymmetricMatrix> {
        let set = self.matrix.dg_set().expect("dg");
        match self.association {
            Association::Voting { offsets, candidates } => {
                let cols = self.columns.as_ref().expect("voting tables");
                let s = offsets.unwrap_or(self.n - 1).clamp(1, self.n - 1);
                let mut power = vec![0.0f64; s * self.n];
                for a in 1..=s {
                    shift_multiply_into(f, a as u64, spec).expect("length checked");
                    fwht_in_place(spec).expect("length checked");
                    for (p, w) in power[(a - 1) * self.n..a * self.n].iter_mut().zip(spec.iter()) {
                        *p = w.norm_sqr();
                    }
                }
                let mut pa = vec![0u64; s + 1];
                let mut scores: Vec<(f64, u64)> = cols
                    .iter()
                    .enumerate()
                    .map(|(pi, col)| {
                        let mut score = 0.0;
                        for a in 1..=s {
                            pa[a] = pa[a & (a - 1)] ^ col[a.trailing_zeros() as usize];
                            score += power[(a - 1) * self.n + pa[a] as usize];
                        }
                        (score, pi as u64)
                    })
                    .collect();
                scores.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
                scores.into_iter().take(candidates).map(|(_, p)| set.matrix(p)).collect()
            }
            Association::OffsetPeaks { width } => {
                let mut peaks: Vec<Vec<u64>> = Vec::with_capacity(self.m as usize);
                for i in 0..self.m {
                    shift_multiply_into(f, 1 << i, spec).expect("length checked");
                    fwht_in_place(spec).expect("length checked");
                    let mut order: Vec<usize> = (0..self.n).collect();
                    order.sort_by(|&x, &y| spec[y].norm_sqr().total_cmp(&spec[x].norm_sqr()).then(x.cmp(&y)));
                    peaks.push(order.into_iter().take(width).map(|l| l as u64).collect());
                }
                let top: Vec<u64> = peaks.iter().map(|p| p[0]).collect();
                let mut tries = vec![top.clone()];
                for (i, p) in peaks.iter().enumerate() {
                    for &alt in p.iter().skip(1) {
                        let mut rows = top.clone();
                        rows[i] = alt;
                        tries.push(rows);
                    }
                }
                let mut out: Vec<BinarySymmetricMatrix> = Vec::new();
                for rows in tries {
                    if let Ok(p) = BinarySymmetricMatrix::from_rows(rows) {
                        if set.index_of(&p).is_some() && !out.contains(&p) {
                            out.push(p);
                        }
                    }
                }
                out
            }
        }
    }

    /// Best `(column, <phi, f>)` over the candidates' dechirped spectra.
    fn detect(&self, f: &[Complex64], cands: &[BinarySymmetricMatrix], spec: &mut [Complex64]) -> Option<(usize, u64, u64)> {
        let mut chirp = vec![ZERO; self.n];
        let mut best: Option<(f64, usize, u64, u64)> = None;
        for p in cands {
            quadratic_column(p, 0, &mut chirp);
            for ((s, &v), c) in spec.iter_mut().zip(f).zip(&chirp) {
                *s = v * c.conj();
            }
            fwht_in_place(spec).expect("length checked");
            let (b, mag) = spec
                .iter()
                .enumerate()
                .map(|(b, w)| (b, w.norm_sqr()))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best.map_or(true, |bb| mag > bb.0) {
                let column = self.matrix.quadratic_index(p, b as u64)?;
                let pi = self.matrix.dg_set()?.index_of(p)?;
                best = Some((mag, column, pi, b as u64));
            }
        }
        best.map(|(_, c, p, b)| (c, p, b))
    }
}

/// Recovers a sparse `alpha` from `f = N^{-1/2} Phi alpha (+ noise)` for a DG matrix.
///
/// Each iteration finds the strongest remaining column, projects the residual
/// onto it, and peels it. A column detected again is first restored, so its
/// coefficient is re-estimated against the current residual. Deterministic.
pub fn quadratic_reconstruct(matrix: &SensingMatrix, f: &[Complex64], config: &ReconConfig) -> Result<ReconResult> {
    if config.k_max == 0 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    let decoder = Decoder::new(matrix, config.association)?;
    let n = decoder.n;
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let f_norm = l2(f);
    let stop = config.stop_eps.unwrap_or(1e-6 * f_norm);
    let cap = config.max_iterations.unwrap_or(2 * config.k_max);
    let scale = 1.0 / (n as f64).sqrt();

    let mut residual = f.to_vec();
    let mut estimate: BTreeMap<usize, Complex64> = BTreeMap::new();
    let mut log = Vec::new();
    let mut spec = vec![ZERO; n];
    let mut phi = vec![ZERO; n];

    while log.len() < cap && l2(&residual) >= stop && l2(&residual) > 0.0 {
        let cands = decoder.candidates(&residual, &mut spec);
        let Some((column, p_index, b)) = decoder.detect(&residual, &cands, &mut spec) else {
            break;
        };
        matrix.column_into(column, &mut phi)?;
        let restored = if let Some(old) = estimate.remove(&column) {
            for (r, c) in residual.iter_mut().zip(&phi) {
                *r += old * scale * c;
            }
            true
        } else {
            false
        };
        let beta: Complex64 = phi.iter().zip(&residual).map(|(c, r)| c.conj() * r).sum::<Complex64>() * scale;
        for (r, c) in residual.iter_mut().zip(&phi) {
            *r -= beta * scale * c;
        }
        if beta.norm() > 0.0 {
            estimate.insert(column, beta);
        }
        log.push(IterationLog { column, p_index, b, beta, residual: l2(&residual), restored });
    }

    let mut entries: Vec<(usize, Complex64)> = estimate.into_iter().collect();
    if config.refine && !entries.is_empty() {
        entries.sort_by(|x, y| y.1.norm().total_cmp(&x.1.norm()).then(x.0.cmp(&y.0)));
        entries.truncate(config.k_max);
        let cols: Vec<Vec<Complex64>> = entries
            .iter()
            .map(|&(j, _)| matrix.column(j).map(|c| c.into_iter().map(|z| z * scale).collect()))
            .collect::<Result<_>>()?;
        if let Some(coef) = least_squares(&cols, f) {
            for (e, c) in entries.iter_mut().zip(coef) {
                e.1 = c;
            }
        }
        entries.retain(|e| e.1.norm() > 0.0);
    }
    let alpha_hat = SparseSignal::new(matrix.cols(), entries)?;
    let fitted = super::apply(matrix, &alpha_hat)?;
    let final_residual = l2(&fitted.iter().zip(f).map(|(a, b)| b - a).collect::<Vec<_>>());
    Ok(ReconResult { alpha_hat, iterations: log, residual: final_residual, success: final_residual < stop.max(f64::MIN_POSITIVE) || f_norm == 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::build_delsarte_goethals;
    use crate::recon::{apply, sample_signal, ValueModel};
    use crate::wht::fwht;

    #[test]
    fn shift_multiply_basics() {
        let f: Vec<Complex64> = (0..8).map(|x| Complex64::new(x as f64, 1.0)).collect();
        let g = shift_multiply(&f, 0).unwrap();
        for (gx, fx) in g.iter().zip(&f) {
            assert!((gx - fx.norm_sqr()).norm() < 1e-12);
        }
        assert!(shift_multiply(&f, 8).is_err());
        assert!(shift_multiply(&f[..6], 1).is_err());
    }

    #[test]
    fn single_column_spectrum_is_one_tone() {
        let mat = build_delsarte_goethals(5, 1).unwrap();
        let n = mat.rows();
        for j in [0usize, 17, 5000, mat.cols() - 1] {
            let (p, _) = mat.quadratic_parts(j).unwrap();
            let f: Vec<Complex64> = mat.column(j).unwrap().into_iter().map(|z| z / (n as f64).sqrt()).collect();
            for a in [1u64, 6, 31] {
                let w = fwht(&shift_multiply(&f, a).unwrap()).unwrap();
                let peak = p.left_mul(a) as usize;
                for (l, v) in w.iter().enumerate() {
                    let want = if l == peak { 1.0 } else { 0.0 };
                    assert!((v.norm() - want).abs() < 1e-12, "j={j} a={a} l={l}");
                }
            }
        }
    }

    #[test]
    fn single_column_exact_for_every_column_m3() {
        let mat = build_delsarte_goethals(3, 0).unwrap();
        for assoc in [Association::default(), Association::OffsetPeaks { width: 3 }] {
            for j in 0..mat.cols() {
                let alpha = SparseSignal::new(mat.cols(), vec![(j, Complex64::new(0.6, -0.8))]).unwrap();
                let f = apply(&mat, &alpha).unwrap();
                let r = quadratic_reconstruct(&mat, &f, &ReconConfig::new(1).with_association(assoc)).unwrap();
                assert_eq!(r.alpha_hat.indices(), vec![j]);
                assert!(r.alpha_hat.distance(&alpha) < 1e-9);
                assert_eq!(r.iterations.len(), 1);
                assert!(r.success && r.residual < 1e-9);
            }
        }
    }

    #[test]
    fn zero_input_returns_empty() {
        let mat = build_delsarte_goethals(5, 0).unwrap();
        let r = quadratic_reconstruct(&mat, &[ZERO; 32], &ReconConfig::new(3)).unwrap();
        assert_eq!(r.alpha_hat.k(), 0);
        assert!(r.iterations.is_empty());
    }

    #[test]
    fn energy_conserved_at_each_detection() {
        let mat = build_delsarte_goethals(7, 0).unwrap();
        let alpha = sample_signal(mat.cols(), 4, ValueModel::UnitPhase, 3).unwrap();
        let f = apply(&mat, &alpha).unwrap();
        let mut cfg = ReconConfig::new(4);
        cfg.refine = false;
        let r = quadratic_reconstruct(&mat, &f, &cfg).unwrap();
        let mut prev = l2(&f);
        for it in r.iterations.iter().filter(|it| !it.restored) {
            assert!((prev * prev - it.beta.norm_sqr() - it.residual * it.residual).abs() < 1e-9);
            assert!(it.residual < prev);
            prev = it.residual;
        }
    }

    #[test]
    fn rejects_other_families() {
        let chirp = crate::ensembles::build_chirp(5).unwrap();
        assert!(matches!(quadratic_reconstruct(&chirp, &[ZERO; 5], &ReconConfig::new(1)), Err(Error::WrongFamily { .. })));
    }
}
