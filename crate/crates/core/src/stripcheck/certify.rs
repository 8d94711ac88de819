//! Certification of the three structural conditions: orthogonal zero-sum
//! rows, closure of the column set under pointwise multiplication, and the
//! column-sum exponent eta.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::ColumnOracle;
use crate::error::{Error, Result};
use crate::rng::{splitmix64, trial_rng};

const STREAM_CERTIFY: u64 = 0x6365_7274_0000;
/// Bucket width of the column key; products land within rounding error of
/// their column, far below this width.
pub const HASH_GRID: f64 = 1e-6;
pub const EXHAUSTIVE_LIMIT: usize = 1 << 16;
pub const SAMPLED_LIMIT: usize = 1 << 20;
/// Largest N * N * C for which row orthogonality is checked on every row pair.
const GRAM_WORK_LIMIT: usize = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CertifyMode {
    /// Every row pair, every column sum, and a generator-based proof of closure.
    Exhaustive,
    /// Sampled row pairs and column pairs; column sums still exhaustive.
    Sampled { pairs: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosureWitness {
    DuplicateColumn { first: usize, second: usize },
    NoIdentityColumn,
    ProductMissing { left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripCertificate {
    pub matrix: String,
    pub mode: CertifyMode,
    pub rows: usize,
    pub cols: usize,
    pub tolerance: f64,
    pub st1_row_orthogonality_pass: bool,
    /// max over row pairs x != y of |<row x, row y>| / C, and max |‖row‖²/C - 1|.
    pub st1_max_row_deviation: f64,
    pub st1_row_pair_witness: Option<(usize, usize)>,
    pub st1_row_sum_pass: bool,
    /// max |row sum| / C.
    pub st1_max_row_sum: f64,
    pub st1_row_sum_witness: Option<usize>,
    pub st2_pass: bool,
    pub st2_witness: Option<ClosureWitness>,
    pub st2_products_checked: u64,
    pub st2_generators: usize,
    /// 2 - log(max |S|²) / log N, clamped to at most 2.
    pub st3_eta: f64,
    pub max_column_sum_sq: f64,
    pub max_column_sum_index: Option<usize>,
    /// Distinct values of |S|² over non-identity columns (rounded to 1e-6), at most 16.
    pub column_sum_sq_levels: Vec<f64>,
}

impl StripCertificate {
    pub fn st1_pass(&self) -> bool {
        self.st1_row_orthogonality_pass && self.st1_row_sum_pass
    }

    pub fn all_pass(&self) -> bool {
        self.st1_pass() && self.st2_pass
    }
}

/// eta from the largest squared non-identity column sum.
pub fn eta_from_column_sum(max_sq: f64, n: usize) -> f64 {
    if max_sq <= 0.0 || n < 2 {
        return 2.0;
    }
    (2.0 - max_sq.ln() / (n as f64).ln()).min(2.0)
}

/// Random projection of a column onto fixed pseudo-random weights, bucketed
/// on a grid. Lookups probe the neighbouring buckets too, so a product that
/// differs from its column only by rounding never falls across a bucket edge.
fn column_key(col: &[Complex64]) -> i64 {
    let unit = |h: u64| (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
    let s: f64 = col
        .iter()
        .enumerate()
        .map(|(x, z)| {
            let h = splitmix64(x as u64);
            z.re * unit(h) + z.im * unit(splitmix64(h))
        })
        .sum();
    (s / HASH_GRID).floor() as i64
}

fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

/// Column lookup by quantized hash, verified entrywise.
struct ColumnIndex<'a, M: ColumnOracle + ?Sized> {
    matrix: &'a M,
    buckets: HashMap<i64, Vec<u32>>,
    tol: f64,
}

impl<M: ColumnOracle + ?Sized> ColumnIndex<'_, M> {
    fn find(&self, col: &[Complex64], scratch: &mut [Complex64]) -> Result<Option<usize>> {
        let key = column_key(col);
        for k in key - 1..=key + 1 {
            for &j in self.buckets.get(&k).map_or(&[][..], Vec::as_slice) {
                self.matrix.column_into(j as usize, scratch)?;
                if close(col, scratch, self.tol) {
                    return Ok(Some(j as usize));
                }
            }
        }
        Ok(None)
    }
}

pub fn certify<M: ColumnOracle + ?Sized>(matrix: &M, mode: CertifyMode, tol: f64) -> Result<StripCertificate> {
    let (n, c) = (matrix.rows(), matrix.cols());
    let limit = match mode {
        CertifyMode::Exhaustive => EXHAUSTIVE_LIMIT,
        CertifyMode::Sampled { .. } => SAMPLED_LIMIT,
    };
    if c > limit {
        return Err(Error::TooLarge {
            reason: format!("{c} columns exceeds the {limit}-column limit for this mode"),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {tol}")));
    }

    // Row pairs checked for orthogonality.
    let full_gram = matches!(mode, CertifyMode::Exhaustive) || n * n * c <= GRAM_WORK_LIMIT;
    let row_pairs: Vec<(usize, usize)> = if full_gram {
        Vec::new()
    } else {
        let CertifyMode::Sampled { pairs, seed } = mode else { unreachable!() };
        let mut rng = trial_rng(seed, STREAM_CERTIFY, 0);
        (0..pairs.max(1))
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect()
    };

    let mut gram = if full_gram { vec![Complex64::new(0.0, 0.0); n * n] } else { Vec::new() };
    let mut pair_acc = vec![Complex64::new(0.0, 0.0); row_pairs.len()];
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut buckets: HashMap<i64, Vec<u32>> = HashMap::with_capacity(c);
    let mut duplicate = None;
    let mut max_sq = 0.0f64;
    let mut max_idx = None;
    let mut levels: Vec<f64> = Vec::new();
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    let mut other = vec![Complex64::new(0.0, 0.0); n];

    for j in 0..c {
        matrix.column_into(j, &mut col)?;
        for (s, v) in row_sums.iter_mut().zip(&col) {
            *s += v;
        }
        if full_gram {
            for x in 0..n {
                let cx = col[x];
                let row = &mut gram[x * n..(x + 1) * n];
                for (g, cy) in row.iter_mut().zip(&col) {
                    *g += cx * cy.conj();
                }
            }
        } else {
            for (acc, &(x, y)) in pair_acc.iter_mut().zip(&row_pairs) {
                *acc += col[x] * col[y].conj();
            }
        }

        if j > 0 {
            let s: Complex64 = col.iter().sum();
            let sq = s.norm_sqr();
            if sq > max_sq {
                max_sq = sq;
                max_idx = Some(j);
            }
            let level = (sq * 1e6).round() / 1e6;
            if levels.len() < 16 && !levels.iter().any(|&l| (l - level).abs() <= 1e-6 * level.max(1.0)) {
                levels.push(level);
            }
        }

        let key = column_key(&col);
        if duplicate.is_none() {
            'probe: for k in key - 1..=key + 1 {
                for &i in buckets.get(&k).map_or(&[][..], Vec::as_slice) {
                    matrix.column_into(i as usize, &mut other)?;
                    if close(&col, &other, tol) {
                        duplicate = Some(ClosureWitness::DuplicateColumn { first: i as usize, second: j });
                        break 'probe;
                    }
                }
            }
        }
        buckets.entry(key).or_default().push(j as u32);
    }
    levels.sort_by(f64::total_cmp);

    let cf = c as f64;
    let mut dev = 0.0f64;
    let mut dev_pair = None;
    let mut note = |d: f64, x: usize, y: usize| {
        if d > dev {
            dev = d;
            dev_pair = Some((x, y));
        }
    };
    if full_gram {
        for x in 0..n {
            for y in 0..n {
                let g = gram[x * n + y] / cf;
                let d = if x == y { (g - 1.0).norm() } else { g.norm() };
                note(d, x, y);
            }
        }
    } else {
        for (acc, &(x, y)) in pair_acc.iter().zip(&row_pairs) {
            let g = acc / cf;
            let d = if x == y { (g - 1.0).norm() } else { g.norm() };
            note(d, x, y);
        }
    }
    let (row_sum_max, row_sum_at) = row_sums
        .iter()
        .enumerate()
        .map(|(x, s)| (s.norm() / cf, x))
        .fold((0.0, None), |acc, (v, x)| if v > acc.0 { (v, Some(x)) } else { acc });

    let index = ColumnIndex { matrix, buckets, tol };
    let (st2_witness, checked, generators) = match duplicate {
        Some(w) => (Some(w), 0, 0),
        None => match mode {
            CertifyMode::Exhaustive => closure_by_generators(&index, c, n)?,
            CertifyMode::Sampled { pairs, seed } => closure_sampled(&index, c, n, pairs, seed)?,
        },
    };

    Ok(StripCertificate {
        matrix: matrix.label(),
        mode,
        rows: n,
        cols: c,
        tolerance: tol,
        st1_row_orthogonality_pass: dev <= tol,
        st1_max_row_deviation: dev,
        st1_row_pair_witness: if dev > tol { dev_pair } else { None },
        st1_row_sum_pass: row_sum_max <= tol,
        st1_max_row_sum: row_sum_max,
        st1_row_sum_witness: if row_sum_max > tol { row_sum_at } else { None },
        st2_pass: st2_witness.is_none(),
        st2_witness,
        st2_products_checked: checked,
        st2_generators: generators,
        st3_eta: eta_from_column_sum(max_sq, n),
        max_column_sum_sq: max_sq,
        max_column_sum_index: max_idx,
        column_sum_sq_levels: levels,
    })
}

fn product(a: &[Complex64], b: &[Complex64], out: &mut [Complex64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x * y;
    }
}

/// Grows the subgroup generated by greedily chosen generators until it covers
/// every column. Each member is multiplied by each generator once, so the cost
/// is O(C |T| N) with |T| <= log2 C for the abelian 2-groups used here; a product
/// that is not a column is a witness against closure.
fn closure_by_generators<M: ColumnOracle + ?Sized>(index: &ColumnIndex<M>, c: usize, n: usize) -> Result<(Option<ClosureWitness>, u64, usize)> {
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let identity_col = vec![Complex64::new(1.0, 0.0); n];
    let Some(id) = index.find(&identity_col, &mut scratch)? else {
        return Ok((Some(ClosureWitness::NoIdentityColumn), 0, 0));
    };
    let mut reached = vec![false; c];
    reached[id] = true;
    let mut members = vec![id];
    // generators already applied to members[i]
    let mut applied: Vec<usize> = vec![0];
    let mut generators: Vec<usize> = Vec::new();
    let mut next_unreached = 0;
    let mut checked = 0u64;
    let (mut a, mut g, mut prod) = (scratch.clone(), scratch.clone(), scratch.clone());

    loop {
        let mut i = 0;
        while i < members.len() {
            while applied[i] < generators.len() {
                let gen = generators[applied[i]];
                index.matrix.column_into(members[i], &mut a)?;
                index.matrix.column_into(gen, &mut g)?;
                product(&a, &g, &mut prod);
                checked += 1;
                match index.find(&prod, &mut scratch)? {
                    None => {
                        return Ok((Some(ClosureWitness::ProductMissing { left: members[i], right: gen }), checked, generators.len()));
                    }
                    Some(k) => {
                        if !reached[k] {
                            reached[k] = true;
                            members.push(k);
                            applied.push(0);
                        }
                    }
                }
                applied[i] += 1;
            }
            i += 1;
        }
        while next_unreached < c && reached[next_unreached] {
            next_unreached += 1;
        }
        if next_unreached == c {
            break;
        }
        generators.push(next_unreached);
        reached[next_unreached] = true;
        members.push(next_unreached);
        applied.push(0);
    }
    Ok((None, checked, generators.len()))
}

fn closure_sampled<M: ColumnOracle + ?Sized>(index: &ColumnIndex<M>, c: usize, n: usize, pairs: usize, seed: u64) -> Result<(Option<ClosureWitness>, u64, usize)> {
    let mut rng = trial_rng(seed, STREAM_CERTIFY, 1);
    let (mut a, mut b, mut prod, mut scratch) = (
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
    );
    for t in 0..pairs {
        let (j, k) = (rng.gen_range(0..c), rng.gen_range(0..c));
        index.matrix.column_into(j, &mut a)?;
        index.matrix.column_into(k, &mut b)?;
        product(&a, &b, &mut prod);
        if index.find(&prod, &mut scratch)?.is_none() {
            return Ok((Some(ClosureWitness::ProductMissing { left: j, right: k }), t as u64 + 1, 0));
        }
    }
    Ok((None, pairs as u64, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{build_chirp, build_delsarte_goethals, build_gaussian, ExplicitMatrix, Family, MatrixSpec};

    #[test]
    fn chirp5_passes_with_eta_one() {
        let cert = certify(&build_chirp(5).unwrap(), CertifyMode::Exhaustive, 1e-9).unwrap();
        assert!(cert.all_pass(), "{cert:?}");
        assert!((cert.st3_eta - 1.0).abs() < 1e-9);
        assert_eq!(cert.column_sum_sq_levels, vec![0.0, 5.0]);
    }

    #[test]
    fn kerdock3_levels() {
        let cert = certify(&build_delsarte_goethals(3, 0).unwrap(), CertifyMode::Exhaustive, 1e-9).unwrap();
        assert!(cert.all_pass());
        assert_eq!(cert.column_sum_sq_levels, vec![0.0, 8.0]);
        assert!((cert.st3_eta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn subsampled_matrix_fails_closure() {
        let mat = MatrixSpec::new(Family::Chirp { p: 7 }).with_subsample(20).with_seed(1).build().unwrap();
        let cert = certify(&mat, CertifyMode::Exhaustive, 1e-9).unwrap();
        assert!(!cert.st2_pass);
        assert!(matches!(cert.st2_witness, Some(ClosureWitness::ProductMissing { .. })));
    }

    #[test]
    fn repeated_column_witness() {
        let mut mat = ExplicitMatrix::from_oracle(&build_chirp(5).unwrap()).unwrap();
        let copy = mat.columns_mut()[3].clone();
        mat.columns_mut()[11] = copy;
        let cert = certify(&mat, CertifyMode::Exhaustive, 1e-9).unwrap();
        assert!(!cert.st2_pass);
        assert_eq!(cert.st2_witness, Some(ClosureWitness::DuplicateColumn { first: 3, second: 11 }));
    }

    #[test]
    fn gaussian_fails_everything_but_reports_eta() {
        let cert = certify(&build_gaussian(8, 32, 3).unwrap(), CertifyMode::Exhaustive, 1e-9).unwrap();
        assert!(!cert.st1_pass());
        assert!(cert.st1_row_sum_witness.is_some());
        assert!(!cert.st2_pass);
        assert!(cert.st3_eta < 2.0);
    }

    #[test]
    fn sampled_mode_agrees_on_structured_family() {
        let mat = build_delsarte_goethals(5, 1).unwrap();
        let cert = certify(&mat, CertifyMode::Sampled { pairs: 2000, seed: 5 }, 1e-9).unwrap();
        assert!(cert.all_pass());
        assert_eq!(cert.st2_products_checked, 2000);
    }

    #[test]
    fn size_limits() {
        let mat = build_delsarte_goethals(9, 0).unwrap();
        assert!(matches!(certify(&mat, CertifyMode::Exhaustive, 1e-9), Err(Error::TooLarge { .. })));
        assert!(certify(&build_chirp(5).unwrap(), CertifyMode::Exhaustive, 0.0).is_err());
    }

    #[test]
    fn eta_formula() {
        assert_eq!(eta_from_column_sum(0.0, 8), 2.0);
        assert!((eta_from_column_sum(8.0, 8) - 1.0).abs() < 1e-15);
        assert!((eta_from_column_sum(64.0, 8)).abs() < 1e-15);
    }
}
