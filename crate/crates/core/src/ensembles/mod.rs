//! Sensing-matrix families as O(1)-storage column oracles.
//!
//! Columns are indexed from 0, and column 0 is the all-ones column for every
//! deterministic family. Matrices are immutable and evaluation is pure, so a
//! single matrix can be shared read-only across worker threads.

mod bch;
mod dg;

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{BinarySymmetricMatrix, I_POWERS};
use crate::error::{Error, Result};
use crate::rng::{box_muller, distinct_tuple, trial_rng};

pub use bch::{BchCode, SIGN_COORDINATES};
pub use dg::DgSet;

const STREAM_GAUSSIAN: u64 = 0x6761_7573_7300;
const STREAM_ROWS: u64 = 0x726f_7773_0000;
const STREAM_SUBSAMPLE: u64 = 0x7375_6273_0000;

/// Largest `N * C` accepted by [`SensingMatrix::to_csv`].
pub const CSV_EXPORT_LIMIT: usize = 1 << 20;

/// Family and its parameters. Serialized as `{"family": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    /// Discrete chirps of prime length `p`.
    Chirp { p: usize },
    /// Delsarte-Goethals DG(m, r); `r = 0` is the Kerdock set.
    Dg { m: u32, r: u32 },
    /// Every binary symmetric m x m matrix, i.e. the full second-order Reed-Muller coset set.
    Rm2 { m: u32 },
    /// Exponentiated dual-BCH codewords.
    Bch { m: u32, t: u32 },
    /// `n` random rows (never row 0) of the `c x c` DFT.
    PartialFourier { c: usize, n: usize },
    /// i.i.d. real standard normal entries.
    Gaussian { n: usize, c: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Chirp,
    Dg,
    Rm2,
    Bch,
    PartialFourier,
    Gaussian,
}

impl Family {
    pub fn tag(&self) -> FamilyTag {
        match self {
            Family::Chirp { .. } => FamilyTag::Chirp,
            Family::Dg { .. } => FamilyTag::Dg,
            Family::Rm2 { .. } => FamilyTag::Rm2,
            Family::Bch { .. } => FamilyTag::Bch,
            Family::PartialFourier { .. } => FamilyTag::PartialFourier,
            Family::Gaussian { .. } => FamilyTag::Gaussian,
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyTag::Chirp => "chirp",
            FamilyTag::Dg => "dg",
            FamilyTag::Rm2 => "rm2",
            FamilyTag::Bch => "bch",
            FamilyTag::PartialFourier => "partial_fourier",
            FamilyTag::Gaussian => "gaussian",
        };
        f.write_str(s)
    }
}

/// Serializable description from which a matrix is rebuilt deterministically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
    /// Keep only this many columns: column 0 plus a seeded uniform sample of the rest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<usize>,
}

impl MatrixSpec {
    pub fn new(family: Family) -> Self {
        MatrixSpec { family, seed: 0, subsample: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_subsample(mut self, columns: usize) -> Self {
        self.subsample = Some(columns);
        self
    }

    pub fn build(&self) -> Result<SensingMatrix> {
        SensingMatrix::from_spec(self.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param("spec", e.to_string()))
    }
}

impl fmt::Display for MatrixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Chirp { p } => write!(f, "chirp(p={p})")?,
            Family::Dg { m, r } => write!(f, "dg(m={m},r={r})")?,
            Family::Rm2 { m } => write!(f, "rm2(m={m})")?,
            Family::Bch { m, t } => write!(f, "bch(m={m},t={t})")?,
            Family::PartialFourier { c, n } => write!(f, "partial_fourier(C={c},N={n})")?,
            Family::Gaussian { n, c } => write!(f, "gaussian(N={n},C={c})")?,
        }
        if let Some(s) = self.subsample {
            write!(f, "[subsample={s}]")?;
        }
        write!(f, " seed={}", self.seed)
    }
}

/// Anything that can produce columns on demand.
pub trait ColumnOracle: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn column_into(&self, j: usize, out: &mut [Complex64]) -> Result<()>;
    /// Identifies the matrix in reports.
    fn label(&self) -> String;

    fn column(&self, j: usize) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows()];
        self.column_into(j, &mut out)?;
        Ok(out)
    }
}

/// A small matrix given column by column; used for constructed counterexamples.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitMatrix {
    columns: Vec<Vec<Complex64>>,
    label: String,
}

impl ExplicitMatrix {
    pub fn new(columns: Vec<Vec<Complex64>>, label: impl Into<String>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::param("columns", "need at least one nonempty column"));
        }
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        Ok(ExplicitMatrix { columns, label: label.into() })
    }

    /// Materializes every column of `matrix`.
    pub fn from_oracle<M: ColumnOracle + ?Sized>(matrix: &M) -> Result<Self> {
        let columns = (0..matrix.cols()).map(|j| matrix.column(j)).collect::<Result<_>>()?;
        Self::new(columns, matrix.label())
    }

    pub fn columns_mut(&mut self) -> &mut Vec<Vec<Complex64>> {
        &mut self.columns
    }
}

impl ColumnOracle for ExplicitMatrix {
    fn rows(&self) -> usize {
        self.columns[0].len()
    }

    fn cols(&self) -> usize {
        self.columns.len()
    }

    fn column_into(&self, j: usize, out: &mut [Complex64]) -> Result<()> {
        let col = self.columns.get(j).ok_or(Error::ColumnOutOfRange { index: j, cols: self.columns.len() })?;
        if out.len() != col.len() {
            return Err(Error::DimensionMismatch { expected: col.len(), got: out.len() });
        }
        out.copy_from_slice(col);
        Ok(())
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

impl ColumnOracle for SensingMatrix {
    fn rows(&self) -> usize {
        SensingMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        SensingMatrix::cols(self)
    }

    fn column_into(&self, j: usize, out: &mut [Complex64]) -> Result<()> {
        SensingMatrix::column_into(self, j, out)
    }

    fn label(&self) -> String {
        self.spec().to_json()
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Chirp { p: usize, roots: Vec<Complex64> },
    Dg(DgSet),
    Rm2 { m: u32 },
    Bch(BchCode),
    PartialFourier { c: usize, rows: Vec<usize> },
    Gaussian { seed: u64 },
}

/// Lazily evaluated N x C sensing matrix.
#[derive(Clone, Debug)]
pub struct SensingMatrix {
    spec: MatrixSpec,
    kind: Kind,
    rows: usize,
    base_cols: usize,
    subsample: Option<Vec<usize>>,
}

pub(crate) fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

pub fn build_chirp(p: usize) -> Result<SensingMatrix> {
    MatrixSpec::new(Family::Chirp { p }).build()
}

pub fn build_delsarte_goethals(m: u32, r: u32) -> Result<SensingMatrix> {
    MatrixSpec::new(Family::Dg { m, r }).build()
}

pub fn build_rm2(m: u32) -> Result<SensingMatrix> {
    MatrixSpec::new(Family::Rm2 { m }).build()
}

pub fn build_bch(m: u32, t: u32) -> Result<SensingMatrix> {
    MatrixSpec::new(Family::Bch { m, t }).build()
}

pub fn build_partial_fourier(c: usize, n: usize, seed: u64) -> Result<SensingMatrix> {
    MatrixSpec::new(Family::PartialFourier { c, n }).with_seed(seed).build()
}

pub fn build_gaussian(n: usize, c: usize, seed: u64) -> Result<SensingMatrix> {
    MatrixSpec::new(Family::Gaussian { n, c }).with_seed(seed).build()
}

impl SensingMatrix {
    pub fn from_spec(spec: MatrixSpec) -> Result<Self> {
        let (kind, rows, base_cols) = match spec.family {
            Family::Chirp { p } => {
                if !(3..=1024).contains(&p) || !is_prime(p) {
                    return Err(Error::param("p", format!("must be a prime in 3..=1024, got {p}")));
                }
                let roots = (0..p).map(|k| Complex64::from_polar(1.0, TAU * k as f64 / p as f64)).collect();
                (Kind::Chirp { p, roots }, p, p * p)
            }
            Family::Dg { m, r } => {
                let set = DgSet::new(m, r)?;
                let bits = set.dimension() + m;
                if bits > 62 {
                    return Err(Error::TooLarge {
                        reason: format!("DG({m},{r}) has 2^{bits} columns"),
                    });
                }
                (Kind::Dg(set), 1usize << m, 1usize << bits)
            }
            Family::Rm2 { m } => {
                if !(1..=9).contains(&m) {
                    return Err(Error::param("m", format!("must be in 1..=9, got {m}")));
                }
                let bits = m * (m + 1) / 2 + m;
                (Kind::Rm2 { m }, 1usize << m, 1usize << bits)
            }
            Family::Bch { m, t } => {
                let code = BchCode::new(m, t)?;
                let bits = code.dimension();
                (Kind::Bch(code), 1usize << m, 1usize << bits)
            }
            Family::PartialFourier { c, n } => {
                if c > 1 << 20 || c < 2 {
                    return Err(Error::param("c", format!("must be in 2..=2^20, got {c}")));
                }
                if n == 0 || n >= c {
                    return Err(Error::param("n", format!("need 0 < N < C, got N={n}, C={c}")));
                }
                let mut rng = trial_rng(spec.seed, STREAM_ROWS, 0);
                let mut rows: Vec<usize> = distinct_tuple(&mut rng, c - 1, n).into_iter().map(|r| r + 1).collect();
                rows.sort_unstable();
                (Kind::PartialFourier { c, rows }, n, c)
            }
            Family::Gaussian { n, c } => {
                if n == 0 || c == 0 {
                    return Err(Error::param("n", "Gaussian matrix needs N, C >= 1"));
                }
                (Kind::Gaussian { seed: spec.seed }, n, c)
            }
        };
        let subsample = match spec.subsample {
            None => None,
            Some(s) => {
                if s == 0 || s > base_cols {
                    return Err(Error::param("subsample", format!("must be in 1..={base_cols}, got {s}")));
                }
                let mut rng = trial_rng(spec.seed, STREAM_SUBSAMPLE, 0);
                let mut picked: Vec<usize> = distinct_tuple(&mut rng, base_cols - 1, s - 1)
                    .into_iter()
                    .map(|j| j + 1)
                    .collect();
                picked.sort_unstable();
                picked.insert(0, 0);
                Some(picked)
            }
        };
        Ok(SensingMatrix { spec, kind, rows, base_cols, subsample })
    }

    pub fn spec(&self) -> &MatrixSpec {
        &self.spec
    }

    pub fn family(&self) -> FamilyTag {
        self.spec.family.tag()
    }

    /// N.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// C.
    #[inline]
    pub fn cols(&self) -> usize {
        self.subsample.as_ref().map_or(self.base_cols, Vec::len)
    }

    /// log2 N for the binary families.
    pub fn m(&self) -> Option<u32> {
        match &self.kind {
            Kind::Dg(set) => Some(set.m()),
            Kind::Rm2 { m } => Some(*m),
            Kind::Bch(code) => Some(code.m()),
            _ => None,
        }
    }

    pub fn is_unimodular(&self) -> bool {
        !matches!(self.kind, Kind::Gaussian { .. })
    }

    pub fn is_subsampled(&self) -> bool {
        self.subsample.is_some()
    }

    pub fn dg_set(&self) -> Option<&DgSet> {
        match &self.kind {
            Kind::Dg(set) => Some(set),
            _ => None,
        }
    }

    pub fn partial_fourier_rows(&self) -> Option<&[usize]> {
        match &self.kind {
            Kind::PartialFourier { rows, .. } => Some(rows),
            _ => None,
        }
    }

    fn check_index(&self, j: usize) -> Result<usize> {
        if j >= self.cols() {
            return Err(Error::ColumnOutOfRange { index: j, cols: self.cols() });
        }
        Ok(self.subsample.as_ref().map_or(j, |s| s[j]))
    }

    /// Underlying column index before subsampling.
    pub fn base_index(&self, j: usize) -> Result<usize> {
        self.check_index(j)
    }

    pub fn column(&self, j: usize) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        self.column_into(j, &mut out)?;
        Ok(out)
    }

    pub fn column_into(&self, j: usize, out: &mut [Complex64]) -> Result<()> {
        if out.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: out.len() });
        }
        let base = self.check_index(j)?;
        match &self.kind {
            Kind::Chirp { p, roots } => {
                let (mm, r) = (base / p, base % p);
                for (x, o) in out.iter_mut().enumerate() {
                    let e = (r + mm * x + r * (x * x % p)) % p;
                    *o = roots[e];
                }
            }
            Kind::Dg(set) => {
                let m = set.m();
                let p = set.matrix((base >> m) as u64);
                quadratic_column(&p, (base & ((1 << m) - 1)) as u64, out);
            }
            Kind::Rm2 { m } => {
                let p = BinarySymmetricMatrix::from_upper_triangle(*m, (base >> m) as u128);
                quadratic_column(&p, (base & ((1 << m) - 1)) as u64, out);
            }
            Kind::Bch(code) => {
                let idx = base as u64;
                let sign = code.sign_bit(idx);
                for (x, o) in out.iter_mut().enumerate() {
                    *o = if code.bit(idx, x) ^ sign {
                        Complex64::new(-1.0, 0.0)
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                }
            }
            Kind::PartialFourier { c, rows } => {
                for (o, &x) in out.iter_mut().zip(rows) {
                    let e = (base as u64 * x as u64 % *c as u64) as f64;
                    *o = Complex64::from_polar(1.0, TAU * e / *c as f64);
                }
            }
            Kind::Gaussian { seed } => {
                let mut rng = trial_rng(*seed, STREAM_GAUSSIAN, base as u64);
                for pair in out.chunks_mut(2) {
                    let (a, b) = box_muller(&mut rng);
                    pair[0] = Complex64::new(a, 0.0);
                    if pair.len() == 2 {
                        pair[1] = Complex64::new(b, 0.0);
                    }
                }
            }
        }
        Ok(())
    }

    /// Single entry `phi_j(x)`.
    pub fn entry(&self, j: usize, x: usize) -> Result<Complex64> {
        if x >= self.rows {
            return Err(Error::param("x", format!("row {x} out of range for {} rows", self.rows)));
        }
        let base = self.check_index(j)?;
        Ok(match &self.kind {
            Kind::Chirp { p, roots } => {
                let (mm, r) = (base / p, base % p);
                roots[(r + mm * x + r * (x * x % p)) % p]
            }
            Kind::Dg(_) | Kind::Rm2 { .. } => {
                let (p, b) = self.quadratic_parts_base(base);
                quadratic_entry(&p, b, x as u64)
            }
            Kind::Bch(code) => {
                if code.bit(base as u64, x) ^ code.sign_bit(base as u64) {
                    Complex64::new(-1.0, 0.0)
                } else {
                    Complex64::new(1.0, 0.0)
                }
            }
            Kind::PartialFourier { .. } | Kind::Gaussian { .. } => self.column(j)?[x],
        })
    }

    fn quadratic_parts_base(&self, base: usize) -> (BinarySymmetricMatrix, u64) {
        match &self.kind {
            Kind::Dg(set) => {
                let m = set.m();
                (set.matrix((base >> m) as u64), (base & ((1 << m) - 1)) as u64)
            }
            Kind::Rm2 { m } => (
                BinarySymmetricMatrix::from_upper_triangle(*m, (base >> m) as u128),
                (base & ((1 << m) - 1)) as u64,
            ),
            _ => unreachable!("quadratic parts requested for a non-quadratic family"),
        }
    }

    /// `(P, b)` of a DG or RM2 column.
    pub fn quadratic_parts(&self, j: usize) -> Result<(BinarySymmetricMatrix, u64)> {
        let base = self.check_index(j)?;
        match &self.kind {
            Kind::Dg(_) | Kind::Rm2 { .. } => Ok(self.quadratic_parts_base(base)),
            _ => Err(Error::WrongFamily { family: self.family().to_string() }),
        }
    }

    /// Flat column index of `(P, b)`, if `P` belongs to the matrix set.
    /// Only defined for matrices without column subsampling.
    pub fn quadratic_index(&self, p: &BinarySymmetricMatrix, b: u64) -> Option<usize> {
        if self.subsample.is_some() {
            return None;
        }
        let (m, pi) = match &self.kind {
            Kind::Dg(set) => (set.m(), set.index_of(p)?),
            Kind::Rm2 { m } => {
                if p.dim() != *m {
                    return None;
                }
                (*m, p.upper_triangle() as u64)
            }
            _ => return None,
        };
        if b >> m != 0 {
            return None;
        }
        Some(((pi as usize) << m) | b as usize)
    }

    /// Index of the pointwise product of columns `j` and `k`, predicted from
    /// `phi_{P,b} phi_{P',b'} = phi_{P^P', b^b'^(d_P & d_P')}` without evaluating any entry.
    pub fn quadratic_product_index(&self, j: usize, k: usize) -> Result<usize> {
        let (p, b) = self.quadratic_parts(j)?;
        let (q, c) = self.quadratic_parts(k)?;
        let d = p.diagonal().bits() & q.diagonal().bits();
        self.quadratic_index(&p.xor(&q), b ^ c ^ d).ok_or_else(|| Error::param("j", "product index unavailable on a subsampled matrix"))
    }

    /// Row-major CSV of `re,im` pairs, for cross-checking small instances.
    pub fn to_csv(&self) -> Result<String> {
        let (n, c) = (self.rows(), self.cols());
        if n.saturating_mul(c) > CSV_EXPORT_LIMIT {
            return Err(Error::TooLarge {
                reason: format!("{n}x{c} exceeds the {CSV_EXPORT_LIMIT}-entry export limit"),
            });
        }
        let columns: Vec<Vec<Complex64>> = (0..c).map(|j| self.column(j)).collect::<Result<_>>()?;
        let mut out = format!("# {}\n", self.spec.to_json());
        for x in 0..n {
            let line: Vec<String> = columns.iter().map(|col| format!("{:.17e},{:.17e}", col[x].re, col[x].im)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

#[inline]
fn quadratic_entry(p: &BinarySymmetricMatrix, b: u64, x: u64) -> Complex64 {
    let phase = p.diagonal().weight() + 2 * b.count_ones() + p.quadratic_integer(x) + 2 * (b & x).count_ones();
    I_POWERS[(phase & 3) as usize]
}

/// `phi_{P,b}(x) = i^{wt(d_P) + 2 wt(b) + x P x + 2 b x}` for all x.
pub(crate) fn quadratic_column(p: &BinarySymmetricMatrix, b: u64, out: &mut [Complex64]) {
    let offset = p.diagonal().weight() + 2 * b.count_ones();
    for (x, o) in out.iter_mut().enumerate() {
        let x = x as u64;
        let phase = offset + p.quadratic_integer(x) + 2 * (b & x).count_ones();
        *o = I_POWERS[(phase & 3) as usize];
    }
}
