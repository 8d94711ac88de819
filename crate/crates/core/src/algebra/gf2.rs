//! Vectors and symmetric matrices over GF(2), packed one row per machine word,
//! and quadratic forms with values in Z4.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: u32 = 63;

/// An element of F_2^m stored in the low `m` bits of a word. Bit `i` is coordinate `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryVector {
    bits: u64,
    len: u32,
}

impl BinaryVector {
    pub fn new(bits: u64, len: u32) -> Result<Self> {
        if len > MAX_DIM {
            return Err(Error::param("m", format!("{len} exceeds {MAX_DIM}")));
        }
        if bits & !mask(len) != 0 {
            return Err(Error::param("bits", format!("{bits:#x} has bits above position {}", len as i64 - 1)));
        }
        Ok(BinaryVector { bits, len })
    }

    pub fn zero(len: u32) -> Self {
        BinaryVector { bits: 0, len }
    }

    pub fn unit(i: u32, len: u32) -> Self {
        debug_assert!(i < len);
        BinaryVector { bits: 1 << i, len }
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: u32) -> bool {
        (self.bits >> i) & 1 == 1
    }

    #[inline]
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Inner product over GF(2).
    #[inline]
    pub fn dot(&self, other: &BinaryVector) -> bool {
        (self.bits & other.bits).count_ones() & 1 == 1
    }

    pub fn xor(&self, other: &BinaryVector) -> BinaryVector {
        BinaryVector {
            bits: self.bits ^ other.bits,
            len: self.len,
        }
    }

    /// Coordinatewise product (bitwise AND).
    pub fn and(&self, other: &BinaryVector) -> BinaryVector {
        BinaryVector {
            bits: self.bits & other.bits,
            len: self.len,
        }
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub(crate) fn mask(len: u32) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// Symmetric m x m matrix over GF(2). Row `i` is a word whose bit `j` is entry (i, j).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinarySymmetricMatrix {
    rows: Vec<u64>,
}

impl BinarySymmetricMatrix {
    pub fn zero(m: u32) -> Self {
        BinarySymmetricMatrix {
            rows: vec![0; m as usize],
        }
    }

    pub fn identity(m: u32) -> Self {
        BinarySymmetricMatrix {
            rows: (0..m).map(|i| 1u64 << i).collect(),
        }
    }

    /// Builds from packed rows, rejecting asymmetric input.
    pub fn from_rows(rows: Vec<u64>) -> Result<Self> {
        let m = rows.len() as u32;
        if m > MAX_DIM {
            return Err(Error::param("m", format!("{m} exceeds {MAX_DIM}")));
        }
        for (i, &row) in rows.iter().enumerate() {
            if row & !mask(m) != 0 {
                return Err(Error::param("rows", format!("row {i} has bits beyond column {}", m - 1)));
            }
        }
        let out = BinarySymmetricMatrix { rows };
        if let Some((row, col)) = out.asymmetry() {
            return Err(Error::NotSymmetric { row, col });
        }
        Ok(out)
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<u64>) -> Self {
        debug_assert!(BinarySymmetricMatrix { rows: rows.clone() }.asymmetry().is_none());
        BinarySymmetricMatrix { rows }
    }

    /// Builds the matrix whose upper triangle (diagonal included) is given in
    /// row-major order as consecutive bits of `packed`.
    pub fn from_upper_triangle(m: u32, packed: u128) -> Self {
        let mut rows = vec![0u64; m as usize];
        let mut pos = 0;
        for i in 0..m as usize {
            for j in i..m as usize {
                if (packed >> pos) & 1 == 1 {
                    rows[i] |= 1 << j;
                    rows[j] |= 1 << i;
                }
                pos += 1;
            }
        }
        BinarySymmetricMatrix { rows }
    }

    /// Inverse of [`from_upper_triangle`](Self::from_upper_triangle).
    pub fn upper_triangle(&self) -> u128 {
        let m = self.dim() as usize;
        let mut out = 0u128;
        let mut pos = 0;
        for i in 0..m {
            for j in i..m {
                if (self.rows[i] >> j) & 1 == 1 {
                    out |= 1u128 << pos;
                }
                pos += 1;
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> u32 {
        self.rows.len() as u32
    }

    #[inline]
    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn row(&self, i: u32) -> BinaryVector {
        BinaryVector {
            bits: self.rows[i as usize],
            len: self.dim(),
        }
    }

    #[inline]
    pub fn get(&self, i: u32, j: u32) -> bool {
        (self.rows[i as usize] >> j) & 1 == 1
    }

    /// The main diagonal `d_P`.
    pub fn diagonal(&self) -> BinaryVector {
        let bits = self
            .rows
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, r)| acc | (r & (1 << i)));
        BinaryVector { bits, len: self.dim() }
    }

    pub fn transpose(&self) -> BinarySymmetricMatrix {
        let m = self.rows.len();
        let mut rows = vec![0u64; m];
        for (i, &r) in self.rows.iter().enumerate() {
            for (j, out) in rows.iter_mut().enumerate() {
                if (r >> j) & 1 == 1 {
                    *out |= 1 << i;
                }
            }
        }
        BinarySymmetricMatrix { rows }
    }

    /// First (row, col) with entry != transposed entry, if any.
    pub fn asymmetry(&self) -> Option<(usize, usize)> {
        let t = self.transpose();
        for i in 0..self.rows.len() {
            let diff = self.rows[i] ^ t.rows[i];
            if diff != 0 {
                return Some((i, diff.trailing_zeros() as usize));
            }
        }
        None
    }

    pub fn xor(&self, other: &BinarySymmetricMatrix) -> BinarySymmetricMatrix {
        BinarySymmetricMatrix {
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a ^ b).collect(),
        }
    }

    pub fn xor_assign(&mut self, other: &BinarySymmetricMatrix) {
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            *a ^= b;
        }
    }

    /// Entrywise product (AND); this is the matrix `Q` with `P + P' = (P xor P') + 2Q`.
    pub fn and(&self, other: &BinarySymmetricMatrix) -> BinarySymmetricMatrix {
        BinarySymmetricMatrix {
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a & b).collect(),
        }
    }

    /// Row vector times matrix, `v P`, over GF(2).
    pub fn left_mul(&self, v: u64) -> u64 {
        let mut out = 0;
        let mut rest = v;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            out ^= self.rows[i];
            rest &= rest - 1;
        }
        out
    }

    /// `x P x^T` evaluated over the integers (not reduced).
    #[inline]
    pub fn quadratic_integer(&self, x: u64) -> u32 {
        let mut total = 0;
        let mut rest = x;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            total += (self.rows[i] & x).count_ones();
            rest &= rest - 1;
        }
        total
    }
}

impl fmt::Debug for BinarySymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.dim();
        writeln!(f, "BinarySymmetricMatrix({m}x{m})")?;
        for i in 0..m {
            for j in 0..m {
                write!(f, "{}", u8::from(self.get(i, j)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Rank over GF(2) by elimination on packed rows.
pub fn gf2_rank(matrix: &BinarySymmetricMatrix) -> u32 {
    rank_of_rows(matrix.rows().to_vec())
}

pub(crate) fn rank_of_rows(mut rows: Vec<u64>) -> u32 {
    let mut rank = 0;
    for i in 0..rows.len() {
        let pivot = rows[i];
        if pivot == 0 {
            continue;
        }
        rank += 1;
        let low = pivot & pivot.wrapping_neg();
        for r in rows.iter_mut().skip(i + 1) {
            if *r & low != 0 {
                *r ^= pivot;
            }
        }
    }
    rank
}

/// An element of the ring of integers modulo 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Z4(u8);

impl Z4 {
    pub const ZERO: Z4 = Z4(0);

    pub fn new(v: i64) -> Self {
        Z4(v.rem_euclid(4) as u8)
    }

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    /// `i^self` as an exact complex number.
    pub fn power_of_i(self) -> num_complex::Complex64 {
        I_POWERS[self.0 as usize]
    }
}

impl std::ops::Add for Z4 {
    type Output = Z4;
    fn add(self, rhs: Z4) -> Z4 {
        Z4((self.0 + rhs.0) & 3)
    }
}

impl std::ops::Sub for Z4 {
    type Output = Z4;
    fn sub(self, rhs: Z4) -> Z4 {
        Z4((self.0 + 4 - rhs.0) & 3)
    }
}

pub const I_POWERS: [num_complex::Complex64; 4] = [
    num_complex::Complex64::new(1.0, 0.0),
    num_complex::Complex64::new(0.0, 1.0),
    num_complex::Complex64::new(-1.0, 0.0),
    num_complex::Complex64::new(0.0, -1.0),
];

/// `x P x^T + 2 b x^T` with the sums taken over the integers, reduced mod 4.
pub fn z4_form_eval(p: &BinarySymmetricMatrix, b: &BinaryVector, x: &BinaryVector) -> Result<Z4> {
    let m = p.dim();
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m as usize, got: b.len() as usize });
    }
    if x.len() != m {
        return Err(Error::DimensionMismatch { expected: m as usize, got: x.len() as usize });
    }
    Ok(z4_form_raw(p, b.bits(), x.bits()))
}

#[inline]
pub(crate) fn z4_form_raw(p: &BinarySymmetricMatrix, b: u64, x: u64) -> Z4 {
    let quad = p.quadratic_integer(x);
    let lin = (b & x).count_ones();
    Z4(((quad + 2 * lin) & 3) as u8)
}
