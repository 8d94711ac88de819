//! The Delsarte-Goethals matrix sets DG(m, r) as GF(2)-spans of symmetrized
//! trace forms, with a linear solver that maps a matrix back to its index.

use crate::algebra::{BinarySymmetricMatrix, Gf2mField};
use crate::error::{Error, Result};

/// Basis of DG(m, r): element `j*m + k` is the bilinear form of
/// `x, y -> Tr(a^k x y)` for `j = 0` and `Tr(a^k (x y^(2^j) + x^(2^j) y))` for `j >= 1`,
/// written in the polynomial basis `1, a, ..., a^(m-1)`.
#[derive(Clone, Debug)]
pub struct DgSet {
    m: u32,
    r: u32,
    basis: Vec<Vec<u64>>,
    // echelon form of the basis as packed upper triangles, each tagged with
    // the combination of basis elements that produced it
    pivots: Vec<(u32, u128, u64)>,
}

impl DgSet {
    pub fn new(m: u32, r: u32) -> Result<Self> {
        if m < 3 || m > 15 || m % 2 == 0 {
            return Err(Error::param("m", format!("must be odd in 3..=15, got {m}")));
        }
        if r > (m - 1) / 2 {
            return Err(Error::param("r", format!("must be at most (m-1)/2 = {}, got {r}", (m - 1) / 2)));
        }
        let field = Gf2mField::new(m)?;
        let mut basis = Vec::with_capacity(((r + 1) * m) as usize);
        for j in 0..=r {
            for k in 0..m {
                let t = 1u64 << k;
                let mut rows = vec![0u64; m as usize];
                for i in 0..m {
                    let xi = 1u64 << i;
                    for l in 0..m {
                        let yl = 1u64 << l;
                        let arg = if j == 0 {
                            field.mul(xi, yl)
                        } else {
                            field.mul(xi, field.frobenius(yl, j)) ^ field.mul(field.frobenius(xi, j), yl)
                        };
                        if field.trace(field.mul(t, arg)) {
                            rows[i as usize] |= 1 << l;
                        }
                    }
                }
                basis.push(rows);
            }
        }
        let pivots = echelon(m, &basis);
        if pivots.len() != basis.len() {
            return Err(Error::param("r", "trace-form basis is degenerate"));
        }
        Ok(DgSet { m, r, basis, pivots })
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn r(&self) -> u32 {
        self.r
    }

    /// log2 of the number of matrices in the set, `(r+1) m`.
    pub fn dimension(&self) -> u32 {
        (self.r + 1) * self.m
    }

    /// Matrix with index `p`, the XOR of the basis elements selected by its bits.
    pub fn matrix(&self, p: u64) -> BinarySymmetricMatrix {
        let mut rows = vec![0u64; self.m as usize];
        let mut rest = p;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            for (a, b) in rows.iter_mut().zip(&self.basis[k]) {
                *a ^= b;
            }
            rest &= rest - 1;
        }
        BinarySymmetricMatrix::from_rows_unchecked(rows)
    }

    /// Index of `p` in the set, or `None` when `p` is not a member.
    pub fn index_of(&self, p: &BinarySymmetricMatrix) -> Option<u64> {
        if p.dim() != self.m {
            return None;
        }
        let mut v = p.upper_triangle();
        let mut combo = 0u64;
        for &(bit, row, tag) in &self.pivots {
            if (v >> bit) & 1 == 1 {
                v ^= row;
                combo ^= tag;
            }
        }
        (v == 0).then_some(combo)
    }
}

fn echelon(m: u32, basis: &[Vec<u64>]) -> Vec<(u32, u128, u64)> {
    let mut pivots: Vec<(u32, u128, u64)> = Vec::new();
    for (k, rows) in basis.iter().enumerate() {
        let mut v = BinarySymmetricMatrix::from_rows_unchecked(rows.clone()).upper_triangle();
        let mut tag = 1u64 << k;
        for &(bit, row, t) in &pivots {
            if (v >> bit) & 1 == 1 {
                v ^= row;
                tag ^= t;
            }
        }
        if v == 0 {
            continue;
        }
        let bit = 127 - v.leading_zeros();
        // keep the echelon reduced so lookups need a single pass
        for p in pivots.iter_mut() {
            if (p.1 >> bit) & 1 == 1 {
                p.1 ^= v;
                p.2 ^= tag;
            }
        }
        pivots.push((bit, v, tag));
    }
    debug_assert!(m <= 15);
    pivots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::gf2_rank;

    #[test]
    fn kerdock_pairwise_sums_full_rank() {
        for m in [3u32, 5] {
            let set = DgSet::new(m, 0).unwrap();
            let mats: Vec<_> = (0..1u64 << m).map(|p| set.matrix(p)).collect();
            for a in 0..mats.len() {
                for b in a + 1..mats.len() {
                    assert_eq!(gf2_rank(&mats[a].xor(&mats[b])), m);
                }
            }
        }
    }

    #[test]
    fn dg_rank_bound() {
        let set = DgSet::new(5, 1).unwrap();
        for p in 1..1u64 << set.dimension() {
            assert!(gf2_rank(&set.matrix(p)) >= 3);
        }
    }

    #[test]
    fn index_roundtrip() {
        for (m, r) in [(3, 0), (3, 1), (5, 0), (5, 2), (7, 1)] {
            let set = DgSet::new(m, r).unwrap();
            for p in (0..1u64 << set.dimension()).step_by(7) {
                assert_eq!(set.index_of(&set.matrix(p)), Some(p));
            }
        }
    }

    #[test]
    fn non_member_detected() {
        let set = DgSet::new(5, 0).unwrap();
        // the all-binary-symmetric space has dimension 15 while Kerdock spans 5
        let misses = (0..1u128 << 15)
            .filter(|&u| set.index_of(&BinarySymmetricMatrix::from_upper_triangle(5, u)).is_none())
            .count();
        assert_eq!(misses, (1 << 15) - (1 << 5));
    }

    #[test]
    fn parameter_errors() {
        assert!(DgSet::new(4, 0).is_err());
        assert!(DgSet::new(5, 3).is_err());
        assert!(DgSet::new(17, 0).is_err());
    }
}
