//! Dual-BCH codewords `c_x = Tr(a_1 x + a_3 x^3 + ... + a_{2t-1} x^{2t-1})`
//! indexed by the concatenated coefficients.

use crate::algebra::Gf2mField;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BchCode {
    m: u32,
    t: u32,
    // coordinate x -> word whose bit (i*m + k) is Tr(a^k x^(2i+1)), so that
    // c_x(index) is the parity of (index & duals[x])
    duals: Vec<u64>,
}

/// Coordinates of the fixed vector `b`: the field elements 1 and `a`.
///
/// Every `b + e_x` then has weight at most 3 away from coordinate 0, below
/// the BCH minimum distance, so no `b + e_x` lies in the dual code.
pub const SIGN_COORDINATES: [usize; 2] = [1, 2];

impl BchCode {
    pub fn new(m: u32, t: u32) -> Result<Self> {
        if !(4..=14).contains(&m) {
            return Err(Error::param("m", format!("must be in 4..=14, got {m}")));
        }
        if t < 2 {
            return Err(Error::param("t", format!("must be at least 2, got {t}")));
        }
        let half = m.div_ceil(2);
        if (2 * t - 1) as u64 >= 1u64 << half {
            return Err(Error::param("t", format!("2t-1 = {} must be below 2^{half}", 2 * t - 1)));
        }
        if t * m > 62 {
            return Err(Error::TooLarge {
                reason: format!("t*m = {} column-index bits exceeds 62", t * m),
            });
        }
        let field = Gf2mField::new(m)?;
        let duals = (0..field.order())
            .map(|x| {
                let mut w = 0u64;
                for i in 0..t {
                    let power = field.pow(x, 2 * i as u64 + 1);
                    for k in 0..m {
                        if field.trace(field.mul(1 << k, power)) {
                            w |= 1 << (i * m + k);
                        }
                    }
                }
                w
            })
            .collect();
        Ok(BchCode { m, t, duals })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn length(&self) -> usize {
        self.duals.len()
    }

    /// log2 of the number of codewords.
    pub fn dimension(&self) -> u32 {
        self.t * self.m
    }

    #[inline]
    pub fn bit(&self, index: u64, x: usize) -> bool {
        (index & self.duals[x]).count_ones() & 1 == 1
    }

    /// `b . c` for the fixed sign vector.
    #[inline]
    pub fn sign_bit(&self, index: u64) -> bool {
        self.bit(index, SIGN_COORDINATES[0]) ^ self.bit(index, SIGN_COORDINATES[1])
    }

    pub fn weight(&self, index: u64) -> usize {
        (0..self.length()).filter(|&x| self.bit(index, x)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_obey_carlitz_uchiyama() {
        let code = BchCode::new(6, 2).unwrap();
        for idx in 1..1u64 << code.dimension() {
            let w = code.weight(idx);
            assert!((24..=40).contains(&w), "index {idx} has weight {w}");
        }
    }

    #[test]
    fn codeword_map_is_linear_and_injective() {
        let code = BchCode::new(6, 2).unwrap();
        let mut seen = std::collections::HashSet::new();
        for idx in 0..1u64 << code.dimension() {
            let word: Vec<bool> = (0..64).map(|x| code.bit(idx, x)).collect();
            assert!(seen.insert(word));
        }
        assert!(!code.bit(0b1011_0110_1101, 0));
    }

    #[test]
    fn sign_vector_not_orthogonal() {
        let code = BchCode::new(6, 2).unwrap();
        assert!((0..1u64 << 12).any(|i| code.sign_bit(i)));
        assert!(!code.sign_bit(0));
    }

    #[test]
    fn parameter_checks() {
        assert!(BchCode::new(3, 2).is_err());
        assert!(BchCode::new(6, 1).is_err());
        assert!(BchCode::new(6, 5).is_err());
        assert!(BchCode::new(6, 4).is_ok());
    }
}
