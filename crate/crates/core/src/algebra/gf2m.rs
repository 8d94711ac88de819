//! Arithmetic in GF(2^m), m <= 16, in polynomial basis.

use crate::error::{Error, Result};

/// Conway polynomials over GF(2) for degrees 1..=16, bit `i` = coefficient of x^i.
const CONWAY: [u64; 17] = [
    0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x5B, 0x83, 0x11D, 0x211, 0x46F, 0x805, 0x10EB, 0x201B, 0x40A9, 0x8003,
    0x1002D,
];

pub const MAX_FIELD_DEGREE: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gf2mField {
    m: u32,
    poly: u64,
    trace_mask: u64,
}

impl Gf2mField {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 || m > MAX_FIELD_DEGREE {
            return Err(Error::param("m", format!("field degree must be in 1..={MAX_FIELD_DEGREE}, got {m}")));
        }
        let mut field = Gf2mField {
            m,
            poly: CONWAY[m as usize],
            trace_mask: 0,
        };
        // trace is GF(2)-linear, so one parity mask covers it
        let mut mask = 0;
        for i in 0..m {
            if field.trace_slow(1 << i) {
                mask |= 1 << i;
            }
        }
        field.trace_mask = mask;
        Ok(field)
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.poly
    }

    #[inline]
    pub fn order(&self) -> u64 {
        1 << self.m
    }

    pub fn element(&self, value: u64) -> Result<Gf2mElement> {
        if value >= self.order() {
            return Err(Error::param("value", format!("{value} is not below 2^{}", self.m)));
        }
        Ok(Gf2mElement { value, field: *self })
    }

    /// Carry-less product reduced by the field polynomial.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let mut wide = 0u64;
        let mut rest = b;
        let mut shifted = a;
        while rest != 0 {
            if rest & 1 == 1 {
                wide ^= shifted;
            }
            rest >>= 1;
            shifted <<= 1;
        }
        self.reduce(wide)
    }

    #[inline]
    fn reduce(&self, mut wide: u64) -> u64 {
        let m = self.m;
        while wide >> m != 0 {
            let top = 63 - wide.leading_zeros();
            wide ^= self.poly << (top - m);
        }
        wide
    }

    #[inline]
    pub fn square(&self, a: u64) -> u64 {
        self.mul(a, a)
    }

    /// `a^(2^k)`.
    pub fn frobenius(&self, a: u64, k: u32) -> u64 {
        (0..k).fold(a, |acc, _| self.square(acc))
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = a;
        let mut acc = 1;
        while e != 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.square(base);
            e >>= 1;
        }
        acc
    }

    #[inline]
    pub fn trace(&self, a: u64) -> bool {
        (a & self.trace_mask).count_ones() & 1 == 1
    }

    fn trace_slow(&self, a: u64) -> bool {
        let mut sum = 0;
        let mut x = a;
        for _ in 0..self.m {
            sum ^= x;
            x = self.square(x);
        }
        debug_assert!(sum <= 1);
        sum == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gf2mElement {
    value: u64,
    field: Gf2mField,
}

impl Gf2mElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> Gf2mField {
        self.field
    }

    fn check(&self, other: &Gf2mElement) -> Result<()> {
        if self.field.m != other.field.m || self.field.poly != other.field.poly {
            return Err(Error::FieldMismatch {
                left_m: self.field.m,
                left_poly: self.field.poly,
                right_m: other.field.m,
                right_poly: other.field.poly,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Gf2mElement) -> Result<Gf2mElement> {
        self.check(other)?;
        Ok(Gf2mElement { value: self.value ^ other.value, field: self.field })
    }

    pub fn mul(&self, other: &Gf2mElement) -> Result<Gf2mElement> {
        self.check(other)?;
        Ok(Gf2mElement { value: self.field.mul(self.value, other.value), field: self.field })
    }

    pub fn trace(&self) -> bool {
        self.field.trace(self.value)
    }
}

pub fn gf2m_mul(a: &Gf2mElement, b: &Gf2mElement) -> Result<Gf2mElement> {
    a.mul(b)
}

pub fn gf2m_trace(a: &Gf2mElement) -> bool {
    a.trace()
}
