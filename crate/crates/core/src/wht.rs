//! Unnormalized Walsh-Hadamard transform over F_2^m.
//!
//! `W(l) = sum_x (-1)^{l.x} v(x)`; applying it twice multiplies by N.

use num_complex::Complex64;

use crate::error::{Error, Result};

fn check_len(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::param("v", format!("length {n} is not a power of two")));
    }
    Ok(())
}

/// In-place butterfly transform, O(N log N).
pub fn fwht_in_place(v: &mut [Complex64]) -> Result<()> {
    check_len(v.len())?;
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

pub fn fwht(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// Direct O(N^2) evaluation, kept as a test oracle.
pub fn naive_wht(v: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(v.len())?;
    let n = v.len();
    Ok((0..n)
        .map(|l| {
            v.iter()
                .enumerate()
                .map(|(x, &val)| if (l & x).count_ones() % 2 == 0 { val } else { -val })
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, trial_rng};
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn delta_and_constant() {
        let mut delta = vec![c(0.0); 8];
        delta[0] = c(1.0);
        assert!(fwht(&delta).unwrap().iter().all(|z| *z == c(1.0)));
        let ones = vec![c(1.0); 8];
        let w = fwht(&ones).unwrap();
        assert_eq!(w[0], c(8.0));
        assert!(w[1..].iter().all(|z| z.norm() == 0.0));
        assert_eq!(naive_wht(&ones).unwrap(), w);
    }

    #[test]
    fn rejects_bad_length() {
        assert!(fwht(&[c(1.0); 6]).is_err());
        assert!(naive_wht(&[]).is_err());
    }

    #[test]
    fn matches_naive_on_random_input() {
        let mut rng = trial_rng(5, 0, 0);
        let v: Vec<Complex64> = (0..16).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let fast = fwht(&v).unwrap();
        let slow = naive_wht(&v).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn involution_linearity_parseval(seed in any::<u64>(), m in 0u32..9) {
            let n = 1usize << m;
            let mut rng = trial_rng(seed, 0, 0);
            let u: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let v: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));

            let twice = fwht(&fwht(&u).unwrap()).unwrap();
            for (x, y) in twice.iter().zip(&u) {
                prop_assert!((x - y * n as f64).norm() < 1e-9);
            }

            let mix: Vec<Complex64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let (fu, fv, fm) = (fwht(&u).unwrap(), fwht(&v).unwrap(), fwht(&mix).unwrap());
            for i in 0..n {
                prop_assert!((fm[i] - (a * fu[i] + b * fv[i])).norm() < 1e-9);
            }

            let e_time: f64 = u.iter().map(|z| z.norm_sqr()).sum();
            let e_freq: f64 = fu.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((e_freq - n as f64 * e_time).abs() < 1e-9 * e_freq.max(1.0));
        }
    }
}
