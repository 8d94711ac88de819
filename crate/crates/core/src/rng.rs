//! Seed derivation and the few samplers shared by all experiments.
//!
//! Every Monte-Carlo trial gets its own generator derived from
//! `(master seed, stream, trial index)`, so outcomes do not depend on how
//! trials are scheduled across workers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a stream label and an index into a child seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)) ^ index)
}

pub fn trial_rng(master: u64, stream: u64, trial: u64) -> TrialRng {
    TrialRng::seed_from_u64(derive_seed(master, stream, trial))
}

/// One standard normal pair via Box-Muller.
pub fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // u1 in (0, 1] keeps ln finite
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = std::f64::consts::TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    box_muller(rng).0
}

/// Complex Gaussian with independent real and imaginary parts of variance `sigma^2` each.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Complex64 {
    let (a, b) = box_muller(rng);
    Complex64::new(sigma * a, sigma * b)
}

pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * rng.gen::<f64>())
}

/// `k` distinct indices from `0..n`, uniformly over ordered k-tuples of distinct values.
///
/// Partial Fisher-Yates on a sparse swap map, so the cost is O(k) regardless of `n`.
pub fn distinct_tuple<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot draw {k} distinct values from {n}");
    let mut swaps: std::collections::HashMap<usize, usize> = std::collections::HashMap::with_capacity(2 * k);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = rng.gen_range(i..n);
        let vj = *swaps.get(&j).unwrap_or(&j);
        let vi = *swaps.get(&i).unwrap_or(&i);
        swaps.insert(j, vi);
        out.push(vj);
    }
    out
}
