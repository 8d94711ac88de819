//! Small dense complex linear algebra: cyclic Jacobi for Hermitian
//! eigenvalues and a pivoted solver for the normal equations.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense row-major complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        ComplexMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n);
        for i in 0..n {
            out[(i, i)] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { n, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut out = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            out[(i, i)] = Complex64::new(v, 0.0);
        }
        out
    }

    /// Gram matrix `scale * A^H A` of the given columns.
    pub fn gram(columns: &[Vec<Complex64>], scale: f64) -> Self {
        let k = columns.len();
        let mut out = Self::zeros(k);
        for i in 0..k {
            for j in i..k {
                let s: Complex64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a.conj() * b).sum();
                out[(i, j)] = s * scale;
                out[(j, i)] = (s * scale).conj();
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Determinant by partial-pivot elimination.
    pub fn determinant(&self) -> Complex64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))
                .unwrap();
            if a[pivot * n + col].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= factor * v;
                }
            }
        }
        det
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const MAX_EIGEN_DIM: usize = 64;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix, ascending, by cyclic Jacobi rotations.
pub fn hermitian_eigenvalues(g: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = g.dim();
    if n > MAX_EIGEN_DIM {
        return Err(Error::TooLarge {
            reason: format!("{n}x{n} exceeds the {MAX_EIGEN_DIM}x{MAX_EIGEN_DIM} Jacobi limit"),
        });
    }
    let deviation = g.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let mut a = g.clone();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
    }
    let scale = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Annihilates a[p][q] with a unitary rotation in the (p, q) plane.
fn rotate(a: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let n = a.dim();
    // Phase change on index q makes the (p, q) entry real and positive.
    let phase = apq / mag;
    for j in 0..n {
        a[(q, j)] *= phase;
        a[(j, q)] *= phase.conj();
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = apj * c - aqj * s;
        a[(q, j)] = apj * s + aqj * c;
    }
    for j in 0..n {
        let ajp = a[(j, p)];
        let ajq = a[(j, q)];
        a[(j, p)] = ajp * c - ajq * s;
        a[(j, q)] = ajp * s + ajq * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
}

/// Solves `A x = rhs` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `tol` times the largest diagonal.
pub fn solve(a: &ComplexMatrix, rhs: &[Complex64], tol: f64) -> Option<Vec<Complex64>> {
    let n = a.dim();
    assert_eq!(rhs.len(), n);
    let mut m = a.data.clone();
    let mut b = rhs.to_vec();
    let scale = (0..n).map(|i| a[(i, i)].norm()).fold(0.0, f64::max).max(1e-300);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x * n + col].norm().total_cmp(&m[y * n + col].norm()))
            .unwrap();
        if m[pivot * n + col].norm() <= tol * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        let p = m[col * n + col];
        for r in col + 1..n {
            let factor = m[r * n + col] / p;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m[col * n + j];
                m[r * n + j] -= factor * v;
            }
            let bc = b[col];
            b[r] -= factor * bc;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= m[i * n + j] * x[j];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

/// Least-squares coefficients of `target` on the span of `columns` via the normal equations.
pub fn least_squares(columns: &[Vec<Complex64>], target: &[Complex64]) -> Option<Vec<Complex64>> {
    let gram = ComplexMatrix::gram(columns, 1.0);
    let rhs: Vec<Complex64> = columns
        .iter()
        .map(|c| c.iter().zip(target).map(|(a, b)| a.conj() * b).sum())
        .collect();
    solve(&gram, &rhs, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, trial_rng};

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = trial_rng(seed, 0, 0);
        let mut a = ComplexMatrix::zeros(n);
        for i in 0..n {
            a[(i, i)] = Complex64::new(complex_gaussian(&mut rng, 1.0).re, 0.0);
            for j in i + 1..n {
                let z = complex_gaussian(&mut rng, 1.0);
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        a
    }

    /// Real characteristic polynomial value det(A - x I) for Hermitian A.
    fn char_poly(a: &ComplexMatrix, x: f64) -> f64 {
        let n = a.dim();
        let shifted = ComplexMatrix::from_fn(n, |i, j| {
            if i == j {
                a[(i, j)] - x
            } else {
                a[(i, j)]
            }
        });
        shifted.determinant().re
    }

    /// Root finding on the characteristic polynomial: grid scan inside the
    /// Gershgorin interval, then bisection on each sign change.
    fn char_poly_roots(a: &ComplexMatrix) -> Vec<f64> {
        let n = a.dim();
        let radius = (0..n)
            .map(|i| a[(i, i)].re.abs() + (0..n).filter(|&j| j != i).map(|j| a[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
            + 1.0;
        let steps = 200_000;
        let mut roots = Vec::new();
        let mut prev_x = -radius;
        let mut prev = char_poly(a, prev_x);
        for s in 1..=steps {
            let x = -radius + 2.0 * radius * s as f64 / steps as f64;
            let cur = char_poly(a, x);
            if prev == 0.0 {
                roots.push(prev_x);
            } else if prev.signum() != cur.signum() && cur != 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if char_poly(a, mid).signum() == char_poly(a, lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = cur;
        }
        roots
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(hermitian_eigenvalues(&ComplexMatrix::identity(3)).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(hermitian_eigenvalues(&ComplexMatrix::diagonal(&[5.0, 2.0])).unwrap(), vec![2.0, 5.0]);
    }

    #[test]
    fn matches_characteristic_polynomial_roots() {
        for seed in 0..5 {
            let a = random_hermitian(4, seed);
            let jacobi = hermitian_eigenvalues(&a).unwrap();
            let oracle = char_poly_roots(&a);
            assert_eq!(oracle.len(), 4, "seed {seed}: oracle found {oracle:?}");
            for (x, y) in jacobi.iter().zip(&oracle) {
                assert!((x - y).abs() < 1e-9, "seed {seed}: {jacobi:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn trace_and_determinant_preserved() {
        for (n, seed) in [(2, 1), (5, 2), (8, 3), (16, 4)] {
            let a = random_hermitian(n, seed);
            let eig = hermitian_eigenvalues(&a).unwrap();
            let tr: f64 = eig.iter().sum();
            let det: f64 = eig.iter().product();
            assert!((tr - a.trace().re).abs() < 1e-9);
            let d = a.determinant();
            assert!((det - d.re).abs() < 1e-9 * d.norm().max(1.0), "n={n}: {det} vs {d}");
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = ComplexMatrix::identity(2);
        a[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(hermitian_eigenvalues(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn solve_roundtrip() {
        let a = random_hermitian(6, 9);
        let shifted = ComplexMatrix::from_fn(6, |i, j| if i == j { a[(i, j)] + 10.0 } else { a[(i, j)] });
        let x: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let rhs: Vec<Complex64> = (0..6).map(|i| (0..6).map(|j| shifted[(i, j)] * x[j]).sum()).collect();
        let y = solve(&shifted, &rhs, 1e-14).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn solve_detects_singular() {
        let a = ComplexMatrix::from_fn(2, |_, _| Complex64::new(1.0, 0.0));
        assert!(solve(&a, &[Complex64::new(1.0, 0.0); 2], 1e-12).is_none());
    }
}
