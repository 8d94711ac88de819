//! GF(2) and GF(2^m) arithmetic, Z4 quadratic forms, and the small
//! Hermitian eigensolver used for Gram-matrix condition numbers.

mod eigen;
mod gf2;
mod gf2m;

pub use eigen::{hermitian_eigenvalues, least_squares, solve, ComplexMatrix, HERMITIAN_TOL, MAX_EIGEN_DIM};
pub use gf2::{gf2_rank, z4_form_eval, BinarySymmetricMatrix, BinaryVector, Z4, I_POWERS, MAX_DIM};
pub use gf2m::{gf2m_mul, gf2m_trace, Gf2mElement, Gf2mField, MAX_FIELD_DEGREE};

