//! Deterministic compressed-sensing matrices built from codes (discrete
//! chirps, Delsarte-Goethals/Kerdock, dual BCH), together with:
//!
//! * certification of the three structural conditions that give a
//!   statistical restricted isometry (orthogonal zero-sum rows, columns
//!   closed under pointwise multiplication, bounded column sums),
//! * closed-form probability bounds and the Monte-Carlo experiments that
//!   check them,
//! * the quadratic (shift, multiply, Walsh-Hadamard, peel) reconstruction
//!   algorithm for Delsarte-Goethals matrices,
//! * concentration-inequality evaluators for sampling without replacement.
//!
//! ```
//! use stripcs::ensembles::build_delsarte_goethals;
//! use stripcs::recon::{measure, quadratic_reconstruct, sample_signal, Noise, ReconConfig, ValueModel};
//!
//! let phi = build_delsarte_goethals(7, 0)?;
//! let alpha = sample_signal(phi.cols(), 12, ValueModel::UnitPhase, 7)?;
//! let f = measure(&phi, &alpha, Noise::None, 7)?;
//! let est = quadratic_reconstruct(&phi, &f.values, &ReconConfig::new(12))?;
//! assert!(est.matches(&alpha, 1e-6));
//! # Ok::<(), stripcs::Error>(())
//! ```

pub mod algebra;
pub mod concentration;
pub mod ensembles;
pub mod error;
pub mod recon;
pub mod rng;
pub mod stripcheck;
pub mod wht;

pub use error::{Error, Result};
pub use num_complex::Complex64;
