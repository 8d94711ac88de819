//! Structural certification, probability bounds, and the Monte-Carlo and
//! brute-force experiments that test them.

mod bounds;
mod certify;
mod experiments;

pub use bounds::{bound_report, coherence_mean, coherence_threshold, strip_delta, strip_delta_sharpened, BoundReport, DeltaBound};
pub use certify::{certify, eta_from_column_sum, CertifyMode, ClosureWitness, StripCertificate, EXHAUSTIVE_LIMIT, HASH_GRID, SAMPLED_LIMIT};
pub use experiments::{
    coherence_exact_mean, coherence_stats, competing_support, condition_experiment, condition_number, count_violations, distortion_samples,
    expected_energy, mean_std, strip_montecarlo, uniqueness_bruteforce, CoherenceStats, ConditionStats, EnergyEstimate, EnergyMode,
    StripMonteCarlo, WPolicy, ENUMERATION_LIMIT, SINGULAR_EIGENVALUE, UNIQUENESS_MAX_COLUMNS, UNIQUENESS_MAX_K,
};
