mod diagnostics;
mod quadratic;
mod signal;

pub use diagnostics::{compressible_signal, crossterm_energy_check, crossterm_target, error_bound, CrosstermReport};
pub use quadratic::{quadratic_reconstruct, shift_multiply, Association, IterationLog, ReconConfig, ReconResult, VOTING_SET_LIMIT};
pub use signal::{apply, measure, measure_with, sample_signal, sample_signal_with, Measurement, Noise, SparseSignal, ValueModel};
pub(crate) use signal::l2;
