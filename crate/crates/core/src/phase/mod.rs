//! Online phase and amplitude estimation from a position stream, the
//! inverse phase-to-position map, and an offline Hilbert reference.

mod estimator;
mod hilbert;
mod pipeline;

pub use estimator::{phase_to_position, Amplitudes, EstimatorState, StepOutcome};
pub use hilbert::hilbert_phase_offline;
pub use pipeline::{
    read_signal_csv, velocity_from_positions, write_estimates_csv, EstimateRow, OnlineConfig,
    OnlineEstimator, Recenter, VelocityFilter,
};
