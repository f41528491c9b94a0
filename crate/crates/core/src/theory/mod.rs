//! Three-node analysis: two participants and one avatar on a complete
//! graph. Lock conditions, their stability, and a brute-force check that the
//! avatar frequency `(ω1 + ω2)/2` maximizes the locked order parameter.

mod lock;
mod verify;

pub use lock::{
    chi_nu, jacobian, jacobian_eigs, lock_residuals, solve_phase_lock, PhaseLockSolution,
};
pub use verify::{verify_theorem1, TheoremReport, TheoremRow, VerifyOptions};
