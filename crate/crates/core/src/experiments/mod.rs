//! Numerical studies built on repeated seeded simulations: robustness
//! heatmaps, fixed-frequency sweeps, node-degree comparisons and paired
//! improvement reports.
//!
//! Every study fans its runs out with rayon and reassembles them in job
//! order, so results do not depend on the thread count.

mod bell;
mod degree;
mod heatmap;
mod improvement;
mod scenario;
mod stats;
mod study;

use std::f64::consts::FRAC_PI_2;

pub use bell::{run_bell_curve, BellConfig, BellPoint, BellResult};
pub use degree::{
    combinations, run_degree_study, DegreeConfig, DegreeResult, DegreeRun, DegreeSummary,
};
pub use heatmap::{run_heatmap, HeatmapCell, HeatmapConfig, HeatmapResult};
pub use improvement::{
    improvement_report, percent_increase, write_improvement, ImprovementConfig, ImprovementRow,
    LabeledGroup, MetricSet,
};
pub use scenario::{
    prepare_agent, replaced_participant, run_once, AvatarPlacement, GroupSpec, ReplaceRule,
    RunOutput, RunSummary, DEFAULT_WINDOW,
};
pub use stats::{ln_gamma, one_tailed_t_test, reg_inc_beta, student_sf, summarize, Summary, TTest};
pub use study::{run_study, StudyConfig, StudyOutcome};

use crate::kuramoto::{make_ring_graph, FrequencyProcess, InitialPhases};

/// Means of the placeholder seven-person group (average 4.15 rad/s).
pub const PLACEHOLDER_MEANS: [f64; 7] = [3.6, 3.8, 4.0, 4.2, 4.35, 4.5, 4.6];
pub const PLACEHOLDER_STD: f64 = 0.3;
pub const PLACEHOLDER_COUPLING: f64 = 0.5;

/// Seven participants on a ring with per-step Gaussian frequencies, all
/// starting at π/2. The numbers are stand-ins for measured group
/// parameters and are meant to be edited in configs.
pub fn placeholder_group(duration: f64) -> GroupSpec {
    GroupSpec {
        graph: make_ring_graph(7).expect("ring of seven"),
        coupling: PLACEHOLDER_COUPLING,
        freq_process: FrequencyProcess::GaussianPerStep {
            mean: PLACEHOLDER_MEANS.to_vec(),
            std: vec![PLACEHOLDER_STD; 7],
        },
        initial_phases: InitialPhases::Explicit(vec![FRAC_PI_2; 7]),
        duration,
        dt: 0.01,
    }
}
