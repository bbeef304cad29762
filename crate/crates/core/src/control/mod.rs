//! The mixing closed loop, cycle detection with restarts and verification.

mod cycle;
mod detect;
mod history;

pub use cycle::{
    canonical_form, closed_loop_margin, cycle_residual, extract_cycle, minimal_period, newton_refine,
    refine_point, verify_cycle, verify_cycle_with, CycleKey, CycleRecord, NEWTON_TARGET,
};
pub use detect::{
    deduplicate, default_gammas, detect_cycles, detect_over_gammas, detect_with_coefficients,
    gamma_grid, restart_seed_point, single_restart, DetectDiagnostics, DetectReport, RestartOutcome, Tolerances,
};
pub use history::{run_until_periodic, seed_history, seed_history_with, LoopHistory, PeriodicRun, SeedMode};
