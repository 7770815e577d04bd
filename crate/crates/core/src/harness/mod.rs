//! Experiment orchestration: NMSE sweeps, the optimality-gap experiment and
//! CSV output.

mod cache;
mod config;
mod csv;
mod gap;
mod nmse;

pub use cache::{design_key, DesignCache, Prepared};
pub use config::{
    default_solver, ChannelGrid, ExperimentConfig, GapConfig, GridKind, GridPoint, Scheme,
    SchemeConfig,
};
pub use csv::{
    emit_csv, emit_gap_csv, emit_trials_csv, gap_csv, nmse_csv, trials_csv, GAP_HEADER,
    NMSE_HEADER, TRIALS_HEADER,
};
pub use gap::{run_gap_experiment, GapResult, GapRow};
pub use nmse::{
    build_table, run_nmse, run_nmse_with_cache, summarize, trial_rng, ExperimentResult, ResultRow,
    TrialRecord,
};
