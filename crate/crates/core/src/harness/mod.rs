//! Sweep configuration, case orchestration, rate fitting and CSV output.

pub mod config;
pub mod rates;
pub mod sweep;

pub use config::{GeometryKind, SweepConfig, OUTPUT_ROOT_ENV};
pub use rates::{fit_rate, predicted_exponent, RateFit};
pub use sweep::{
    evaluate, reference_for, refit_summary, run_case, run_sweep, synthetic_sweep, write_summary, CaseResult, CaseRow, CaseSummary,
    SweepSummary, SUMMARY_COLUMNS,
};
