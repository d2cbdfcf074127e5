//! Distinguisher harness, bound-verification suite, grid scans and reports.

mod config;
mod distinguisher;
pub mod report;
mod scan;
pub mod suite;

pub use config::{ExperimentConfig, Resolved};
pub use distinguisher::{
    decide, evaluate, hypothesis_name, parse_hypothesis, run_distinguisher, run_resolved, simulate,
    DistinguisherResult, Problem, Simulation,
};
pub use report::{emit_report, Format};
pub use scan::{scan_grid, GridSpec, ScanRow};
pub use suite::{verify_labels, verify_lemma_suite, verify_lemma_suite_with, BoundReport, Relation, Verdict};
