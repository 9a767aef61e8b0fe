//! Experiment harness: synthetic data, ground-truth oracles, trace-vs-bound
//! auditing, and the experiment runner that ties them together.
//!
//! Everything here is deterministic given the seeds in play. Oracles are
//! computed by independent routes (closed forms, exhaustive enumeration,
//! long reference runs) so that solver output is checked against values the
//! solver itself had no hand in.

pub mod audit;
pub mod experiment;
pub mod gen;
pub mod oracle;

pub use audit::{audit_trace, pointwise_diagnostics, AuditReport, PointwiseDiagnostics, Regime};
pub use experiment::{run_experiment, run_experiment_file, ExperimentConfig, ExperimentReport, RunSpec};
pub use gen::{gen_least_squares, gen_logistic, Dataset};
pub use oracle::{
    certify_l1_recovery, compute_outer_opt, compute_phi_star, compute_tau, oracle_for_problem,
    OracleOptions, OracleReport, PhiStarMode,
};
