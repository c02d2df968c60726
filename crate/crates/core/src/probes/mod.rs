//! Experiment drivers that turn the estimates into measured quantities, and
//! the dense small-grid oracle.
//!
//! Every experiment is a loop over independent trials. Trial `i` draws its
//! operator and its inputs from RNG streams derived from `(seed, i)` only, so
//! results do not depend on how trials are scheduled.

mod experiment;
mod kato;
mod offdiag;
mod operator;
mod oracle;
mod quadratic;
mod report;

pub use experiment::{
    random_tent_pair, run_experiment, ExperimentKind, ExperimentOutput, ExperimentParams, ExperimentSpec, FailedCheck,
    GridParams, GroupReport, OffDiagFamily, OffDiagParams, SchurParams, Sequential, TrialOutput, TrialRunner,
};
pub use kato::{gradient, kato_trial, riesz_trial, scalar_input, sqrt_l};
pub use offdiag::{offdiag_order, OffDiagFit, OffDiagPoint, NOISE_FLOOR};
pub use operator::{sample_subspace, Builtin, OperatorSpec, SolverChoice, Subspace};
pub use oracle::{dense_oracle, dense_oracle_report, OracleMethod, OracleReport};
pub use quadratic::{
    calculus_trial, high_freq_identity_error, high_freq_trial, hodge_trial, low_freq_trial, sgn_trial, sobolev_trial,
    sq_equiv_trial, HIGH_FREQ_IDENTITY_TOL,
};
pub use report::{empirical_p_interval, Check, RatioReport, TrialRecord, DRIFT_TOL};
