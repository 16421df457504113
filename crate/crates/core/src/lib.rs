//! Bounds on the treatment rate among the needy, `P(T=1 | Y(0)=1, D=1)`,
//! when the untreated outcome is only observed before a resource became
//! available.
//!
//! The pipeline is: load an [`AuditFrame`], split it into folds, fit
//! cross-fitted nuisances, evaluate the bound terms and average their
//! influence-function corrected values, then build intervals per group.

pub mod bounds;
pub mod correction;
pub mod data;
pub mod error;
pub mod inference;
pub mod logistic;
pub mod nuisance;
pub mod synth;

pub use bounds::{eval_terms, marginal_bounds, plugin_bound, plugin_bound_raw, GammaParam, Side, TermId, TermIndex, TermSet};
pub use correction::{onestep_bound, onestep_bound_with, per_term_estimate, BoundEstimate, Centering, PhiValue};
pub use data::{covariate_names, load_frame, make_folds, slice_group, write_frame, AuditFrame, FoldAssignment, Schema, UnitRecord};
pub use error::{AuditError, Result};
pub use inference::{
    audit_groups, benchmark_gamma_prime, confidence_interval, gamma_threshold, union_interval, AuditConfig,
    BenchmarkConfig, CiMode, InequityReport, IntervalEstimate, SensitivityBenchmark,
};
pub use nuisance::{fit_nuisances, CrossFitNuisances, NuisanceConfig, NuisancePoint, ScoredUnits};
pub use synth::{generate, oracle_population_bounds, oracle_true_rate, LatentTable, OracleResult, SyntheticConfig};

/// Version string embedded in every artifact.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
