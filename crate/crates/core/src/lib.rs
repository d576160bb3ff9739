//! Constrained multi-armed bandits with a single cost threshold.
//!
//! Each arm yields an independent reward and cost sample per play. The goal is
//! the feasible arm (mean cost at most `C`) with the highest mean reward. This
//! crate provides the CAPT and CAPT-E index policies, the problem complexity
//! H(ε) with its finite-horizon success bound, and a seeded replication
//! harness with a JSON/CSV command-line front end.

pub mod cli;
pub mod complexity;
pub mod config;
pub mod error;
pub mod harness;
pub mod instance;
pub mod policy;
pub mod record;
pub mod stats;

pub use complexity::{
    classify_sets, compute_gaps, compute_h, epsilon_optimal_bounds, horizon_for_bound,
    is_epsilon_optimal, theorem1_bound, ArmSet, ComplexityReport, GapReport, TheoremBound,
};
pub use config::{CheckpointSpec, ExperimentConfig};
pub use error::{ComplexityError, HarnessError, InstanceError, PolicyError};
pub use harness::{
    aggregate, bound_comparison, log_checkpoints, pigeonhole_audit, run_experiment,
    run_replications, selection_curve, AggregateResult, BoundRow, CurvePoint,
};
pub use instance::{
    true_means, validate_instance, ArmSpec, BanditInstance, Distribution, SampleStream,
};
pub use policy::{
    capt_e_run, capt_index, capt_output, capt_run, capt_select, estimate_mu_star_feasible_max,
    estimate_mu_star_occupancy, index_vector, run_policy, uniform_run, EstimatorConfig,
    EstimatorKind, FeasibilityDirection, PolicyConfig, PolicyKind, PolicySpec, Recording,
};
pub use record::{ActionTrace, OutputSets, RunFlags, RunRecord};
pub use stats::{ArmStatistics, StatisticsTable};
