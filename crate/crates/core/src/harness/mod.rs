//! Monte Carlo experiment engine: error-rate sweeps, built-in instances,
//! plan files and empirical validation of concentration bounds.

pub mod instances;
pub mod plan;
pub mod stats;
pub mod sweep;
pub mod validate;

pub use instances::{builtin_instance, builtin_instances, BuiltinInstance, BUILTIN_NAMES};
pub use plan::{write_csv, EstimatorChoice, Growth, ExperimentPlan, PlanFile, SweepRow, CSV_HEADER, DEFAULT_SEED, DEFAULT_TRIALS, PAPER_TRIALS};
pub use stats::{wilson, Proportion, DEFAULT_CI_LEVEL};
pub use sweep::{run_sweep, ErrorRateEstimate, ExperimentConfig, Runner, SweepPoint};
pub use validate::{validate_concentration, BoundSelector, ValidationPoint, ValidationStatus};
