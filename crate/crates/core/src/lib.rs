//! Risk-aware best-arm identification under a fixed budget.
//!
//! Arms are loss distributions; the goal is the arm minimising
//! `xi1 * E[X] + xi2 * CVaR_alpha(X)`. The crate provides
//!
//! * [`distributions`]: parametric losses with seeded sampling and exact
//!   mean, VaR and CVaR;
//! * [`estimators`]: empirical, truncated and median-of-bins estimators of
//!   the mean and the CVaR;
//! * [`bandit`]: RA-GSR (generalized successive rejects) with the successive
//!   rejects, sequential halving and uniform schedules;
//! * [`bounds`]: closed-form concentration bounds and thresholds;
//! * [`harness`]: Monte Carlo error-rate sweeps and bound validation.
//!
//! All randomness comes from explicit 64-bit seeds (see [`seed`]).

pub mod bandit;
pub mod bounds;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod normal;
pub mod quad;
pub mod seed;

pub use bandit::{
    halving_schedule, log_bar, run_ra_gsr, select_arm, sr_schedule, uniform_schedule, ArmEstimate, BanditInstance,
    PhaseRecord, PhaseSchedule, RiskObjective, RunOutcome, ScheduleKind,
};
pub use bounds::{MomentPrior, Side};
pub use distributions::{solve_mean_for_cvar, ArmDistribution, DistributionSpec, Family, GroundTruth};
pub use error::{Error, Result};
pub use estimators::{
    empirical_cvar, estimate, median_of_cvars, median_of_means, truncated_cvar, truncated_mean, EstimatorKind,
    EstimatorSpec, Target,
};
pub use harness::{
    builtin_instance, builtin_instances, run_sweep, validate_concentration, BoundSelector, ErrorRateEstimate,
    EstimatorChoice, ExperimentConfig, ExperimentPlan, PlanFile, Runner, ValidationPoint, ValidationStatus,
};
pub use seed::{derive_seed, SimRng};
