//! Monte Carlo estimation of RA-GSR error probabilities over a budget grid.
//!
//! Trial `t` at budget `T` runs with seed `derive_seed(&[master_seed, T, t])`
//! and arm `a` inside it draws from `derive_seed(&[trial_seed, a])`. Error
//! counts are summed, so the result does not depend on how trials are
//! spread over workers or on the order in which they finish.

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::bandit::{select_arm, BanditInstance, ScheduleKind};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::harness::stats::wilson;
use crate::seed::derive_seed;

/// One Monte Carlo sweep: a fixed instance, schedule family and estimator
/// pair evaluated at each budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub schedule: ScheduleKind,
    pub mean_spec: EstimatorSpec,
    pub cvar_spec: EstimatorSpec,
    pub budgets: Vec<u64>,
    pub trials: u64,
    pub master_seed: u64,
    pub ci_level: f64,
}

impl ExperimentConfig {
    /// Checks the structural invariants and returns the optimal arm.
    /// Budget feasibility is checked per budget during the sweep.
    pub fn validate(&self) -> Result<usize> {
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        if self.budgets.is_empty() {
            return Err(Error::param("budgets", "need at least one budget"));
        }
        if self.budgets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("budgets", "must be strictly ascending"));
        }
        crate::harness::stats::z_for_level(self.ci_level)?;
        self.instance.optimal_arm()
    }
}

/// Error-rate estimate at one budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateEstimate {
    pub budget: u64,
    pub errors: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ErrorRateEstimate {
    pub fn from_counts(budget: u64, errors: u64, trials: u64, ci_level: f64) -> Result<Self> {
        let w = wilson(errors, trials, ci_level)?;
        Ok(Self {
            budget,
            errors,
            trials,
            p_hat: w.estimate,
            ci_low: w.low,
            ci_high: w.high,
        })
    }

    pub fn overlaps(&self, other: &ErrorRateEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Outcome at one budget: an estimate, or the reason the budget could not be run.
pub type SweepPoint = Result<ErrorRateEstimate>;

/// Executes sweeps on a fixed-size worker pool.
pub struct Runner {
    pool: ThreadPool,
}

impl Runner {
    /// `workers = None` uses one worker per available core.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = workers {
            if w == 0 {
                return Err(Error::param("workers", "must be at least 1"));
            }
            builder = builder.num_threads(w);
        }
        let pool = builder.build().map_err(|e| Error::param("workers", e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `f` inside the pool, so parallel work in it (such as
    /// [`validate_concentration`](crate::harness::validate_concentration))
    /// uses these workers.
    pub fn install<R: Send, F: FnOnce() -> R + Send>(&self, f: F) -> R {
        self.pool.install(f)
    }

    /// Runs the sweep, calling `on_point` after each budget completes.
    pub fn sweep<F: FnMut(u64, &SweepPoint)>(&self, config: &ExperimentConfig, mut on_point: F) -> Result<Vec<SweepPoint>> {
        let best = config.validate()?;
        let mut out = Vec::with_capacity(config.budgets.len());
        for &budget in &config.budgets {
            let point = self.budget_point(config, best, budget);
            on_point(budget, &point);
            out.push(point);
        }
        Ok(out)
    }

    /// Runs every trial at a single budget.
    pub fn budget_point(&self, config: &ExperimentConfig, best: usize, budget: u64) -> SweepPoint {
        let schedule = config.schedule.build(config.instance.len(), budget)?;
        let errors = self.pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|trial| {
                    let seed = derive_seed(&[config.master_seed, budget, trial]);
                    let out = select_arm(&config.instance, &schedule, &config.mean_spec, &config.cvar_spec, seed)?;
                    Ok(u64::from(out.selected != best))
                })
                .try_reduce(|| 0u64, |a, b| Ok(a + b))
        })?;
        ErrorRateEstimate::from_counts(budget, errors, config.trials, config.ci_level)
    }
}

/// Runs a sweep on a pool with one worker per core.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    Runner::new(None)?.sweep(config, |_, _| {})
}
