//! Experiment plans: an instance, a schedule family, several estimator
//! families and a budget grid, read from TOML and written out as CSV.
//!
//! A plan file names a built-in instance, spells one out, or both (explicit
//! fields override the built-in defaults):
//!
//! ```toml
//! instance = "lomax-cvar"      # optional built-in
//! schedule = "sr"              # sr | halving | uniform
//! budgets = [1000, 2000, 4000]
//! trials = 5000
//! seed = 12648430
//! ci_level = 0.999
//!
//! [objective]                  # required without a built-in
//! alpha = 0.95
//! xi1 = 0.0
//! xi2 = 1.0
//!
//! [[arms]]
//! kind = "lomax"
//! mean = 0.38
//! shape = 2.0
//!
//! [[estimators]]
//! name = "truncated"
//! kind = "truncated"
//! q = 0.3                      # or q_m / q_c separately
//! offset_c = 0.0               # prior offset added to the CVaR schedule
//! grow_with = "samples"        # or "budget": offset + T^q, fixed within a run
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bandit::{BanditInstance, RiskObjective, ScheduleKind};
use crate::distributions::ArmDistribution;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, EstimatorSpec, Target};
use crate::harness::instances::builtin_instance;
use crate::harness::stats::DEFAULT_CI_LEVEL;
use crate::harness::sweep::{ErrorRateEstimate, ExperimentConfig, Runner, SweepPoint};

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x00C0_FFEE;

/// Trials per budget at desk scale.
pub const DEFAULT_TRIALS: u64 = 5000;

/// Trials per budget at full scale.
pub const PAPER_TRIALS: u64 = 50_000;

/// What the growing part of a schedule is evaluated at.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    /// `offset + n^q` at the current per-arm sample count `n`.
    #[default]
    Samples,
    /// `offset + T^q` at the total budget `T`, constant during a run.
    Budget,
}

/// A named estimator family: one mean and one CVaR estimator of the same kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorChoice {
    pub name: String,
    pub kind: EstimatorKind,
    /// Exponent shared by both schedules unless overridden.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_c: Option<f64>,
    #[serde(default)]
    pub offset_m: f64,
    #[serde(default)]
    pub offset_c: f64,
    #[serde(default, skip_serializing_if = "is_default_growth")]
    pub grow_with: Growth,
}

fn is_default_growth(g: &Growth) -> bool {
    *g == Growth::Samples
}

impl EstimatorChoice {
    pub fn empirical() -> Self {
        Self::new("empirical", EstimatorKind::Empirical, None)
    }

    pub fn truncated(q: f64) -> Self {
        Self::new("truncated", EstimatorKind::Truncated, Some(q))
    }

    pub fn median_of_bins(q: f64) -> Self {
        Self::new("median-of-bins", EstimatorKind::MedianOfBins, Some(q))
    }

    pub fn new(name: &str, kind: EstimatorKind, q: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            kind,
            q,
            q_m: None,
            q_c: None,
            offset_m: 0.0,
            offset_c: 0.0,
            grow_with: Growth::Samples,
        }
    }

    /// Same family with schedules grown at the budget instead of the sample count.
    pub fn growing_with_budget(mut self) -> Self {
        self.grow_with = Growth::Budget;
        self
    }

    pub fn q_m(&self) -> Option<f64> {
        self.q_m.or(self.q)
    }

    pub fn q_c(&self) -> Option<f64> {
        self.q_c.or(self.q)
    }

    fn exponents(&self) -> (Option<f64>, Option<f64>) {
        match self.kind {
            EstimatorKind::Empirical => (None, None),
            _ => (self.q_m(), self.q_c()),
        }
    }

    fn build(&self, alpha: f64, q_m: Option<f64>, q_c: Option<f64>, offset_m: f64, offset_c: f64) -> Result<(EstimatorSpec, EstimatorSpec)> {
        let wrap = |e: Error| match e {
            Error::InvalidParameter { field, reason } => Error::Config(format!("estimator `{}`: {field}: {reason}", self.name)),
            other => other,
        };
        let mean = EstimatorSpec::new(Target::Mean, self.kind, q_m, offset_m, None).map_err(wrap)?;
        let cvar = EstimatorSpec::new(Target::Cvar, self.kind, q_c, offset_c, Some(alpha)).map_err(wrap)?;
        Ok((mean, cvar))
    }

    /// The mean and CVaR estimator specs at level `alpha`, with schedules
    /// grown at the sample count. Budget-grown families also validate here,
    /// using the sample-count form.
    pub fn specs(&self, alpha: f64) -> Result<(EstimatorSpec, EstimatorSpec)> {
        let (q_m, q_c) = self.exponents();
        self.build(alpha, q_m, q_c, self.offset_m, self.offset_c)
    }

    /// The specs used for budget `t`. For budget growth the exponent is
    /// folded into a fixed level `offset + t^q`.
    pub fn specs_at(&self, alpha: f64, t: u64) -> Result<(EstimatorSpec, EstimatorSpec)> {
        let (q_m, q_c) = self.exponents();
        match self.grow_with {
            Growth::Samples => self.build(alpha, q_m, q_c, self.offset_m, self.offset_c),
            Growth::Budget => {
                // Checks the exponents against the usual ranges first.
                self.specs(alpha)?;
                let level = |q: Option<f64>, off: f64| q.map_or(off, |q| off + (t as f64).powf(q));
                self.build(alpha, None, None, level(q_m, self.offset_m), level(q_c, self.offset_c))
            }
        }
    }
}

/// Everything needed to produce one CSV: a sweep per estimator family.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub instance_name: String,
    pub instance: BanditInstance,
    pub schedule: ScheduleKind,
    pub estimators: Vec<EstimatorChoice>,
    pub budgets: Vec<u64>,
    pub trials: u64,
    pub master_seed: u64,
    pub ci_level: f64,
}

/// The on-disk form of a plan. Every field is optional so a file can lean
/// on a built-in instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<RiskObjective>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<Vec<ArmDistribution>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimators: Option<Vec<EstimatorChoice>>,
}

impl PlanFile {
    /// Parses TOML; errors carry the line and column of the offending entry.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Resolves defaults from the built-in instance (if any) and validates.
    pub fn resolve(&self) -> Result<ExperimentPlan> {
        let builtin = self.instance.as_deref().map(builtin_instance).transpose()?;
        let objective = match (&self.objective, &builtin) {
            (Some(o), _) => *o,
            (None, Some(b)) => *b.instance.objective(),
            (None, None) => return Err(Error::Config("`objective` is required without a built-in instance".into())),
        };
        let instance = match (&self.arms, &builtin) {
            (Some(arms), _) => BanditInstance::new(arms.clone(), objective)?,
            (None, Some(b)) => BanditInstance::new(b.instance.arms().to_vec(), objective)?,
            (None, None) => return Err(Error::Config("`arms` is required without a built-in instance".into())),
        };
        let instance_name = self
            .name
            .clone()
            .or_else(|| self.instance.clone())
            .unwrap_or_else(|| "custom".to_string());
        let estimators = match (&self.estimators, &builtin) {
            (Some(e), _) => e.clone(),
            (None, Some(b)) => b.estimators.clone(),
            (None, None) => vec![
                EstimatorChoice::empirical(),
                EstimatorChoice::truncated(0.3),
                EstimatorChoice::median_of_bins(0.3),
            ],
        };
        let budgets = match (&self.budgets, &builtin) {
            (Some(b), _) => b.clone(),
            (None, Some(b)) => b.budgets.clone(),
            (None, None) => return Err(Error::Config("`budgets` is required without a built-in instance".into())),
        };
        let plan = ExperimentPlan {
            instance_name,
            instance,
            schedule: self.schedule.unwrap_or(ScheduleKind::Sr),
            estimators,
            budgets,
            trials: self.trials.unwrap_or(DEFAULT_TRIALS),
            master_seed: self.seed.unwrap_or(DEFAULT_SEED),
            ci_level: self.ci_level.unwrap_or(DEFAULT_CI_LEVEL),
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub instance: String,
    pub schedule: ScheduleKind,
    pub estimator: String,
    pub q_m: Option<f64>,
    pub q_c: Option<f64>,
    pub estimate: ErrorRateEstimate,
}

/// CSV header of [`write_csv`].
pub const CSV_HEADER: &str = "instance,schedule,estimator,q_m,q_c,T,trials,errors,p_hat,ci_low,ci_high";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Renders rows as CSV (with header). Floats use the shortest round-trip form.
pub fn write_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let e = &r.estimate;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.instance,
            r.schedule.name(),
            r.estimator,
            opt(r.q_m),
            opt(r.q_c),
            e.budget,
            e.trials,
            e.errors,
            e.p_hat,
            e.ci_low,
            e.ci_high
        );
    }
    s
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() {
            return Err(Error::Config("need at least one estimator".into()));
        }
        let mut names: Vec<&str> = self.estimators.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate estimator name `{}`", w[0])));
        }
        for name in &names {
            if name.is_empty() || name.contains([',', '"', '\n']) {
                return Err(Error::Config(format!("estimator name `{name}` is not CSV-safe")));
            }
        }
        if self.instance_name.contains([',', '"', '\n']) {
            return Err(Error::Config("instance name is not CSV-safe".into()));
        }
        for (_, c) in self.configs()? {
            c.validate()?;
        }
        Ok(())
    }

    fn config(&self, mean_spec: EstimatorSpec, cvar_spec: EstimatorSpec, budgets: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig {
            instance: self.instance.clone(),
            schedule: self.schedule,
            mean_spec,
            cvar_spec,
            budgets,
            trials: self.trials,
            master_seed: self.master_seed,
            ci_level: self.ci_level,
        }
    }

    /// Sweep configurations in plan order, tagged with the index of their
    /// estimator family: one per family, or one per budget for families
    /// grown at the budget. Trial seeds depend only on the master seed, the
    /// budget and the trial index, so the split does not change results.
    pub fn configs(&self) -> Result<Vec<(usize, ExperimentConfig)>> {
        let alpha = self.instance.objective().alpha();
        let mut out = Vec::new();
        for (i, e) in self.estimators.iter().enumerate() {
            match e.grow_with {
                Growth::Samples => {
                    let (m, c) = e.specs(alpha)?;
                    out.push((i, self.config(m, c, self.budgets.clone())));
                }
                Growth::Budget => {
                    for &t in &self.budgets {
                        let (m, c) = e.specs_at(alpha, t)?;
                        out.push((i, self.config(m, c, vec![t])));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Runs every sweep. Budgets that cannot be run are passed to `on_point`
    /// and left out of the rows.
    pub fn run<F: FnMut(&EstimatorChoice, u64, &SweepPoint)>(&self, runner: &Runner, mut on_point: F) -> Result<Vec<SweepRow>> {
        let mut rows = Vec::new();
        for (i, config) in self.configs()? {
            let choice = &self.estimators[i];
            let points = runner.sweep(&config, |t, p| on_point(choice, t, p))?;
            let (q_m, q_c) = choice.exponents();
            for p in points.into_iter().flatten() {
                rows.push(SweepRow {
                    instance: self.instance_name.clone(),
                    schedule: self.schedule,
                    estimator: choice.name.clone(),
                    q_m,
                    q_c,
                    estimate: p,
                });
            }
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_plan_parses() {
        let text = r#"
name = "toy"
budgets = [20, 40]
trials = 10

[objective]
alpha = 0.9
xi1 = 1.0
xi2 = 0.0

[[arms]]
kind = "constant"
value = 1.0

[[arms]]
kind = "exponential"
mean = 2.0

[[estimators]]
name = "trunc"
kind = "truncated"
q_m = 0.5
q_c = 0.25
"#;
        let plan = PlanFile::from_toml(text).unwrap().resolve().unwrap();
        assert_eq!(plan.instance.len(), 2);
        assert_eq!(plan.master_seed, DEFAULT_SEED);
        let cfgs = plan.configs().unwrap();
        assert_eq!(cfgs[0].1.mean_spec.exponent(), Some(0.5));
        assert_eq!(cfgs[0].1.cvar_spec.exponent(), Some(0.25));
    }

    #[test]
    fn bad_shape_reports_line() {
        let text = "budgets = [10]\n[objective]\nalpha = 0.95\nxi1 = 1.0\nxi2 = 0.0\n[[arms]]\nkind = \"lomax\"\nmean = 1.0\nshape = 0.9\n[[arms]]\nkind = \"constant\"\nvalue = 1.0\n";
        let err = PlanFile::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("shape"), "{err}");
        assert!(err.contains("line 6") || err.contains("line 7"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let err = PlanFile::from_toml("instance = \"lomax-cvar\"\ntrails = 5\n").unwrap_err();
        assert!(err.to_string().contains("trails"), "{err}");
    }

    #[test]
    fn builtin_defaults() {
        let file = PlanFile {
            instance: Some("lomax-cvar".into()),
            ..Default::default()
        };
        let plan = file.resolve().unwrap();
        assert_eq!(plan.instance_name, "lomax-cvar");
        assert_eq!(plan.trials, DEFAULT_TRIALS);
        assert!(plan.estimators.len() >= 2);
    }

    #[test]
    fn csv_layout() {
        let row = SweepRow {
            instance: "x".into(),
            schedule: ScheduleKind::Sr,
            estimator: "truncated".into(),
            q_m: Some(0.3),
            q_c: None,
            estimate: ErrorRateEstimate::from_counts(100, 0, 10, 0.999).unwrap(),
        };
        let text = write_csv(&[row]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert!(lines.next().unwrap().starts_with("x,sr,truncated,0.3,,100,10,0,0,0,"));
    }
}
