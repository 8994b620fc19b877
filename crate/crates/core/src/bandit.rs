//! Risk-aware generalized successive rejects (RA-GSR) for fixed-budget
//! best-arm identification under the objective `xi1 * mean + xi2 * CVaR`.
//!
//! A run is parameterised by a [`PhaseSchedule`] `n_1 <= ... <= n_{K-1}`.
//! In phase `k` every surviving arm is topped up to `n_k` pulls, all its
//! `n_k` samples are re-estimated, and the arm with the largest estimated
//! objective (losses, so larger is worse) is rejected. Ties are broken
//! towards the larger arm index. Total pulls are
//! `n_1 + ... + n_{K-1} + n_{K-1}`.
//!
//! Each arm draws from its own stream seeded by `derive_seed(&[seed, arm])`,
//! so the samples an arm sees do not depend on the order of rejections.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::{check_level, ArmDistribution};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorSpec, Target};
use crate::seed::{derive_seed, rng_from_seed};

/// Weights and level of the objective `xi1 * E[X] + xi2 * CVaR_alpha(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObjective", into = "RawObjective")]
pub struct RiskObjective {
    alpha: f64,
    xi1: f64,
    xi2: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjective {
    alpha: f64,
    xi1: f64,
    xi2: f64,
}

impl TryFrom<RawObjective> for RiskObjective {
    type Error = Error;
    fn try_from(r: RawObjective) -> Result<Self> {
        RiskObjective::new(r.alpha, r.xi1, r.xi2)
    }
}

impl From<RiskObjective> for RawObjective {
    fn from(o: RiskObjective) -> Self {
        RawObjective {
            alpha: o.alpha,
            xi1: o.xi1,
            xi2: o.xi2,
        }
    }
}

impl RiskObjective {
    pub fn new(alpha: f64, xi1: f64, xi2: f64) -> Result<Self> {
        check_level(alpha)?;
        for (name, w) in [("xi1", xi1), ("xi2", xi2)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::param(name, format!("must be nonnegative and finite, got {w}")));
            }
        }
        if xi1 + xi2 <= 0.0 {
            return Err(Error::param("xi2", "at least one weight must be positive"));
        }
        Ok(Self { alpha, xi1, xi2 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn xi1(&self) -> f64 {
        self.xi1
    }

    pub fn xi2(&self) -> f64 {
        self.xi2
    }

    pub fn uses_mean(&self) -> bool {
        self.xi1 > 0.0
    }

    pub fn uses_cvar(&self) -> bool {
        self.xi2 > 0.0
    }

    /// Objective value; a term with zero weight is skipped, so its input may be `None`.
    pub fn combine(&self, mean: Option<f64>, cvar: Option<f64>) -> f64 {
        let mut obj = 0.0;
        if self.uses_mean() {
            obj += self.xi1 * mean.expect("mean required when xi1 > 0");
        }
        if self.uses_cvar() {
            obj += self.xi2 * cvar.expect("cvar required when xi2 > 0");
        }
        obj
    }

    /// Ground-truth objective of a distribution.
    pub fn evaluate(&self, dist: &ArmDistribution) -> Result<f64> {
        let gt = dist.ground_truth(self.alpha)?;
        Ok(self.combine(Some(gt.mean), Some(gt.cvar_alpha)))
    }
}

/// Cumulative per-arm pull counts `n_1 <= ... <= n_{K-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pulls: Vec<usize>,
}

impl PhaseSchedule {
    pub fn new(pulls: Vec<usize>) -> Result<Self> {
        if pulls.is_empty() {
            return Err(Error::InvalidSchedule("needs at least one phase".into()));
        }
        if pulls[0] == 0 {
            return Err(Error::InvalidSchedule("pull counts must be positive".into()));
        }
        if let Some(w) = pulls.windows(2).find(|w| w[1] < w[0]) {
            return Err(Error::InvalidSchedule(format!(
                "pull counts must be nondecreasing, found {} after {}",
                w[1], w[0]
            )));
        }
        Ok(Self { pulls })
    }

    pub fn pulls(&self) -> &[usize] {
        &self.pulls
    }

    /// Number of arms the schedule is built for.
    pub fn arms(&self) -> usize {
        self.pulls.len() + 1
    }

    /// `n_1 + ... + n_{K-1} + n_{K-1}`: the pulls an RA-GSR run makes.
    pub fn total_pulls(&self) -> u64 {
        let s: u64 = self.pulls.iter().map(|&n| n as u64).sum();
        s + *self.pulls.last().unwrap() as u64
    }

    pub fn fits_budget(&self, budget: u64) -> bool {
        self.total_pulls() <= budget
    }
}

/// `1/2 + sum_{i=2}^K 1/i`.
pub fn log_bar(arms: usize) -> f64 {
    0.5 + (2..=arms).map(|i| 1.0 / i as f64).sum::<f64>()
}

fn check_arms(arms: usize) -> Result<()> {
    if arms < 2 {
        return Err(Error::param("K", format!("need at least 2 arms, got {arms}")));
    }
    Ok(())
}

/// Successive rejects: `n_k = ceil((T - K) / (log_bar(K) (K + 1 - k)))`.
pub fn sr_schedule(arms: usize, budget: u64) -> Result<PhaseSchedule> {
    check_arms(arms)?;
    let too_small = Error::BudgetTooSmall {
        budget,
        arms,
        schedule: "sr",
    };
    if budget <= arms as u64 {
        return Err(too_small);
    }
    let lb = log_bar(arms);
    let spare = (budget - arms as u64) as f64;
    let pulls: Vec<usize> = (1..arms)
        .map(|k| (spare / (lb * (arms + 1 - k) as f64)).ceil() as usize)
        .collect();
    if pulls[0] == 0 {
        return Err(too_small);
    }
    PhaseSchedule::new(pulls)
}

/// Sequential halving: `ceil(log2 K)` rounds; in a round with `S` survivors
/// each gets `floor(T / (S ceil(log2 K)))` further pulls and `floor(S / 2)`
/// arms are rejected, one phase per rejection.
pub fn halving_schedule(arms: usize, budget: u64) -> Result<PhaseSchedule> {
    check_arms(arms)?;
    let rounds = (usize::BITS - (arms - 1).leading_zeros()) as u64;
    let mut pulls = Vec::with_capacity(arms - 1);
    let mut survivors = arms;
    let mut cumulative = 0usize;
    while survivors > 1 {
        let step = budget / (survivors as u64 * rounds);
        if step == 0 {
            return Err(Error::BudgetTooSmall {
                budget,
                arms,
                schedule: "halving",
            });
        }
        cumulative += step as usize;
        let rejected = survivors / 2;
        pulls.extend(std::iter::repeat_n(cumulative, rejected));
        survivors -= rejected;
    }
    PhaseSchedule::new(pulls)
}

/// Uniform exploration: every `n_k = floor(T / K)`.
pub fn uniform_schedule(arms: usize, budget: u64) -> Result<PhaseSchedule> {
    check_arms(arms)?;
    let n = budget / arms as u64;
    if n == 0 {
        return Err(Error::BudgetTooSmall {
            budget,
            arms,
            schedule: "uniform",
        });
    }
    PhaseSchedule::new(vec![n as usize; arms - 1])
}

/// The three built-in schedule families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Sr,
    Halving,
    Uniform,
}

impl ScheduleKind {
    pub fn build(self, arms: usize, budget: u64) -> Result<PhaseSchedule> {
        match self {
            ScheduleKind::Sr => sr_schedule(arms, budget),
            ScheduleKind::Halving => halving_schedule(arms, budget),
            ScheduleKind::Uniform => uniform_schedule(arms, budget),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Sr => "sr",
            ScheduleKind::Halving => "halving",
            ScheduleKind::Uniform => "uniform",
        }
    }
}

/// Arms plus the objective that ranks them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    arms: Vec<ArmDistribution>,
    objective: RiskObjective,
}

impl BanditInstance {
    pub fn new(arms: Vec<ArmDistribution>, objective: RiskObjective) -> Result<Self> {
        check_arms(arms.len())?;
        Ok(Self { arms, objective })
    }

    pub fn arms(&self) -> &[ArmDistribution] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn objective(&self) -> &RiskObjective {
        &self.objective
    }

    /// Ground-truth objective of every arm.
    pub fn objectives(&self) -> Result<Vec<f64>> {
        self.arms.iter().map(|a| self.objective.evaluate(a)).collect()
    }

    /// Index of the unique minimiser of the objective; two arms within a
    /// relative `1e-9` of the minimum make the instance non-identifiable.
    pub fn optimal_arm(&self) -> Result<usize> {
        let obj = self.objectives()?;
        let mut best = 0;
        for (i, &o) in obj.iter().enumerate() {
            if o < obj[best] {
                best = i;
            }
        }
        let tol = 1e-9 * obj[best].abs().max(1.0);
        if let Some(other) = (0..obj.len()).find(|&i| i != best && obj[i] - obj[best] <= tol) {
            return Err(Error::NotIdentifiable {
                first: best.min(other),
                second: best.max(other),
            });
        }
        Ok(best)
    }

    /// Sorted gaps `Delta[2] <= ... <= Delta[K]` to the optimal objective.
    pub fn gaps(&self) -> Result<Vec<f64>> {
        let best = self.optimal_arm()?;
        let obj = self.objectives()?;
        let mut gaps: Vec<f64> = obj
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != best)
            .map(|(_, &o)| o - obj[best])
            .collect();
        gaps.sort_by(f64::total_cmp);
        Ok(gaps)
    }
}

/// One arm's estimates in one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmEstimate {
    pub arm: usize,
    pub mean: Option<f64>,
    pub cvar: Option<f64>,
    pub objective: f64,
}

/// Audit record of one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    /// 1-based phase number.
    pub phase: usize,
    /// Cumulative pulls per surviving arm at the end of the phase.
    pub pulls: usize,
    pub survivors: Vec<usize>,
    pub estimates: Vec<ArmEstimate>,
    pub rejected: usize,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn join<T, F: Fn(&T) -> String>(xs: &[T], f: F) -> String {
    xs.iter().map(f).collect::<Vec<_>>().join(",")
}

impl fmt::Display for PhaseRecord {
    /// `phase=1 n=12 survivors=0,1,2 mean=... cvar=... obj=... rejected=2`,
    /// with one comma-separated entry per survivor and `-` for unused estimates.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "phase={} n={} survivors={} mean={} cvar={} obj={} rejected={}",
            self.phase,
            self.pulls,
            join(&self.survivors, |a| a.to_string()),
            join(&self.estimates, |e| fmt_opt(e.mean)),
            join(&self.estimates, |e| fmt_opt(e.cvar)),
            join(&self.estimates, |e| e.objective.to_string()),
            self.rejected
        )
    }
}

/// Result of one RA-GSR run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub selected: usize,
    pub total_pulls: u64,
    /// Empty when the run was made without an audit trail.
    pub phases: Vec<PhaseRecord>,
}

impl RunOutcome {
    /// The audit trail, one line per phase, then `selected=<arm> pulls=<total>`.
    pub fn audit_lines(&self) -> String {
        let mut s = String::new();
        for p in &self.phases {
            s.push_str(&p.to_string());
            s.push('\n');
        }
        s.push_str(&format!("selected={} pulls={}\n", self.selected, self.total_pulls));
        s
    }

    pub fn rejections(&self) -> Vec<usize> {
        self.phases.iter().map(|p| p.rejected).collect()
    }
}

fn check_specs(instance: &BanditInstance, mean_spec: &EstimatorSpec, cvar_spec: &EstimatorSpec) -> Result<()> {
    if mean_spec.target() != Target::Mean {
        return Err(Error::param("mean_spec", "must target the mean"));
    }
    if cvar_spec.target() != Target::Cvar {
        return Err(Error::param("cvar_spec", "must target the CVaR"));
    }
    let alpha = instance.objective.alpha();
    if cvar_spec.alpha() != Some(alpha) {
        return Err(Error::param(
            "cvar_spec",
            format!("level {:?} does not match the objective level {alpha}", cvar_spec.alpha()),
        ));
    }
    Ok(())
}

/// Runs RA-GSR once and records the full audit trail.
pub fn run_ra_gsr(
    instance: &BanditInstance,
    schedule: &PhaseSchedule,
    mean_spec: &EstimatorSpec,
    cvar_spec: &EstimatorSpec,
    seed: u64,
) -> Result<RunOutcome> {
    run(instance, schedule, mean_spec, cvar_spec, seed, true)
}

/// Runs RA-GSR once, returning only the selected arm and pull count.
pub fn select_arm(
    instance: &BanditInstance,
    schedule: &PhaseSchedule,
    mean_spec: &EstimatorSpec,
    cvar_spec: &EstimatorSpec,
    seed: u64,
) -> Result<RunOutcome> {
    run(instance, schedule, mean_spec, cvar_spec, seed, false)
}

fn run(
    instance: &BanditInstance,
    schedule: &PhaseSchedule,
    mean_spec: &EstimatorSpec,
    cvar_spec: &EstimatorSpec,
    seed: u64,
    audit: bool,
) -> Result<RunOutcome> {
    let k = instance.len();
    if schedule.arms() != k {
        return Err(Error::InvalidSchedule(format!(
            "schedule has {} phases but the instance has {k} arms",
            schedule.pulls().len()
        )));
    }
    check_specs(instance, mean_spec, cvar_spec)?;
    let objective = instance.objective;

    let mut rngs: Vec<_> = (0..k).map(|a| rng_from_seed(derive_seed(&[seed, a as u64]))).collect();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut survivors: Vec<usize> = (0..k).collect();
    let mut scratch = Vec::new();
    let mut phases = Vec::new();
    let mut total = 0u64;
    let mut estimates = Vec::with_capacity(k);

    for (phase, &n) in schedule.pulls().iter().enumerate() {
        estimates.clear();
        for &arm in &survivors {
            let have = samples[arm].len();
            let need = n - have;
            instance.arms[arm].draw_into(&mut rngs[arm], need, &mut samples[arm]);
            total += need as u64;
            let xs = &samples[arm];
            let mean = if objective.uses_mean() {
                Some(mean_spec.estimate_with(xs, n, &mut scratch)?)
            } else {
                None
            };
            let cvar = if objective.uses_cvar() {
                Some(cvar_spec.estimate_with(xs, n, &mut scratch)?)
            } else {
                None
            };
            let obj = objective.combine(mean, cvar);
            if !obj.is_finite() {
                return Err(Error::NonFiniteEstimate { arm, phase: phase + 1 });
            }
            estimates.push(ArmEstimate {
                arm,
                mean,
                cvar,
                objective: obj,
            });
        }
        // Survivors are ascending, so `>=` leaves the largest index among ties.
        let mut worst = 0;
        for (j, e) in estimates.iter().enumerate() {
            if e.objective >= estimates[worst].objective {
                worst = j;
            }
        }
        let rejected = survivors[worst];
        if audit {
            phases.push(PhaseRecord {
                phase: phase + 1,
                pulls: n,
                survivors: survivors.clone(),
                estimates: estimates.clone(),
                rejected,
            });
        }
        survivors.remove(worst);
        samples[rejected] = Vec::new();
    }
    Ok(RunOutcome {
        selected: survivors[0],
        total_pulls: total,
        phases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants(values: &[f64], objective: RiskObjective) -> BanditInstance {
        BanditInstance::new(
            values.iter().map(|&v| ArmDistribution::constant(v).unwrap()).collect(),
            objective,
        )
        .unwrap()
    }

    fn mean_obj() -> RiskObjective {
        RiskObjective::new(0.95, 1.0, 0.0).unwrap()
    }

    #[test]
    fn log_bar_values() {
        assert_eq!(log_bar(2), 1.0);
        assert!((log_bar(10) - 2.428_968_253_968_254).abs() < 1e-12);
    }

    #[test]
    fn sr_examples() {
        assert_eq!(sr_schedule(2, 12).unwrap().pulls(), &[5]);
        assert_eq!(sr_schedule(2, 4).unwrap().pulls(), &[1]);
        assert!(matches!(sr_schedule(2, 2), Err(Error::BudgetTooSmall { .. })));
        let s = sr_schedule(10, 20_000).unwrap();
        assert!(s.fits_budget(20_000));
    }

    #[test]
    fn halving_examples() {
        assert_eq!(halving_schedule(4, 16).unwrap().pulls(), &[2, 2, 6]);
        assert_eq!(halving_schedule(2, 11).unwrap(), uniform_schedule(2, 11).unwrap());
        assert_eq!(halving_schedule(5, 30).unwrap().pulls(), &[2, 2, 5, 10]);
        assert!(halving_schedule(4, 7).is_err());
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_schedule(10, 1000).unwrap().pulls(), &[100; 9]);
        assert_eq!(uniform_schedule(3, 10).unwrap().pulls(), &[3, 3]);
        assert_eq!(uniform_schedule(2, 2).unwrap().pulls(), &[1]);
        assert!(uniform_schedule(3, 2).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(PhaseSchedule::new(vec![]).is_err());
        assert!(PhaseSchedule::new(vec![0, 1]).is_err());
        assert!(PhaseSchedule::new(vec![3, 2]).is_err());
        assert_eq!(PhaseSchedule::new(vec![1, 2, 2]).unwrap().total_pulls(), 7);
    }

    #[test]
    fn objective_validation() {
        assert!(RiskObjective::new(0.95, 0.0, 0.0).is_err());
        assert!(RiskObjective::new(0.95, -1.0, 1.0).is_err());
        assert!(RiskObjective::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn two_constant_arms() {
        let inst = constants(&[1.0, 2.0], mean_obj());
        let s = uniform_schedule(2, 10).unwrap();
        let out = run_ra_gsr(
            &inst,
            &s,
            &EstimatorSpec::empirical_mean(),
            &EstimatorSpec::empirical_cvar(0.95).unwrap(),
            3,
        )
        .unwrap();
        assert_eq!(out.selected, 0);
        assert_eq!(out.total_pulls, 10);
    }

    #[test]
    fn three_constant_arms_reject_in_order() {
        let inst = constants(&[1.0, 2.0, 3.0], mean_obj());
        let s = uniform_schedule(3, 9).unwrap();
        let out = run_ra_gsr(
            &inst,
            &s,
            &EstimatorSpec::empirical_mean(),
            &EstimatorSpec::empirical_cvar(0.95).unwrap(),
            0,
        )
        .unwrap();
        assert_eq!(out.rejections(), vec![2, 1]);
        assert_eq!(out.selected, 0);
        // Second phase needs no new pulls under a flat schedule.
        assert_eq!(out.total_pulls, 9);
        let lines = out.audit_lines();
        assert!(lines.starts_with("phase=1 n=3 survivors=0,1,2 mean=1,2,3 cvar=-,-,- obj=1,2,3 rejected=2\n"));
        assert!(lines.ends_with("selected=0 pulls=9\n"));
    }

    #[test]
    fn ties_reject_largest_index() {
        let inst = constants(&[1.0, 1.0, 1.0], mean_obj());
        let out = run_ra_gsr(
            &inst,
            &uniform_schedule(3, 3).unwrap(),
            &EstimatorSpec::empirical_mean(),
            &EstimatorSpec::empirical_cvar(0.95).unwrap(),
            0,
        )
        .unwrap();
        assert_eq!(out.rejections(), vec![2, 1]);
        assert!(matches!(inst.optimal_arm(), Err(Error::NotIdentifiable { first: 0, second: 1 })));
    }

    #[test]
    fn spec_mismatches_rejected() {
        let inst = constants(&[1.0, 2.0], mean_obj());
        let s = uniform_schedule(2, 4).unwrap();
        let m = EstimatorSpec::empirical_mean();
        let c = EstimatorSpec::empirical_cvar(0.9).unwrap();
        assert!(run_ra_gsr(&inst, &s, &m, &c, 0).is_err());
        let c95 = EstimatorSpec::empirical_cvar(0.95).unwrap();
        assert!(run_ra_gsr(&inst, &s, &c95, &c95, 0).is_err());
        assert!(run_ra_gsr(&inst, &uniform_schedule(3, 9).unwrap(), &m, &c95, 0).is_err());
    }

    #[test]
    fn gaps_sorted() {
        let inst = constants(&[2.0, 1.0, 4.0, 1.5], mean_obj());
        assert_eq!(inst.optimal_arm().unwrap(), 1);
        assert_eq!(inst.gaps().unwrap(), vec![0.5, 1.0, 3.0]);
    }
}
