//! Empirical checks of concentration bounds: draw many independent batches,
//! count how often an estimator deviates from the ground truth by at least
//! `Delta`, and compare the frequency (with its Wilson interval) to the bound.
//!
//! Batch `i` at sample size `n` uses seed `derive_seed(&[seed, n, i])`.
//! A point whose validity condition fails is reported as not applicable and
//! no batches are drawn for it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    bounded_cvar_bound, empirical_cvar_dev_bound, empirical_cvar_two_sided_bound, empirical_mean_bound, mob_cvar_bound,
    mob_cvar_threshold, mom_threshold, pareto_cvar_lower_bound, truncated_cvar_bound, truncated_cvar_validity,
    truncated_mean_bound, truncated_mean_validity, MomentPrior, Side,
};
use crate::distributions::{ArmDistribution, DistributionSpec};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, EstimatorSpec, Target};
use crate::harness::stats::{wilson, DEFAULT_CI_LEVEL};
use crate::seed::{derive_seed, rng_from_seed};

/// Which bound to test. Priors carry `(p, B, V)`; their `delta` is replaced
/// by the deviation passed to [`validate_concentration`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "kebab-case")]
pub enum BoundSelector {
    /// Power-law bound for the empirical CVaR; both sides summed when `side` is `None`.
    EmpiricalCvar { prior: MomentPrior, side: Option<Side> },
    /// Leading term of the lower bound on upward deviations of the empirical
    /// CVaR of Pareto samples; passes when the frequency is at least
    /// `factor` times the term.
    ParetoLower { scale: f64, shape: f64, factor: f64 },
    /// Exponential bound for the truncated CVaR, valid once `b` exceeds the
    /// threshold.
    TruncatedCvar { prior: MomentPrior },
    /// Bound for the CVaR of samples confined to `[-b, b]`, measured against
    /// the CVaR of the clipped variable.
    BoundedCvar,
    /// `exp(-kN / (8N))` for the median of CVaRs once `N >= N*`.
    MedianOfCvars { prior: MomentPrior },
    /// Power-law bound for the empirical mean.
    EmpiricalMean { prior: MomentPrior },
    /// Exponential bound for the truncated mean with `b = n^q`.
    TruncatedMean { prior: MomentPrior },
    /// `exp(-kN / (8N))` for the median of means once `N` exceeds its threshold.
    MedianOfMeans { prior: MomentPrior },
}

impl BoundSelector {
    pub fn name(&self) -> &'static str {
        match self {
            BoundSelector::EmpiricalCvar { .. } => "empirical-cvar",
            BoundSelector::ParetoLower { .. } => "pareto-lower",
            BoundSelector::TruncatedCvar { .. } => "truncated-cvar",
            BoundSelector::BoundedCvar => "bounded-cvar",
            BoundSelector::MedianOfCvars { .. } => "median-of-cvars",
            BoundSelector::EmpiricalMean { .. } => "empirical-mean",
            BoundSelector::TruncatedMean { .. } => "truncated-mean",
            BoundSelector::MedianOfMeans { .. } => "median-of-means",
        }
    }

    fn expects(&self) -> (Target, EstimatorKind) {
        match self {
            BoundSelector::EmpiricalCvar { .. } | BoundSelector::ParetoLower { .. } => (Target::Cvar, EstimatorKind::Empirical),
            BoundSelector::TruncatedCvar { .. } | BoundSelector::BoundedCvar => (Target::Cvar, EstimatorKind::Truncated),
            BoundSelector::MedianOfCvars { .. } => (Target::Cvar, EstimatorKind::MedianOfBins),
            BoundSelector::EmpiricalMean { .. } => (Target::Mean, EstimatorKind::Empirical),
            BoundSelector::TruncatedMean { .. } => (Target::Mean, EstimatorKind::Truncated),
            BoundSelector::MedianOfMeans { .. } => (Target::Mean, EstimatorKind::MedianOfBins),
        }
    }

    fn is_lower_bound(&self) -> bool {
        matches!(self, BoundSelector::ParetoLower { .. })
    }
}

/// Outcome of one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationStatus {
    /// The whole confidence interval is on the bound's side.
    Pass,
    /// The whole confidence interval is on the wrong side of the bound.
    Violated,
    /// The interval straddles the bound.
    Inconclusive,
    /// The bound's validity condition does not hold at this sample size.
    NotApplicable,
}

/// Result at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub n: usize,
    /// Quantity the validity condition compares against (`b`, `N` or `n`
    /// threshold), if the bound has one.
    pub threshold: Option<f64>,
    pub deviations: u64,
    pub batches: u64,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Clamped bound (for lower bounds, the leading term before the factor).
    pub bound: f64,
    pub status: ValidationStatus,
}

enum Event {
    TwoSided,
    Below,
    Above,
}

struct Prepared {
    truth: f64,
    bound: f64,
    threshold: Option<f64>,
    applicable: bool,
    event: Event,
}

fn prior_with(prior: &MomentPrior, delta: f64) -> Result<MomentPrior> {
    prior.with_delta(delta)
}

fn prepare(dist: &ArmDistribution, spec: &EstimatorSpec, selector: &BoundSelector, n: usize, delta: f64) -> Result<Prepared> {
    let alpha = spec.alpha().unwrap_or(0.5);
    let gt = dist.ground_truth(alpha)?;
    let nn = n as u64;
    let two_sided = |truth, bound, threshold, applicable| Prepared {
        truth,
        bound,
        threshold,
        applicable,
        event: Event::TwoSided,
    };
    Ok(match selector {
        BoundSelector::EmpiricalCvar { prior, side } => {
            let prior = prior_with(prior, delta)?;
            match side {
                None => two_sided(gt.cvar_alpha, empirical_cvar_two_sided_bound(&prior, alpha, nn), None, true),
                Some(s) => Prepared {
                    truth: gt.cvar_alpha,
                    bound: empirical_cvar_dev_bound(&prior, alpha, nn, *s),
                    threshold: None,
                    applicable: true,
                    event: match s {
                        Side::Lower => Event::Below,
                        Side::Upper => Event::Above,
                    },
                },
            }
        }
        BoundSelector::ParetoLower { scale, shape, .. } => {
            if dist.spec() != (&DistributionSpec::Pareto { scale: *scale, shape: *shape }) {
                return Err(Error::param("dist", "the Pareto lower bound needs the matching Pareto distribution"));
            }
            Prepared {
                truth: gt.cvar_alpha,
                bound: pareto_cvar_lower_bound(*scale, *shape, alpha, delta, nn)?,
                threshold: None,
                applicable: true,
                event: Event::Above,
            }
        }
        BoundSelector::TruncatedCvar { prior } => {
            let prior = prior_with(prior, delta)?;
            let b = spec.truncation_level(n);
            let need = truncated_cvar_validity(&prior, alpha, gt.var_alpha);
            two_sided(gt.cvar_alpha, truncated_cvar_bound(b, alpha, nn, delta), Some(need), b > need)
        }
        BoundSelector::BoundedCvar => {
            let b = spec.truncation_level(n);
            let truth = dist.clipped_cvar(alpha, -b, b)?;
            two_sided(truth, bounded_cvar_bound(-b, b, alpha, nn, delta), None, true)
        }
        BoundSelector::MedianOfCvars { prior } => {
            let prior = prior_with(prior, delta)?;
            let bin = spec.bin_size(n);
            let used = (n / bin * bin) as u64;
            let need = mob_cvar_threshold(&prior, alpha);
            two_sided(gt.cvar_alpha, mob_cvar_bound(used, bin as u64), Some(need), bin as f64 >= need)
        }
        BoundSelector::EmpiricalMean { prior } => {
            two_sided(gt.mean, empirical_mean_bound(prior.p, prior.v, nn, delta), None, true)
        }
        BoundSelector::TruncatedMean { prior } => {
            let q = match (spec.exponent(), spec.prior_offset()) {
                (Some(q), off) if off == 0.0 => q,
                _ => return Err(Error::param("estimator", "the truncated-mean bound assumes b = n^q with no offset")),
            };
            let need = truncated_mean_validity(prior.b, prior.p, q, delta);
            two_sided(gt.mean, truncated_mean_bound(nn, q, delta), Some(need), n as f64 > need)
        }
        BoundSelector::MedianOfMeans { prior } => {
            let prior = prior_with(prior, delta)?;
            let bin = spec.bin_size(n);
            let used = (n / bin * bin) as u64;
            let need = mom_threshold(&prior);
            two_sided(gt.mean, mob_cvar_bound(used, bin as u64), Some(need), bin as f64 >= need)
        }
    })
}

/// Counts deviations of `estimator` on `batches` independent samples of
/// each size in `n_grid` and compares them with the selected bound at a
/// 99.9% Wilson interval.
pub fn validate_concentration(
    dist: &ArmDistribution,
    estimator: &EstimatorSpec,
    selector: &BoundSelector,
    n_grid: &[usize],
    delta: f64,
    batches: u64,
    seed: u64,
) -> Result<Vec<ValidationPoint>> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::param("delta", format!("must be positive and finite, got {delta}")));
    }
    if batches == 0 {
        return Err(Error::param("batches", "must be at least 1"));
    }
    if (estimator.target(), estimator.kind()) != selector.expects() {
        return Err(Error::param(
            "estimator",
            format!("{} does not match the {} bound", estimator.label(), selector.name()),
        ));
    }
    let mut out = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        if n == 0 {
            return Err(Error::param("n", "sample sizes must be positive"));
        }
        let prep = prepare(dist, estimator, selector, n, delta)?;
        if !prep.applicable {
            out.push(ValidationPoint {
                n,
                threshold: prep.threshold,
                deviations: 0,
                batches: 0,
                frequency: f64::NAN,
                ci_low: f64::NAN,
                ci_high: f64::NAN,
                bound: prep.bound,
                status: ValidationStatus::NotApplicable,
            });
            continue;
        }
        let deviations = count_deviations(dist, estimator, n, delta, batches, seed, &prep)?;
        let w = wilson(deviations, batches, DEFAULT_CI_LEVEL)?;
        let status = match selector {
            BoundSelector::ParetoLower { factor, .. } => {
                let target = factor * prep.bound;
                if w.low >= target {
                    ValidationStatus::Pass
                } else if w.high < target {
                    ValidationStatus::Violated
                } else {
                    ValidationStatus::Inconclusive
                }
            }
            _ => {
                debug_assert!(!selector.is_lower_bound());
                if w.high <= prep.bound {
                    ValidationStatus::Pass
                } else if w.low > prep.bound {
                    ValidationStatus::Violated
                } else {
                    ValidationStatus::Inconclusive
                }
            }
        };
        out.push(ValidationPoint {
            n,
            threshold: prep.threshold,
            deviations,
            batches,
            frequency: w.estimate,
            ci_low: w.low,
            ci_high: w.high,
            bound: prep.bound,
            status,
        });
    }
    Ok(out)
}

fn count_deviations(
    dist: &ArmDistribution,
    spec: &EstimatorSpec,
    n: usize,
    delta: f64,
    batches: u64,
    seed: u64,
    prep: &Prepared,
) -> Result<u64> {
    let truth = prep.truth;
    (0..batches)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(n), Vec::new()),
            |(buf, scratch), i| {
                let mut rng = rng_from_seed(derive_seed(&[seed, n as u64, i]));
                buf.clear();
                dist.draw_into(&mut rng, n, buf);
                let est = spec.estimate_with(buf, n, scratch)?;
                let hit = match prep.event {
                    Event::TwoSided => (est - truth).abs() >= delta,
                    Event::Below => est <= truth - delta,
                    Event::Above => est >= truth + delta,
                };
                Ok(u64::from(hit))
            },
        )
        .try_reduce(|| 0, |a, b| Ok(a + b))
}
