//! Built-in experiment instances. All have ten arms, level 0.95 and the
//! optimal arm at index 0.

use crate::bandit::{BanditInstance, RiskObjective};
use crate::bounds::specialized_truncation;
use crate::distributions::{solve_mean_for_cvar, ArmDistribution, Family};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::harness::plan::EstimatorChoice;

const ALPHA: f64 = 0.95;
const ARMS: usize = 10;

/// A named instance with its default budget grid and estimator families.
#[derive(Debug, Clone)]
pub struct BuiltinInstance {
    pub name: &'static str,
    pub description: &'static str,
    pub instance: BanditInstance,
    pub budgets: Vec<u64>,
    pub estimators: Vec<EstimatorChoice>,
}

/// Names accepted by [`builtin_instance`].
pub const BUILTIN_NAMES: [&str; 7] = [
    "exponential-mean",
    "exponential-cvar",
    "lomax-mean",
    "lomax-cvar",
    "mixed-cvar",
    "combo-reward-seeking",
    "combo-risk-averse",
];

/// Prior parameters that are valid for the mixed instance.
pub const MIXED_TRUE_PRIOR: (f64, f64, f64) = (1.9, 0.057, 0.45);
/// Slightly perturbed prior parameters for the mixed instance.
pub const MIXED_NOISY_PRIOR: (f64, f64, f64) = (2.0, 0.05, 0.6);

fn oblivious() -> Vec<EstimatorChoice> {
    vec![
        EstimatorChoice::empirical(),
        EstimatorChoice::truncated(0.3),
        EstimatorChoice::median_of_bins(0.3),
    ]
}

fn one_vs_rest(best: ArmDistribution, rest: ArmDistribution) -> Vec<ArmDistribution> {
    let mut arms = vec![best];
    arms.extend(std::iter::repeat_n(rest, ARMS - 1));
    arms
}

fn fixed_truncation(name: &str, (p, b, delta): (f64, f64, f64), growth: Option<f64>) -> EstimatorChoice {
    // The mean schedule is unused (the objective is CVaR only) but must be
    // valid, so it shares the CVaR truncation level.
    let level = specialized_truncation(p, b, ALPHA, delta);
    let mut e = EstimatorChoice::new(name, EstimatorKind::Truncated, growth);
    e.offset_m = level;
    e.offset_c = level;
    if growth.is_some() {
        e = e.growing_with_budget();
    }
    e
}

/// The mean-loss instance with exponential arms (means 0.97 vs 1).
fn exponential_mean() -> Result<BuiltinInstance> {
    Ok(BuiltinInstance {
        name: "exponential-mean",
        description: "exponential arms, optimal mean 0.97, others 1.0; minimise the mean",
        instance: BanditInstance::new(
            one_vs_rest(ArmDistribution::exponential(0.97)?, ArmDistribution::exponential(1.0)?),
            RiskObjective::new(ALPHA, 1.0, 0.0)?,
        )?,
        budgets: vec![2500, 5000, 10_000, 20_000],
        estimators: oblivious(),
    })
}

fn exponential_cvar() -> Result<BuiltinInstance> {
    let best = solve_mean_for_cvar(Family::Exponential, 2.85, ALPHA)?;
    let rest = solve_mean_for_cvar(Family::Exponential, 3.0, ALPHA)?;
    Ok(BuiltinInstance {
        name: "exponential-cvar",
        description: "exponential arms, optimal CVaR 2.85, others 3.00; minimise the CVaR",
        instance: BanditInstance::new(one_vs_rest(best, rest), RiskObjective::new(ALPHA, 0.0, 1.0)?)?,
        budgets: vec![5000, 10_000, 20_000, 40_000],
        estimators: oblivious(),
    })
}

fn lomax_mean() -> Result<BuiltinInstance> {
    Ok(BuiltinInstance {
        name: "lomax-mean",
        description: "Lomax arms with shape 1.8, optimal mean 0.9, others 1.0; minimise the mean",
        instance: BanditInstance::new(
            one_vs_rest(ArmDistribution::lomax(0.9, 1.8)?, ArmDistribution::lomax(1.0, 1.8)?),
            RiskObjective::new(ALPHA, 1.0, 0.0)?,
        )?,
        budgets: vec![2500, 5000, 10_000, 20_000],
        estimators: oblivious(),
    })
}

fn lomax_cvar() -> Result<BuiltinInstance> {
    let family = Family::Lomax { shape: 2.0 };
    Ok(BuiltinInstance {
        name: "lomax-cvar",
        description: "Lomax arms with shape 2, optimal CVaR 2.55, others 3.00; minimise the CVaR",
        instance: BanditInstance::new(
            one_vs_rest(
                solve_mean_for_cvar(family, 2.55, ALPHA)?,
                solve_mean_for_cvar(family, 3.0, ALPHA)?,
            ),
            RiskObjective::new(ALPHA, 0.0, 1.0)?,
        )?,
        budgets: vec![2500, 5000, 10_000, 20_000],
        estimators: oblivious(),
    })
}

fn mixed_cvar() -> Result<BuiltinInstance> {
    let mut arms = vec![solve_mean_for_cvar(Family::Exponential, 2.55, ALPHA)?];
    let exp3 = solve_mean_for_cvar(Family::Exponential, 3.0, ALPHA)?;
    let lomax3 = solve_mean_for_cvar(Family::Lomax { shape: 2.0 }, 3.0, ALPHA)?;
    arms.extend(std::iter::repeat_n(exp3, 4));
    arms.extend(std::iter::repeat_n(lomax3, 5));
    Ok(BuiltinInstance {
        name: "mixed-cvar",
        description: "five exponential arms (optimal CVaR 2.55, others 3.00) and five Lomax shape-2 arms with CVaR 3.00; minimise the CVaR",
        instance: BanditInstance::new(arms, RiskObjective::new(ALPHA, 0.0, 1.0)?)?,
        budgets: vec![2500, 5000, 10_000, 20_000],
        estimators: vec![
            fixed_truncation("specialized-true", MIXED_TRUE_PRIOR, None),
            fixed_truncation("specialized-noisy", MIXED_NOISY_PRIOR, None),
            fixed_truncation("robust-noisy", MIXED_NOISY_PRIOR, Some(0.3)),
            EstimatorChoice::truncated(0.3),
        ],
    })
}

fn combo_reward_seeking() -> Result<BuiltinInstance> {
    Ok(BuiltinInstance {
        name: "combo-reward-seeking",
        description: "0.9 mean + 0.1 CVaR; optimal Lomax(mean 0.85, shape 2), others Lomax(mean 1, shape 2.75)",
        instance: BanditInstance::new(
            one_vs_rest(ArmDistribution::lomax(0.85, 2.0)?, ArmDistribution::lomax(1.0, 2.75)?),
            RiskObjective::new(ALPHA, 0.9, 0.1)?,
        )?,
        budgets: vec![2500, 5000, 10_000, 20_000],
        estimators: oblivious(),
    })
}

fn combo_risk_averse() -> Result<BuiltinInstance> {
    Ok(BuiltinInstance {
        name: "combo-risk-averse",
        description: "0.1 mean + 0.9 CVaR; optimal Lomax shape 2.75 with CVaR 2.55, others Lomax shape 2 with CVaR 3",
        instance: BanditInstance::new(
            one_vs_rest(
                solve_mean_for_cvar(Family::Lomax { shape: 2.75 }, 2.55, ALPHA)?,
                solve_mean_for_cvar(Family::Lomax { shape: 2.0 }, 3.0, ALPHA)?,
            ),
            RiskObjective::new(ALPHA, 0.1, 0.9)?,
        )?,
        budgets: vec![2500, 5000, 10_000, 20_000],
        estimators: oblivious(),
    })
}

/// Looks up a built-in instance by name.
pub fn builtin_instance(name: &str) -> Result<BuiltinInstance> {
    match name {
        "exponential-mean" => exponential_mean(),
        "exponential-cvar" => exponential_cvar(),
        "lomax-mean" => lomax_mean(),
        "lomax-cvar" => lomax_cvar(),
        "mixed-cvar" => mixed_cvar(),
        "combo-reward-seeking" => combo_reward_seeking(),
        "combo-risk-averse" => combo_risk_averse(),
        other => Err(Error::UnknownInstance(other.to_string())),
    }
}

/// The whole catalogue, in [`BUILTIN_NAMES`] order.
pub fn builtin_instances() -> Result<Vec<BuiltinInstance>> {
    BUILTIN_NAMES.iter().map(|n| builtin_instance(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn catalogue_is_identifiable_with_arm_zero_optimal() {
        for b in builtin_instances().unwrap() {
            assert_eq!(b.instance.len(), 10, "{}", b.name);
            assert_eq!(b.instance.optimal_arm().unwrap(), 0, "{}", b.name);
        }
        assert!(matches!(builtin_instance("nope"), Err(Error::UnknownInstance(_))));
    }

    #[test]
    fn stated_gaps() {
        let g = builtin_instance("lomax-mean").unwrap().instance.gaps().unwrap();
        assert!(rel(g[0], 0.1) < 1e-12);
        let g = builtin_instance("lomax-cvar").unwrap().instance.gaps().unwrap();
        assert!(rel(g[0], 0.45) < 1e-6);
        let g = builtin_instance("exponential-cvar").unwrap().instance.gaps().unwrap();
        assert!(rel(g[0], 0.15) < 1e-6);
        let g = builtin_instance("combo-reward-seeking").unwrap().instance.gaps().unwrap();
        assert!(g[0] > 0.0);
    }

    #[test]
    fn stated_values_within_two_percent() {
        let alpha = 0.95;
        let inst = builtin_instance("combo-reward-seeking").unwrap().instance;
        let best = inst.arms()[0].ground_truth(alpha).unwrap();
        let rest = inst.arms()[1].ground_truth(alpha).unwrap();
        assert!(rel(best.cvar_alpha, 6.75) < 0.02);
        assert!(rel(rest.cvar_alpha, 6.42) < 0.02);
        let inst = builtin_instance("combo-risk-averse").unwrap().instance;
        assert!(rel(inst.arms()[0].mean().unwrap(), 0.40) < 0.02);
        assert!(rel(inst.arms()[1].mean().unwrap(), 0.38) < 0.02);
        let inst = builtin_instance("mixed-cvar").unwrap().instance;
        for (i, want) in [(0, 2.55), (1, 3.0), (9, 3.0)] {
            assert!(rel(inst.arms()[i].ground_truth(alpha).unwrap().cvar_alpha, want) < 1e-6);
        }
    }

    #[test]
    fn mixed_truncation_levels() {
        let b = builtin_instance("mixed-cvar").unwrap();
        let noisy = &b.estimators[1];
        assert!((noisy.offset_c - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(noisy.q_c(), None);
        let robust = &b.estimators[2];
        assert_eq!(robust.q_c(), Some(0.3));
        let (_, c) = robust.specs_at(0.95, 10_000).unwrap();
        assert_eq!(c.exponent(), None);
        assert!((c.truncation_level(7) - (20.0 / 3.0 + 10_000f64.powf(0.3))).abs() < 1e-9);
    }
}
