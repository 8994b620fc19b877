//! Closed-form concentration bounds, validity thresholds and constants for
//! the estimators in [`crate::estimators`] and for RA-GSR error
//! probabilities, plus the heavy-tail perturbation used to illustrate why
//! no algorithm can be uniformly fast on all heavy-tailed instances.
//!
//! Every probability bound is clamped to `[0, 1]`; the raw expressions can
//! exceed 1 for small samples. Moment priors follow the convention
//! `E|X|^p < B` and `E|X - E X|^p < V`.

use serde::{Deserialize, Serialize};

use crate::bandit::{log_bar, RiskObjective};
use crate::distributions::{check_level, ArmDistribution};
use crate::error::{Error, Result};

/// Relative inflation applied by [`MomentPrior::oracle`] so the moment
/// conditions hold strictly.
pub const ORACLE_SLACK: f64 = 1e-9;

/// Clamps a bound to `[0, 1]`.
pub fn clamp_probability(x: f64) -> f64 {
    if x.is_nan() {
        1.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Moment exponent, moment bounds and deviation size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPrior {
    pub p: f64,
    /// Bound on the raw moment `E|X|^p`.
    pub b: f64,
    /// Bound on the central moment `E|X - E X|^p`.
    pub v: f64,
    /// Deviation (or gap) size.
    pub delta: f64,
}

impl MomentPrior {
    pub fn new(p: f64, b: f64, v: f64, delta: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::param("p", format!("must lie in (1, 2], got {p}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::param("B", format!("must be positive and finite, got {b}")));
        }
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::param("V", format!("must be nonnegative and finite, got {v}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::param("delta", format!("must be positive and finite, got {delta}")));
        }
        Ok(Self { p, b, v, delta })
    }

    /// Prior with `B` and `V` set to the distribution's actual moments
    /// (computed by quadrature), inflated by [`ORACLE_SLACK`].
    pub fn oracle(dist: &ArmDistribution, p: f64, delta: f64) -> Result<Self> {
        if let Some(a) = dist.tail_index() {
            if p >= a {
                return Err(Error::param(
                    "p",
                    format!("moment of order {p} is infinite for tail index {a}"),
                ));
            }
        }
        let b = dist.abs_moment(p)? * (1.0 + ORACLE_SLACK);
        let v = dist.central_abs_moment(p)? * (1.0 + ORACLE_SLACK);
        Self::new(p, b.max(f64::MIN_POSITIVE), v, delta)
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        Self::new(self.p, self.b, self.v, delta)
    }

    pub fn v_emp(&self, alpha: f64) -> f64 {
        v_emp(self.p, self.b, self.v, alpha)
    }
}

/// `2^{p-1} V / beta + 2^p B / beta`.
pub fn v_emp(p: f64, b: f64, v: f64, alpha: f64) -> f64 {
    let beta = 1.0 - alpha;
    2f64.powf(p - 1.0) * v / beta + 2f64.powf(p) * b / beta
}

/// Direction of a deviation of the empirical CVaR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `P(c_hat <= c - Delta)`.
    Lower,
    /// `P(c_hat >= c + Delta)`.
    Upper,
}

/// Power-law bound on one-sided deviations of the empirical CVaR.
pub fn empirical_cvar_dev_bound(prior: &MomentPrior, alpha: f64, n: u64, side: Side) -> f64 {
    let MomentPrior { p, b, delta, .. } = *prior;
    let beta = 1.0 - alpha;
    let vemp = prior.v_emp(alpha);
    let nb = n as f64 * beta;
    let poly = vemp / (nb.powf(p - 1.0) * delta.powf(p));
    let raw = match side {
        Side::Lower => {
            let ratio = delta * delta * beta.powf(2.0 / p) / b.powf(2.0 / p);
            180.0 * poly + (-(nb / 8.0) * ratio.min(1.0)).exp()
        }
        Side::Upper => {
            360.0 * poly
                + 72.0 * vemp * beta / (nb.powf(p - 1.0) * b)
                + (-(n as f64) * beta.powf(1.0 + 2.0 / p) * delta * delta
                    / (8.0 * b.powf(2.0 / p) + 2.0 * delta * (b * beta).powf(1.0 / p)))
                .exp()
                + (-nb / 8.0).exp()
        }
    };
    clamp_probability(raw)
}

/// Two-sided version: the sum of both one-sided bounds, clamped.
pub fn empirical_cvar_two_sided_bound(prior: &MomentPrior, alpha: f64, n: u64) -> f64 {
    clamp_probability(
        empirical_cvar_dev_bound(prior, alpha, n, Side::Lower) + empirical_cvar_dev_bound(prior, alpha, n, Side::Upper),
    )
}

/// Leading term `beta x_m^a / (n^{a-1} (c + Delta)^a)` of the lower bound on
/// `P(c_hat >= c + Delta)` for Pareto samples; the lower-order remainder is
/// not included.
pub fn pareto_cvar_lower_bound(x_m: f64, a: f64, alpha: f64, delta: f64, n: u64) -> Result<f64> {
    let dist = ArmDistribution::pareto(x_m, a)?;
    let c = dist.ground_truth(alpha)?.cvar_alpha;
    let beta = 1.0 - alpha;
    Ok(clamp_probability(
        beta * x_m.powf(a) / ((n as f64).powf(a - 1.0) * (c + delta).powf(a)),
    ))
}

/// `6 exp(-n beta Delta^2 / (176 b^2))` for the CVaR of samples clipped to `[-b, b]`.
pub fn truncated_cvar_bound(b: f64, alpha: f64, n: u64, delta: f64) -> f64 {
    let beta = 1.0 - alpha;
    clamp_probability(6.0 * (-(n as f64) * beta * delta * delta / (176.0 * b * b)).exp())
}

/// Smallest truncation level for which [`truncated_cvar_bound`] applies:
/// `max(|v_alpha|, (2B / (Delta beta))^{1/(p-1)})`.
pub fn truncated_cvar_validity(prior: &MomentPrior, alpha: f64, var_magnitude: f64) -> f64 {
    let beta = 1.0 - alpha;
    let t = (2.0 * prior.b / (prior.delta * beta)).powf(1.0 / (prior.p - 1.0));
    var_magnitude.abs().max(t)
}

/// `exp(-n / (8N))` for the median of empirical CVaRs over bins of size `N`.
///
/// The bin-count argument gives `exp(-k / 8)` with `k = floor(n / N)`
/// bins; pass `n = kN` (the samples actually used) to stay on the safe side.
pub fn mob_cvar_bound(n: u64, bin_size: u64) -> f64 {
    clamp_probability((-(n as f64) / (8.0 * bin_size as f64)).exp())
}

/// Minimal bin size `N*` for [`mob_cvar_bound`].
pub fn mob_cvar_threshold(prior: &MomentPrior, alpha: f64) -> f64 {
    let MomentPrior { p, b, delta, .. } = *prior;
    let beta = 1.0 - alpha;
    let vemp = prior.v_emp(alpha);
    let first = (4320.0 * vemp / (beta.powf(p - 1.0) * delta.powf(p))
        + 576.0 * vemp * beta / (beta.powf(p - 1.0) * b))
        .powf(1.0 / (p - 1.0));
    let inner = 8.0 * b.powf(2.0 / p) / (delta * delta * beta.powf(2.0 / p)) + 2.0 * b.powf(1.0 / p) / (delta * beta.powf(1.0 / p));
    let second = 24f64.ln() / beta * inner.max(8.0);
    first.max(second)
}

/// Minimal bin size `(144 V / Delta^p)^{1/(p-1)}` for the median of means,
/// whose deviation bound is also `exp(-n / (8N))`.
pub fn mom_threshold(prior: &MomentPrior) -> f64 {
    (144.0 * prior.v / prior.delta.powf(prior.p)).powf(1.0 / (prior.p - 1.0))
}

/// `(3 sqrt 2)^p p^{p/2}`.
pub fn c_p(p: f64) -> f64 {
    (3.0 * std::f64::consts::SQRT_2).powf(p) * p.powf(p / 2.0)
}

/// `(B / min(alpha, beta))^{1/p}`, a bound on `|v_alpha|`.
pub fn var_magnitude(b: f64, alpha: f64, p: f64) -> f64 {
    (b / alpha.min(1.0 - alpha)).powf(1.0 / p)
}

/// `(B / beta)^{1/p}`, a bound on `c_alpha`.
pub fn cvar_magnitude(b: f64, alpha: f64, p: f64) -> f64 {
    (b / (1.0 - alpha)).powf(1.0 / p)
}

/// `C_p V / (n^{p-1} Delta^p)` for `p <= 2` (`n^{p/2}` for `p > 2`): the
/// deviation bound of the empirical mean.
pub fn empirical_mean_bound(p: f64, v: f64, n: u64, delta: f64) -> f64 {
    let rate = if p <= 2.0 { p - 1.0 } else { p / 2.0 };
    clamp_probability(c_p(p) * v / ((n as f64).powf(rate) * delta.powf(p)))
}

/// `2 exp(-n^{1-q} Delta / 4)` for the truncated mean with `b = n^q`.
pub fn truncated_mean_bound(n: u64, q: f64, delta: f64) -> f64 {
    clamp_probability(2.0 * (-(n as f64).powf(1.0 - q) * delta / 4.0).exp())
}

/// Sample size beyond which [`truncated_mean_bound`] applies:
/// `(3B / Delta)^{1/(q(p-1))}` for `p <= 2`, `(3B / Delta)^{1/q}` for `p > 2`.
pub fn truncated_mean_validity(b: f64, p: f64, q: f64, delta: f64) -> f64 {
    let e = if p <= 2.0 { q * (p - 1.0) } else { q };
    (3.0 * b / delta).powf(1.0 / e)
}

/// `6 exp(-n beta (Delta / (hi - lo))^2 / 11)` for samples supported in `[lo, hi]`.
pub fn bounded_cvar_bound(lo: f64, hi: f64, alpha: f64, n: u64, delta: f64) -> f64 {
    let beta = 1.0 - alpha;
    let r = delta / (hi - lo);
    clamp_probability(6.0 * (-(n as f64) * beta * r * r / 11.0).exp())
}

/// Prior-independent constants for a given prior and level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxBounds {
    pub c_p: f64,
    pub var_magnitude: f64,
    pub cvar_magnitude: f64,
    pub v_emp: f64,
}

pub fn aux_bounds(prior: &MomentPrior, alpha: f64) -> AuxBounds {
    AuxBounds {
        c_p: c_p(prior.p),
        var_magnitude: var_magnitude(prior.b, alpha, prior.p),
        cvar_magnitude: cvar_magnitude(prior.b, alpha, prior.p),
        v_emp: prior.v_emp(alpha),
    }
}

/// Truncation level `(4B / (beta Delta))^{1/(p-1)}` that a specialised
/// algorithm derives from a prior.
pub fn specialized_truncation(p: f64, b: f64, alpha: f64, delta: f64) -> f64 {
    (4.0 * b / ((1.0 - alpha) * delta)).powf(1.0 / (p - 1.0))
}

/// Error-probability bound for SR with truncation estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrTruncationBound {
    /// Clamped bound.
    pub bound: f64,
    /// Unclamped sum of the two series.
    pub raw: f64,
    pub n_star: f64,
    /// `K + K log_bar(K) n*`; the bound applies for `T` above this.
    pub min_budget: f64,
}

fn check_rsr_inputs(alpha: f64, q_m: f64, q_c: f64, k: usize, budget: u64) -> Result<()> {
    check_level(alpha)?;
    if k < 2 {
        return Err(Error::param("K", "need at least 2 arms"));
    }
    if budget <= k as u64 {
        return Err(Error::param("T", format!("budget {budget} must exceed K = {k}")));
    }
    if !(q_m > 0.0 && q_m < 1.0) {
        return Err(Error::param("q_m", format!("must lie in (0, 1), got {q_m}")));
    }
    if !(q_c > 0.0 && q_c < 1.0) {
        return Err(Error::param("q_c", format!("must lie in (0, 1), got {q_c}")));
    }
    Ok(())
}

/// Bound on the misidentification probability of SR with the truncated
/// mean (`b = n^{q_m}`) and truncated CVaR (`b = n^{q_c}`, `q_c < 1/2`).
///
/// `gaps` holds `Delta[2] <= ... <= Delta[K]` (length `K - 1`). Terms whose
/// objective weight is zero are left out of both the sums and `n*`.
pub fn sr_truncation_error_bound(
    gaps: &[f64],
    p: f64,
    b: f64,
    objective: &RiskObjective,
    q_m: f64,
    q_c: f64,
    budget: u64,
) -> Result<SrTruncationBound> {
    let k = gaps.len() + 1;
    let alpha = objective.alpha();
    check_rsr_inputs(alpha, q_m, q_c, k, budget)?;
    if q_c >= 0.5 {
        return Err(Error::param("q_c", format!("must lie in (0, 0.5), got {q_c}")));
    }
    MomentPrior::new(p, b, 0.0, 1.0)?;
    if gaps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("gaps", "must be sorted nondecreasing"));
    }
    if !(gaps[0] > 0.0) {
        return Err(Error::param("gaps", "smallest gap must be positive"));
    }
    let beta = 1.0 - alpha;
    let (xi1, xi2) = (objective.xi1(), objective.xi2());
    let lb = log_bar(k);
    let base = (budget - k as u64) as f64 / lb;
    let mut raw = 0.0;
    for (j, &d) in gaps.iter().enumerate() {
        let i = (j + 2) as f64;
        let mult = k as f64 + 1.0 - i;
        if xi1 > 0.0 {
            let e = base.powf(1.0 - q_m) * d / (16.0 * xi1 * i.powf(1.0 - q_m));
            raw += mult * 2.0 * (-e).exp();
        }
        if xi2 > 0.0 {
            let e = beta / (2464.0 * xi2 * xi2) * base.powf(1.0 - 2.0 * q_c) * d * d / i.powf(1.0 - 2.0 * q_c);
            raw += mult * 6.0 * (-e).exp();
        }
    }
    let d2 = gaps[0];
    let mut n_star: f64 = 0.0;
    if xi1 > 0.0 {
        n_star = n_star.max((12.0 * xi1 * b / d2).powf(1.0 / (q_m * (p - 1.0).min(1.0))));
    }
    if xi2 > 0.0 {
        n_star = n_star.max((8.0 * xi2 * b / (beta * d2)).powf(1.0 / (q_c * (p - 1.0))));
        n_star = n_star.max((b / alpha.min(beta)).powf(1.0 / (q_c * p)));
    }
    Ok(SrTruncationBound {
        bound: clamp_probability(raw),
        raw,
        n_star,
        min_budget: k as f64 + k as f64 * lb * n_star,
    })
}

/// Error-probability bound for SR with median-of-bins estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrMobBound {
    pub bound: f64,
    pub raw: f64,
    /// Sufficient budget threshold `T*`.
    pub t_star: f64,
}

/// Bound on the misidentification probability of SR with median of means
/// (`N = n^{q_m}`) and median of CVaRs (`N = n^{q_c}`); the mean or CVaR
/// series is omitted when its objective weight is zero.
pub fn sr_mob_error_bound(
    prior: &MomentPrior,
    objective: &RiskObjective,
    q_m: f64,
    q_c: f64,
    budget: u64,
    arms: usize,
) -> Result<SrMobBound> {
    let alpha = objective.alpha();
    check_rsr_inputs(alpha, q_m, q_c, arms, budget)?;
    let MomentPrior { p, b, v, delta: d2 } = *prior;
    let beta = 1.0 - alpha;
    let (xi1, xi2) = (objective.xi1(), objective.xi2());
    let lb = log_bar(arms);
    let mut raw = 0.0;
    for kk in 1..arms {
        let x = (budget - arms as u64) as f64 / (lb * (arms + 1 - kk) as f64);
        let mut term = 0.0;
        if xi1 > 0.0 {
            term += (-x.powf(1.0 - q_m) / 8.0).exp();
        }
        if xi2 > 0.0 {
            term += (-x.powf(1.0 - q_c) / 8.0).exp();
        }
        raw += kk as f64 * term;
    }
    let vemp = prior.v_emp(alpha);
    let ln24 = 24f64.ln();
    let mut m: f64 = 0.0;
    if xi1 > 0.0 {
        m = m.max((576.0 * xi1 * v / d2).powf(1.0 / q_m));
    }
    if xi2 > 0.0 {
        m = m.max((8.0 * ln24 / beta).powf(1.0 / q_c));
        let t = 4320.0 * xi2.powf(p) * 4f64.powf(p) * vemp / (beta.powf(p - 1.0) * d2.powf(p))
            + 576.0 * vemp * beta / (beta.powf(p - 1.0) * b);
        m = m.max(t.powf(1.0 / (q_c * (p - 1.0))));
        let u = 8.0 * ln24 / beta
            * (128.0 * xi2 * xi2 * b.powf(2.0 / p) / (d2 * d2 * beta.powf(2.0 / p))
                + 8.0 * xi2 * b.powf(1.0 / p) / (d2 * beta.powf(1.0 / p)));
        m = m.max(u.powf(1.0 / q_c));
    }
    Ok(SrMobBound {
        bound: clamp_probability(raw),
        raw,
        t_star: arms as f64 + arms as f64 * lb * m,
    })
}

/// Builds the tail-inflated perturbation of `base` at the given cutoff.
pub fn perturb_distribution(base: &ArmDistribution, cutoff: f64, index: f64) -> Result<ArmDistribution> {
    ArmDistribution::tail_inflated(base, cutoff, index)
}

/// `KL(G, F)` of a tail-inflated distribution to its base, by quadrature
/// of `g log(g / f)`.
pub fn kl_to_base(g: &ArmDistribution) -> Result<f64> {
    let base = match (g.base(), g.inflation()) {
        (Some(base), Some(_)) => base,
        _ => return Err(Error::param("g", "not a tail-inflated distribution")),
    };
    g.integrate_density(
        |x| {
            let r = g.pdf(x) / base.pdf(x);
            if r > 0.0 && r.is_finite() {
                r.ln()
            } else {
                0.0
            }
        },
        f64::NEG_INFINITY,
        f64::INFINITY,
    )
}

/// `chi1 log(chi1) F(b) + w log(w) (1 - F(b))` with `w = b^{p - 1/2}`: the
/// exact KL of the construction.
pub fn kl_closed_form(g: &ArmDistribution, cutoff: f64) -> Result<f64> {
    let (chi1, w) = g.inflation().ok_or_else(|| Error::param("g", "not a tail-inflated distribution"))?;
    let base = g.base().expect("inflated distributions have a base");
    Ok(chi1 * chi1.ln() * base.cdf(cutoff) + w * w.ln() * base.sf(cutoff))
}

/// `b^{p - 1/2} (p - 1/2) log(b) (1 - F(b))`, the upper bound on the KL.
pub fn kl_upper_bound(base: &ArmDistribution, cutoff: f64, index: f64) -> f64 {
    cutoff.powf(index - 0.5) * (index - 0.5) * cutoff.ln() * base.sf(cutoff)
}

/// Objective value of a distribution with mean and CVaR by quadrature.
pub fn objective_value(dist: &ArmDistribution, objective: &RiskObjective) -> Result<f64> {
    let gt = dist.ground_truth_by_quadrature(objective.alpha())?;
    Ok(objective.combine(Some(gt.mean), Some(gt.cvar_alpha)))
}
