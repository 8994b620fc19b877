//! Point estimators of the mean and the CVaR from a batch of IID losses.
//!
//! Six estimators are provided: empirical, truncated and median-of-bins
//! versions of each target. The two truncations are different on purpose.
//! The truncated CVaR *clips* every sample to `[-b, b]`, while the truncated
//! mean *drops* samples with `|x| > b` (they contribute zero but still count
//! in the divisor).
//!
//! Median-of-bins estimators split the batch into `k = floor(n / N)`
//! consecutive bins of size `N` in input order, discard the `n - kN`
//! trailing samples, and return the lower median (`k`-th smallest with
//! index `(k - 1) / 2`) of the per-bin estimates.

use serde::{Deserialize, Serialize};

use crate::distributions::check_level;
use crate::error::{Error, Result};

/// Absolute slack used when deciding whether `n * beta` is an integer.
pub const INTEGRALITY_GUARD: f64 = 1e-9;

/// The quantity an estimator targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Mean,
    Cvar,
}

/// Estimator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Empirical,
    Truncated,
    MedianOfBins,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Empirical => "empirical",
            EstimatorKind::Truncated => "truncated",
            EstimatorKind::MedianOfBins => "median-of-bins",
        }
    }
}

/// An estimator together with its parameter schedule.
///
/// For a batch of `n` samples the truncation level is
/// `b(n) = prior_offset + n^q` and the bin size is
/// `N(n) = max(1, floor(prior_offset + n^q))`, capped at `n`.
/// With `exponent = None` the schedule is the constant `prior_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEstimatorSpec", into = "RawEstimatorSpec")]
pub struct EstimatorSpec {
    target: Target,
    kind: EstimatorKind,
    exponent: Option<f64>,
    prior_offset: f64,
    alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimatorSpec {
    target: Target,
    kind: EstimatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    #[serde(default)]
    prior_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

impl TryFrom<RawEstimatorSpec> for EstimatorSpec {
    type Error = Error;

    fn try_from(r: RawEstimatorSpec) -> Result<Self> {
        EstimatorSpec::new(r.target, r.kind, r.exponent, r.prior_offset, r.alpha)
    }
}

impl From<EstimatorSpec> for RawEstimatorSpec {
    fn from(s: EstimatorSpec) -> Self {
        RawEstimatorSpec {
            target: s.target,
            kind: s.kind,
            exponent: s.exponent,
            prior_offset: s.prior_offset,
            alpha: s.alpha,
        }
    }
}

impl EstimatorSpec {
    /// Validating constructor.
    ///
    /// `alpha` is required for CVaR targets and must be absent for the mean.
    /// Truncated and median-of-bins estimators need a schedule: either an
    /// exponent in `(0, 1]` (`(0, 1/2)` for the truncated CVaR) or, with no
    /// exponent, a positive `prior_offset`.
    pub fn new(
        target: Target,
        kind: EstimatorKind,
        exponent: Option<f64>,
        prior_offset: f64,
        alpha: Option<f64>,
    ) -> Result<Self> {
        match (target, alpha) {
            (Target::Cvar, None) => return Err(Error::param("alpha", "a CVaR estimator needs a level")),
            (Target::Cvar, Some(a)) => {
                check_level(a)?;
            }
            (Target::Mean, Some(_)) => {
                return Err(Error::param("alpha", "a mean estimator takes no level"));
            }
            (Target::Mean, None) => {}
        }
        if !(prior_offset.is_finite() && prior_offset >= 0.0) {
            return Err(Error::param(
                "prior_offset",
                format!("must be nonnegative and finite, got {prior_offset}"),
            ));
        }
        if kind == EstimatorKind::Empirical {
            if exponent.is_some() || prior_offset != 0.0 {
                return Err(Error::param("exponent", "the empirical estimator has no schedule"));
            }
        } else {
            match exponent {
                Some(q) => {
                    let upper_open = target == Target::Cvar && kind == EstimatorKind::Truncated;
                    let ok = if upper_open { q > 0.0 && q < 0.5 } else { q > 0.0 && q <= 1.0 };
                    if !ok {
                        let range = if upper_open { "(0, 0.5)" } else { "(0, 1]" };
                        return Err(Error::param("exponent", format!("must lie in {range}, got {q}")));
                    }
                }
                None => {
                    if prior_offset <= 0.0 {
                        return Err(Error::param(
                            "prior_offset",
                            "a fixed schedule (no exponent) needs a positive offset",
                        ));
                    }
                }
            }
        }
        Ok(Self {
            target,
            kind,
            exponent,
            prior_offset,
            alpha,
        })
    }

    pub fn empirical_mean() -> Self {
        Self::new(Target::Mean, EstimatorKind::Empirical, None, 0.0, None).unwrap()
    }

    pub fn empirical_cvar(alpha: f64) -> Result<Self> {
        Self::new(Target::Cvar, EstimatorKind::Empirical, None, 0.0, Some(alpha))
    }

    pub fn truncated_mean(q: f64) -> Result<Self> {
        Self::new(Target::Mean, EstimatorKind::Truncated, Some(q), 0.0, None)
    }

    pub fn truncated_cvar(alpha: f64, q: f64) -> Result<Self> {
        Self::new(Target::Cvar, EstimatorKind::Truncated, Some(q), 0.0, Some(alpha))
    }

    pub fn median_of_means(q: f64) -> Result<Self> {
        Self::new(Target::Mean, EstimatorKind::MedianOfBins, Some(q), 0.0, None)
    }

    pub fn median_of_cvars(alpha: f64, q: f64) -> Result<Self> {
        Self::new(Target::Cvar, EstimatorKind::MedianOfBins, Some(q), 0.0, Some(alpha))
    }

    /// Same estimator with a different offset (revalidated).
    pub fn with_offset(self, prior_offset: f64) -> Result<Self> {
        Self::new(self.target, self.kind, self.exponent, prior_offset, self.alpha)
    }

    /// Same estimator with a different exponent (revalidated).
    pub fn with_exponent(self, exponent: Option<f64>) -> Result<Self> {
        Self::new(self.target, self.kind, exponent, self.prior_offset, self.alpha)
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn exponent(&self) -> Option<f64> {
        self.exponent
    }

    pub fn prior_offset(&self) -> f64 {
        self.prior_offset
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    fn growth(&self, n: usize) -> f64 {
        self.exponent.map_or(0.0, |q| (n as f64).powf(q))
    }

    /// Truncation level `b(n)`.
    pub fn truncation_level(&self, n: usize) -> f64 {
        self.prior_offset + self.growth(n)
    }

    /// Bin size `N(n)`, at least 1 and at most `n`.
    pub fn bin_size(&self, n: usize) -> usize {
        let raw = (self.prior_offset + self.growth(n)).floor();
        let raw = if raw >= n as f64 { n } else { raw as usize };
        raw.max(1).min(n.max(1))
    }

    /// Short label such as `truncated(q=0.3)`.
    pub fn label(&self) -> String {
        match (self.kind, self.exponent) {
            (EstimatorKind::Empirical, _) => "empirical".to_string(),
            (k, Some(q)) if self.prior_offset == 0.0 => format!("{}(q={q})", k.name()),
            (k, Some(q)) => format!("{}(offset={}, q={q})", k.name(), self.prior_offset),
            (k, None) => format!("{}(fixed={})", k.name(), self.prior_offset),
        }
    }

    /// Evaluates the estimator on `samples`, which must contain exactly
    /// `horizon` values (the pull count the schedule is evaluated at).
    pub fn estimate(&self, samples: &[f64], horizon: usize) -> Result<f64> {
        let mut scratch = Vec::new();
        self.estimate_with(samples, horizon, &mut scratch)
    }

    /// As [`estimate`](Self::estimate), reusing `scratch` to avoid allocation.
    pub fn estimate_with(&self, samples: &[f64], horizon: usize, scratch: &mut Vec<f64>) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.len() != horizon {
            return Err(Error::HorizonMismatch {
                expected: horizon,
                actual: samples.len(),
            });
        }
        let n = samples.len();
        match (self.target, self.kind) {
            (Target::Mean, EstimatorKind::Empirical) => Ok(mean_of(samples)),
            (Target::Mean, EstimatorKind::Truncated) => truncated_mean(samples, self.truncation_level(n)),
            (Target::Mean, EstimatorKind::MedianOfBins) => median_of_means_with(samples, self.bin_size(n), scratch),
            (Target::Cvar, kind) => {
                let alpha = self.alpha.expect("validated at construction");
                scratch.clear();
                match kind {
                    EstimatorKind::Empirical => Ok(cvar_of(samples, 1.0 - alpha)),
                    EstimatorKind::Truncated => {
                        let b = self.truncation_level(n);
                        check_truncation(b)?;
                        scratch.extend(samples.iter().map(|x| x.clamp(-b, b)));
                        Ok(cvar_of(scratch, 1.0 - alpha))
                    }
                    EstimatorKind::MedianOfBins => median_of_cvars_with(samples, alpha, self.bin_size(n), scratch),
                }
            }
        }
    }
}

/// Free-function form of [`EstimatorSpec::estimate`].
pub fn estimate(spec: &EstimatorSpec, samples: &[f64], horizon: usize) -> Result<f64> {
    spec.estimate(samples, horizon)
}

fn mean_of(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

fn check_truncation(b: f64) -> Result<()> {
    if b > 0.0 && !b.is_nan() {
        Ok(())
    } else {
        Err(Error::param("b", format!("truncation level must be positive, got {b}")))
    }
}

/// `(ceil(n beta), floor(n beta))`, treating values within
/// [`INTEGRALITY_GUARD`] of an integer as that integer.
pub fn tail_counts(n: usize, beta: f64) -> (usize, usize) {
    let nb = n as f64 * beta;
    let r = nb.round();
    if (nb - r).abs() <= INTEGRALITY_GUARD {
        let r = r as usize;
        (r.max(1), r)
    } else {
        ((nb.ceil() as usize).clamp(1, n), nb.floor() as usize)
    }
}

/// Integer key ordered like `f64::total_cmp`, so selection and sorting run
/// on plain integers.
fn order_key(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    b ^ (((b >> 63) as u64) >> 1) as i64
}

fn from_key(k: i64) -> f64 {
    f64::from_bits((k ^ (((k >> 63) as u64) >> 1) as i64) as u64)
}

fn cvar_of(values: &[f64], beta: f64) -> f64 {
    let n = values.len();
    let (m, fl) = tail_counts(n, beta);
    // Descending order as ascending keys of the negated order.
    let mut keys: Vec<i64> = values.iter().map(|&x| !order_key(x)).collect();
    if m < n {
        keys.select_nth_unstable(m - 1);
    }
    let top = &mut keys[..m];
    // Sorting the top block fixes the summation order, so the result does
    // not depend on the input order.
    top.sort_unstable();
    let v = from_key(!top[m - 1]);
    let excess: f64 = top[..fl].iter().map(|&k| from_key(!k) - v).sum();
    v + excess / (n as f64 * beta)
}

/// Classical empirical CVaR `X_[ceil(n beta)] + (1/(n beta)) sum_{i <= floor(n beta)} (X_[i] - X_[ceil(n beta)])`
/// with `X_[1] >= ... >= X_[n]`.
pub fn empirical_cvar(samples: &[f64], alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(cvar_of(samples, 1.0 - alpha))
}

/// Empirical CVaR of the samples clipped to `[-b, b]`.
pub fn truncated_cvar(samples: &[f64], alpha: f64, b: f64) -> Result<f64> {
    check_level(alpha)?;
    check_truncation(b)?;
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let buf: Vec<f64> = samples.iter().map(|x| x.clamp(-b, b)).collect();
    Ok(cvar_of(&buf, 1.0 - alpha))
}

/// `(1/n) sum x 1{|x| <= b}`.
pub fn truncated_mean(samples: &[f64], b: f64) -> Result<f64> {
    check_truncation(b)?;
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let kept: f64 = samples.iter().filter(|x| x.abs() <= b).sum();
    Ok(kept / samples.len() as f64)
}

fn check_bins(n: usize, bin_size: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if bin_size == 0 {
        return Err(Error::param("bin_size", "must be at least 1"));
    }
    if n < bin_size {
        return Err(Error::InsufficientSamples { n, bin_size });
    }
    Ok(n / bin_size)
}

fn lower_median(values: &mut [f64]) -> f64 {
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Lower median of the means of consecutive bins of size `bin_size`.
pub fn median_of_means(samples: &[f64], bin_size: usize) -> Result<f64> {
    median_of_means_with(samples, bin_size, &mut Vec::new())
}

fn median_of_means_with(samples: &[f64], bin_size: usize, scratch: &mut Vec<f64>) -> Result<f64> {
    let k = check_bins(samples.len(), bin_size)?;
    scratch.clear();
    scratch.extend(samples.chunks_exact(bin_size).take(k).map(mean_of));
    Ok(lower_median(scratch))
}

/// Lower median of the empirical CVaRs of consecutive bins of size `bin_size`.
pub fn median_of_cvars(samples: &[f64], alpha: f64, bin_size: usize) -> Result<f64> {
    check_level(alpha)?;
    median_of_cvars_with(samples, alpha, bin_size, &mut Vec::new())
}

fn median_of_cvars_with(samples: &[f64], alpha: f64, bin_size: usize, scratch: &mut Vec<f64>) -> Result<f64> {
    let k = check_bins(samples.len(), bin_size)?;
    let beta = 1.0 - alpha;
    scratch.clear();
    scratch.extend(samples.chunks_exact(bin_size).take(k).map(|bin| cvar_of(bin, beta)));
    Ok(lower_median(scratch))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_to(n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64).collect()
    }

    #[test]
    fn empirical_cvar_hand_values() {
        assert_eq!(empirical_cvar(&one_to(10), 0.8).unwrap(), 9.5);
        assert_eq!(empirical_cvar(&one_to(10), 0.95).unwrap(), 10.0);
        assert_eq!(empirical_cvar(&[4.25; 7], 0.9).unwrap(), 4.25);
        assert_eq!(empirical_cvar(&[], 0.9), Err(Error::EmptySample));
    }

    #[test]
    fn tail_counts_guard() {
        // 0.2 * 10 is 2.0000000000000004 in floating point.
        assert_eq!(tail_counts(10, 1.0 - 0.8), (2, 2));
        assert_eq!(tail_counts(10, 0.05), (1, 0));
        assert_eq!(tail_counts(3, 0.5), (2, 1));
        assert_eq!(tail_counts(1, 0.05), (1, 0));
    }

    #[test]
    fn truncated_cvar_hand_values() {
        assert_eq!(truncated_cvar(&one_to(10), 0.8, 5.0).unwrap(), 5.0);
        assert_eq!(truncated_cvar(&one_to(10), 0.8, 100.0).unwrap(), 9.5);
        assert_eq!(truncated_cvar(&[-10.0, 10.0], 0.5, 3.0).unwrap(), 3.0);
        assert!(truncated_cvar(&[1.0], 0.5, 0.0).is_err());
    }

    #[test]
    fn truncated_mean_hand_values() {
        assert_eq!(truncated_mean(&one_to(10), 5.0).unwrap(), 1.5);
        assert_eq!(truncated_mean(&[1.0, 2.0, 3.0], 10.0).unwrap(), 2.0);
        assert_eq!(truncated_mean(&[-7.0, 7.0], 5.0).unwrap(), 0.0);
    }

    #[test]
    fn truncated_mean_zeroes_rather_than_clips() {
        let batch = [1.0, 2.0, 50.0, -3.0];
        let b = 10.0;
        let clipped: f64 = batch.iter().map(|x: &f64| x.clamp(-b, b)).sum::<f64>() / 4.0;
        let t = truncated_mean(&batch, b).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(clipped, 2.5);
    }

    #[test]
    fn median_of_bins_hand_values() {
        assert_eq!(median_of_means(&one_to(6), 2).unwrap(), 3.5);
        assert_eq!(median_of_means(&one_to(4), 2).unwrap(), 1.5);
        assert_eq!(median_of_cvars(&one_to(6), 0.5, 2).unwrap(), 4.0);
        // Trailing sample dropped: bins {1,2},{3,4} then 5 discarded.
        assert_eq!(median_of_means(&one_to(5), 2).unwrap(), 1.5);
        assert_eq!(
            median_of_means(&one_to(3), 4),
            Err(Error::InsufficientSamples { n: 3, bin_size: 4 })
        );
    }

    #[test]
    fn single_bin_reduces_to_empirical() {
        let xs = [0.3, 7.1, -2.0, 4.4, 4.4, 9.0, 1.0];
        assert_eq!(median_of_means(&xs, xs.len()).unwrap(), mean_of(&xs));
        assert_eq!(
            median_of_cvars(&xs, 0.7, xs.len()).unwrap(),
            empirical_cvar(&xs, 0.7).unwrap()
        );
    }

    #[test]
    fn schedule_values() {
        let s = EstimatorSpec::truncated_mean(0.3).unwrap();
        assert!((s.truncation_level(100) - 3.981_071_705_534_973).abs() < 1e-12);
        let s = EstimatorSpec::median_of_means(1.0).unwrap();
        assert_eq!(s.bin_size(37), 37);
        let s = EstimatorSpec::median_of_means(0.5).unwrap().with_offset(2.5).unwrap();
        assert_eq!(s.bin_size(100), 12);
        // Clamped to the sample count.
        let s = EstimatorSpec::median_of_means(0.5).unwrap().with_offset(50.0).unwrap();
        assert_eq!(s.bin_size(10), 10);
        let fixed = EstimatorSpec::truncated_cvar(0.95, 0.3)
            .unwrap()
            .with_offset(6.0)
            .unwrap()
            .with_exponent(None)
            .unwrap();
        assert_eq!(fixed.truncation_level(1_000_000), 6.0);
    }

    #[test]
    fn dispatch_matches_concrete_estimators() {
        let xs = one_to(10);
        let spec = EstimatorSpec::empirical_cvar(0.8).unwrap();
        assert_eq!(spec.estimate(&xs, 10).unwrap(), 9.5);
        let spec = EstimatorSpec::median_of_means(1.0).unwrap();
        assert_eq!(spec.estimate(&xs, 10).unwrap(), 5.5);
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 6.0).collect();
        let spec = EstimatorSpec::truncated_mean(0.3).unwrap();
        assert_eq!(
            spec.estimate(&xs, 100).unwrap(),
            truncated_mean(&xs, 100f64.powf(0.3)).unwrap()
        );
        assert_eq!(
            spec.estimate(&xs, 99),
            Err(Error::HorizonMismatch {
                expected: 99,
                actual: 100
            })
        );
    }

    #[test]
    fn spec_validation() {
        assert!(EstimatorSpec::truncated_cvar(0.95, 0.5).is_err());
        assert!(EstimatorSpec::truncated_cvar(0.95, 0.49).is_ok());
        assert!(EstimatorSpec::truncated_mean(0.0).is_err());
        assert!(EstimatorSpec::median_of_cvars(1.0, 0.3).is_err());
        assert!(EstimatorSpec::new(Target::Cvar, EstimatorKind::Empirical, None, 0.0, None).is_err());
        assert!(EstimatorSpec::new(Target::Mean, EstimatorKind::Truncated, None, 0.0, None).is_err());
        assert!(EstimatorSpec::new(Target::Mean, EstimatorKind::Truncated, None, 3.0, None).is_ok());
    }

    #[test]
    fn spec_toml_round_trip() {
        let s = EstimatorSpec::truncated_cvar(0.95, 0.3).unwrap().with_offset(6.5).unwrap();
        let text = toml::to_string(&s).unwrap();
        let back: EstimatorSpec = toml::from_str(&text).unwrap();
        assert_eq!(s, back);
        let err = toml::from_str::<EstimatorSpec>("target = \"cvar\"\nkind = \"truncated\"\nexponent = 0.7\nalpha = 0.9\n")
            .unwrap_err();
        assert!(err.to_string().contains("exponent"), "{err}");
    }
}
