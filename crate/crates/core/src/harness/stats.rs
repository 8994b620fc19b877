//! Wilson score intervals for binomial proportions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::std_normal_quantile;

/// Two-sided confidence level used when none is given (99.9%).
pub const DEFAULT_CI_LEVEL: f64 = 0.999;

/// Proportion estimate with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
}

/// Two-sided normal critical value `z` for the given confidence level.
pub fn z_for_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("ci_level", format!("must lie in (0, 1), got {level}")));
    }
    Ok(std_normal_quantile(1.0 - (1.0 - level) / 2.0))
}

/// Wilson score interval for `successes` out of `trials`, clamped so that
/// `0 <= low <= estimate <= high <= 1`.
pub fn wilson(successes: u64, trials: u64, level: f64) -> Result<Proportion> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if successes > trials {
        return Err(Error::param("successes", "cannot exceed trials"));
    }
    let z = z_for_level(level)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(Proportion {
        successes,
        trials,
        estimate: p,
        low: (centre - half).clamp(0.0, p),
        high: (centre + half).clamp(p, 1.0),
    })
}

impl Proportion {
    /// Whether two intervals share at least one point.
    pub fn overlaps(&self, other: &Proportion) -> bool {
        self.low <= other.high && other.low <= self.high
    }
}
