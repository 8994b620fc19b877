//! Standard normal helpers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// Inverse of the standard normal CDF, accurate to a few ulps for
/// `p` in `(1e-300, 1 - 1e-16)`.
pub fn std_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability {p} outside (0, 1)");
    if p > 0.5 {
        return -std_normal_quantile_lower(1.0 - p);
    }
    std_normal_quantile_lower(p)
}

fn std_normal_quantile_lower(p: f64) -> f64 {
    // Bisection bracket, then Newton on log-scale residual.
    let (mut lo, mut hi) = (-40.0f64, 0.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if std_normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..4 {
        let f = std_normal_cdf(z) - p;
        let d = std_normal_pdf(z);
        if d <= 0.0 {
            break;
        }
        z -= f / d;
    }
    z
}
