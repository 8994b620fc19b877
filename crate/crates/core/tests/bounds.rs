use riskbai_core::bounds::{
    aux_bounds, bounded_cvar_bound, c_p, empirical_cvar_dev_bound, kl_to_base, kl_upper_bound, mob_cvar_bound,
    mob_cvar_threshold, objective_value, pareto_cvar_lower_bound, perturb_distribution, sr_mob_error_bound,
    sr_truncation_error_bound, truncated_cvar_bound, v_emp, var_magnitude,
};
use riskbai_core::{ArmDistribution, MomentPrior, RiskObjective, Side};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// (p, B, V, Delta, alpha)
const GRID: [(f64, f64, f64, f64, f64); 10] = [
    (2.0, 1.0, 1.0, 1.0, 0.95),
    (2.0, 2.0, 1.0, 0.5, 0.9),
    (1.5, 3.0, 2.0, 0.3, 0.95),
    (1.8, 0.057, 0.05, 0.45, 0.95),
    (1.2, 10.0, 9.0, 2.0, 0.5),
    (1.9, 0.5, 0.25, 0.1, 0.99),
    (1.7, 10.8, 12.0, 1.0, 0.95),
    (1.3, 1.66, 1.5, 5.0, 0.8),
    (2.0, 0.04, 0.01, 0.6, 0.95),
    (1.6, 4.0, 0.0, 0.25, 0.7),
];

// Hand-coded duplicates of the threshold formulas.

fn dup_v_emp(p: f64, b: f64, v: f64, alpha: f64) -> f64 {
    let beta = 1.0 - alpha;
    2f64.powf(p - 1.0) * v / beta + 2f64.powf(p) * b / beta
}

fn dup_n_star_mob(p: f64, b: f64, v: f64, d: f64, alpha: f64) -> f64 {
    let beta = 1.0 - alpha;
    let ve = dup_v_emp(p, b, v, alpha);
    let bp = beta.powf(p - 1.0);
    let a = (4320.0 * ve / (bp * d.powf(p)) + 576.0 * ve * beta / (bp * b)).powf(1.0 / (p - 1.0));
    let inner = 8.0 * b.powf(2.0 / p) / (d * d * beta.powf(2.0 / p)) + 2.0 * b.powf(1.0 / p) / (d * beta.powf(1.0 / p));
    let c = 24f64.ln() / beta * if inner > 8.0 { inner } else { 8.0 };
    if a > c {
        a
    } else {
        c
    }
}

// Entries whose objective weight is zero are left out.
fn dup_n_star_truncation(p: f64, b: f64, d2: f64, alpha: f64, xi1: f64, xi2: f64, qm: f64, qc: f64) -> f64 {
    let beta = 1.0 - alpha;
    let mut entries = Vec::new();
    if xi1 > 0.0 {
        let e_m = qm * if p - 1.0 < 1.0 { p - 1.0 } else { 1.0 };
        entries.push((12.0 * xi1 * b / d2).powf(1.0 / e_m));
    }
    if xi2 > 0.0 {
        entries.push((8.0 * xi2 * b / (beta * d2)).powf(1.0 / (qc * (p - 1.0))));
        let small = if alpha < beta { alpha } else { beta };
        entries.push((b / small).powf(1.0 / (qc * p)));
    }
    entries.into_iter().fold(0.0, f64::max)
}

fn log_bar(k: usize) -> f64 {
    let mut s = 0.5;
    for i in 2..=k {
        s += 1.0 / i as f64;
    }
    s
}

fn dup_t_star(p: f64, b: f64, v: f64, d2: f64, alpha: f64, xi1: f64, xi2: f64, qm: f64, qc: f64, k: usize) -> f64 {
    let beta = 1.0 - alpha;
    let ve = dup_v_emp(p, b, v, alpha);
    let l24 = 24f64.ln();
    let terms = [
        (576.0 * xi1 * v / d2).powf(1.0 / qm),
        (8.0 * l24 / beta).powf(1.0 / qc),
        (4320.0 * xi2.powf(p) * 4f64.powf(p) * ve / (beta.powf(p - 1.0) * d2.powf(p))
            + 576.0 * ve * beta / (beta.powf(p - 1.0) * b))
            .powf(1.0 / (qc * (p - 1.0))),
        (8.0 * l24 / beta
            * (128.0 * xi2 * xi2 * b.powf(2.0 / p) / (d2 * d2 * beta.powf(2.0 / p))
                + 8.0 * xi2 * b.powf(1.0 / p) / (d2 * beta.powf(1.0 / p))))
        .powf(1.0 / qc),
    ];
    let m = terms.iter().cloned().fold(0.0, f64::max);
    k as f64 + k as f64 * log_bar(k) * m
}

fn dup_sr_truncation_raw(gaps: &[f64], alpha: f64, xi1: f64, xi2: f64, qm: f64, qc: f64, t: u64) -> f64 {
    let k = gaps.len() + 1;
    let beta = 1.0 - alpha;
    let x = (t as f64 - k as f64) / log_bar(k);
    let mut s = 0.0;
    for i in 2..=k {
        let d = gaps[i - 2];
        let w = (k + 1 - i) as f64;
        let i = i as f64;
        if xi1 != 0.0 {
            s += w * 2.0 * (-(x.powf(1.0 - qm) * d / i.powf(1.0 - qm)) / (16.0 * xi1)).exp();
        }
        if xi2 != 0.0 {
            s += w * 6.0 * (-(beta / (2464.0 * xi2 * xi2)) * x.powf(1.0 - 2.0 * qc) * d * d / i.powf(1.0 - 2.0 * qc)).exp();
        }
    }
    s
}

#[test]
fn v_emp_examples_and_duplicate() {
    assert!(rel(v_emp(2.0, 1.0, 1.0, 0.95), 120.0) < 1e-12);
    assert_eq!(v_emp(2.0, 0.0, 0.0, 0.95), 0.0);
    for (p, b, v, _, alpha) in GRID {
        assert!(rel(v_emp(p, b, v, alpha), dup_v_emp(p, b, v, alpha)) < 1e-12);
        // Larger beta (smaller alpha) never increases it.
        assert!(v_emp(p, b, v, alpha - 0.01) <= v_emp(p, b, v, alpha));
    }
}

#[test]
fn bin_threshold_duplicate() {
    let prior = MomentPrior::new(2.0, 1.0, 1.0, 1.0).unwrap();
    assert_eq!(mob_cvar_threshold(&prior, 0.95).round(), 10_437_120.0);
    for (p, b, v, d, alpha) in GRID {
        let prior = MomentPrior::new(p, b, v, d).unwrap();
        let got = mob_cvar_threshold(&prior, alpha);
        assert!(rel(got, dup_n_star_mob(p, b, v, d, alpha)) < 1e-10, "{p} {b} {v} {d} {alpha}");
        // Nonincreasing in Delta.
        let mut last = f64::INFINITY;
        for scale in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let n = mob_cvar_threshold(&MomentPrior::new(p, b, v, d * scale).unwrap(), alpha);
            assert!(n <= last);
            last = n;
        }
    }
}

#[test]
fn truncation_threshold_and_sum_duplicate() {
    let gaps = [0.3, 0.4, 0.4, 0.9];
    for (i, (p, b, _v, d, alpha)) in GRID.iter().cloned().enumerate() {
        let xi1 = [0.0, 0.3, 1.0, 0.5, 0.1][i % 5];
        let xi2 = [1.0, 0.7, 0.0, 0.5, 0.9][i % 5];
        let (qm, qc) = (0.3 + 0.05 * (i % 3) as f64, 0.15 + 0.1 * (i % 3) as f64);
        let obj = RiskObjective::new(alpha, xi1, xi2).unwrap();
        let mut g = gaps.to_vec();
        g[0] = d;
        g.sort_by(f64::total_cmp);
        let t = 50_000 + 10_000 * i as u64;
        let r = sr_truncation_error_bound(&g, p, b, &obj, qm, qc, t).unwrap();
        let want_raw = dup_sr_truncation_raw(&g, alpha, xi1, xi2, qm, qc, t);
        assert!(rel(r.raw, want_raw) < 1e-10, "row {i}: {} vs {want_raw}", r.raw);
        let n = dup_n_star_truncation(p, b, g[0], alpha, xi1, xi2, qm, qc);
        assert!(rel(r.n_star, n) < 1e-10, "row {i}: {} vs {n}", r.n_star);
        let k = g.len() + 1;
        assert!(rel(r.min_budget, k as f64 + k as f64 * log_bar(k) * n) < 1e-10);
    }
}

#[test]
fn mob_budget_threshold_duplicate() {
    for (i, (p, b, v, d, alpha)) in GRID.iter().cloned().enumerate() {
        let (xi1, xi2) = [(0.5, 0.5), (1.0, 0.2), (0.1, 0.9)][i % 3];
        let (qm, qc) = (0.3, 0.2 + 0.1 * (i % 2) as f64);
        let k = 3 + i;
        let prior = MomentPrior::new(p, b, v.max(1e-3), d).unwrap();
        let obj = RiskObjective::new(alpha, xi1, xi2).unwrap();
        let r = sr_mob_error_bound(&prior, &obj, qm, qc, 1_000_000, k).unwrap();
        let want = dup_t_star(p, b, v.max(1e-3), d, alpha, xi1, xi2, qm, qc, k);
        assert!(rel(r.t_star, want) < 1e-10, "row {i}: {} vs {want}", r.t_star);
    }
}

#[test]
fn mean_only_objective_drops_cvar_terms() {
    let gaps = [0.1, 0.2, 0.2];
    let obj = RiskObjective::new(0.95, 1.0, 0.0).unwrap();
    let r = sr_truncation_error_bound(&gaps, 1.7, 10.8, &obj, 0.3, 0.2, 100_000).unwrap();
    assert!(rel(r.raw, dup_sr_truncation_raw(&gaps, 0.95, 1.0, 0.0, 0.3, 0.2, 100_000)) < 1e-12);
    // n* has only the mean entry.
    assert!(rel(r.n_star, (12.0 * 10.8 / 0.1f64).powf(1.0 / (0.3 * 0.7))) < 1e-12);
}

#[test]
fn two_arms_reduce_to_two_terms() {
    let obj = RiskObjective::new(0.9, 0.4, 0.6).unwrap();
    let (d, t, qm, qc) = (0.8, 5000u64, 0.3, 0.2);
    let r = sr_truncation_error_bound(&[d], 2.0, 1.0, &obj, qm, qc, t).unwrap();
    let x: f64 = (t as f64 - 2.0) / 1.0; // log_bar(2) = 1
    let a = 2.0 * (-(x.powf(0.7) * d / 2f64.powf(0.7)) / (16.0 * 0.4)).exp();
    let c = 6.0 * (-(0.1 / (2464.0 * 0.36)) * x.powf(0.6) * d * d / 2f64.powf(0.6)).exp();
    assert!(rel(r.raw, a + c) < 1e-12);
}

#[test]
fn truncation_bound_nonincreasing_past_threshold() {
    let obj = RiskObjective::new(0.95, 0.5, 0.5).unwrap();
    let gaps = [1.0, 1.5, 2.0];
    let first = sr_truncation_error_bound(&gaps, 2.0, 0.1, &obj, 0.4, 0.2, 1000).unwrap();
    let mut t = first.min_budget.ceil() as u64 + 1;
    let mut last = f64::INFINITY;
    for _ in 0..40 {
        let r = sr_truncation_error_bound(&gaps, 2.0, 0.1, &obj, 0.4, 0.2, t).unwrap();
        assert!(r.raw <= last);
        last = r.raw;
        t = t * 3 / 2;
    }
}

// log(bound) / T^{1-q} with q_m = q, q_c = q/2 settles at minus the smallest
// exponent coefficient.
#[test]
fn truncation_bound_decays_like_stretched_exponential() {
    for (gaps, q) in [([2.0, 3.0, 4.0], 0.3), ([4.0, 4.0, 5.0], 0.4)] {
        let (alpha, xi1, xi2) = (0.5, 0.5, 0.5);
        let obj = RiskObjective::new(alpha, xi1, xi2).unwrap();
        let k = gaps.len() + 1;
        let lb = log_bar(k).powf(1.0 - q);
        let gamma = (2..=k)
            .map(|i| {
                let d = gaps[i - 2];
                let ii = (i as f64).powf(1.0 - q);
                (d / (16.0 * xi1 * ii)).min(0.5 * d * d / (2464.0 * xi2 * xi2 * ii))
            })
            .fold(f64::INFINITY, f64::min)
            / lb;
        let ratios: Vec<f64> = (10..=20)
            .map(|e| {
                let t = 1u64 << e;
                let r = sr_truncation_error_bound(&gaps, 2.0, 1.0, &obj, q, q / 2.0, t).unwrap();
                r.raw.ln() / (t as f64).powf(1.0 - q)
            })
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] < w[0], "{ratios:?}");
        }
        let last = *ratios.last().unwrap();
        assert!(last < 0.0);
        assert!((last + gamma).abs() < 0.15 * gamma, "{last} vs {}", -gamma);
        let steps: Vec<f64> = ratios.windows(2).map(|w| w[0] - w[1]).collect();
        assert!(steps.last().unwrap() < &steps[steps.len() / 2]);
    }
}

#[test]
fn mob_sum_properties() {
    let prior = MomentPrior::new(2.0, 1.0, 1.0, 0.5).unwrap();
    let obj = RiskObjective::new(0.95, 0.5, 0.5).unwrap();
    let k = 6;
    let r = sr_mob_error_bound(&prior, &obj, 0.3, 0.3, 100_000, k).unwrap();
    let lb = log_bar(k);
    let mut want = 0.0;
    for kk in 1..k {
        let x: f64 = (100_000.0 - k as f64) / (lb * (k + 1 - kk) as f64);
        want += kk as f64 * 2.0 * (-x.powf(0.7) / 8.0).exp();
    }
    assert!(rel(r.raw, want) < 1e-12);
    let at = sr_mob_error_bound(&prior, &obj, 0.3, 0.2, r.t_star.ceil() as u64, k).unwrap();
    assert!(at.raw.is_finite() && at.raw < (k * k) as f64);
    let far = sr_mob_error_bound(&prior, &obj, 0.3, 0.2, u64::MAX / 4, k).unwrap();
    assert!(far.raw < 1e-100);
}

#[test]
fn empirical_cvar_bound_scaling() {
    // Large Delta and n make the exponential terms negligible, leaving the
    // two power terms, which both scale as n^{-(p-1)}.
    for (p, b, v) in [(2.0, 2.0, 1.0), (1.7, 10.8, 12.0), (1.5, 3.0, 2.0)] {
        let prior = MomentPrior::new(p, b, v, 1e4).unwrap();
        let n = 10_000_000_000u64;
        for side in [Side::Lower, Side::Upper] {
            let a = empirical_cvar_dev_bound(&prior, 0.95, n, side);
            let c = empirical_cvar_dev_bound(&prior, 0.95, 2 * n, side);
            assert!(a < 1.0 && a > 0.0);
            assert!(rel(c / a, 2f64.powf(-(p - 1.0))) < 1e-9, "{p} {side:?}");
        }
        let mut last = 1.0;
        for e in 2..=18 {
            let x = empirical_cvar_dev_bound(&prior.with_delta(1.0).unwrap(), 0.95, 10u64.pow(e), Side::Upper);
            assert!(x <= last);
            last = x;
        }
        assert!(last < 1e-2);
    }
}

#[test]
fn pareto_lower_bound_scaling() {
    let a = pareto_cvar_lower_bound(1.0, 1.5, 0.95, 1.0, 1000).unwrap();
    let b = pareto_cvar_lower_bound(1.0, 1.5, 0.95, 1.0, 2000).unwrap();
    assert!(rel(b / a, 2f64.powf(-0.5)) < 1e-12);
    assert!(pareto_cvar_lower_bound(1.0, 1.5, 0.95, 1e12, 1000).unwrap() < 1e-15);
    // Closed form: c = x_m a / ((a - 1) beta^{1/a}).
    let c = 1.5 / (0.5 * 0.05f64.powf(1.0 / 1.5));
    let want = 0.05 / (1000f64.sqrt() * (c + 1.0).powf(1.5));
    assert!(rel(a, want) < 1e-9);
}

#[test]
fn exponential_bound_substitutions() {
    let (b, beta, d) = (3.0, 0.05, 0.5);
    let n = 176.0 * b * b / (beta * d * d);
    // 6 / e exceeds one and is clamped; twice the sample size gives 6 / e^2.
    assert_eq!(truncated_cvar_bound(b, 0.95, n as u64, d), 1.0);
    assert!(rel(truncated_cvar_bound(b, 0.95, 2 * n as u64, d), 6.0 * (-2.0f64).exp()) < 1e-12);
    assert_eq!(truncated_cvar_bound(b, 0.95, 100, 0.0), 1.0);
    assert!(rel(mob_cvar_bound(80, 10), (-1.0f64).exp()) < 1e-15);
    assert_eq!(bounded_cvar_bound(-1.0, 1.0, 0.9, 100, 0.0), 1.0);
}

#[test]
fn auxiliary_constants() {
    assert!(rel(c_p(2.0), 36.0) < 1e-12);
    assert!(rel(var_magnitude(1.0, 0.5, 2.0), 2f64.sqrt()) < 1e-12);
    let prior = MomentPrior::new(2.0, 1.0, 1.0, 1.0).unwrap();
    let aux = aux_bounds(&prior, 0.95);
    assert!(rel(aux.cvar_magnitude, (1.0f64 / 0.05).sqrt()) < 1e-12);
    assert!(rel(aux.v_emp, 120.0) < 1e-12);
    // The magnitude bounds hold for an actual distribution with oracle moments.
    let d = ArmDistribution::lomax(1.0, 2.75).unwrap();
    let p = MomentPrior::oracle(&d, 2.0, 1.0).unwrap();
    for alpha in [0.5, 0.9, 0.95, 0.99] {
        let gt = d.ground_truth(alpha).unwrap();
        let aux = aux_bounds(&p, alpha);
        assert!(gt.var_alpha.abs() <= aux.var_magnitude);
        assert!(gt.cvar_alpha <= aux.cvar_magnitude);
    }
}

#[test]
fn tail_inflation_kl_and_objective() {
    let base = ArmDistribution::pareto(1.0, 1.5).unwrap();
    let obj = RiskObjective::new(0.95, 1.0, 0.0).unwrap();
    let base_mean = base.mean().unwrap();
    let mut last_kl = f64::INFINITY;
    let mut last_mean = 0.0;
    for b in [100.0, 1000.0, 10_000.0] {
        let g = perturb_distribution(&base, b, 1.5).unwrap();
        let kl = kl_to_base(&g).unwrap();
        assert!(kl <= kl_upper_bound(&base, b, 1.5), "b={b}: {kl}");
        assert!(kl < last_kl);
        let m = objective_value(&g, &obj).unwrap();
        assert!(m > last_mean);
        last_kl = kl;
        last_mean = m;
    }
    assert!(last_mean > 10.0 * base_mean, "{last_mean} vs {base_mean}");
    // For an exponential base chi1 < 1 needs b > 1.
    let e = ArmDistribution::exponential(1.0).unwrap();
    assert!(perturb_distribution(&e, 0.5, 1.5).is_err());
    assert!(perturb_distribution(&e, 2.0, 1.5).is_ok());
}
