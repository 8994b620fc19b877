use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use riskbai_core::bounds::{
    aux_bounds, bounded_cvar_bound, empirical_cvar_dev_bound, empirical_cvar_two_sided_bound, empirical_mean_bound,
    kl_to_base, kl_upper_bound, mob_cvar_bound, mob_cvar_threshold, mom_threshold, objective_value,
    perturb_distribution, specialized_truncation, sr_mob_error_bound, sr_truncation_error_bound, truncated_cvar_bound,
    truncated_cvar_validity, truncated_mean_bound, truncated_mean_validity,
};
use riskbai_core::harness::{builtin_instances, write_csv, PAPER_TRIALS};
use riskbai_core::{
    builtin_instance, validate_concentration, Error, PlanFile, RiskObjective, Runner, Side, ValidationStatus,
};

use crate::output::{emit, num};
use crate::{parse, BoundsArgs, DemoArgs, RunArgs, ValidateArgs};

pub fn run_experiment(a: &RunArgs) -> Result<()> {
    let mut file = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            PlanFile::from_toml(&text).with_context(|| format!("{}", path.display()))?
        }
        None => PlanFile::default(),
    };
    if let Some(name) = &a.instance {
        file.instance = Some(name.clone());
    }
    if let Some(t) = a.trials {
        file.trials = Some(t);
    }
    if a.paper_scale {
        file.trials = Some(PAPER_TRIALS);
    }
    if let Some(b) = &a.budgets {
        file.budgets = Some(b.clone());
    }
    if let Some(s) = a.seed {
        file.seed = Some(s);
    }
    let plan = file.resolve()?;
    let runner = Runner::new(a.workers)?;
    eprintln!(
        "{}: {} arms, {} trials per budget, seed {}, {} workers",
        plan.instance_name,
        plan.instance.len(),
        plan.trials,
        plan.master_seed,
        runner.workers()
    );
    let rows = plan.run(&runner, |choice, t, point| match point {
        Ok(e) => eprintln!(
            "  {} T={t}: {}/{} errors, p={:.4} [{:.4}, {:.4}]",
            choice.name, e.errors, e.trials, e.p_hat, e.ci_low, e.ci_high
        ),
        Err(err) => eprintln!("  {} T={t}: skipped ({err})", choice.name),
    })?;
    if rows.is_empty() {
        bail!("no budget could be run");
    }
    emit(a.out.out.as_deref(), &write_csv(&rows))?;
    if let Some(path) = &a.out.out {
        let mut summary = format!("wrote {} rows to {}\n", rows.len(), path.display());
        for r in &rows {
            let e = &r.estimate;
            let _ = writeln!(summary, "{:<20} T={:<7} p={:.4} [{:.4}, {:.4}]", r.estimator, e.budget, e.p_hat, e.ci_low, e.ci_high);
        }
        emit(None, &summary)?;
    }
    Ok(())
}

fn status_name(s: ValidationStatus) -> &'static str {
    match s {
        ValidationStatus::Pass => "pass",
        ValidationStatus::Violated => "violated",
        ValidationStatus::Inconclusive => "inconclusive",
        ValidationStatus::NotApplicable => "not-applicable",
    }
}

pub fn validate(a: &ValidateArgs) -> Result<()> {
    let dist = parse::distribution(&a.dist)?;
    let spec = parse::estimator(&a.estimator, a.alpha, a.q, a.offset)?;
    let selector = parse::bound(
        a.bound.as_deref(),
        &spec,
        &dist,
        || parse::prior(Some(&dist), a.p, a.moment_b, a.moment_v, a.delta),
        a.side.as_deref(),
        a.factor,
    )?;
    let runner = Runner::new(a.workers)?;
    eprintln!(
        "{} with {} against the {} bound, {} batches per n",
        dist.label(),
        spec.label(),
        selector.name(),
        a.batches
    );
    let points = runner.install(|| validate_concentration(&dist, &spec, &selector, &a.n, a.delta, a.batches, a.seed))?;
    let mut csv = String::from("n,threshold,deviations,batches,frequency,ci_low,ci_high,bound,status\n");
    for p in &points {
        let ran = p.status != ValidationStatus::NotApplicable;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            p.n,
            num(p.threshold),
            p.deviations,
            p.batches,
            num(ran.then_some(p.frequency)),
            num(ran.then_some(p.ci_low)),
            num(ran.then_some(p.ci_high)),
            p.bound,
            status_name(p.status)
        );
        eprintln!("  n={}: {}", p.n, status_name(p.status));
    }
    emit(a.out.out.as_deref(), &csv)
}

pub fn compute_bounds(a: &BoundsArgs) -> Result<()> {
    let dist = a.dist.as_deref().map(parse::distribution).transpose()?;
    let prior = parse::prior(dist.as_ref(), a.p, a.moment_b, a.moment_v, a.delta)?;
    let (alpha, n, delta) = (a.alpha, a.n, a.delta);
    let mut rows: Vec<(String, f64, Option<f64>)> = Vec::new();
    let mut row = |name: &str, value: f64, threshold: Option<f64>| rows.push((name.to_string(), value, threshold));

    let aux = aux_bounds(&prior, alpha);
    row("v_emp", aux.v_emp, None);
    row("c_p", aux.c_p, None);
    row("var_magnitude", aux.var_magnitude, None);
    row("cvar_magnitude", aux.cvar_magnitude, None);
    row("empirical_cvar_lower", empirical_cvar_dev_bound(&prior, alpha, n, Side::Lower), None);
    row("empirical_cvar_upper", empirical_cvar_dev_bound(&prior, alpha, n, Side::Upper), None);
    row("empirical_cvar", empirical_cvar_two_sided_bound(&prior, alpha, n), None);
    let need = truncated_cvar_validity(&prior, alpha, aux.var_magnitude);
    let level = a.level.unwrap_or(need);
    row("truncated_cvar", truncated_cvar_bound(level, alpha, n, delta), Some(need));
    row("bounded_cvar", bounded_cvar_bound(-level, level, alpha, n, delta), None);
    let bins = |threshold: f64| {
        let bin = threshold.ceil().max(1.0) as u64;
        mob_cvar_bound(n / bin * bin, bin)
    };
    let n_star = mob_cvar_threshold(&prior, alpha);
    row("median_of_cvars", bins(n_star), Some(n_star));
    row("empirical_mean", empirical_mean_bound(prior.p, prior.v, n, delta), None);
    row(
        "truncated_mean",
        truncated_mean_bound(n, a.q, delta),
        Some(truncated_mean_validity(prior.b, prior.p, a.q, delta)),
    );
    let mom = mom_threshold(&prior);
    row("median_of_means", bins(mom), Some(mom));
    row("specialized_truncation", specialized_truncation(prior.p, prior.b, alpha, delta), None);

    if let Some(name) = &a.instance {
        let b = builtin_instance(name)?;
        let objective = *b.instance.objective();
        if (objective.alpha() - alpha).abs() > 0.0 {
            eprintln!("note: using the instance level {} for the bandit bounds", objective.alpha());
        }
        let values = b.instance.objectives()?;
        let best = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut gaps: Vec<f64> = values.iter().map(|v| v - best).filter(|g| *g > 0.0).collect();
        gaps.sort_by(f64::total_cmp);
        if gaps.len() + 1 != values.len() {
            bail!("instance `{name}` does not have a unique optimal arm");
        }
        let budget = a.budget.unwrap_or(*b.budgets.last().expect("built-ins have budgets"));
        let sr = sr_truncation_error_bound(&gaps, prior.p, prior.b, &objective, a.q, a.q, budget)?;
        row("sr_truncation", sr.bound, Some(sr.min_budget));
        row("sr_truncation_n_star", sr.n_star, None);
        let mob = sr_mob_error_bound(&prior.with_delta(gaps[0])?, &objective, a.q, a.q, budget, values.len())?;
        row("sr_median_of_bins", mob.bound, Some(mob.t_star));
    }

    let mut csv = String::from("name,value,validity_threshold\n");
    for (name, value, threshold) in &rows {
        let _ = writeln!(csv, "{name},{value:?},{}", threshold.map_or_else(String::new, |t| format!("{t:?}")));
    }
    emit(a.out.out.as_deref(), &csv)
}

pub fn demo_lower_bound(a: &DemoArgs) -> Result<()> {
    let base = parse::distribution(&a.base)?;
    let index = match (a.index, base.tail_index()) {
        (Some(p), _) | (None, Some(p)) => p,
        (None, None) => bail!("--index is required for a base without a tail index"),
    };
    let objective = RiskObjective::new(a.alpha, a.xi1, a.xi2)?;
    let mut csv = String::from("b,chi1,kl,obj,kl_bound,status\n");
    let base_obj = objective_value(&base, &objective)?;
    let _ = writeln!(csv, "base,,0,{base_obj},,base");
    for &b in &a.cutoffs {
        match perturb_distribution(&base, b, index) {
            Ok(g) => {
                let (chi1, _) = g.inflation().expect("perturbations are tail-inflated");
                let kl = kl_to_base(&g)?;
                let obj = objective_value(&g, &objective)?;
                let cap = kl_upper_bound(&base, b, index);
                let _ = writeln!(csv, "{b},{chi1},{kl},{obj},{cap},ok");
                eprintln!("  b={b}: KL {kl:.4e}, objective {obj:.4}");
            }
            Err(Error::InadmissibleCutoff { chi1, min_admissible, .. }) => {
                // chi1 can also round to exactly 1 far out in a light tail.
                let why = format!("chi1 = {chi1} outside (0; 1); smallest admissible b is {min_admissible}");
                let _ = writeln!(csv, "{b},{chi1},,,,inadmissible: {why}");
                eprintln!("  b={b}: inadmissible ({why})");
            }
            Err(e) => return Err(e).with_context(|| format!("b = {b}")),
        }
    }
    emit(a.out.out.as_deref(), &csv)
}

pub fn list_instances() -> Result<()> {
    let mut text = String::new();
    for b in builtin_instances()? {
        let budgets: Vec<String> = b.budgets.iter().map(u64::to_string).collect();
        let estimators: Vec<&str> = b.estimators.iter().map(|e| e.name.as_str()).collect();
        let _ = writeln!(text, "{}", b.name);
        let _ = writeln!(text, "  {}", b.description);
        let _ = writeln!(text, "  arms: {}, level: {}", b.instance.len(), b.instance.objective().alpha());
        let _ = writeln!(text, "  budgets: {}", budgets.join(","));
        let _ = writeln!(text, "  estimators: {}", estimators.join(", "));
    }
    emit(None, &text)
}
