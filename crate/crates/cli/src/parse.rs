use anyhow::{anyhow, bail, Context, Result};
use riskbai_core::{ArmDistribution, BoundSelector, EstimatorKind, EstimatorSpec, MomentPrior, Side, Target};
use serde::Deserialize;

#[derive(Deserialize)]
struct Wrapped {
    d: ArmDistribution,
}

/// Parses `kind:key=value,...` (for example `lomax:mean=1,shape=1.8`) or a
/// TOML inline table such as `{ kind = "pareto", scale = 1, shape = 1.5 }`.
pub fn distribution(text: &str) -> Result<ArmDistribution> {
    let text = text.trim();
    let table = if text.starts_with('{') {
        text.to_string()
    } else {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut fields = vec![format!("kind = {:?}", kind.trim())];
        for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value in distribution `{text}`, got `{pair}`"))?;
            fields.push(format!("{} = {}", k.trim(), v.trim()));
        }
        format!("{{ {} }}", fields.join(", "))
    };
    let w: Wrapped = toml::from_str(&format!("d = {table}")).with_context(|| format!("distribution `{text}`"))?;
    Ok(w.d)
}

pub fn estimator(kind: &str, alpha: Option<f64>, q: Option<f64>, offset: f64) -> Result<EstimatorSpec> {
    let kind = match kind {
        "empirical" => EstimatorKind::Empirical,
        "truncated" => EstimatorKind::Truncated,
        "median-of-bins" => EstimatorKind::MedianOfBins,
        other => bail!("unknown estimator `{other}` (expected empirical, truncated or median-of-bins)"),
    };
    let target = if alpha.is_some() { Target::Cvar } else { Target::Mean };
    Ok(EstimatorSpec::new(target, kind, q, offset, alpha)?)
}

pub fn side(text: Option<&str>) -> Result<Option<Side>> {
    Ok(match text {
        None => None,
        Some("lower") => Some(Side::Lower),
        Some("upper") => Some(Side::Upper),
        Some(other) => bail!("unknown side `{other}` (expected lower or upper)"),
    })
}

/// Prior from explicit moments where given, the distribution's own otherwise.
pub fn prior(dist: Option<&ArmDistribution>, p: f64, b: Option<f64>, v: Option<f64>, delta: f64) -> Result<MomentPrior> {
    let oracle = match (b, v, dist) {
        (Some(_), Some(_), _) => None,
        (_, _, Some(d)) => Some(MomentPrior::oracle(d, p, delta)?),
        _ => bail!("give both --moment-b and --moment-v, or a distribution to take them from"),
    };
    Ok(MomentPrior::new(
        p,
        b.or(oracle.map(|o| o.b)).unwrap(),
        v.or(oracle.map(|o| o.v)).unwrap(),
        delta,
    )?)
}

pub fn bound(
    name: Option<&str>,
    spec: &EstimatorSpec,
    dist: &ArmDistribution,
    prior: impl FnOnce() -> Result<MomentPrior>,
    side_name: Option<&str>,
    factor: f64,
) -> Result<BoundSelector> {
    let name = match name {
        Some(n) => n,
        None => match (spec.target(), spec.kind()) {
            (Target::Cvar, EstimatorKind::Empirical) => "empirical-cvar",
            (Target::Cvar, EstimatorKind::Truncated) => "truncated-cvar",
            (Target::Cvar, EstimatorKind::MedianOfBins) => "median-of-cvars",
            (Target::Mean, EstimatorKind::Empirical) => "empirical-mean",
            (Target::Mean, EstimatorKind::Truncated) => "truncated-mean",
            (Target::Mean, EstimatorKind::MedianOfBins) => "median-of-means",
        },
    };
    Ok(match name {
        "empirical-cvar" => BoundSelector::EmpiricalCvar { prior: prior()?, side: side(side_name)? },
        "pareto-lower" => match *dist.spec() {
            riskbai_core::DistributionSpec::Pareto { scale, shape } => BoundSelector::ParetoLower { scale, shape, factor },
            _ => bail!("the pareto-lower bound needs a pareto distribution"),
        },
        "truncated-cvar" => BoundSelector::TruncatedCvar { prior: prior()? },
        "bounded-cvar" => BoundSelector::BoundedCvar,
        "median-of-cvars" => BoundSelector::MedianOfCvars { prior: prior()? },
        "empirical-mean" => BoundSelector::EmpiricalMean { prior: prior()? },
        "truncated-mean" => BoundSelector::TruncatedMean { prior: prior()? },
        "median-of-means" => BoundSelector::MedianOfMeans { prior: prior()? },
        other => bail!("unknown bound `{other}`"),
    })
}
