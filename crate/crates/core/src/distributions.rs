//! Parametric loss distributions with seeded sampling and ground-truth
//! mean, VaR and CVaR.
//!
//! A [`DistributionSpec`] is the plain, serialisable description of a
//! distribution (`{kind = "lomax", mean = 1.0, shape = 1.8}`); an
//! [`ArmDistribution`] is a validated spec with its derived constants
//! cached. Invalid parameters are rejected when the `ArmDistribution` is
//! built, never at sample time.
//!
//! Conventions:
//!
//! * Lomax is parameterised by `(mean, shape)` with CDF
//!   `1 - (1 + x / (mean (shape - 1)))^(-shape)` for `x > 0`.
//! * Pareto has survival function `(scale / x)^shape` for `x > scale`.
//! * The tail-inflated construction reweights a base `F` into
//!   `G(x) = chi1 F(x)` below the cutoff `b` and `1 - G(x) = b^(p - 1/2) (1 - F(x))`
//!   from `b` on, with `chi1 = (1 - b^(p - 1/2) (1 - F(b))) / F(b)`.
//!
//! Draws use inverse-transform sampling (`x = F^{-1}(1 - u)` through the
//! survival function) except for the Gaussian, which uses the ziggurat
//! sampler from `rand_distr`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf};
use crate::quad::{self, QuadConfig};
use crate::seed::rng_from_seed;

/// Serialisable description of a loss distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    Exponential {
        mean: f64,
    },
    Lomax {
        mean: f64,
        shape: f64,
    },
    Pareto {
        scale: f64,
        shape: f64,
    },
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Constant {
        value: f64,
    },
    TailInflated {
        base: Box<DistributionSpec>,
        cutoff: f64,
        index: f64,
    },
    /// `factor * X` for `X ~ base`, with `factor > 0`.
    Scaled {
        base: Box<DistributionSpec>,
        factor: f64,
    },
}

/// Mean, VaR and CVaR of a distribution at a fixed level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub mean: f64,
    pub var_alpha: f64,
    pub cvar_alpha: f64,
}

#[derive(Debug, Clone)]
enum Repr {
    Exponential {
        mean: f64,
    },
    Lomax {
        scale: f64,
        shape: f64,
    },
    Pareto {
        scale: f64,
        shape: f64,
    },
    Gaussian {
        mean: f64,
        sd: f64,
        sampler: Normal<f64>,
    },
    Constant {
        value: f64,
    },
    TailInflated {
        base: Box<ArmDistribution>,
        cutoff: f64,
        chi1: f64,
        weight: f64,
        // Survival value of G at the cutoff, weight * (1 - F(b)).
        sf_at_cutoff: f64,
    },
    Scaled {
        base: Box<ArmDistribution>,
        factor: f64,
    },
}

/// A validated loss distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub struct ArmDistribution {
    spec: DistributionSpec,
    repr: Repr,
}

impl PartialEq for ArmDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl TryFrom<DistributionSpec> for ArmDistribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        ArmDistribution::new(spec)
    }
}

impl From<ArmDistribution> for DistributionSpec {
    fn from(d: ArmDistribution) -> Self {
        d.spec
    }
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::param(field, format!("must be positive and finite, got {value}")))
    }
}

fn finite(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::param(field, format!("must be finite, got {value}")))
    }
}

fn above_one(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 1.0 {
        Ok(value)
    } else {
        Err(Error::param(
            field,
            format!("must exceed 1 so that the mean exists, got {value}"),
        ))
    }
}

pub(crate) fn check_level(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

impl ArmDistribution {
    pub fn new(spec: DistributionSpec) -> Result<Self> {
        let repr = match &spec {
            DistributionSpec::Exponential { mean } => Repr::Exponential {
                mean: positive("mean", *mean)?,
            },
            DistributionSpec::Lomax { mean, shape } => {
                let mean = positive("mean", *mean)?;
                let shape = above_one("shape", *shape)?;
                Repr::Lomax {
                    scale: mean * (shape - 1.0),
                    shape,
                }
            }
            DistributionSpec::Pareto { scale, shape } => Repr::Pareto {
                scale: positive("scale", *scale)?,
                shape: above_one("shape", *shape)?,
            },
            DistributionSpec::Gaussian { mean, sd } => {
                let mean = finite("mean", *mean)?;
                let sd = positive("sd", *sd)?;
                let sampler = Normal::new(mean, sd).map_err(|e| Error::param("sd", e.to_string()))?;
                Repr::Gaussian { mean, sd, sampler }
            }
            DistributionSpec::Constant { value } => Repr::Constant {
                value: finite("value", *value)?,
            },
            DistributionSpec::TailInflated {
                base,
                cutoff,
                index,
            } => {
                let base = ArmDistribution::new((**base).clone())?;
                if !base.has_closed_form_quantile() || matches!(base.repr, Repr::Constant { .. }) {
                    return Err(Error::param(
                        "base",
                        "tail inflation needs an exponential, lomax or pareto base",
                    ));
                }
                let cutoff = positive("cutoff", *cutoff)?;
                let index = above_one("index", *index)?;
                let (chi1, weight) = inflation_constants(&base, cutoff, index);
                if !(chi1 > 0.0 && chi1 < 1.0) {
                    return Err(Error::InadmissibleCutoff {
                        cutoff,
                        chi1,
                        min_admissible: min_admissible_cutoff(&base, index),
                    });
                }
                let sf_at_cutoff = weight * base.sf(cutoff);
                Repr::TailInflated {
                    base: Box::new(base),
                    cutoff,
                    chi1,
                    weight,
                    sf_at_cutoff,
                }
            }
            DistributionSpec::Scaled { base, factor } => Repr::Scaled {
                base: Box::new(ArmDistribution::new((**base).clone())?),
                factor: positive("factor", *factor)?,
            },
        };
        Ok(Self { spec, repr })
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Self::new(DistributionSpec::Exponential { mean })
    }

    pub fn lomax(mean: f64, shape: f64) -> Result<Self> {
        Self::new(DistributionSpec::Lomax { mean, shape })
    }

    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        Self::new(DistributionSpec::Pareto { scale, shape })
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        Self::new(DistributionSpec::Gaussian { mean, sd })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(DistributionSpec::Constant { value })
    }

    pub fn tail_inflated(base: &ArmDistribution, cutoff: f64, index: f64) -> Result<Self> {
        Self::new(DistributionSpec::TailInflated {
            base: Box::new(base.spec.clone()),
            cutoff,
            index,
        })
    }

    pub fn scaled(base: &ArmDistribution, factor: f64) -> Result<Self> {
        Self::new(DistributionSpec::Scaled {
            base: Box::new(base.spec.clone()),
            factor,
        })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// Short human-readable label, e.g. `lomax(mean=1, shape=1.8)`.
    pub fn label(&self) -> String {
        match &self.spec {
            DistributionSpec::Exponential { mean } => format!("exponential(mean={mean})"),
            DistributionSpec::Lomax { mean, shape } => format!("lomax(mean={mean}, shape={shape})"),
            DistributionSpec::Pareto { scale, shape } => {
                format!("pareto(scale={scale}, shape={shape})")
            }
            DistributionSpec::Gaussian { mean, sd } => format!("gaussian(mean={mean}, sd={sd})"),
            DistributionSpec::Constant { value } => format!("constant({value})"),
            DistributionSpec::TailInflated { cutoff, index, .. } => {
                let base = match &self.repr {
                    Repr::TailInflated { base, .. } => base.label(),
                    _ => unreachable!(),
                };
                format!("tail-inflated({base}, cutoff={cutoff}, index={index})")
            }
            DistributionSpec::Scaled { factor, .. } => {
                let base = match &self.repr {
                    Repr::Scaled { base, .. } => base.label(),
                    _ => unreachable!(),
                };
                format!("{factor} * {base}")
            }
        }
    }

    /// Regular-variation index of the right tail, when the family has one.
    pub fn tail_index(&self) -> Option<f64> {
        match &self.repr {
            Repr::Lomax { shape, .. } | Repr::Pareto { shape, .. } => Some(*shape),
            Repr::TailInflated { base, .. } | Repr::Scaled { base, .. } => base.tail_index(),
            _ => None,
        }
    }

    /// Whether the inverse CDF has a closed form (and sampling is by inversion).
    pub fn has_closed_form_quantile(&self) -> bool {
        match &self.repr {
            Repr::Gaussian { .. } => false,
            Repr::Scaled { base, .. } => base.has_closed_form_quantile(),
            _ => true,
        }
    }

    /// Smallest and largest points of the support.
    pub fn support(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Exponential { .. } | Repr::Lomax { .. } => (0.0, f64::INFINITY),
            Repr::Pareto { scale, .. } => (*scale, f64::INFINITY),
            Repr::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Repr::Constant { value } => (*value, *value),
            Repr::TailInflated { base, .. } => base.support(),
            Repr::Scaled { base, factor } => {
                let (lo, hi) = base.support();
                (lo * factor, hi * factor)
            }
        }
    }

    fn scale_hint(&self) -> f64 {
        match &self.repr {
            Repr::Exponential { mean } => *mean,
            Repr::Lomax { scale, .. } | Repr::Pareto { scale, .. } => *scale,
            Repr::Gaussian { sd, .. } => *sd,
            Repr::Constant { value } => value.abs().max(1.0),
            Repr::TailInflated { base, .. } => base.scale_hint(),
            Repr::Scaled { base, factor } => base.scale_hint() * factor,
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            Repr::Lomax { .. } | Repr::Pareto { .. } => 1.0 - self.sf(x),
            Repr::Gaussian { mean, sd, .. } => std_normal_cdf((x - mean) / sd),
            Repr::Constant { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Repr::TailInflated {
                base, cutoff, chi1, ..
            } => {
                if x < *cutoff {
                    chi1 * base.cdf(x)
                } else {
                    1.0 - self.sf(x)
                }
            }
            Repr::Scaled { base, factor } => base.cdf(x / factor),
        }
    }

    /// `P(X > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Exponential { mean } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / mean).exp()
                }
            }
            Repr::Lomax { scale, shape } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (1.0 + x / scale).powf(-shape)
                }
            }
            Repr::Pareto { scale, shape } => {
                if x <= *scale {
                    1.0
                } else {
                    (scale / x).powf(*shape)
                }
            }
            Repr::Gaussian { mean, sd, .. } => std_normal_sf((x - mean) / sd),
            Repr::Constant { value } => {
                if x >= *value {
                    0.0
                } else {
                    1.0
                }
            }
            Repr::TailInflated {
                base,
                cutoff,
                chi1,
                weight,
                ..
            } => {
                if x < *cutoff {
                    1.0 - chi1 * base.cdf(x)
                } else {
                    weight * base.sf(x)
                }
            }
            Repr::Scaled { base, factor } => base.sf(x / factor),
        }
    }

    /// Density; zero for the degenerate constant distribution.
    pub fn pdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Exponential { mean } => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x / mean).exp() / mean
                }
            }
            Repr::Lomax { scale, shape } => {
                if x < 0.0 {
                    0.0
                } else {
                    shape / scale * (1.0 + x / scale).powf(-shape - 1.0)
                }
            }
            Repr::Pareto { scale, shape } => {
                if x < *scale {
                    0.0
                } else {
                    shape / scale * (scale / x).powf(shape + 1.0)
                }
            }
            Repr::Gaussian { mean, sd, .. } => std_normal_pdf((x - mean) / sd) / sd,
            Repr::Constant { .. } => 0.0,
            Repr::TailInflated {
                base,
                cutoff,
                chi1,
                weight,
                ..
            } => {
                if x < *cutoff {
                    chi1 * base.pdf(x)
                } else {
                    weight * base.pdf(x)
                }
            }
            Repr::Scaled { base, factor } => base.pdf(x / factor) / factor,
        }
    }

    /// Inverse survival function: the `x` with `P(X > x) = s`, for `s` in `(0, 1]`.
    pub fn isf(&self, s: f64) -> f64 {
        match &self.repr {
            Repr::Exponential { mean } => -mean * s.ln(),
            Repr::Lomax { scale, shape } => scale * (s.powf(-1.0 / shape) - 1.0),
            Repr::Pareto { scale, shape } => scale * s.powf(-1.0 / shape),
            Repr::Gaussian { mean, sd, .. } => {
                if s >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    mean - sd * std_normal_quantile(s)
                }
            }
            Repr::Constant { value } => *value,
            Repr::TailInflated {
                base,
                chi1,
                weight,
                sf_at_cutoff,
                ..
            } => {
                if s > *sf_at_cutoff {
                    // Lower piece: chi1 F(x) = 1 - s.
                    base.isf(1.0 - (1.0 - s) / chi1)
                } else {
                    base.isf(s / weight)
                }
            }
            Repr::Scaled { base, factor } => factor * base.isf(s),
        }
    }

    /// Quantile `inf { x : P(X <= x) >= u }` for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.isf(1.0 - u)
    }

    /// A single draw.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.repr {
            Repr::Gaussian { sampler, .. } => sampler.sample(rng),
            Repr::Constant { value } => *value,
            Repr::Scaled { base, factor } => factor * base.draw(rng),
            _ => {
                // u in [0, 1) so s in (0, 1].
                let s = 1.0 - rng.random::<f64>();
                self.isf(s)
            }
        }
    }

    /// Appends `n` draws to `out`.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, out: &mut Vec<f64>) {
        out.reserve(n);
        // Same arithmetic as `draw`, with the dispatch hoisted out of the loop
        // for the families that dominate simulation time.
        let mut unit = || 1.0 - rng.random::<f64>();
        match self.repr {
            Repr::Exponential { mean } => out.extend((0..n).map(|_| -mean * unit().ln())),
            Repr::Lomax { scale, shape } => {
                out.extend((0..n).map(|_| scale * (unit().powf(-1.0 / shape) - 1.0)))
            }
            Repr::Pareto { scale, shape } => out.extend((0..n).map(|_| scale * unit().powf(-1.0 / shape))),
            _ => {
                for _ in 0..n {
                    out.push(self.draw(rng));
                }
            }
        }
    }

    /// `n` IID draws from the stream keyed by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::param("n", "sample size must be at least 1"));
        }
        let mut rng = rng_from_seed(seed);
        let mut out = Vec::with_capacity(n);
        self.draw_into(&mut rng, n, &mut out);
        Ok(out)
    }

    /// Mean, VaR and CVaR at level `alpha`: closed forms for the exponential,
    /// Lomax, Pareto and constant families (and positive rescalings of them),
    /// quadrature otherwise.
    pub fn ground_truth(&self, alpha: f64) -> Result<GroundTruth> {
        let alpha = check_level(alpha)?;
        let beta = 1.0 - alpha;
        match &self.repr {
            Repr::Exponential { mean } => Ok(GroundTruth {
                mean: *mean,
                var_alpha: -mean * beta.ln(),
                cvar_alpha: mean * (1.0 - beta.ln()),
            }),
            Repr::Lomax { scale, shape } => {
                let var = scale * (beta.powf(-1.0 / shape) - 1.0);
                Ok(GroundTruth {
                    mean: scale / (shape - 1.0),
                    var_alpha: var,
                    cvar_alpha: var + (scale + var) / (shape - 1.0),
                })
            }
            Repr::Pareto { scale, shape } => {
                let var = scale * beta.powf(-1.0 / shape);
                Ok(GroundTruth {
                    mean: shape * scale / (shape - 1.0),
                    var_alpha: var,
                    cvar_alpha: shape * var / (shape - 1.0),
                })
            }
            Repr::Constant { value } => Ok(GroundTruth {
                mean: *value,
                var_alpha: *value,
                cvar_alpha: *value,
            }),
            Repr::Scaled { base, factor } => {
                let g = base.ground_truth(alpha)?;
                Ok(GroundTruth {
                    mean: factor * g.mean,
                    var_alpha: factor * g.var_alpha,
                    cvar_alpha: factor * g.cvar_alpha,
                })
            }
            Repr::Gaussian { .. } | Repr::TailInflated { .. } => self.ground_truth_by_quadrature(alpha),
        }
    }

    /// Ground truth computed by integrating the density: the mean as
    /// `∫ x f(x) dx` and the CVaR as `E[X 1{X >= v}] / (1 - alpha)`.
    /// Only defined for distributions with a density.
    pub fn ground_truth_by_quadrature(&self, alpha: f64) -> Result<GroundTruth> {
        let alpha = check_level(alpha)?;
        if let Repr::Constant { value } = self.repr {
            return Ok(GroundTruth {
                mean: value,
                var_alpha: value,
                cvar_alpha: value,
            });
        }
        let var = self.quantile(alpha);
        let tail = self.integrate_density(|x| x, var, f64::INFINITY)?;
        let mean = self.integrate_density(|x| x, f64::NEG_INFINITY, f64::INFINITY)?;
        Ok(GroundTruth {
            mean,
            var_alpha: var,
            cvar_alpha: tail / (1.0 - alpha),
        })
    }

    /// Mean of the distribution.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.ground_truth(0.5)?.mean)
    }

    /// CVaR at level `alpha` of the clipped variable `min(max(X, lower), upper)`,
    /// computed as `v + (1/beta) ∫_v^upper P(X > y) dy` with `v` the clipped VaR.
    pub fn clipped_cvar(&self, alpha: f64, lower: f64, upper: f64) -> Result<f64> {
        let alpha = check_level(alpha)?;
        if !(lower < upper) {
            return Err(Error::param("upper", "clipping interval must be non-empty"));
        }
        let var = self.quantile(alpha).clamp(lower, upper);
        if var >= upper {
            return Ok(upper);
        }
        let (lo, _) = self.support();
        let start = var.max(lo.min(upper));
        let excess = if start > var {
            // Survival is 1 on [var, start).
            (start - var) + self.integrate_segmented(|y| self.sf(y), start, upper)?
        } else {
            self.integrate_segmented(|y| self.sf(y), var, upper)?
        };
        Ok(var + excess / (1.0 - alpha))
    }

    /// `E|X|^p`, by quadrature.
    pub fn abs_moment(&self, p: f64) -> Result<f64> {
        if let Repr::Constant { value } = self.repr {
            return Ok(value.abs().powf(p));
        }
        self.integrate_density(|x| x.abs().powf(p), f64::NEG_INFINITY, f64::INFINITY)
    }

    /// `E|X - E[X]|^p`, by quadrature.
    pub fn central_abs_moment(&self, p: f64) -> Result<f64> {
        if let Repr::Constant { .. } = self.repr {
            return Ok(0.0);
        }
        let mu = self.mean()?;
        self.integrate_density_with_breaks(|x| (x - mu).abs().powf(p), f64::NEG_INFINITY, f64::INFINITY, &[mu])
    }

    /// Points where the density or its derivative jumps.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Exponential { .. } | Repr::Lomax { .. } => vec![0.0],
            Repr::Pareto { scale, .. } => vec![*scale],
            Repr::Gaussian { mean, .. } => vec![*mean],
            Repr::Constant { value } => vec![*value],
            Repr::TailInflated { base, cutoff, .. } => {
                let mut b = base.breakpoints();
                b.push(*cutoff);
                b
            }
            Repr::Scaled { base, factor } => base.breakpoints().into_iter().map(|x| x * factor).collect(),
        }
    }

    /// `∫_lower^upper h(x) f(x) dx`, restricted to the support.
    pub(crate) fn integrate_density<H: Fn(f64) -> f64>(&self, h: H, lower: f64, upper: f64) -> Result<f64> {
        self.integrate_density_with_breaks(h, lower, upper, &[])
    }

    fn integrate_density_with_breaks<H: Fn(f64) -> f64>(
        &self,
        h: H,
        lower: f64,
        upper: f64,
        extra: &[f64],
    ) -> Result<f64> {
        let (lo, hi) = self.support();
        let a = lower.max(lo);
        let b = upper.min(hi);
        if !(a < b) {
            return Ok(0.0);
        }
        let mut breaks = self.breakpoints();
        breaks.extend_from_slice(extra);
        self.integrate_pieces(|x| h(x) * self.pdf(x), a, b, breaks)
    }

    fn integrate_segmented<H: Fn(f64) -> f64>(&self, h: H, lower: f64, upper: f64) -> Result<f64> {
        self.integrate_pieces(h, lower, upper, self.breakpoints())
    }

    fn integrate_pieces<H: Fn(f64) -> f64>(&self, h: H, a: f64, b: f64, mut breaks: Vec<f64>) -> Result<f64> {
        breaks.retain(|&x| x > a && x < b);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let scale = self.scale_hint();
        let cfg = QuadConfig::default();
        let mut points = Vec::with_capacity(breaks.len() + 2);
        points.push(a);
        points.extend(breaks);
        points.push(b);
        let mut total = 0.0;
        for w in points.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            total += match (x0.is_finite(), x1.is_finite()) {
                (true, true) => quad::integrate(&h, x0, x1, cfg)?,
                (true, false) => quad::integrate_upper(&h, x0, scale.max(x0.abs()), cfg)?,
                (false, true) => quad::integrate_lower(&h, x1, scale.max(x1.abs()), cfg)?,
                (false, false) => {
                    quad::integrate_lower(&h, 0.0, scale, cfg)? + quad::integrate_upper(&h, 0.0, scale, cfg)?
                }
            };
        }
        Ok(total)
    }

    /// `(chi1, weight)` of the tail-inflated construction, if this is one.
    pub fn inflation(&self) -> Option<(f64, f64)> {
        match &self.repr {
            Repr::TailInflated { chi1, weight, .. } => Some((*chi1, *weight)),
            _ => None,
        }
    }

    /// Base distribution of a tail-inflated or scaled distribution.
    pub fn base(&self) -> Option<&ArmDistribution> {
        match &self.repr {
            Repr::TailInflated { base, .. } | Repr::Scaled { base, .. } => Some(base),
            _ => None,
        }
    }
}

fn inflation_constants(base: &ArmDistribution, cutoff: f64, index: f64) -> (f64, f64) {
    let weight = cutoff.powf(index - 0.5);
    let chi1 = (1.0 - weight * base.sf(cutoff)) / base.cdf(cutoff);
    (chi1, weight)
}

fn admissible(base: &ArmDistribution, cutoff: f64, index: f64) -> bool {
    let (chi1, _) = inflation_constants(base, cutoff, index);
    chi1 > 0.0 && chi1 < 1.0
}

/// Smallest cutoff (to about 1e-9 relative) from which the tail-inflated
/// construction of `base` with the given index is admissible; infinite when
/// no cutoff up to 1e15 works.
pub fn min_admissible_cutoff(base: &ArmDistribution, index: f64) -> f64 {
    let mut hi = base.scale_hint().max(1e-6);
    let mut lo = 0.0;
    while !admissible(base, hi, index) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if admissible(base, mid, index) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
    }
    hi
}

/// Families whose location or scale parameter can be solved for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    Exponential,
    Lomax { shape: f64 },
    Pareto { shape: f64 },
    Gaussian { sd: f64 },
    Constant,
}

impl Family {
    fn build(&self, param: f64) -> Result<ArmDistribution> {
        match *self {
            Family::Exponential => ArmDistribution::exponential(param),
            Family::Lomax { shape } => ArmDistribution::lomax(param, shape),
            Family::Pareto { shape } => ArmDistribution::pareto(param, shape),
            Family::Gaussian { sd } => ArmDistribution::gaussian(param, sd),
            Family::Constant => ArmDistribution::constant(param),
        }
    }
}

/// Finds the member of `family` (varying its mean, or the scale for Pareto)
/// whose CVaR at `alpha` equals `target_cvar`, by bisection on the parameter.
pub fn solve_mean_for_cvar(family: Family, target_cvar: f64, alpha: f64) -> Result<ArmDistribution> {
    check_level(alpha)?;
    if !target_cvar.is_finite() {
        return Err(Error::Unattainable {
            target: target_cvar,
            reason: "target must be finite".into(),
        });
    }
    // Validates the fixed shape / sd before searching.
    family.build(1.0)?;
    if let Family::Constant = family {
        return ArmDistribution::constant(target_cvar);
    }
    let scale_family = !matches!(family, Family::Gaussian { .. });
    if scale_family && target_cvar <= 0.0 {
        return Err(Error::Unattainable {
            target: target_cvar,
            reason: "a positive scale family only has positive CVaR".into(),
        });
    }
    let cvar = |param: f64| -> Result<f64> { Ok(family.build(param)?.ground_truth(alpha)?.cvar_alpha) };

    let (mut lo, mut hi) = if scale_family {
        (target_cvar.abs() * 1e-3, target_cvar.abs())
    } else {
        (target_cvar - 1.0, target_cvar + 1.0)
    };
    let mut expansions = 0;
    while cvar(lo)? > target_cvar {
        lo = if scale_family { lo / 2.0 } else { lo - 2.0 * (hi - lo) };
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Unattainable {
                target: target_cvar,
                reason: "no lower bracket found".into(),
            });
        }
    }
    while cvar(hi)? < target_cvar {
        hi = if scale_family { hi * 2.0 } else { hi + 2.0 * (hi - lo) };
        expansions += 1;
        if expansions > 400 {
            return Err(Error::Unattainable {
                target: target_cvar,
                reason: "no upper bracket found".into(),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cvar(mid)? < target_cvar {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = cvar(lo)?;
    let b = cvar(hi)?;
    let param = if (a - target_cvar).abs() <= (b - target_cvar).abs() { lo } else { hi };
    family.build(param)
}
