//! Mechanism catalog: the optimal piecewise mechanisms and the baselines
//! they are compared against.

mod closed_form;
mod laplace;

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, RngCore};

use crate::density::{PiecewiseDensity, Transform};
use crate::domain::Interval;
use crate::error::{check_epsilon, Error, Result};
use crate::metric::ErrorMetric;
use crate::truncate::{truncate, TruncatedDensity};

pub use closed_form::{
    ogpm_circular, ogpm_circular_half_width, ogpm_classical, ogpm_half_width, ogpm_interval,
    ogpm_unbiased, ogpm_unbiased_bound, ogpm_unbiased_domain, pm, pm_bound, sw, sw_half_width,
};
pub use laplace::{
    b_laplace, b_laplace_expected_error, b_laplace_with_grid, staircase_expected_error, t_laplace,
    t_laplace_with_grid, DEFAULT_GRID,
};

/// Names accepted by [`MechanismSpec::by_name`].
pub const CATALOG: [&str; 12] = [
    "ogpm",
    "ogpm-circular",
    "ogpm-u",
    "pm",
    "sw",
    "pm-c",
    "sw-c",
    "t-pm",
    "t-sw",
    "t-laplace",
    "b-laplace",
    "staircase",
];

/// The output distribution of a mechanism at one input.
#[derive(Debug, Clone, PartialEq)]
pub enum MechanismOutput {
    Density(PiecewiseDensity),
    Truncated(TruncatedDensity),
}

impl MechanismOutput {
    pub fn domain(&self) -> Interval {
        match self {
            MechanismOutput::Density(d) => d.domain(),
            MechanismOutput::Truncated(t) => t.domain(),
        }
    }

    pub fn sample(&self, u: f64) -> f64 {
        match self {
            MechanismOutput::Density(d) => d.sample(u),
            MechanismOutput::Truncated(t) => t.sample(u),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            MechanismOutput::Density(d) => d.cdf(y),
            MechanismOutput::Truncated(t) => t.cdf(y),
        }
    }

    pub fn expected_error(&self, metric: ErrorMetric, x: f64) -> Result<f64> {
        match self {
            MechanismOutput::Density(d) => d.expected_error(metric, x),
            MechanismOutput::Truncated(t) => t.expected_error(metric, x),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            MechanismOutput::Density(d) => d.mean(),
            MechanismOutput::Truncated(t) => t.mean(),
        }
    }

    pub fn density(&self) -> Option<&PiecewiseDensity> {
        match self {
            MechanismOutput::Density(d) => Some(d),
            MechanismOutput::Truncated(_) => None,
        }
    }

    pub fn apply_transform(&self, t: Transform) -> Result<Self> {
        Ok(match self {
            MechanismOutput::Density(d) => MechanismOutput::Density(d.apply_transform(t)?),
            MechanismOutput::Truncated(d) => MechanismOutput::Truncated(d.apply_transform(t)?),
        })
    }

    pub fn truncate(&self, target: Interval) -> Result<Self> {
        match self {
            MechanismOutput::Density(d) => Ok(MechanismOutput::Truncated(truncate(d, target)?)),
            MechanismOutput::Truncated(t) if target.covers(&t.domain()) => Ok(self.clone()),
            MechanismOutput::Truncated(_) => Err(Error::Unsupported(
                "truncating an already truncated output".into(),
            )),
        }
    }

    /// Largest likelihood ratio `self / other` over all outputs. Atoms sit at
    /// the same endpoints for every input, so they are compared mass to mass.
    /// Replaces the domain by `target` when the two differ only by rounding.
    fn snapped(self, target: Interval) -> Result<Self> {
        let d = self.domain();
        let tol = 1e-12 * target.len();
        let near = (d.lo() - target.lo()).abs() <= tol && (d.hi() - target.hi()).abs() <= tol;
        if d == target || !near || d.is_circular() {
            return Ok(self);
        }
        let snap = |pieces: &[crate::density::Piece]| {
            let mut pieces = pieces.to_vec();
            if let Some(first) = pieces.first_mut() {
                first.left = target.lo();
            }
            if let Some(last) = pieces.last_mut() {
                last.right = target.hi();
            }
            pieces
        };
        Ok(match self {
            MechanismOutput::Density(p) => {
                MechanismOutput::Density(PiecewiseDensity::new(snap(p.pieces()), target)?)
            }
            MechanismOutput::Truncated(t) => MechanismOutput::Truncated(TruncatedDensity::new(
                snap(t.pieces()),
                target,
                t.lower_atom(),
                t.upper_atom(),
            )?),
        })
    }

    pub fn max_ratio_against(&self, other: &MechanismOutput) -> Result<f64> {
        match (self, other) {
            (MechanismOutput::Density(a), MechanismOutput::Density(b)) => {
                Ok(a.max_ratio_against(b))
            }
            (MechanismOutput::Truncated(a), MechanismOutput::Truncated(b)) => {
                let interior = |t: &TruncatedDensity| {
                    PiecewiseDensity::from_parts_unchecked(t.pieces().to_vec(), t.domain())
                };
                let ratio = |p: f64, q: f64| {
                    if p == 0.0 {
                        0.0
                    } else if q == 0.0 {
                        f64::INFINITY
                    } else {
                        p / q
                    }
                };
                Ok(interior(a)
                    .max_ratio_against(&interior(b))
                    .max(ratio(a.lower_atom(), b.lower_atom()))
                    .max(ratio(a.upper_atom(), b.upper_atom())))
            }
            _ => Err(Error::Unsupported(
                "comparing outputs of different kinds".into(),
            )),
        }
    }
}

/// The base mechanism a spec is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    OgpmClassical,
    OgpmCircular,
    OgpmUnbiased,
    Pm,
    Sw,
    TLaplace,
    BLaplace,
    Staircase,
}

impl Family {
    pub fn input_domain(&self) -> Interval {
        match self {
            Family::OgpmCircular => Interval::circle(),
            Family::Pm => Interval::classical(-1.0, 1.0).expect("static interval"),
            _ => Interval::unit(),
        }
    }

    pub fn output_domain(&self, epsilon: f64) -> Result<Interval> {
        let epsilon = check_epsilon(epsilon)?;
        match self {
            Family::OgpmCircular => Ok(Interval::circle()),
            Family::OgpmUnbiased => ogpm_unbiased_domain(epsilon),
            Family::Pm => {
                let c = pm_bound(epsilon);
                Interval::classical(-c, c)
            }
            Family::Sw => {
                let b = sw_half_width(epsilon);
                Interval::classical(-b, 1.0 + b)
            }
            Family::Staircase => Err(Error::Unsupported(
                "the staircase mechanism is analytic only".into(),
            )),
            _ => Ok(Interval::unit()),
        }
    }

    fn output(&self, epsilon: f64, x: f64) -> Result<MechanismOutput> {
        use MechanismOutput::{Density, Truncated};
        Ok(match self {
            Family::OgpmClassical => Density(ogpm_classical(epsilon, x)?),
            Family::OgpmCircular => Density(ogpm_circular(epsilon, x)?),
            Family::OgpmUnbiased => Density(ogpm_unbiased(epsilon, x)?),
            Family::Pm => Density(pm(epsilon, x)?),
            Family::Sw => Density(sw(epsilon, x)?),
            Family::TLaplace => Truncated(t_laplace(epsilon, x)?),
            Family::BLaplace => Density(b_laplace(epsilon, x)?),
            Family::Staircase => {
                return Err(Error::Unsupported(
                    "the staircase mechanism is analytic only".into(),
                ))
            }
        })
    }
}

/// Post-processing steps applied to a family's output, in order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Adapter {
    /// Map the output domain linearly onto the current input domain.
    Compress,
    /// Map input and output together so the input domain becomes `to`.
    Rescale(Interval),
    /// Clamp outputs to the current input domain.
    Truncate,
}

/// A named mechanism: a base family plus post-processing.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSpec {
    name: String,
    family: Family,
    adapters: Vec<Adapter>,
}

impl MechanismSpec {
    pub fn new(name: impl Into<String>, family: Family, adapters: Vec<Adapter>) -> Self {
        MechanismSpec {
            name: name.into(),
            family,
            adapters,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        use Adapter::*;
        let unit = Interval::unit();
        let (family, adapters) = match name {
            "ogpm" => (Family::OgpmClassical, vec![]),
            "ogpm-circular" => (Family::OgpmCircular, vec![]),
            "ogpm-u" => (Family::OgpmUnbiased, vec![]),
            "pm" => (Family::Pm, vec![]),
            "sw" => (Family::Sw, vec![]),
            "pm-c" => (Family::Pm, vec![Compress, Rescale(unit)]),
            "sw-c" => (Family::Sw, vec![Compress]),
            "t-pm" => (Family::Pm, vec![Truncate, Rescale(unit)]),
            "t-sw" => (Family::Sw, vec![Truncate]),
            "t-laplace" => (Family::TLaplace, vec![]),
            "b-laplace" => (Family::BLaplace, vec![]),
            "staircase" => (Family::Staircase, vec![]),
            other => return Err(Error::UnknownMechanism(other.to_string())),
        };
        Ok(MechanismSpec::new(name, family, adapters))
    }

    pub fn catalog() -> Vec<MechanismSpec> {
        CATALOG
            .iter()
            .map(|n| MechanismSpec::by_name(n).expect("catalog names resolve"))
            .collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn adapters(&self) -> &[Adapter] {
        &self.adapters
    }

    pub fn input_domain(&self) -> Interval {
        self.adapters
            .iter()
            .fold(self.family.input_domain(), |d, a| match a {
                Adapter::Rescale(to) => *to,
                _ => d,
            })
    }

    pub fn output_domain(&self, epsilon: f64) -> Result<Interval> {
        let mut input = self.family.input_domain();
        let mut output = self.family.output_domain(epsilon)?;
        for a in &self.adapters {
            match a {
                Adapter::Compress | Adapter::Truncate => output = input,
                Adapter::Rescale(to) => {
                    output = Transform::between(&input, to)?.map_interval(&output)?;
                    input = *to;
                }
            }
        }
        Ok(output)
    }

    pub fn is_circular(&self) -> bool {
        self.input_domain().is_circular()
    }

    /// Whether `E[M(x)] != x` for some `x`.
    pub fn biased(&self) -> bool {
        let base_unbiased = matches!(self.family, Family::OgpmUnbiased | Family::Pm);
        let post = self
            .adapters
            .iter()
            .any(|a| matches!(a, Adapter::Compress | Adapter::Truncate));
        !base_unbiased || post
    }

    /// Untruncated piecewise mechanisms with a closed form.
    pub fn is_pure_gpm(&self) -> bool {
        matches!(
            self.family,
            Family::OgpmClassical
                | Family::OgpmCircular
                | Family::OgpmUnbiased
                | Family::Pm
                | Family::Sw
        ) && !self.adapters.contains(&Adapter::Truncate)
    }

    pub fn is_analytic_only(&self) -> bool {
        self.family == Family::Staircase
    }

    fn base_input(&self, x: f64) -> Result<f64> {
        let x = self.input_domain().check(x)?;
        let mut steps = Vec::new();
        let mut input = self.family.input_domain();
        for a in &self.adapters {
            if let Adapter::Rescale(to) = a {
                steps.push(Transform::between(&input, to)?);
                input = *to;
            }
        }
        let base = steps.iter().rev().fold(x, |v, t| t.inverse().apply(v));
        let domain = self.family.input_domain();
        Ok(base.clamp(domain.lo(), domain.hi()))
    }

    /// Output distribution at input `x`.
    pub fn pdf(&self, epsilon: f64, x: f64) -> Result<MechanismOutput> {
        let base = self.base_input(x)?;
        let mut out = self.family.output(epsilon, base)?;
        let mut input = self.family.input_domain();
        for a in &self.adapters {
            match a {
                Adapter::Compress => {
                    out = out.apply_transform(Transform::between(&out.domain(), &input)?)?;
                    out = out.snapped(input)?;
                }
                Adapter::Rescale(to) => {
                    out = out.apply_transform(Transform::between(&input, to)?)?;
                    out = out.snapped(*to)?;
                    input = *to;
                }
                Adapter::Truncate => out = out.truncate(input)?,
            }
        }
        Ok(out)
    }

    /// `E[L(M(x), x)]`. The staircase mechanism answers from its formula.
    pub fn expected_error(&self, epsilon: f64, metric: ErrorMetric, x: f64) -> Result<f64> {
        if self.family == Family::Staircase {
            if metric != ErrorMetric::L1 {
                return Err(Error::Unsupported(
                    "the staircase error formula is for absolute error".into(),
                ));
            }
            self.input_domain().check(x)?;
            return staircase_expected_error(epsilon);
        }
        self.pdf(epsilon, x)?.expected_error(metric, x)
    }

    /// Maps a base-family output through the adapters.
    fn forward_point(&self, epsilon: f64, y: f64) -> Result<f64> {
        let mut input = self.family.input_domain();
        let mut output = self.family.output_domain(epsilon)?;
        let mut y = y;
        for a in &self.adapters {
            match a {
                Adapter::Compress => {
                    y = Transform::between(&output, &input)?.apply(y);
                    output = input;
                }
                Adapter::Rescale(to) => {
                    let t = Transform::between(&input, to)?;
                    y = t.apply(y);
                    output = t.map_interval(&output)?;
                    input = *to;
                }
                Adapter::Truncate => {
                    y = y.clamp(input.lo(), input.hi());
                    output = input;
                }
            }
        }
        Ok(y)
    }

    /// Adapts the spec to data living on `domain`.
    ///
    /// On the circle the optimal classical mechanism becomes its circular
    /// counterpart and other classical mechanisms run on the flattened
    /// `[0, 2π)`. Classical inputs are rescaled onto `domain`.
    pub fn fit_to(&self, domain: &Interval) -> Result<MechanismSpec> {
        if self.is_analytic_only() {
            return Err(Error::Unsupported(format!(
                "`{}` cannot perturb data",
                self.name
            )));
        }
        let current = self.input_domain();
        if domain.is_circular() {
            if current.is_circular() {
                return Ok(self.clone());
            }
            if self.family == Family::OgpmClassical && self.adapters.is_empty() {
                return Ok(MechanismSpec::new(
                    self.name.clone(),
                    Family::OgpmCircular,
                    vec![],
                ));
            }
            let flat = Interval::classical(0.0, TAU)?;
            let mut adapters = self.adapters.clone();
            adapters.push(Adapter::Rescale(flat));
            return Ok(MechanismSpec::new(self.name.clone(), self.family, adapters));
        }
        if current.is_circular() {
            return Err(Error::Unsupported(format!(
                "`{}` needs circular data",
                self.name
            )));
        }
        if current == *domain {
            return Ok(self.clone());
        }
        let mut adapters = self.adapters.clone();
        adapters.push(Adapter::Rescale(*domain));
        Ok(MechanismSpec::new(self.name.clone(), self.family, adapters))
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Something that randomizes one value at a time.
pub trait Perturber {
    fn name(&self) -> &str;
    fn perturb(&self, epsilon: f64, x: f64, rng: &mut dyn RngCore) -> Result<f64>;
}

impl Perturber for MechanismSpec {
    fn name(&self) -> &str {
        &self.name
    }

    fn perturb(&self, epsilon: f64, x: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let u: f64 = rng.gen();
        match self.family {
            // exact draws instead of the gridded densities
            Family::TLaplace | Family::BLaplace => {
                let epsilon = check_epsilon(epsilon)?;
                let base = self.base_input(x)?;
                let y = if self.family == Family::TLaplace {
                    laplace::t_laplace_draw(epsilon, base, u)
                } else {
                    laplace::b_laplace_draw(epsilon, base, u)
                };
                self.forward_point(epsilon, y)
            }
            _ => Ok(self.pdf(epsilon, x)?.sample(u)),
        }
    }
}

/// Reports its input unchanged. Useful as an estimator baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Perturber for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn perturb(&self, _epsilon: f64, x: f64, _rng: &mut dyn RngCore) -> Result<f64> {
        Ok(x)
    }
}
