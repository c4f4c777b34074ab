//! Error curves, worst-case error and closed-form square errors.

use std::f64::consts::PI;
use std::io::Write;

use crate::domain::Interval;
use crate::error::{check_epsilon, Error, Result};
use crate::mechanisms::{ogpm_circular_half_width, ogpm_half_width, Family, MechanismSpec};
use crate::metric::ErrorMetric;
use crate::solver::{solve_probabilities_with, SolverOptions, SolverProblem};

/// Default number of inputs on an error curve.
pub const DEFAULT_CURVE_POINTS: usize = 1001;

/// Expected error of one mechanism across its input domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub mechanism: String,
    pub epsilon: f64,
    pub metric: ErrorMetric,
    pub points: Vec<(f64, f64)>,
}

impl ErrorCurve {
    pub fn max(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> f64 {
        self.points
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map_or(f64::NAN, |p| p.0)
    }

    /// Mean of `self / other` over shared grid points.
    pub fn mean_ratio_to(&self, other: &ErrorCurve) -> f64 {
        let n = self.points.len().min(other.points.len());
        let sum: f64 = self
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| a.1 / b.1)
            .sum();
        sum / n as f64
    }
}

/// Writes curves as `mechanism,epsilon,metric,x,err`.
pub fn write_curves_csv<W: Write>(curves: &[ErrorCurve], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["mechanism", "epsilon", "metric", "x", "err"])?;
    for c in curves {
        for (x, err) in &c.points {
            w.write_record([
                c.mechanism.clone(),
                c.epsilon.to_string(),
                c.metric.to_string(),
                x.to_string(),
                err.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Expected error at `grid_n` evenly spaced inputs.
pub fn whole_domain_error(
    spec: &MechanismSpec,
    epsilon: f64,
    metric: ErrorMetric,
    grid_n: usize,
) -> Result<ErrorCurve> {
    check_epsilon(epsilon)?;
    if grid_n < 2 {
        return Err(Error::InvalidParameter(
            "a curve needs at least two points".into(),
        ));
    }
    let points = spec
        .input_domain()
        .grid(grid_n)
        .into_iter()
        .map(|x| spec.expected_error(epsilon, metric, x).map(|e| (x, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorCurve {
        mechanism: spec.name().to_string(),
        epsilon,
        metric,
        points,
    })
}

/// Largest expected error over inputs.
///
/// Untruncated piecewise mechanisms peak at the domain endpoints, or
/// anywhere on the circle for the circular mechanism, so those are read off
/// directly. Mechanisms with atoms or Laplace tails use a 1001-point grid.
pub fn worst_case_error(spec: &MechanismSpec, epsilon: f64, metric: ErrorMetric) -> Result<f64> {
    check_epsilon(epsilon)?;
    let domain = spec.input_domain();
    if spec.is_analytic_only() {
        return spec.expected_error(epsilon, metric, domain.lo());
    }
    if spec.is_pure_gpm() {
        if domain.is_circular() {
            return spec.expected_error(epsilon, metric, PI);
        }
        let lo = spec.expected_error(epsilon, metric, domain.lo())?;
        let hi = spec.expected_error(epsilon, metric, domain.hi())?;
        return Ok(lo.max(hi));
    }
    Ok(whole_domain_error(spec, epsilon, metric, DEFAULT_CURVE_POINTS)?.max())
}

/// Square error of the optimal classical mechanism on `[0, 1)`.
pub fn mse_closed_form_classical(epsilon: f64, x: f64) -> Result<f64> {
    let epsilon = check_epsilon(epsilon)?;
    let x = Interval::unit().check(x)?;
    let p = (0.5 * epsilon).exp();
    let low = p / (3.0 * epsilon.exp());
    let high = p / 3.0;
    let c = ogpm_half_width(epsilon);
    let cube = |v: f64| v * v * v;
    Ok(if x < c {
        high * (cube(2.0 * c - x) + cube(x)) + low * (cube(1.0 - x) - cube(2.0 * c - x))
    } else if x < 1.0 - c {
        low * (-2.0 * cube(c) + 3.0 * x * x - 3.0 * x + 1.0) + high * 2.0 * cube(c)
    } else {
        low * (cube(1.0 - 2.0 * c - x) + cube(x)) + high * (cube(1.0 - x) - cube(1.0 - 2.0 * c - x))
    })
}

/// Square error of the optimal circular mechanism, the same for every input.
pub fn mse_closed_form_circular(epsilon: f64) -> Result<f64> {
    let epsilon = check_epsilon(epsilon)?;
    let p = (0.5 * epsilon).exp() / (2.0 * PI);
    let c = ogpm_circular_half_width(epsilon);
    let c3 = c * c * c;
    Ok(2.0 / 3.0 * ((PI.powi(3) - c3) * p / epsilon.exp() + c3 * p))
}

/// Optimizes a three-piece mechanism for the single input `x0` on `[0, 1)`.
/// Returns the density covering `x0` and the achieved error.
pub fn point_targeted_probability(
    epsilon: f64,
    x0: f64,
    metric: ErrorMetric,
) -> Result<(f64, f64)> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::OutOfDomain {
            value: x0,
            domain: Interval::unit(),
        });
    }
    let problem = SolverProblem::new(Interval::unit(), metric, 3, epsilon).at_point(x0);
    let solution = solve_probabilities_with(&problem, &SolverOptions::default())?;
    Ok((solution.pdf.density_at(x0), solution.objective))
}

/// True when the family's errors come from an analytic formula or gridded
/// Laplace shape rather than a closed-form piecewise layout.
pub fn is_laplace_shaped(spec: &MechanismSpec) -> bool {
    matches!(spec.family(), Family::TLaplace | Family::BLaplace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{ogpm_classical, sw};

    /// Midpoint-rule oracle with many panels.
    fn quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn curve_endpoints() {
        let spec = MechanismSpec::by_name("ogpm").unwrap();
        let c = whole_domain_error(&spec, 1.0, ErrorMetric::L1, 3).unwrap();
        assert!((c.points[0].1 - 0.37754).abs() < 1e-4);
        assert!((c.points[2].1 - c.points[0].1).abs() < 1e-12);
        assert!(c.points[1].1 < c.points[0].1);
        assert!(whole_domain_error(&spec, 1.0, ErrorMetric::L1, 1).is_err());
    }

    #[test]
    fn circular_curve_is_flat() {
        let spec = MechanismSpec::by_name("ogpm-circular").unwrap();
        let c = whole_domain_error(&spec, 1.0, ErrorMetric::L2, 8).unwrap();
        assert!(c.max() - c.min() < 1e-9);
        let w = worst_case_error(&spec, 2.0, ErrorMetric::L2).unwrap();
        assert!((w - mse_closed_form_circular(2.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_mse_matches_integration() {
        for eps in [0.3, 1.0, 2.5, 6.0] {
            for x in [0.0, 0.05, 0.2, 0.5, 0.77, 0.99, 1.0] {
                let pdf = ogpm_classical(eps, x).unwrap();
                let exact = pdf.expected_error(ErrorMetric::L2, x).unwrap();
                let closed = mse_closed_form_classical(eps, x).unwrap();
                assert!((exact - closed).abs() < 1e-12, "{eps} {x}");
            }
        }
        assert!((mse_closed_form_classical(1.0, 0.0).unwrap() - 0.22).abs() < 5e-3);
    }

    #[test]
    fn anchors_against_quadrature() {
        let pdf = ogpm_classical(1.0, 0.0).unwrap();
        let q = quadrature(|y| y * pdf.density_at(y), 0.0, 1.0, 1_000_000);
        assert!((q - 0.37754).abs() < 1e-4);
        let s = sw(1.0, 0.0).unwrap();
        let d = s.domain();
        let q = quadrature(|y| y * y * s.density_at(y), d.lo(), d.hi(), 1_000_000);
        assert!((q - s.expected_error(ErrorMetric::L2, 0.0).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn staircase_worst_case() {
        let spec = MechanismSpec::by_name("staircase").unwrap();
        let w = worst_case_error(&spec, 1.0, ErrorMetric::L1).unwrap();
        assert!((w - 0.9595).abs() < 1e-4);
    }

    #[test]
    fn uniform_limit_curve() {
        // ε → 0 flattens the mechanism to uniform, whose error is x² - x + 1/2
        let spec = MechanismSpec::by_name("ogpm").unwrap();
        let c = whole_domain_error(&spec, 1e-9, ErrorMetric::L1, 11).unwrap();
        for (x, e) in c.points {
            assert!((e - (x * x - x + 0.5)).abs() < 1e-8);
        }
    }

    #[test]
    fn csv_header() {
        let spec = MechanismSpec::by_name("sw-c").unwrap();
        let c = whole_domain_error(&spec, 1.0, ErrorMetric::L1, 4).unwrap();
        let mut buf = Vec::new();
        write_curves_csv(&[c], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mechanism,epsilon,metric,x,err\n"));
        assert_eq!(text.lines().count(), 5);
        assert!(text.contains("sw-c,1,l1,"));
    }
}
