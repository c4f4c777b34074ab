//! Densities with point masses at the domain endpoints.

use crate::density::{Piece, PiecewiseDensity, Transform, NORMALIZATION_TOL};
use crate::domain::Interval;
use crate::error::{Error, Result};
use crate::metric::ErrorMetric;

/// A piecewise density on `domain` plus atoms at `domain.lo()` and
/// `domain.hi()`. Interior mass and atoms sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDensity {
    pieces: Vec<Piece>,
    domain: Interval,
    lower: f64,
    upper: f64,
}

impl TruncatedDensity {
    pub fn new(pieces: Vec<Piece>, domain: Interval, lower: f64, upper: f64) -> Result<Self> {
        if domain.is_circular() {
            return Err(Error::Unsupported(
                "endpoint atoms on a circular domain".into(),
            ));
        }
        if !(lower >= 0.0 && upper >= 0.0) {
            return Err(Error::InvalidDensity("atoms must be non-negative".into()));
        }
        let tol = 1e-9 * domain.len();
        let mut at = domain.lo();
        for p in &pieces {
            if p.density < 0.0 || !p.density.is_finite() || (p.left - at).abs() > tol {
                return Err(Error::InvalidDensity(format!("bad interior piece {p:?}")));
            }
            at = p.right;
        }
        if (at - domain.hi()).abs() > tol {
            return Err(Error::InvalidDensity(
                "interior does not tile the domain".into(),
            ));
        }
        let mass: f64 = pieces.iter().map(Piece::mass).sum::<f64>() + lower + upper;
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDensity(format!("total mass {mass} is not 1")));
        }
        Ok(TruncatedDensity {
            pieces,
            domain,
            lower,
            upper,
        })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn lower_atom(&self) -> f64 {
        self.lower
    }

    pub fn upper_atom(&self) -> f64 {
        self.upper
    }

    pub fn interior_mass(&self) -> f64 {
        self.pieces.iter().map(Piece::mass).sum()
    }

    /// `P(Y <= y)`; the lower atom is included at `domain.lo()`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y < self.domain.lo() {
            return 0.0;
        }
        if y >= self.domain.hi() {
            return 1.0;
        }
        let mut acc = self.lower;
        for p in &self.pieces {
            if y >= p.right {
                acc += p.mass();
            } else {
                if y > p.left {
                    acc += p.density * (y - p.left);
                }
                break;
            }
        }
        acc
    }

    /// Inverse-CDF sample: the lower atom occupies the bottom of `[0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        if u < self.lower {
            return self.domain.lo();
        }
        let mut acc = self.lower;
        for p in &self.pieces {
            let m = p.mass();
            if m > 0.0 && acc + m > u {
                return (p.left + (u - acc) / p.density).clamp(p.left, p.right);
            }
            acc += m;
        }
        self.domain.hi()
    }

    pub fn expected_error(&self, metric: ErrorMetric, x: f64) -> Result<f64> {
        let x = self.domain.check(x)?;
        let interior: f64 = self
            .pieces
            .iter()
            .map(|p| p.density * metric.integral(p.left, p.right, x))
            .sum();
        Ok(interior
            + self.lower * metric.of_distance((x - self.domain.lo()).abs())
            + self.upper * metric.of_distance((self.domain.hi() - x).abs()))
    }

    pub fn mean(&self) -> f64 {
        let interior: f64 = self
            .pieces
            .iter()
            .map(|p| 0.5 * p.density * (p.right * p.right - p.left * p.left))
            .sum();
        interior + self.lower * self.domain.lo() + self.upper * self.domain.hi()
    }

    pub fn apply_transform(&self, t: Transform) -> Result<Self> {
        let domain = t.map_interval(&self.domain)?;
        let mut pieces: Vec<Piece> = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.density / t.scale, t.apply(p.left), t.apply(p.right)))
            .collect();
        if let Some(first) = pieces.first_mut() {
            first.left = domain.lo();
        }
        if let Some(last) = pieces.last_mut() {
            last.right = domain.hi();
        }
        Ok(TruncatedDensity {
            pieces,
            domain,
            lower: self.lower,
            upper: self.upper,
        })
    }
}

/// Moves the mass of `pdf` outside `target` onto atoms at the endpoints of
/// `target`. Interior pieces are kept as they are.
pub fn truncate(pdf: &PiecewiseDensity, target: Interval) -> Result<TruncatedDensity> {
    let domain = pdf.domain();
    if domain.is_circular() || target.is_circular() {
        return Err(Error::Unsupported(
            "truncation needs classical domains".into(),
        ));
    }
    if !domain.covers(&target) {
        return Err(Error::OutOfDomain {
            value: if target.lo() < domain.lo() {
                target.lo()
            } else {
                target.hi()
            },
            domain,
        });
    }
    let (a, b) = (target.lo(), target.hi());
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut inner = Vec::new();
    for p in pdf.pieces() {
        if p.left < a {
            lower += p.density * (p.right.min(a) - p.left);
        }
        if p.right > b {
            upper += p.density * (p.right - p.left.max(b));
        }
        let (l, r) = (p.left.max(a), p.right.min(b));
        if r > l {
            inner.push(Piece::new(p.density, l, r));
        }
    }
    if let Some(first) = inner.first_mut() {
        first.left = a;
    }
    if let Some(last) = inner.last_mut() {
        last.right = b;
    }
    TruncatedDensity::new(inner, target, lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mass_bookkeeping() {
        let wide = PiecewiseDensity::uniform(Interval::classical(-1.0, 2.0).unwrap());
        let t = truncate(&wide, Interval::unit()).unwrap();
        assert!((t.lower_atom() - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.upper_atom() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.pieces().len(), 1);
        assert!((t.pieces()[0].density - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.sample(0.1), 0.0);
        assert_eq!(t.sample(0.9), 1.0);
        assert!((t.sample(0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inside_target_is_a_no_op() {
        let pdf = PiecewiseDensity::uniform(Interval::unit());
        let t = truncate(&pdf, Interval::unit()).unwrap();
        assert_eq!(t.lower_atom(), 0.0);
        assert_eq!(t.upper_atom(), 0.0);
        assert_eq!(t.pieces(), pdf.pieces());
    }

    #[test]
    fn target_must_fit() {
        let pdf = PiecewiseDensity::uniform(Interval::unit());
        let target = Interval::classical(-0.5, 0.5).unwrap();
        assert!(matches!(
            truncate(&pdf, target),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn atoms_count_toward_error() {
        let wide = PiecewiseDensity::uniform(Interval::classical(-1.0, 2.0).unwrap());
        let t = truncate(&wide, Interval::unit()).unwrap();
        // atom at 1 contributes 1/3, interior contributes (1/3)(1/2)
        let e = t.expected_error(ErrorMetric::L1, 0.0).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
        assert!((t.mean() - 0.5).abs() < 1e-15);
    }
}
