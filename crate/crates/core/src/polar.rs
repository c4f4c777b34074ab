//! Polar coordinates: radius on `[0, d)` and angle on the circle, each
//! perturbed with its own share of the budget.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::{mse_closed_form_circular, mse_closed_form_classical};
use crate::domain::{wrap_angle, Interval};
use crate::error::{Error, Result};
use crate::mechanisms::{ogpm_circular, ogpm_classical};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub radius: f64,
    pub angle: f64,
}

impl PolarPoint {
    /// Radius must lie in `[0, d)`; the angle is wrapped.
    pub fn new(radius: f64, angle: f64, d: f64) -> Result<Self> {
        check_d(d)?;
        if !(radius >= 0.0 && radius < d) {
            return Err(Error::OutOfDomain {
                value: radius,
                domain: Interval::classical(0.0, d)?,
            });
        }
        if !angle.is_finite() {
            return Err(Error::InvalidParameter("angle must be finite".into()));
        }
        Ok(PolarPoint {
            radius,
            angle: wrap_angle(angle),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSplit {
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub total: f64,
}

impl BudgetSplit {
    /// Gives `epsilon1` to the radius and the rest to the angle.
    pub fn new(epsilon1: f64, total: f64) -> Result<Self> {
        if !(total.is_finite() && total >= 0.0 && epsilon1 >= 0.0 && epsilon1 <= total) {
            return Err(Error::InvalidParameter(format!(
                "cannot take {epsilon1} out of {total}"
            )));
        }
        Ok(BudgetSplit {
            epsilon1,
            epsilon2: total - epsilon1,
            total,
        })
    }
}

fn check_d(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "radius bound must be positive, got {d}"
        )))
    }
}

/// Worst-case square error of the radius, reached at radius 0.
pub fn radius_error(epsilon1: f64, d: f64) -> Result<f64> {
    check_d(d)?;
    // ε = 0 is the uniform limit
    let unit = if epsilon1 == 0.0 {
        1.0 / 3.0
    } else {
        mse_closed_form_classical(epsilon1, 0.0)?
    };
    Ok(d * d * unit)
}

/// Square arc error of the angle, the same for every input.
pub fn angle_error(epsilon2: f64) -> Result<f64> {
    if epsilon2 == 0.0 {
        return Ok(PI * PI / 3.0);
    }
    mse_closed_form_circular(epsilon2)
}

pub fn total_error(split: &BudgetSplit, d: f64) -> Result<f64> {
    Ok(radius_error(split.epsilon1, d)? + angle_error(split.epsilon2)?)
}

/// Golden-section search for the radius share minimizing the summed
/// worst-case errors.
pub fn optimal_budget_split(total: f64, d: f64) -> Result<BudgetSplit> {
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "total budget must be positive, got {total}"
        )));
    }
    check_d(d)?;
    let f = |e1: f64| {
        let e1 = e1.clamp(0.0, total);
        radius_error(e1, d).unwrap_or(f64::INFINITY)
            + angle_error(total - e1).unwrap_or(f64::INFINITY)
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, total);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while b - a > 1e-6 {
        if fc <= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = f(e);
        }
    }
    let mut best = 0.5 * (a + b);
    // the interval ends are candidates too
    for edge in [0.0, total] {
        if f(edge) < f(best) {
            best = edge;
        }
    }
    BudgetSplit::new(best, total)
}

/// `(ε₁, total error)` at `n` evenly spaced radius shares.
pub fn budget_curve(total: f64, d: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "a curve needs at least two points".into(),
        ));
    }
    (0..n)
        .map(|i| {
            let e1 = total * i as f64 / (n - 1) as f64;
            total_error(&BudgetSplit::new(e1.min(total), total)?, d).map(|err| (e1, err))
        })
        .collect()
}

/// Writes a budget curve as `epsilon1,total_error`.
pub fn write_budget_curve_csv<W: Write>(curve: &[(f64, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["epsilon1", "total_error"])?;
    for (e1, err) in curve {
        w.write_record([e1.to_string(), err.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Perturbs both coordinates. A zero share makes that coordinate uniform.
pub fn perturb_polar(
    pt: &PolarPoint,
    split: &BudgetSplit,
    d: f64,
    rng: &mut dyn RngCore,
) -> Result<PolarPoint> {
    check_d(d)?;
    let radius = if split.epsilon1 == 0.0 {
        rng.gen::<f64>() * d
    } else {
        let pdf = ogpm_classical(split.epsilon1, pt.radius / d)?;
        (pdf.sample(rng.gen::<f64>()) * d).min(d * (1.0 - f64::EPSILON))
    };
    let angle = if split.epsilon2 == 0.0 {
        rng.gen::<f64>() * TAU
    } else {
        ogpm_circular(split.epsilon2, pt.angle)?.sample(rng.gen::<f64>())
    };
    PolarPoint::new(radius, angle, d)
}

/// [`perturb_polar`] with a seeded generator.
pub fn perturb_polar_seeded(
    pt: &PolarPoint,
    split: &BudgetSplit,
    d: f64,
    seed: u64,
) -> Result<PolarPoint> {
    perturb_polar(pt, split, d, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits() {
        assert!((radius_error(1e-12, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        assert!((angle_error(1e-12).unwrap() - PI * PI / 3.0).abs() < 1e-9);
        assert_eq!(radius_error(0.0, 2.0).unwrap(), 4.0 / 3.0);
    }

    #[test]
    fn golden_section_matches_scan() {
        let total = 1.0 + TAU;
        let split = optimal_budget_split(total, 1.0).unwrap();
        let curve = budget_curve(total, 1.0, 10_001).unwrap();
        let scan = curve.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert!((split.epsilon1 - scan.0).abs() < 1e-3);
        assert!((split.epsilon1 + split.epsilon2 - total).abs() < 1e-9);
    }

    #[test]
    fn angle_deserves_budget() {
        let total = 1.0 + TAU;
        let none_to_radius = total_error(&BudgetSplit::new(0.0, total).unwrap(), 1.0).unwrap();
        let none_to_angle = total_error(&BudgetSplit::new(total, total).unwrap(), 1.0).unwrap();
        assert!(none_to_radius.is_finite());
        assert!(none_to_radius < 0.5 * none_to_angle);
    }

    #[test]
    fn tiny_totals_stay_feasible() {
        let s = optimal_budget_split(1e-6, 1.0).unwrap();
        assert!(s.epsilon1 >= 0.0 && s.epsilon2 >= 0.0);
        assert!((s.epsilon1 + s.epsilon2 - 1e-6).abs() < 1e-15);
        assert!(optimal_budget_split(0.0, 1.0).is_err());
    }

    #[test]
    fn zero_radius_share_is_uniform() {
        let split = BudgetSplit::new(0.0, 3.0).unwrap();
        let pt = PolarPoint::new(0.1, 1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40_000;
        let mut bins = [0usize; 4];
        for _ in 0..n {
            let q = perturb_polar(&pt, &split, 2.0, &mut rng).unwrap();
            bins[(q.radius / 0.5) as usize] += 1;
        }
        for b in bins {
            // 5σ for a binomial(n, 1/4) count
            assert!((b as f64 - n as f64 / 4.0).abs() < 5.0 * (n as f64 * 0.1875).sqrt());
        }
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_budget_curve_csv(&budget_curve(2.0, 1.0, 3).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epsilon1,total_error\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
