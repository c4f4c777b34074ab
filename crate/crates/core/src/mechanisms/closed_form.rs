//! Piecewise mechanisms with closed-form densities.

use std::f64::consts::TAU;

use crate::density::{Piece, PiecewiseDensity};
use crate::domain::Interval;
use crate::error::{check_epsilon, Result};

/// Half-width of the high-probability interval of the optimal classical
/// mechanism on `[0, 1)`: `(e^{ε/2} - 1) / (2 e^ε - 2)`.
pub fn ogpm_half_width(epsilon: f64) -> f64 {
    // (s - 1) / (2 (s^2 - 1)) simplifies to 1 / (2 (s + 1))
    0.5 / ((0.5 * epsilon).exp() + 1.0)
}

/// High-probability interval `[l, r)` of the optimal classical mechanism.
pub fn ogpm_interval(epsilon: f64, x: f64) -> (f64, f64) {
    let c = ogpm_half_width(epsilon);
    if x < c {
        (0.0, 2.0 * c)
    } else if x < 1.0 - c {
        (x - c, x + c)
    } else {
        (1.0 - 2.0 * c, 1.0)
    }
}

/// Three-level layout `low | high | low` on `domain`.
fn three_piece(domain: Interval, high: f64, low: f64, l: f64, r: f64) -> Result<PiecewiseDensity> {
    PiecewiseDensity::new(
        vec![
            Piece::new(low, domain.lo(), l),
            Piece::new(high, l, r),
            Piece::new(low, r, domain.hi()),
        ],
        domain,
    )
}

/// The optimal piecewise mechanism on `[0, 1)`.
pub fn ogpm_classical(epsilon: f64, x: f64) -> Result<PiecewiseDensity> {
    let epsilon = check_epsilon(epsilon)?;
    let domain = Interval::unit();
    let x = domain.check(x)?;
    let p = (0.5 * epsilon).exp();
    let (l, r) = ogpm_interval(epsilon, x);
    three_piece(domain, p, p / epsilon.exp(), l, r)
}

/// Half-width of the high-probability arc of the optimal circular mechanism.
pub fn ogpm_circular_half_width(epsilon: f64) -> f64 {
    std::f64::consts::PI / ((0.5 * epsilon).exp() + 1.0)
}

/// The optimal piecewise mechanism on the circle `[0, 2π)`.
pub fn ogpm_circular(epsilon: f64, x: f64) -> Result<PiecewiseDensity> {
    let epsilon = check_epsilon(epsilon)?;
    let domain = Interval::circle();
    let x = domain.check(x)?;
    let high = (0.5 * epsilon).exp() / TAU;
    let low = high / epsilon.exp();
    let h = ogpm_circular_half_width(epsilon);
    let (l, r) = (x - h, x + h);
    let pieces = if l < 0.0 {
        vec![
            Piece::new(high, 0.0, r),
            Piece::new(low, r, l + TAU),
            Piece::new(high, l + TAU, TAU),
        ]
    } else if r > TAU {
        vec![
            Piece::new(high, 0.0, r - TAU),
            Piece::new(low, r - TAU, l),
            Piece::new(high, l, TAU),
        ]
    } else {
        vec![
            Piece::new(low, 0.0, l),
            Piece::new(high, l, r),
            Piece::new(low, r, TAU),
        ]
    };
    PiecewiseDensity::new(pieces, domain)
}

/// Output bound `C` of the unbiased mechanism, `(e^{ε/2} + 1) / (e^{ε/2} - 1)`.
pub fn ogpm_unbiased_bound(epsilon: f64) -> f64 {
    let s = (0.5 * epsilon).exp();
    (s + 1.0) / (s - 1.0)
}

/// Output domain `[-C, C + 1)` of the unbiased mechanism.
pub fn ogpm_unbiased_domain(epsilon: f64) -> Result<Interval> {
    let epsilon = check_epsilon(epsilon)?;
    let c = ogpm_unbiased_bound(epsilon);
    Interval::classical(-c, c + 1.0)
}

/// The optimal unbiased mechanism: input `[0, 1)`, output `[-C, C + 1)`,
/// with `E[M(x)] = x`.
pub fn ogpm_unbiased(epsilon: f64, x: f64) -> Result<PiecewiseDensity> {
    let domain = ogpm_unbiased_domain(epsilon)?;
    let x = Interval::unit().check(x)?;
    let s = (0.5 * epsilon).exp();
    let c = ogpm_unbiased_bound(epsilon);
    let p = s / (2.0 * c + 1.0);
    let centre = 0.5 * (c + 1.0) * x;
    let l = centre - (3.0 * c + 1.0) * (c - 1.0) / (4.0 * c);
    let r = centre + (c + 1.0) * (c - 1.0) / (4.0 * c);
    three_piece(domain, p, p / epsilon.exp(), l, r)
}

/// Output bound of the piecewise mechanism on `[-1, 1)`.
pub fn pm_bound(epsilon: f64) -> f64 {
    ogpm_unbiased_bound(epsilon)
}

/// The piecewise mechanism: input `[-1, 1)`, output `[-C, C)`.
pub fn pm(epsilon: f64, x: f64) -> Result<PiecewiseDensity> {
    let epsilon = check_epsilon(epsilon)?;
    let x = Interval::classical(-1.0, 1.0)?.check(x)?;
    let c = pm_bound(epsilon);
    let domain = Interval::classical(-c, c)?;
    let s = (0.5 * epsilon).exp();
    let p = (epsilon.exp() - s) / (2.0 * s + 2.0);
    let l = 0.5 * (c + 1.0) * x - 0.5 * (c - 1.0);
    let r = l + c - 1.0;
    three_piece(domain, p, p / epsilon.exp(), l, r)
}

/// Band half-width of the square wave mechanism.
pub fn sw_half_width(epsilon: f64) -> f64 {
    let e = epsilon.exp();
    (epsilon * e - e + 1.0) / (2.0 * e * (e - 1.0 - epsilon))
}

/// The square wave mechanism: input `[0, 1)`, output `[-b, 1 + b)`.
pub fn sw(epsilon: f64, x: f64) -> Result<PiecewiseDensity> {
    let epsilon = check_epsilon(epsilon)?;
    let x = Interval::unit().check(x)?;
    let b = sw_half_width(epsilon);
    let domain = Interval::classical(-b, 1.0 + b)?;
    let e = epsilon.exp();
    let q = 1.0 / (2.0 * b * e + 1.0);
    three_piece(domain, e * q, q, x - b, x + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::ErrorMetric;
    use std::f64::consts::PI;

    #[test]
    fn classical_anchor() {
        let pdf = ogpm_classical(1.0, 0.0).unwrap();
        let high = pdf.pieces()[0];
        assert!((high.density - 1.648721).abs() < 1e-6);
        assert_eq!(high.left, 0.0);
        assert!((high.right - 0.37754).abs() < 1e-5);
        let (l, r) = ogpm_interval(1.0, 0.3);
        assert!((l - 0.11123).abs() < 1e-5 && (r - 0.48877).abs() < 1e-5);
        let (l, r) = ogpm_interval(1.0, 0.5);
        assert!((l - 0.31).abs() < 5e-3 && (r - 0.69).abs() < 5e-3);
    }

    #[test]
    fn high_interval_fits_for_any_epsilon() {
        for eps in [1e-6, 0.01, 0.5, 3.0, 30.0] {
            assert!(2.0 * ogpm_half_width(eps) < 1.0);
            ogpm_classical(eps, 0.0).unwrap();
            ogpm_classical(eps, 1.0).unwrap();
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(ogpm_classical(0.0, 0.5).is_err());
        assert!(ogpm_classical(-1.0, 0.5).is_err());
        assert!(sw(f64::NAN, 0.5).is_err());
        assert!(pm(1.0, 1.5).is_err());
    }

    #[test]
    fn circular_anchor() {
        let pdf = ogpm_circular(1.0, 0.0).unwrap();
        assert_eq!(pdf.pieces().len(), 3);
        assert!((pdf.pieces()[0].density - 0.2624).abs() < 1e-4);
        assert!((pdf.pieces()[1].density - 0.0965).abs() < 1e-4);
        assert!((pdf.pieces()[0].right - 0.37754 * PI).abs() < 1e-4);
        assert!((pdf.pieces()[2].left - 1.62246 * PI).abs() < 1e-4);
        let mid = ogpm_circular(1.0, PI).unwrap();
        assert!((mid.pieces()[1].left - (PI - 0.37754 * PI)).abs() < 1e-4);
    }

    #[test]
    fn circular_is_rotation_covariant() {
        for eps in [0.3, 1.0, 5.0] {
            let a = ogpm_circular(eps, 0.0).unwrap();
            let b = ogpm_circular(eps, PI).unwrap().rotate(PI).unwrap();
            for y in [0.1, 1.0, 2.0, 3.0, 4.0, 5.5, 6.2] {
                assert!((a.density_at(y) - b.density_at(y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unbiased_anchor() {
        let pdf = ogpm_unbiased(2.0, 0.5).unwrap();
        let high = pdf.pieces()[1];
        assert!((high.left + 0.2164).abs() < 1e-4);
        assert!((high.right - 1.2164).abs() < 1e-4);
        assert!((high.density - 0.5102).abs() < 1e-4);
        assert!((pdf.mean() - 0.5).abs() < 1e-12);
        assert!(ogpm_unbiased(1.0, 0.0).unwrap().mean().abs() < 1e-9);
    }

    #[test]
    fn pm_and_sw_are_tight() {
        let p = pm(1.0, 0.0).unwrap();
        assert!((p.total_mass() - 1.0).abs() < 1e-12);
        assert!((p.ldp_ratio() - 1f64.exp()).abs() < 1e-12);
        let high = p.pieces()[1];
        assert!((high.left + high.right).abs() < 1e-12);
        let s = sw(2.0, 0.3).unwrap();
        assert!((s.ldp_ratio() - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn sw_mse_anchor() {
        let mse = sw(1.0, 0.0).unwrap().expected_error(ErrorMetric::L2, 0.0);
        // sw's output domain is [-b, 1+b), so x=0 is interior
        assert!((mse.unwrap() - 0.29).abs() < 5e-3);
    }
}
