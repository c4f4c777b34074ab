//! Laplace-shaped baselines on `[0, 1)` and the staircase error formula.

use crate::density::{Piece, PiecewiseDensity};
use crate::domain::Interval;
use crate::error::{check_epsilon, Result};
use crate::truncate::TruncatedDensity;

/// Default number of grid cells for Laplace-shaped densities.
pub const DEFAULT_GRID: usize = 4096;

/// CDF of Laplace(x, 1/ε).
fn laplace_cdf(epsilon: f64, x: f64, y: f64) -> f64 {
    if y < x {
        0.5 * (-epsilon * (x - y)).exp()
    } else {
        1.0 - 0.5 * (-epsilon * (y - x)).exp()
    }
}

/// Cells of width 1/n on `[0, 1)` carrying the exact Laplace mass of each cell.
fn laplace_cells(epsilon: f64, x: f64, n: usize) -> Vec<Piece> {
    let h = 1.0 / n as f64;
    let mut prev = laplace_cdf(epsilon, x, 0.0);
    (0..n)
        .map(|i| {
            let left = i as f64 * h;
            let right = if i + 1 == n { 1.0 } else { (i + 1) as f64 * h };
            let next = laplace_cdf(epsilon, x, right);
            let piece = Piece::new((next - prev) / (right - left), left, right);
            prev = next;
            piece
        })
        .collect()
}

/// Laplace noise with scale 1/ε, outputs outside `[0, 1]` clamped to the
/// nearer endpoint. The atoms are exact; the interior is a grid of `n` cells.
pub fn t_laplace_with_grid(epsilon: f64, x: f64, n: usize) -> Result<TruncatedDensity> {
    let epsilon = check_epsilon(epsilon)?;
    let domain = Interval::unit();
    let x = domain.check(x)?;
    let lower = 0.5 * (-epsilon * x).exp();
    let upper = 0.5 * (-epsilon * (1.0 - x)).exp();
    TruncatedDensity::new(laplace_cells(epsilon, x, n.max(1)), domain, lower, upper)
}

pub fn t_laplace(epsilon: f64, x: f64) -> Result<TruncatedDensity> {
    t_laplace_with_grid(epsilon, x, DEFAULT_GRID)
}

/// Laplace noise conditioned on landing in `[0, 1]`, on a grid of `n` cells.
///
/// The normalizer depends on `x`. At `x ∈ {0, 1}` it equals the constant
/// `(1 - e^{-ε}) / 2` of the textbook bounded Laplace and the density stays
/// ε-LDP at every `x`.
pub fn b_laplace_with_grid(epsilon: f64, x: f64, n: usize) -> Result<PiecewiseDensity> {
    let epsilon = check_epsilon(epsilon)?;
    let domain = Interval::unit();
    let x = domain.check(x)?;
    PiecewiseDensity::normalized(laplace_cells(epsilon, x, n.max(1)), domain)
}

pub fn b_laplace(epsilon: f64, x: f64) -> Result<PiecewiseDensity> {
    b_laplace_with_grid(epsilon, x, DEFAULT_GRID)
}

/// Closed-form expected absolute error of the bounded Laplace mechanism with
/// the constant normalizer `(1 - e^{-ε}) / 2`.
pub fn b_laplace_expected_error(epsilon: f64, x: f64) -> Result<f64> {
    let epsilon = check_epsilon(epsilon)?;
    let x = Interval::unit().check(x)?;
    let a = epsilon * x;
    let b = epsilon * (1.0 - x);
    Ok((2.0 - (1.0 + a) * (-a).exp() - (1.0 + b) * (-b).exp())
        / (epsilon * (1.0 - (-epsilon).exp())))
}

/// Expected absolute error of the staircase mechanism with sensitivity 1.
pub fn staircase_expected_error(epsilon: f64) -> Result<f64> {
    let epsilon = check_epsilon(epsilon)?;
    // e^{ε/2} / (e^ε - 1), written to stay finite for large ε
    Ok((-0.5 * epsilon).exp() / -(-epsilon).exp_m1())
}

/// Exact draw from Laplace(x, 1/ε) conditioned on `[0, 1]`, by inverting the
/// conditioned CDF.
pub(crate) fn b_laplace_draw(epsilon: f64, x: f64, u: f64) -> f64 {
    let lo = laplace_cdf(epsilon, x, 0.0);
    let hi = laplace_cdf(epsilon, x, 1.0);
    let t = lo + u * (hi - lo);
    let y = if t < 0.5 {
        x + (2.0 * t).ln() / epsilon
    } else {
        x - (2.0 * (1.0 - t)).ln() / epsilon
    };
    y.clamp(0.0, 1.0)
}

/// Exact draw from Laplace(x, 1/ε) clamped to `[0, 1]`.
pub(crate) fn t_laplace_draw(epsilon: f64, x: f64, u: f64) -> f64 {
    let t = u.max(f64::MIN_POSITIVE);
    let y = if t < 0.5 {
        x + (2.0 * t).ln() / epsilon
    } else {
        x - (2.0 * (1.0 - t)).ln() / epsilon
    };
    y.clamp(0.0, 1.0)
}
