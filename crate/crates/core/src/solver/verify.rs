//! Monte Carlo check that adding a piece does not change the optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    solve_intervals_with, solve_probabilities_with, SolverOptions, SolverProblem, SolverSolution,
};
use crate::density::{Piece, PiecewiseDensity};
use crate::domain::Interval;
use crate::error::{Error, Result};
use crate::metric::ErrorMetric;

/// Pieces narrower than this fraction of the domain are ignored.
const SLIVER: f64 = 1e-4;
/// Relative density and absolute boundary tolerance for structure checks.
const STRUCTURE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyFailure {
    pub epsilon: f64,
    pub x: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub m: usize,
    pub metric: ErrorMetric,
    pub samples: usize,
    /// Samples where both solves converged and were compared.
    pub compared: usize,
    pub all_equal: bool,
    pub failures: Vec<VerifyFailure>,
    /// `(ε, x)` pairs skipped because a solve did not converge.
    pub unconverged: Vec<(f64, f64)>,
}

impl VerifyReport {
    pub fn summary(&self) -> String {
        format!(
            "{} m={} vs m={} metric={} samples={} compared={} mismatches={} unconverged={}",
            if self.all_equal { "PASS" } else { "FAIL" },
            self.m,
            self.m + 1,
            self.metric,
            self.samples,
            self.compared,
            self.failures.len(),
            self.unconverged.len()
        )
    }
}

/// Drops slivers and merges neighbours whose densities agree within
/// `STRUCTURE_TOL`, leaving the shape that two solutions are compared on.
pub fn canonical_pieces(pdf: &PiecewiseDensity) -> Vec<Piece> {
    let min_width = SLIVER * pdf.domain().len();
    let mut out: Vec<Piece> = Vec::new();
    for p in pdf.pieces().iter().filter(|p| p.width() >= min_width) {
        if let Some(last) = out.last_mut() {
            let scale = last.density.max(p.density);
            if (last.density - p.density).abs() <= STRUCTURE_TOL * scale {
                let mass = last.mass() + p.mass();
                last.right = p.right;
                last.density = mass / last.width();
                continue;
            }
            // close the gap a dropped sliver leaves behind
            last.right = p.left;
        }
        out.push(*p);
    }
    out
}

/// Compares canonical shapes. `None` when equal, else the first difference.
pub fn same_structure(a: &PiecewiseDensity, b: &PiecewiseDensity) -> Option<String> {
    let (ca, cb) = (canonical_pieces(a), canonical_pieces(b));
    if ca.len() != cb.len() {
        return Some(format!("{} pieces vs {} pieces", ca.len(), cb.len()));
    }
    let len = a.domain().len();
    for (i, (p, q)) in ca.iter().zip(&cb).enumerate() {
        let scale = p.density.max(q.density);
        if (p.density - q.density).abs() > STRUCTURE_TOL * scale {
            return Some(format!("piece {i}: density {} vs {}", p.density, q.density));
        }
        if (p.left - q.left).abs() > STRUCTURE_TOL * len
            || (p.right - q.right).abs() > STRUCTURE_TOL * len
        {
            return Some(format!(
                "piece {i}: [{}, {}) vs [{}, {})",
                p.left, p.right, q.left, q.right
            ));
        }
    }
    None
}

/// Samples `(ε, x)` pairs and checks that the optimal m- and (m+1)-piece
/// mechanisms coincide after merging redundant pieces.
pub fn verify_optimal_m(
    domain: Interval,
    metric: ErrorMetric,
    m: usize,
    n_samples: usize,
    epsilon_range: (f64, f64),
    seed: u64,
) -> Result<VerifyReport> {
    verify_optimal_m_with(
        domain,
        metric,
        m,
        n_samples,
        epsilon_range,
        seed,
        &SolverOptions::default(),
    )
}

pub fn verify_optimal_m_with(
    domain: Interval,
    metric: ErrorMetric,
    m: usize,
    n_samples: usize,
    epsilon_range: (f64, f64),
    seed: u64,
    options: &SolverOptions,
) -> Result<VerifyReport> {
    if n_samples == 0 || m == 0 {
        return Err(Error::InvalidParameter(
            "need at least one sample and one piece".into(),
        ));
    }
    let (lo, hi) = epsilon_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bad epsilon range ({lo}, {hi})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut unconverged = Vec::new();
    let mut compared = 0;
    for _ in 0..n_samples {
        let epsilon = rng.gen_range(lo..hi);
        let x = if domain.is_circular() {
            rng.gen_range(0.0..domain.hi())
        } else {
            rng.gen_range(domain.lo()..domain.hi())
        };
        let solve = |pieces: usize| -> Result<SolverSolution> {
            let problem = SolverProblem::new(domain, metric, pieces, epsilon);
            let design = solve_probabilities_with(&problem, options)?;
            let at_x = solve_intervals_with(&problem, &design.levels, x, options)?;
            Ok(SolverSolution {
                converged: design.converged && at_x.converged,
                ..at_x
            })
        };
        let (a, b) = (solve(m)?, solve(m + 1)?);
        if !(a.converged && b.converged) {
            unconverged.push((epsilon, x));
            continue;
        }
        compared += 1;
        if let Some(reason) = same_structure(&a.pdf, &b.pdf) {
            failures.push(VerifyFailure { epsilon, x, reason });
        }
    }
    Ok(VerifyReport {
        m,
        metric,
        samples: n_samples,
        compared,
        all_equal: failures.is_empty() && compared > 0,
        failures,
        unconverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_ignores_slivers() {
        let head = 1.5 * 0.3 + 1.0 * 0.00001 + 1.5 * (0.4 - 0.30001);
        let pdf = PiecewiseDensity::new(
            vec![
                Piece::new(1.5, 0.0, 0.3),
                Piece::new(1.0, 0.3, 0.30001),
                Piece::new(1.5, 0.30001, 0.4),
                Piece::new((1.0 - head) / 0.6, 0.4, 1.0),
            ],
            Interval::unit(),
        )
        .unwrap();
        let c = canonical_pieces(&pdf);
        assert_eq!(c.len(), 2);
        assert!((c[0].right - 0.4).abs() < 1e-12);
        let a = PiecewiseDensity::new(
            vec![Piece::new(1.6, 0.0, 0.2), Piece::new(0.85, 0.2, 1.0)],
            Interval::unit(),
        )
        .unwrap();
        let b = PiecewiseDensity::new(
            vec![
                Piece::new(1.6, 0.0, 0.1),
                Piece::new(1.6, 0.1, 0.2),
                Piece::new(0.85, 0.2, 1.0),
            ],
            Interval::unit(),
        )
        .unwrap();
        assert_eq!(same_structure(&a, &b), None);
        let c = PiecewiseDensity::new(
            vec![
                Piece::new(1.5, 0.0, 0.25),
                Piece::new(0.8333333333333334, 0.25, 1.0),
            ],
            Interval::unit(),
        )
        .unwrap();
        assert!(same_structure(&a, &c).is_some());
    }

    #[test]
    fn one_piece_is_not_enough() {
        let r =
            verify_optimal_m(Interval::unit(), ErrorMetric::L1, 1, 10, (0.05, 10.0), 1).unwrap();
        assert!(!r.all_equal);
        assert!(r.summary().starts_with("FAIL"));
    }

    #[test]
    fn three_pieces_suffice_small_run() {
        let r = verify_optimal_m(Interval::unit(), ErrorMetric::L1, 3, 5, (0.05, 10.0), 2).unwrap();
        assert!(r.all_equal, "{:?}", r.failures);
    }
}
