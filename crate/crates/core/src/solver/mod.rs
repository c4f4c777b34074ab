//! Numerical derivation of optimal piecewise mechanisms.
//!
//! An m-piece mechanism uses `m` density levels that do not depend on the
//! input, with max/min level ratio at most `e^ε`. For each input the output
//! domain is tiled by at most `m` pieces whose densities are drawn from those
//! levels. The worst case over inputs sits at the left endpoint of a
//! classical domain (mirror symmetry covers the right one) and at `π` on the
//! circle, so the min-max problem becomes a single-layout problem there.
//!
//! Feasibility is built into the parametrization: every point of the unit
//! box decodes to levels within the ratio bound and to widths that tile the
//! domain with unit mass. The decoded objective is minimized by multi-start
//! bounded Nelder–Mead.

mod fit;
mod nelder_mead;
mod verify;

use std::f64::consts::PI;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::{Piece, PiecewiseDensity, Transform};
use crate::domain::Interval;
use crate::error::{check_epsilon, Error, Result};
use crate::mechanisms::{ogpm_circular, ogpm_classical, ogpm_unbiased};
use crate::metric::ErrorMetric;

pub use fit::{fit_closed_form, Feature, FitResult};
pub use verify::{
    canonical_pieces, same_structure, verify_optimal_m, verify_optimal_m_with, VerifyFailure,
    VerifyReport,
};

use nelder_mead::{minimize, polish, NmOptions};

/// Where the error is minimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// The largest error over all inputs.
    WorstCase,
    /// The error at a single input.
    AtPoint(f64),
}

/// An m-piece min-error instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverProblem {
    pub domain: Interval,
    pub metric: ErrorMetric,
    pub pieces: usize,
    pub epsilon: f64,
    pub target: Target,
    pub unbiased: bool,
    pub output_domain: Option<Interval>,
}

impl SolverProblem {
    /// Worst-case problem with output domain equal to the input domain.
    pub fn new(domain: Interval, metric: ErrorMetric, pieces: usize, epsilon: f64) -> Self {
        SolverProblem {
            domain,
            metric,
            pieces,
            epsilon,
            target: Target::WorstCase,
            unbiased: false,
            output_domain: None,
        }
    }

    pub fn at_point(mut self, x: f64) -> Self {
        self.target = Target::AtPoint(x);
        self
    }

    pub fn with_output_domain(mut self, output: Interval) -> Self {
        self.output_domain = Some(output);
        self
    }

    /// Adds the constraint `E[M(x)] = x` on the enlarged `output` domain.
    pub fn unbiased(mut self, output: Interval) -> Self {
        self.unbiased = true;
        self.output_domain = Some(output);
        self
    }

    pub fn output(&self) -> Interval {
        self.output_domain.unwrap_or(self.domain)
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.pieces == 0 {
            return Err(Error::InvalidParameter(
                "at least one piece is required".into(),
            ));
        }
        if let Target::AtPoint(x) = self.target {
            self.domain.check(x)?;
        }
        let out = self.output();
        if self.domain.is_circular() {
            if self.output_domain.is_some_and(|o| o != self.domain) || self.unbiased {
                return Err(Error::Unsupported(
                    "circular problems use the circle as output domain".into(),
                ));
            }
            return Ok(());
        }
        if out.is_circular() || !out.covers(&self.domain) {
            return Err(Error::InvalidParameter(format!(
                "output domain {out} must contain the input domain {}",
                self.domain
            )));
        }
        if self.unbiased && !(out.lo() < self.domain.lo() && out.hi() > self.domain.hi()) {
            return Err(Error::InvalidParameter(
                "unbiasedness needs an output domain strictly larger than the input".into(),
            ));
        }
        if self.target == Target::WorstCase {
            let left = self.domain.lo() - out.lo();
            let right = out.hi() - self.domain.hi();
            if (left - right).abs() > 1e-9 * out.len() {
                return Err(Error::Unsupported(
                    "worst-case reduction needs an output domain symmetric about the input".into(),
                ));
            }
        }
        Ok(())
    }

    /// The input at which the single layout is optimized.
    fn design_point(&self) -> f64 {
        if self.domain.is_circular() {
            return PI;
        }
        match self.target {
            Target::WorstCase => self.domain.lo(),
            Target::AtPoint(x) => x,
        }
    }
}

/// Search settings for the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Latin-hypercube starts, not counting the warm start.
    pub starts: usize,
    pub seed: u64,
    /// Also start from the known three-piece optimum.
    pub warm_start: bool,
    pub max_evals: usize,
    /// Objective agreement between the two best starts that counts as
    /// converged.
    pub agreement: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            starts: 32,
            seed: 0x5eed,
            warm_start: true,
            max_evals: 20_000,
            agreement: 1e-6,
        }
    }
}

/// A solved mechanism, reported as its output density at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSolution {
    pub pdf: PiecewiseDensity,
    /// The input-independent density levels, largest first.
    pub levels: Vec<f64>,
    pub x: f64,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SolverSolution {
    pub fn high_density(&self) -> f64 {
        self.levels.first().copied().unwrap_or(0.0)
    }

    pub fn low_density(&self) -> f64 {
        self.levels.last().copied().unwrap_or(0.0)
    }

    /// Writes `piece_index,density,left,right`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["piece_index", "density", "left", "right"])?;
        for (i, p) in self.pdf.pieces().iter().enumerate() {
            w.write_record([
                i.to_string(),
                p.density.to_string(),
                p.left.to_string(),
                p.right.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decoded layout: per-piece levels and widths, left to right.
#[derive(Debug, Clone)]
struct Layout {
    levels: Vec<f64>,
    widths: Vec<f64>,
}

/// Levels `z e^{ε t_j}`, with `z` interpolated between the two extremes that
/// put `1 / len` at the top or the bottom level.
fn decode_levels(t: &[f64], u: f64, epsilon: f64, len: f64) -> Vec<f64> {
    let tmin = t.iter().copied().fold(f64::INFINITY, f64::min);
    let tmax = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_lo = -len.ln() - epsilon * tmax;
    let ln_hi = -len.ln() - epsilon * tmin;
    let ln_z = (1.0 - u) * ln_lo + u * ln_hi;
    t.iter().map(|&tj| (ln_z + epsilon * tj).exp()).collect()
}

/// Widths proportional to `rho`, then moved toward the top or bottom level
/// vertex until the mass is exactly one. `None` when no feasible mix exists.
fn normalize_widths(levels: &[f64], rho: &[f64], len: f64) -> Option<Vec<f64>> {
    let m = levels.len();
    let total: f64 = rho.iter().sum();
    let mut v: Vec<f64> = if total > 1e-300 {
        rho.iter().map(|r| len * r / total).collect()
    } else {
        vec![len / m as f64; m]
    };
    let mass: f64 = levels.iter().zip(&v).map(|(p, w)| p * w).sum();
    let (imax, pmax) = levels
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let (imin, pmin) = levels
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let (target, lambda) = if mass < 1.0 {
        (imax, (1.0 - mass) / (pmax * len - mass))
    } else if mass > 1.0 {
        (imin, (mass - 1.0) / (mass - pmin * len))
    } else {
        return Some(v);
    };
    if !(lambda.is_finite() && (0.0..=1.0 + 1e-12).contains(&lambda)) {
        return None;
    }
    let lambda = lambda.min(1.0);
    for w in v.iter_mut() {
        *w *= 1.0 - lambda;
    }
    v[target] += lambda * len;
    Some(v)
}

fn layout_pieces(layout: &Layout, out: &Interval) -> Vec<Piece> {
    let mut left = out.lo();
    let n = layout.levels.len();
    let mut pieces = Vec::with_capacity(n);
    for (i, (&p, &w)) in layout.levels.iter().zip(&layout.widths).enumerate() {
        let right = if i + 1 == n {
            out.hi()
        } else {
            (left + w).min(out.hi())
        };
        pieces.push(Piece::new(p, left, right));
        left = right;
    }
    pieces
}

fn error_and_mean(pieces: &[Piece], metric: ErrorMetric, x: f64) -> (f64, f64) {
    let mut err = 0.0;
    let mut mean = 0.0;
    for p in pieces {
        err += p.density * metric.integral(p.left, p.right, x);
        mean += 0.5 * p.density * (p.right * p.right - p.left * p.left);
    }
    (err, mean)
}

/// Evaluation context shared by the full solve and the interval-only solve.
struct Design {
    metric: ErrorMetric,
    /// Classical frame in which the layout is evaluated.
    frame: Interval,
    x: f64,
    unbiased: bool,
}

impl Design {
    fn for_problem(problem: &SolverProblem) -> Result<Design> {
        let out = problem.output();
        let frame = if out.is_circular() {
            Interval::classical(out.lo(), out.hi())?
        } else {
            out
        };
        Ok(Design {
            metric: problem.metric,
            frame,
            x: problem.design_point(),
            unbiased: problem.unbiased,
        })
    }

    fn value(&self, layout: &Layout, penalty: f64) -> f64 {
        let pieces = layout_pieces(layout, &self.frame);
        let (err, mean) = error_and_mean(&pieces, self.metric, self.x);
        if self.unbiased {
            err + penalty * (mean - self.x).powi(2)
        } else {
            err
        }
    }
}

/// Full parametrization: `[t_1..t_m, u, rho_1..rho_m]`.
struct FullCodec {
    m: usize,
    epsilon: f64,
    len: f64,
    sort_descending: bool,
}

impl FullCodec {
    fn dim(&self) -> usize {
        2 * self.m + 1
    }

    fn decode(&self, theta: &[f64]) -> Option<Layout> {
        let m = self.m;
        if m == 1 {
            return Some(Layout {
                levels: vec![1.0 / self.len],
                widths: vec![self.len],
            });
        }
        let levels = decode_levels(&theta[..m], theta[m], self.epsilon, self.len);
        let widths = normalize_widths(&levels, &theta[m + 1..], self.len)?;
        let mut layout = Layout { levels, widths };
        if self.sort_descending {
            let mut idx: Vec<usize> = (0..m).collect();
            idx.sort_by(|&a, &b| layout.levels[b].total_cmp(&layout.levels[a]));
            layout = Layout {
                levels: idx.iter().map(|&i| layout.levels[i]).collect(),
                widths: idx.iter().map(|&i| layout.widths[i]).collect(),
            };
        }
        Some(layout)
    }

    /// Parameters reproducing the given layout, padded with unused pieces.
    fn encode(&self, levels: &[f64], widths: &[f64]) -> Option<Vec<f64>> {
        let m = self.m;
        if levels.len() > m || levels.is_empty() {
            return None;
        }
        let pmin = levels.iter().copied().fold(f64::INFINITY, f64::min);
        let mut t: Vec<f64> = levels
            .iter()
            .map(|p| ((p / pmin).ln() / self.epsilon).clamp(0.0, 1.0))
            .collect();
        let mut rho: Vec<f64> = widths.iter().map(|w| w / self.len).collect();
        t.resize(m, 0.0);
        rho.resize(m, 0.0);
        let tmax = t.iter().copied().fold(0.0, f64::max);
        let ln_lo = -self.len.ln() - self.epsilon * tmax;
        let ln_hi = -self.len.ln();
        let u = if ln_hi > ln_lo {
            ((pmin.ln() - ln_lo) / (ln_hi - ln_lo)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let mut theta = t;
        theta.push(u);
        theta.extend(rho);
        Some(theta)
    }
}

#[allow(clippy::needless_range_loop)]
fn latin_hypercube(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; count];
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(rng);
        for (k, s) in strata.into_iter().enumerate() {
            points[k][d] = (s as f64 + rng.gen::<f64>()) / count as f64;
        }
    }
    points
}

const PENALTIES: [f64; 4] = [1e2, 1e4, 1e6, 1e8];

struct Run {
    theta: Vec<f64>,
    value: f64,
}

/// Runs Nelder–Mead from every start, with penalty continuation when the
/// design is unbiased. Results are sorted best first.
fn multi_start<F>(
    design: &Design,
    decode: F,
    starts: Vec<Vec<f64>>,
    max_evals: usize,
    evals: &mut usize,
) -> Vec<Run>
where
    F: Fn(&[f64]) -> Option<Layout>,
{
    let penalties: &[f64] = if design.unbiased { &PENALTIES } else { &[0.0] };
    let nm = NmOptions {
        max_evals,
        ..NmOptions::default()
    };
    let mut runs = Vec::with_capacity(starts.len());
    for start in starts {
        let mut theta = start;
        let mut value = f64::INFINITY;
        for &mu in penalties {
            let mut f = |th: &[f64]| match decode(th) {
                Some(layout) => design.value(&layout, mu),
                None => f64::INFINITY,
            };
            let r = minimize(&mut f, &theta, &nm);
            *evals += r.evals;
            let r = polish(&mut f, &r.x, r.f, max_evals);
            *evals += r.evals;
            theta = r.x;
            value = r.f;
        }
        if value.is_finite() {
            runs.push(Run { theta, value });
        }
    }
    runs.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then_with(|| {
            a.theta
                .iter()
                .zip(&b.theta)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    runs
}

fn agree(runs: &[Run], tol: f64) -> bool {
    runs.len() >= 2 && (runs[1].value - runs[0].value).abs() <= tol
}

/// Builds the reported density at `x`, rotating circular layouts from `π`.
fn finish(
    problem: &SolverProblem,
    design: &Design,
    layout: &Layout,
    x: f64,
) -> Result<(PiecewiseDensity, f64)> {
    let pieces = layout_pieces(layout, &design.frame);
    let out = problem.output();
    let pdf = PiecewiseDensity::new(pieces, out)?;
    let pdf = if out.is_circular() {
        pdf.rotate(x - PI)?
    } else {
        pdf
    };
    let objective = pdf.expected_error(problem.metric, x)?;
    Ok((pdf, objective))
}

/// Closed-form three-piece layout for warm starts, in the problem's frame.
fn warm_layout(problem: &SolverProblem) -> Option<(Vec<f64>, Vec<f64>)> {
    let eps = problem.epsilon;
    let out = problem.output();
    let pdf = if problem.domain.is_circular() {
        ogpm_circular(eps, PI).ok()?
    } else {
        let to_unit = Transform::between(&problem.domain, &Interval::unit()).ok()?;
        let x = to_unit.apply(problem.design_point()).clamp(0.0, 1.0);
        let base = if problem.unbiased {
            ogpm_unbiased(eps, x).ok()?
        } else if problem.output_domain.is_none() {
            ogpm_classical(eps, x).ok()?
        } else {
            return None;
        };
        let mapped = base.apply_transform(to_unit.inverse()).ok()?;
        let d = mapped.domain();
        if (d.lo() - out.lo()).abs() > 1e-9 * out.len()
            || (d.hi() - out.hi()).abs() > 1e-9 * out.len()
        {
            return None;
        }
        mapped
    };
    let levels = pdf.pieces().iter().map(|p| p.density).collect();
    let widths = pdf.pieces().iter().map(|p| p.width()).collect();
    Some((levels, widths))
}

/// Solves for the optimal levels and layout with default options.
pub fn solve_probabilities(problem: &SolverProblem) -> Result<SolverSolution> {
    solve_probabilities_with(problem, &SolverOptions::default())
}

pub fn solve_probabilities_with(
    problem: &SolverProblem,
    options: &SolverOptions,
) -> Result<SolverSolution> {
    problem.validate()?;
    let design = Design::for_problem(problem)?;
    let codec = FullCodec {
        m: problem.pieces,
        epsilon: problem.epsilon,
        len: design.frame.len(),
        // at an endpoint, densest-first is always the best arrangement
        sort_descending: !problem.domain.is_circular()
            && problem.target == Target::WorstCase
            && !problem.unbiased,
    };
    let x = problem.design_point();

    if problem.pieces == 1 {
        let layout = codec.decode(&[]).expect("single piece decodes");
        let (pdf, objective) = finish(problem, &design, &layout, x)?;
        return Ok(SolverSolution {
            pdf,
            levels: layout.levels,
            x,
            objective,
            converged: true,
            iterations: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut starts = latin_hypercube(&mut rng, options.starts, codec.dim());
    if options.warm_start {
        if let Some((levels, widths)) = warm_layout(problem) {
            if let Some(theta) = codec.encode(&levels, &widths) {
                starts.push(theta);
            }
        }
    }
    let mut evals = 0;
    let runs = multi_start(
        &design,
        |th| codec.decode(th),
        starts,
        options.max_evals,
        &mut evals,
    );
    let best = runs
        .first()
        .ok_or_else(|| Error::Solver("no start produced a feasible design".into()))?;
    let layout = codec.decode(&best.theta).expect("best run decodes");
    let (pdf, objective) = finish(problem, &design, &layout, x)?;
    let mut levels = layout.levels.clone();
    levels.sort_by(|a, b| b.total_cmp(a));
    let mut converged = agree(&runs, options.agreement);
    if problem.unbiased {
        converged &= (pdf.mean() - x).abs() <= 1e-4 * problem.output().len();
    }
    Ok(SolverSolution {
        pdf,
        levels,
        x,
        objective,
        converged,
        iterations: evals,
    })
}

/// Level sequences that rise to a single peak and then fall, with no two
/// neighbours equal, of every length from 1 to `max_len`.
fn unimodal_sequences(k: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for peak in 0..k {
        let below: Vec<usize> = (0..peak).collect();
        let subsets = 1usize << below.len();
        for left in 0..subsets {
            for right in 0..subsets {
                let len = 1 + left.count_ones() as usize + right.count_ones() as usize;
                if len > max_len {
                    continue;
                }
                let mut seq: Vec<usize> = below
                    .iter()
                    .copied()
                    .filter(|&i| left >> i & 1 == 1)
                    .collect();
                seq.push(peak);
                seq.extend(below.iter().rev().copied().filter(|&i| right >> i & 1 == 1));
                out.push(seq);
            }
        }
    }
    out
}

/// Distinct levels in ascending order, collapsing values within a relative
/// `1e-9`.
fn distinct_levels(probs: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = probs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(b.abs()));
    v
}

/// Optimizes only the layout at `x`, with density levels fixed.
pub fn solve_intervals(
    problem: &SolverProblem,
    fixed_probs: &[f64],
    x: f64,
) -> Result<SolverSolution> {
    solve_intervals_with(problem, fixed_probs, x, &SolverOptions::default())
}

pub fn solve_intervals_with(
    problem: &SolverProblem,
    fixed_probs: &[f64],
    x: f64,
    options: &SolverOptions,
) -> Result<SolverSolution> {
    problem.validate()?;
    let x = problem.domain.check(x)?;
    if fixed_probs.is_empty() || fixed_probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidParameter(
            "levels must be non-negative".into(),
        ));
    }
    let levels = distinct_levels(fixed_probs);
    let at = SolverProblem {
        target: Target::AtPoint(x),
        ..problem.clone()
    };
    let design = Design::for_problem(&at)?;
    let len = design.frame.len();
    let ratio = levels[levels.len() - 1] / levels[0].max(f64::MIN_POSITIVE);
    if ratio > problem.epsilon.exp() * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "level ratio {ratio} exceeds e^ε"
        )));
    }

    let starts_per_seq = (options.starts / 8).max(3);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut evals = 0;
    let mut best: Option<(Layout, Vec<Run>)> = None;
    for seq in unimodal_sequences(levels.len(), problem.pieces) {
        let seq_levels: Vec<f64> = seq.iter().map(|&i| levels[i]).collect();
        let lo = seq_levels.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = seq_levels.iter().copied().fold(0.0, f64::max);
        if lo * len > 1.0 + 1e-12 || hi * len < 1.0 - 1e-12 {
            continue;
        }
        let decode = |rho: &[f64]| {
            normalize_widths(&seq_levels, rho, len).map(|widths| Layout {
                levels: seq_levels.clone(),
                widths,
            })
        };
        let mut starts = latin_hypercube(&mut rng, starts_per_seq, seq.len());
        starts.push(vec![0.5; seq.len()]);
        let runs = multi_start(&design, decode, starts, options.max_evals, &mut evals);
        let Some(top) = runs.first() else { continue };
        let better = best
            .as_ref()
            .is_none_or(|(_, r)| top.value < r[0].value - 1e-14);
        if better {
            let layout = decode(&top.theta).expect("best run decodes");
            best = Some((layout, runs));
        }
    }
    let (layout, runs) =
        best.ok_or_else(|| Error::Solver("no level sequence admits unit mass".into()))?;
    let (pdf, objective) = finish(problem, &design, &layout, x)?;
    let mut converged = agree(&runs, options.agreement);
    if problem.unbiased {
        converged &= (pdf.mean() - x).abs() <= 1e-4 * problem.output().len();
    }
    let mut out_levels = levels;
    out_levels.reverse();
    Ok(SolverSolution {
        pdf,
        levels: out_levels,
        x,
        objective,
        converged,
        iterations: evals,
    })
}
