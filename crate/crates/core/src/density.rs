//! Piecewise-constant probability densities.

use std::f64::consts::{PI, TAU};

use crate::domain::{wrap_angle, Interval};
use crate::error::{Error, Result};
use crate::metric::ErrorMetric;

/// Mass tolerance for normalized densities.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Default relative density tolerance used by [`PiecewiseDensity::merge_pieces`].
pub const MERGE_TOL: f64 = 1e-7;

/// A constant density over `[left, right)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub density: f64,
    pub left: f64,
    pub right: f64,
}

impl Piece {
    pub fn new(density: f64, left: f64, right: f64) -> Self {
        Piece {
            density,
            left,
            right,
        }
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn mass(&self) -> f64 {
        self.density * self.width()
    }
}

/// A normalized density whose pieces tile its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDensity {
    pieces: Vec<Piece>,
    domain: Interval,
}

impl PiecewiseDensity {
    /// Validates tiling, non-negativity and normalization. Zero-width pieces
    /// are dropped and boundaries within rounding of each other are snapped.
    pub fn new(pieces: Vec<Piece>, domain: Interval) -> Result<Self> {
        let pieces = canonical_tiling(pieces, &domain)?;
        let mass: f64 = pieces.iter().map(Piece::mass).sum();
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDensity(format!("total mass {mass} is not 1")));
        }
        Ok(PiecewiseDensity { pieces, domain })
    }

    /// Like [`new`](Self::new) but rescales the densities to unit mass first.
    pub fn normalized(pieces: Vec<Piece>, domain: Interval) -> Result<Self> {
        let pieces = canonical_tiling(pieces, &domain)?;
        let mass: f64 = pieces.iter().map(Piece::mass).sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidDensity(format!(
                "cannot normalize mass {mass}"
            )));
        }
        let pieces = pieces
            .into_iter()
            .map(|p| Piece::new(p.density / mass, p.left, p.right))
            .collect();
        Ok(PiecewiseDensity { pieces, domain })
    }

    pub fn uniform(domain: Interval) -> Self {
        PiecewiseDensity {
            pieces: vec![Piece::new(1.0 / domain.len(), domain.lo(), domain.hi())],
            domain,
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn total_mass(&self) -> f64 {
        self.pieces.iter().map(Piece::mass).sum()
    }

    /// Density at `y`; the right domain endpoint belongs to the last piece.
    pub fn density_at(&self, y: f64) -> f64 {
        if y < self.domain.lo() || y > self.domain.hi() {
            return 0.0;
        }
        let idx = self.pieces.partition_point(|p| p.right <= y);
        self.pieces
            .get(idx)
            .or_else(|| self.pieces.last())
            .map_or(0.0, |p| p.density)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let mut acc = 0.0;
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
        acc.min(1.0)
    }

    /// Inverse-CDF sample for a uniform variate `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for p in &self.pieces {
            let m = p.mass();
            if m > 0.0 && acc + m > u {
                let y = p.left + (u - acc) / p.density;
                return y.clamp(p.left, p.right);
            }
            acc += m;
        }
        // u within rounding of 1: return the right end of the last live piece
        self.pieces
            .iter()
            .rev()
            .find(|p| p.mass() > 0.0)
            .map_or(self.domain.hi(), |p| p.right)
    }

    /// Exact `E[L(Y, x)]` by integrating the metric piece by piece.
    pub fn expected_error(&self, metric: ErrorMetric, x: f64) -> Result<f64> {
        let x = self.domain.check(x)?;
        if !self.domain.is_circular() {
            return Ok(self
                .pieces
                .iter()
                .map(|p| p.density * metric.integral(p.left, p.right, x))
                .sum());
        }
        let antipode = if x + PI < TAU { x + PI } else { x - PI };
        let mut total = 0.0;
        for p in &self.pieces {
            let parts: [(f64, f64); 2] = if p.left < antipode && antipode < p.right {
                [(p.left, antipode), (antipode, p.right)]
            } else {
                [(p.left, p.right), (p.right, p.right)]
            };
            for (l, r) in parts {
                if r <= l {
                    continue;
                }
                // the shorter arc is measured to x, or to x shifted by a full turn
                let mid = 0.5 * (l + r);
                let centre = if mid - x > PI {
                    x + TAU
                } else if x - mid > PI {
                    x - TAU
                } else {
                    x
                };
                total += p.density * metric.integral(l, r, centre);
            }
        }
        Ok(total)
    }

    pub fn mean(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| 0.5 * p.density * (p.right * p.right - p.left * p.left))
            .sum()
    }

    /// Largest over smallest positive density.
    pub fn ldp_ratio(&self) -> f64 {
        let max = self.pieces.iter().map(|p| p.density).fold(0.0, f64::max);
        let min = self
            .pieces
            .iter()
            .map(|p| p.density)
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn satisfies_ldp(&self, epsilon: f64) -> bool {
        self.ldp_ratio() <= epsilon.exp() * (1.0 + 1e-9)
    }

    /// `sup_y self(y) / other(y)` over the common domain, computed exactly on
    /// the merged breakpoints. Infinite when `other` vanishes where `self`
    /// does not.
    pub fn max_ratio_against(&self, other: &PiecewiseDensity) -> f64 {
        let mut cuts: Vec<f64> = self
            .pieces
            .iter()
            .chain(other.pieces.iter())
            .flat_map(|p| [p.left, p.right])
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut worst: f64 = 0.0;
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let a = self.density_at(mid);
            let b = other.density_at(mid);
            let r = if a == 0.0 {
                0.0
            } else if b == 0.0 {
                f64::INFINITY
            } else {
                a / b
            };
            worst = worst.max(r);
        }
        worst
    }

    /// Rotates a circular density by `delta` radians.
    pub fn rotate(&self, delta: f64) -> Result<Self> {
        if !self.domain.is_circular() {
            return Err(Error::Unsupported(
                "rotation needs a circular domain".into(),
            ));
        }
        let delta = wrap_angle(delta);
        let mut out = Vec::with_capacity(self.pieces.len() + 1);
        for p in &self.pieces {
            let (l, r) = (p.left + delta, p.right + delta);
            if r <= TAU {
                out.push(Piece::new(p.density, l, r));
            } else if l >= TAU {
                out.push(Piece::new(p.density, l - TAU, r - TAU));
            } else {
                out.push(Piece::new(p.density, l, TAU));
                out.push(Piece::new(p.density, 0.0, r - TAU));
            }
        }
        out.sort_by(|a, b| a.left.total_cmp(&b.left));
        PiecewiseDensity::new(out, self.domain)
    }

    /// Merges adjacent pieces whose densities agree within [`MERGE_TOL`].
    pub fn merge_pieces(&self) -> Self {
        self.merge_pieces_with(MERGE_TOL)
    }

    /// Merges adjacent pieces whose densities agree within a relative
    /// tolerance. The merged density is mass-weighted so mass is preserved.
    pub fn merge_pieces_with(&self, rel_tol: f64) -> Self {
        let mut out: Vec<Piece> = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            if let Some(last) = out.last_mut() {
                let scale = last.density.abs().max(p.density.abs());
                if (last.density - p.density).abs() <= rel_tol * scale {
                    let mass = last.mass() + p.mass();
                    last.right = p.right;
                    last.density = mass / last.width();
                    continue;
                }
            }
            out.push(*p);
        }
        PiecewiseDensity {
            pieces: out,
            domain: self.domain,
        }
    }

    /// Affine image under `t`. Classical domains only.
    pub fn apply_transform(&self, t: Transform) -> Result<Self> {
        if self.domain.is_circular() {
            return Err(Error::Unsupported(
                "affine transforms are defined on classical domains".into(),
            ));
        }
        let domain = t.map_interval(&self.domain)?;
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.density / t.scale, t.apply(p.left), t.apply(p.right)))
            .collect();
        Ok(PiecewiseDensity {
            pieces: snap_ends(pieces, &domain),
            domain,
        })
    }

    pub(crate) fn from_parts_unchecked(pieces: Vec<Piece>, domain: Interval) -> Self {
        PiecewiseDensity { pieces, domain }
    }
}

fn snap_ends(mut pieces: Vec<Piece>, domain: &Interval) -> Vec<Piece> {
    if let Some(first) = pieces.first_mut() {
        first.left = domain.lo();
    }
    if let Some(last) = pieces.last_mut() {
        last.right = domain.hi();
    }
    pieces
}

fn canonical_tiling(pieces: Vec<Piece>, domain: &Interval) -> Result<Vec<Piece>> {
    let tol = 1e-9 * domain.len();
    let mut expected = domain.lo();
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if !(p.density.is_finite() && p.left.is_finite() && p.right.is_finite()) {
            return Err(Error::InvalidDensity(format!("non-finite piece {p:?}")));
        }
        if p.density < 0.0 {
            return Err(Error::InvalidDensity(format!(
                "negative density {}",
                p.density
            )));
        }
        if p.left > p.right {
            return Err(Error::InvalidDensity(format!(
                "piece [{}, {}) is reversed",
                p.left, p.right
            )));
        }
        if (p.left - expected).abs() > tol {
            return Err(Error::InvalidDensity(format!(
                "gap or overlap at {} (expected {expected})",
                p.left
            )));
        }
        let left = expected;
        if p.right > left {
            out.push(Piece::new(p.density, left, p.right));
            expected = p.right;
        }
    }
    if out.is_empty() || (expected - domain.hi()).abs() > tol {
        return Err(Error::InvalidDensity(format!(
            "pieces end at {expected}, domain ends at {}",
            domain.hi()
        )));
    }
    Ok(snap_ends(out, domain))
}

/// The affine map `x -> scale * x + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub scale: f64,
    pub shift: f64,
}

impl Transform {
    pub fn new(scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0 && shift.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "transform needs a positive finite scale, got {scale}"
            )));
        }
        Ok(Transform { scale, shift })
    }

    /// The increasing affine map taking `from` onto `to`.
    pub fn between(from: &Interval, to: &Interval) -> Result<Self> {
        let scale = to.len() / from.len();
        Transform::new(scale, to.lo() - scale * from.lo())
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }

    pub fn inverse(&self) -> Transform {
        Transform {
            scale: 1.0 / self.scale,
            shift: -self.shift / self.scale,
        }
    }

    pub fn map_interval(&self, domain: &Interval) -> Result<Interval> {
        Interval::classical(self.apply(domain.lo()), self.apply(domain.hi()))
    }
}

/// Free-function form of [`PiecewiseDensity::apply_transform`].
pub fn apply_transform(pdf: &PiecewiseDensity, t: Transform) -> Result<PiecewiseDensity> {
    pdf.apply_transform(t)
}

/// Free-function form of [`PiecewiseDensity::merge_pieces`].
pub fn merge_pieces(pdf: &PiecewiseDensity) -> PiecewiseDensity {
    pdf.merge_pieces()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_piece() -> PiecewiseDensity {
        PiecewiseDensity::new(
            vec![Piece::new(1.5, 0.0, 0.5), Piece::new(0.5, 0.5, 1.0)],
            Interval::unit(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_tilings() {
        let unit = Interval::unit();
        assert!(PiecewiseDensity::new(vec![Piece::new(1.0, 0.0, 0.9)], unit).is_err());
        assert!(PiecewiseDensity::new(vec![Piece::new(2.0, 0.0, 1.0)], unit).is_err());
        assert!(PiecewiseDensity::new(
            vec![Piece::new(1.0, 0.0, 0.5), Piece::new(1.0, 0.6, 1.0)],
            unit
        )
        .is_err());
        assert!(PiecewiseDensity::new(
            vec![Piece::new(-1.0, 0.0, 0.5), Piece::new(3.0, 0.5, 1.0)],
            unit
        )
        .is_err());
    }

    #[test]
    fn drops_zero_width_pieces() {
        let pdf = PiecewiseDensity::new(
            vec![
                Piece::new(1.0, 0.0, 0.0),
                Piece::new(1.0, 0.0, 1.0),
                Piece::new(7.0, 1.0, 1.0),
            ],
            Interval::unit(),
        )
        .unwrap();
        assert_eq!(pdf.pieces().len(), 1);
    }

    #[test]
    fn sampling_inverts_the_cdf() {
        let uni = PiecewiseDensity::uniform(Interval::unit());
        assert_eq!(uni.sample(0.25), 0.25);
        let pdf = two_piece();
        assert_eq!(pdf.sample(0.75), 0.5);
        assert_eq!(pdf.sample(0.0), 0.0);
        assert!((pdf.cdf(0.5) - 0.75).abs() < 1e-15);
        assert!(pdf.sample(1.0 - 1e-17) <= 1.0);
    }

    #[test]
    fn expected_error_of_uniform() {
        let uni = PiecewiseDensity::uniform(Interval::unit());
        assert!((uni.expected_error(ErrorMetric::L1, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let circ = PiecewiseDensity::uniform(Interval::circle());
        let e = circ.expected_error(ErrorMetric::L1, PI).unwrap();
        assert!((e - 0.5 * PI).abs() < 1e-12);
        let e = circ.expected_error(ErrorMetric::L1, 0.3).unwrap();
        assert!((e - 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn transform_scales_density() {
        let uni = PiecewiseDensity::uniform(Interval::unit());
        let t = uni
            .apply_transform(Transform::new(2.0, 0.0).unwrap())
            .unwrap();
        assert_eq!(t.pieces(), &[Piece::new(0.5, 0.0, 2.0)]);
        let circ = PiecewiseDensity::uniform(Interval::circle());
        assert!(matches!(
            circ.apply_transform(Transform::new(1.0, 0.0).unwrap()),
            Err(Error::Unsupported(_))
        ));
        assert!(Transform::new(0.0, 1.0).is_err());
    }

    #[test]
    fn transform_round_trip() {
        let pdf = two_piece();
        let t = Transform::new(3.0, -2.0).unwrap();
        let back = pdf
            .apply_transform(t)
            .unwrap()
            .apply_transform(t.inverse())
            .unwrap();
        for (a, b) in pdf.pieces().iter().zip(back.pieces()) {
            assert!((a.density - b.density).abs() < 1e-12);
            assert!((a.left - b.left).abs() < 1e-12);
            assert!((a.right - b.right).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_example() {
        let pdf = PiecewiseDensity::new(
            vec![
                Piece::new(1.6, 0.0, 0.2),
                Piece::new(1.6, 0.2, 0.4),
                Piece::new(0.6, 0.4, 1.0),
            ],
            Interval::unit(),
        )
        .unwrap();
        let merged = pdf.merge_pieces();
        assert_eq!(merged.pieces().len(), 2);
        assert!((merged.pieces()[0].density - 1.6).abs() < 1e-15);
        assert_eq!(merged.pieces()[0].right, 0.4);
        assert_eq!(merged.merge_pieces(), merged);
    }

    #[test]
    fn rotation_wraps() {
        let pdf = PiecewiseDensity::new(
            vec![
                Piece::new(0.1, 0.0, PI),
                Piece::new(1.0 / TAU * 2.0 - 0.1, PI, TAU),
            ],
            Interval::circle(),
        )
        .unwrap();
        let r = pdf.rotate(0.5 * PI).unwrap();
        assert!((r.density_at(0.1) - pdf.density_at(TAU - 0.5 * PI + 0.1)).abs() < 1e-15);
        assert!((r.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_against_detects_zero_support() {
        let a = two_piece();
        let b = PiecewiseDensity::new(
            vec![Piece::new(2.0, 0.0, 0.5), Piece::new(0.0, 0.5, 1.0)],
            Interval::unit(),
        )
        .unwrap();
        assert!(a.max_ratio_against(&b).is_infinite());
        assert!((b.max_ratio_against(&a) - 2.0 / 1.5).abs() < 1e-15);
    }
}
