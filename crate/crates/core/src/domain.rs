//! Bounded input and output domains.

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::{Error, Result};

/// Whether distances on a domain wrap around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Classical,
    Circular,
}

/// A half-open bounded range `[lo, hi)`.
///
/// The right endpoint is accepted as a member so that inputs such as `x = 1`
/// on `[0, 1)` are valid. Circular intervals are always the canonical
/// `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
    topology: Topology,
}

impl Interval {
    pub fn classical(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "interval bounds must be finite with lo < hi, got [{lo}, {hi})"
            )));
        }
        Ok(Interval {
            lo,
            hi,
            topology: Topology::Classical,
        })
    }

    /// The unit interval `[0, 1)`.
    pub fn unit() -> Self {
        Interval {
            lo: 0.0,
            hi: 1.0,
            topology: Topology::Classical,
        }
    }

    /// The circle `[0, 2π)`.
    pub fn circle() -> Self {
        Interval {
            lo: 0.0,
            hi: TAU,
            topology: Topology::Circular,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_circular(&self) -> bool {
        self.topology == Topology::Circular
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lo && value <= self.hi
    }

    /// Validates membership, wrapping circular values into `[0, 2π)`.
    pub fn check(&self, value: f64) -> Result<f64> {
        if !value.is_finite() || !self.contains(value) {
            return Err(Error::OutOfDomain {
                value,
                domain: *self,
            });
        }
        Ok(if self.is_circular() {
            wrap_angle(value)
        } else {
            value
        })
    }

    /// True when `other` lies inside `self`, up to a relative slack of 1e-12.
    pub fn covers(&self, other: &Interval) -> bool {
        let slack = 1e-12 * self.len().max(other.len());
        other.lo >= self.lo - slack && other.hi <= self.hi + slack
    }

    /// Maps `value` affinely from `self` onto `target`.
    pub fn map_to(&self, target: &Interval, value: f64) -> f64 {
        target.lo + (value - self.lo) * target.len() / self.len()
    }

    /// `n` evenly spaced points. Classical grids include both endpoints,
    /// circular grids stop short of `2π`.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match (self.topology, n) {
            (_, 0) => Vec::new(),
            (Topology::Classical, 1) => vec![self.midpoint()],
            (Topology::Classical, _) => {
                let step = self.len() / (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        if i + 1 == n {
                            self.hi
                        } else {
                            self.lo + step * i as f64
                        }
                    })
                    .collect()
            }
            (Topology::Circular, _) => {
                let step = self.len() / n as f64;
                (0..n).map(|i| self.lo + step * i as f64).collect()
            }
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.topology {
            Topology::Classical => write!(f, "[{}, {})", self.lo, self.hi),
            Topology::Circular => write!(f, "[0, 2π) circular"),
        }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Length of the shorter arc between two angles.
pub fn arc_distance(y: f64, x: f64) -> f64 {
    let d = (y - x).rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}
