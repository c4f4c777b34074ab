use std::fmt;
use std::str::FromStr;

use crate::domain::{arc_distance, Interval};
use crate::error::{Error, Result};

/// `L(y, x) = |y - x|^p`, measured along the shorter arc on circular domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorMetric {
    AbsoluteP(u32),
}

impl ErrorMetric {
    pub const L1: ErrorMetric = ErrorMetric::AbsoluteP(1);
    pub const L2: ErrorMetric = ErrorMetric::AbsoluteP(2);

    pub fn new(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter(
                "metric exponent must be >= 1".into(),
            ));
        }
        Ok(ErrorMetric::AbsoluteP(p))
    }

    pub fn power(&self) -> u32 {
        match *self {
            ErrorMetric::AbsoluteP(p) => p,
        }
    }

    /// Evaluates the metric after checking both points against `domain`.
    pub fn eval(&self, domain: &Interval, y: f64, x: f64) -> Result<f64> {
        let y = domain.check(y)?;
        let x = domain.check(x)?;
        let d = if domain.is_circular() {
            arc_distance(y, x)
        } else {
            (y - x).abs()
        };
        Ok(self.of_distance(d))
    }

    pub(crate) fn of_distance(&self, d: f64) -> f64 {
        d.powi(self.power() as i32)
    }

    /// Antiderivative of `|t|^p`, zero at the origin.
    pub(crate) fn antiderivative(&self, t: f64) -> f64 {
        let q = self.power() as i32 + 1;
        t.signum() * t.abs().powi(q) / q as f64
    }

    /// `∫_l^r |y - c|^p dy`.
    pub(crate) fn integral(&self, l: f64, r: f64, c: f64) -> f64 {
        self.antiderivative(r - c) - self.antiderivative(l - c)
    }
}

/// Free-function form of [`ErrorMetric::eval`].
pub fn metric_eval(metric: ErrorMetric, domain: &Interval, y: f64, x: f64) -> Result<f64> {
    metric.eval(domain, y, x)
}

impl fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.power())
    }
}

impl FromStr for ErrorMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let digits = lower
            .strip_prefix('l')
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric `{s}`")))?;
        let p = digits
            .parse::<u32>()
            .map_err(|_| Error::InvalidParameter(format!("unknown metric `{s}`")))?;
        ErrorMetric::new(p)
    }
}
