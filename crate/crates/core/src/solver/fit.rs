//! Least-squares fits of solved quantities against ε.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Two-parameter model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    /// `exp(β₁ ε) + β₂`
    ExpHalf,
    /// `β₁ ε + β₂`
    Affine,
    /// `β₂ ε^β₁`
    PowerLaw,
}

impl Feature {
    pub fn eval(&self, beta: [f64; 2], eps: f64) -> f64 {
        match self {
            Feature::ExpHalf => (beta[0] * eps).exp() + beta[1],
            Feature::Affine => beta[0] * eps + beta[1],
            Feature::PowerLaw => beta[1] * eps.powf(beta[0]),
        }
    }

    fn gradient(&self, beta: [f64; 2], eps: f64) -> [f64; 2] {
        match self {
            Feature::ExpHalf => [eps * (beta[0] * eps).exp(), 1.0],
            Feature::Affine => [eps, 1.0],
            Feature::PowerLaw => {
                let v = eps.powf(beta[0]);
                [beta[1] * v * eps.ln(), v]
            }
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Feature::ExpHalf => "exp-half",
            Feature::Affine => "affine",
            Feature::PowerLaw => "power-law",
        })
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp-half" | "exp" => Ok(Feature::ExpHalf),
            "affine" | "linear" => Ok(Feature::Affine),
            "power-law" | "power" => Ok(Feature::PowerLaw),
            other => Err(Error::InvalidParameter(format!(
                "unknown feature `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub feature: Feature,
    pub beta: [f64; 2],
    pub max_residual: f64,
    pub iterations: usize,
}

/// Ordinary least squares for `y = a t + b`.
fn line_fit(t: &[f64], y: &[f64]) -> Option<[f64; 2]> {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|v| (v - mt).powi(2)).sum();
    if stt <= 1e-300 {
        return None;
    }
    let sty: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let a = sty / stt;
    Some([a, my - a * mt])
}

fn initial_guess(samples: &[(f64, f64)], feature: Feature) -> Result<[f64; 2]> {
    let eps: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let singular = || Error::Solver("samples do not determine the fit".into());
    match feature {
        Feature::Affine => line_fit(&eps, &ys).ok_or_else(singular),
        Feature::PowerLaw => {
            if samples.iter().any(|&(e, y)| e <= 0.0 || y <= 0.0) {
                return Ok([1.0, 1.0]);
            }
            let lt: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
            let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            let [a, b] = line_fit(&lt, &ly).ok_or_else(singular)?;
            Ok([a, b.exp()])
        }
        Feature::ExpHalf => {
            // scan the rate; the offset is then the mean residual
            let mut best = ([0.0, 0.0], f64::INFINITY);
            for i in 0..=400 {
                let rate = -2.0 + 4.0 * i as f64 / 400.0;
                let shift = ys
                    .iter()
                    .zip(&eps)
                    .map(|(y, e)| y - (rate * e).exp())
                    .sum::<f64>()
                    / ys.len() as f64;
                let sse: f64 = ys
                    .iter()
                    .zip(&eps)
                    .map(|(y, e)| (y - (rate * e).exp() - shift).powi(2))
                    .sum();
                if sse < best.1 {
                    best = ([rate, shift], sse);
                }
            }
            Ok(best.0)
        }
    }
}

/// Levenberg–Marquardt fit of a two-parameter feature to `(ε, value)` pairs.
pub fn fit_closed_form(samples: &[(f64, f64)], feature: Feature) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::InvalidParameter(
            "at least three samples are needed".into(),
        ));
    }
    if samples
        .iter()
        .any(|(e, y)| !(e.is_finite() && y.is_finite()))
    {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    let sse = |beta: [f64; 2]| -> f64 {
        samples
            .iter()
            .map(|&(e, y)| (feature.eval(beta, e) - y).powi(2))
            .sum()
    };
    let mut beta = initial_guess(samples, feature)?;
    let mut cost = sse(beta);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for _ in 0..500 {
        iterations += 1;
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(e, y) in samples {
            let r = feature.eval(beta, e) - y;
            let [j1, j2] = feature.gradient(beta, e);
            a11 += j1 * j1;
            a12 += j1 * j2;
            a22 += j2 * j2;
            g1 += j1 * r;
            g2 += j2 * r;
        }
        if a11 * a22 - a12 * a12 <= 1e-14 * (a11 * a22).max(1e-300) {
            return Err(Error::Solver("singular Jacobian".into()));
        }
        let mut accepted = false;
        let mut step = [0.0; 2];
        for _ in 0..40 {
            let (b11, b22) = (a11 * (1.0 + lambda), a22 * (1.0 + lambda));
            let det = b11 * b22 - a12 * a12;
            step = [(-g1 * b22 + g2 * a12) / det, (-g2 * b11 + g1 * a12) / det];
            let trial = [beta[0] + step[0], beta[1] + step[1]];
            let c = sse(trial);
            if c.is_finite() && c <= cost {
                beta = trial;
                cost = c;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        let size = step[0].hypot(step[1]);
        if !accepted || size <= 1e-10 * (1.0 + beta[0].hypot(beta[1])) {
            break;
        }
    }
    let max_residual = samples
        .iter()
        .map(|&(e, y)| (feature.eval(beta, e) - y).abs())
        .fold(0.0, f64::max);
    Ok(FitResult {
        feature,
        beta,
        max_residual,
        iterations,
    })
}
