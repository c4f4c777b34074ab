//! Browser bindings for the demo page in `www/`.

use wasm_bindgen::prelude::*;

use ogpm::analytics::whole_domain_error;
use ogpm::polar::{budget_curve as polar_curve, optimal_budget_split, total_error};
use ogpm::{ErrorMetric, MechanismOutput, MechanismSpec};

fn js(e: ogpm::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Output density at `x` as flat `[left, right, density, ...]` triples.
/// Endpoint atoms of truncated mechanisms follow as `[lo, lo, mass, hi, hi, mass]`.
#[wasm_bindgen]
pub fn density(mechanism: &str, epsilon: f64, x: f64) -> Result<Vec<f64>, JsError> {
    let spec = MechanismSpec::by_name(mechanism).map_err(js)?;
    let out = spec.pdf(epsilon, x).map_err(js)?;
    let mut flat = Vec::new();
    match &out {
        MechanismOutput::Density(p) => {
            for piece in p.pieces() {
                flat.extend([piece.left, piece.right, piece.density]);
            }
        }
        MechanismOutput::Truncated(t) => {
            for piece in t.pieces() {
                flat.extend([piece.left, piece.right, piece.density]);
            }
            let d = t.domain();
            flat.extend([
                d.lo(),
                d.lo(),
                t.lower_atom(),
                d.hi(),
                d.hi(),
                t.upper_atom(),
            ]);
        }
    }
    Ok(flat)
}

/// Expected error over the input domain as flat `[x, err, ...]` pairs.
#[wasm_bindgen]
pub fn error_curve(
    mechanism: &str,
    epsilon: f64,
    metric: &str,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let spec = MechanismSpec::by_name(mechanism).map_err(js)?;
    let metric: ErrorMetric = metric.parse().map_err(js)?;
    let curve = whole_domain_error(&spec, epsilon, metric, points).map_err(js)?;
    Ok(curve.points.into_iter().flat_map(|(x, e)| [x, e]).collect())
}

/// `[ε₁, ε₂, total error]` of the best split followed by the curve as
/// `[ε₁, error, ...]` pairs.
#[wasm_bindgen]
pub fn budget_split(total: f64, d: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let split = optimal_budget_split(total, d).map_err(js)?;
    let best = total_error(&split, d).map_err(js)?;
    let mut flat = vec![split.epsilon1, split.epsilon2, best];
    for (e1, err) in polar_curve(total, d, points).map_err(js)? {
        flat.extend([e1, err]);
    }
    Ok(flat)
}

/// Names the page can offer.
#[wasm_bindgen]
pub fn mechanisms() -> Vec<String> {
    MechanismSpec::catalog()
        .into_iter()
        .filter(|s| !s.is_analytic_only())
        .map(|s| s.name().to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_triples() {
        let flat = density("ogpm", 1.0, 0.0).unwrap();
        assert_eq!(flat.len() % 3, 0);
        assert!((flat[2] - 0.5f64.exp()).abs() < 1e-12);
        let t = density("t-sw", 1.0, 0.0).unwrap();
        assert_eq!(t.len() % 3, 0);
    }

    #[test]
    fn curves_and_split() {
        assert_eq!(error_curve("ogpm", 1.0, "l1", 11).unwrap().len(), 22);
        let s = budget_split(3.0, 1.0, 5).unwrap();
        assert_eq!(s.len(), 3 + 10);
        assert!((s[0] + s[1] - 3.0).abs() < 1e-9);
        assert!(mechanisms().contains(&"ogpm-circular".to_string()));
    }
}
