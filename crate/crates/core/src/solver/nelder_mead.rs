//! Box-constrained Nelder–Mead on `[0, 1]^n`.
//!
//! Uses the dimension-adaptive coefficients of Gao and Han. Trial points are
//! projected onto the box, and the search restarts from the incumbent with a
//! fresh simplex until a restart stops improving.

#[derive(Debug, Clone, Copy)]
pub(crate) struct NmOptions {
    pub max_evals: usize,
    pub ftol: f64,
    pub xtol: f64,
    pub restarts: usize,
    pub initial_step: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            max_evals: 20_000,
            ftol: 1e-13,
            xtol: 1e-10,
            restarts: 4,
            initial_step: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

pub(crate) fn minimize<F>(f: &mut F, start: &[f64], opts: &NmOptions) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best_x = start.to_vec();
    project(&mut best_x);
    if best_x.is_empty() {
        let f0 = f(&best_x);
        return NmResult {
            x: best_x,
            f: f0,
            evals: 1,
        };
    }
    let mut best_f = f(&best_x);
    let mut evals = 1;
    let mut step = opts.initial_step;
    for _ in 0..=opts.restarts {
        if evals >= opts.max_evals {
            break;
        }
        let budget = opts.max_evals - evals;
        let run = single_run(f, &best_x, step, budget, opts);
        evals += run.evals;
        let improved = run.f < best_f - opts.ftol.max(1e-15 * best_f.abs());
        if run.f <= best_f {
            best_f = run.f;
            best_x = run.x;
        }
        if !improved {
            break;
        }
        step = (step * 0.5).max(1e-3);
    }
    NmResult {
        x: best_x,
        f: best_f,
        evals,
    }
}

/// Coordinate compass search from `start`. Slower than the simplex but it
/// does not stall on a face of the box, so it finishes each simplex run.
pub(crate) fn polish<F>(f: &mut F, start: &[f64], f_start: f64, max_evals: usize) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = start.to_vec();
    let mut fx = f_start;
    let mut evals = 0;
    let mut step = 0.05;
    let mut trial = x.clone();
    while step > 1e-12 && evals < max_evals {
        let mut moved = false;
        for j in 0..x.len() {
            for dir in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[j] = (x[j] + dir * step).clamp(0.0, 1.0);
                if trial[j] == x[j] {
                    continue;
                }
                let ft = f(&trial);
                evals += 1;
                if ft < fx {
                    x.copy_from_slice(&trial);
                    fx = ft;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    NmResult { x, f: fx, evals }
}

fn single_run<F>(f: &mut F, start: &[f64], step: f64, budget: usize, opts: &NmOptions) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let nf = n as f64;
    let alpha = 1.0;
    let beta = 1.0 + 2.0 / nf;
    let gamma = 0.75 - 1.0 / (2.0 * nf);
    let delta = 1.0 - 1.0 / nf;

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        // step inward when the start sits on the upper face
        v[i] = if v[i] + step <= 1.0 {
            v[i] + step
        } else {
            v[i] - step
        };
        project(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let point = |c: &[f64], w: &[f64], t: f64, out: &mut Vec<f64>| {
        for j in 0..c.len() {
            out[j] = c[j] + t * (w[j] - c[j]);
        }
        project(out);
    };

    while evals < budget {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (ib, iw, is) = (order[0], order[n], order[n - 1]);
        let spread = values[iw] - values[ib];
        let size = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[ib])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.ftol && size <= opts.xtol {
            break;
        }
        if size <= 1e-14 {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &k in order.iter().take(n) {
            for j in 0..n {
                centroid[j] += simplex[k][j] / nf;
            }
        }

        point(&centroid, &simplex[iw], -alpha, &mut trial);
        let fr = f(&trial);
        evals += 1;
        if fr < values[ib] {
            let reflected = trial.clone();
            point(&centroid, &simplex[iw], -alpha * beta, &mut trial);
            let fe = f(&trial);
            evals += 1;
            if fe < fr {
                simplex[iw].copy_from_slice(&trial);
                values[iw] = fe;
            } else {
                simplex[iw] = reflected;
                values[iw] = fr;
            }
            continue;
        }
        if fr < values[is] {
            simplex[iw].copy_from_slice(&trial);
            values[iw] = fr;
            continue;
        }
        let (t, threshold) = if fr < values[iw] {
            (-alpha * gamma, fr)
        } else {
            (gamma, values[iw])
        };
        point(&centroid, &simplex[iw], t, &mut trial);
        let fc = f(&trial);
        evals += 1;
        if fc <= threshold {
            simplex[iw].copy_from_slice(&trial);
            values[iw] = fc;
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[ib].clone();
        for k in 0..=n {
            if k == ib {
                continue;
            }
            for j in 0..n {
                simplex[k][j] = best[j] + delta * (simplex[k][j] - best[j]);
            }
            values[k] = f(&simplex[k]);
            evals += 1;
        }
    }

    let ib = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    NmResult {
        x: simplex[ib].clone(),
        f: values[ib],
        evals,
    }
}
