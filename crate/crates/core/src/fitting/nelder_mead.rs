//! Downhill simplex minimization.

use super::{FitError, OptimizerConfig};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from a simplex of `x0` plus `config.simplex_step`
/// along each axis.
///
/// Stops once every vertex lies within `x_tol * max(1, |x_best|)` of the best
/// vertex (infinity norm) and every vertex value within
/// `f_tol * max(1, |f_best|)` of the best value, or after `max_iter`
/// iterations. Non-finite objective values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], config: &OptimizerConfig) -> Result<Minimum, FitError>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return Err(FitError::EmptyStart);
    }
    let mut n_evals = 0usize;
    let mut eval = |x: &[f64]| {
        n_evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let f0 = eval(x0);
    if !f0.is_finite() {
        return Err(FitError::NonFiniteStart);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for j in 0..n {
        let mut x = x0.to_vec();
        x[j] += config.simplex_step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];

    while iterations < config.max_iter {
        // Stable sort keeps earlier vertices first on ties, which makes the
        // whole run deterministic.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

        let (best_x, best_f) = (&simplex[0].0, simplex[0].1);
        let x_scale = best_x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best_x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_spread = simplex[1..].iter().map(|(_, v)| (v - best_f).abs()).fold(0.0, f64::max);
        if x_spread <= config.x_tol * x_scale && f_spread <= config.f_tol * best_f.abs().max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let worst_f = simplex[n].1;
        let second_worst_f = simplex[n - 1].1;

        let along = |coef: f64, from: &[f64], out: &mut Vec<f64>| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(from) {
                *o = c + coef * (c - w);
            }
        };

        along(REFLECT, &simplex[n].0, &mut trial);
        let reflected = trial.clone();
        let fr = eval(&reflected);

        if fr < best_f {
            along(EXPAND * REFLECT, &simplex[n].0, &mut trial);
            let fe = eval(&trial);
            simplex[n] = if fe < fr { (trial.clone(), fe) } else { (reflected, fr) };
            continue;
        }
        if fr < second_worst_f {
            simplex[n] = (reflected, fr);
            continue;
        }

        if fr < worst_f {
            along(CONTRACT * REFLECT, &simplex[n].0, &mut trial);
            let fc = eval(&trial);
            if fc <= fr {
                simplex[n] = (trial.clone(), fc);
                continue;
            }
        } else {
            along(-CONTRACT, &simplex[n].0, &mut trial);
            let fcc = eval(&trial);
            if fcc < worst_f {
                simplex[n] = (trial.clone(), fcc);
                continue;
            }
        }

        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (v, a) in vertex.0.iter_mut().zip(&anchor) {
                *v = a + SHRINK * (*v - a);
            }
            vertex.1 = eval(&vertex.0);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok(Minimum { x, f, n_evals, iterations, converged })
}
