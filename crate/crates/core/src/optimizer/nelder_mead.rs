//! Nelder-Mead simplex search on the unit box `[0, 1]^d`.
//!
//! Every trial point is passed through a caller-supplied projection before it
//! is evaluated, so the search never leaves the feasible box (and any extra
//! ordering constraints the projection enforces). Projection can flatten the
//! simplex against a face; the search then restarts from the best vertex with
//! a fresh simplex until a restart stops improving.

use std::cell::Cell;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub max_evals: usize,
    /// Converged when the vertex values span less than this...
    pub f_tol: f64,
    /// ...and every vertex is within this (max-norm) of the best one.
    pub x_tol: f64,
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.1,
            max_evals: 4000,
            f_tol: 1e-14,
            x_tol: 1e-11,
            max_restarts: 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0`. `project` maps any point into the search region.
pub fn minimize<F, P>(f: F, project: P, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
    P: Fn(&mut [f64]),
{
    let mut x = x0.to_vec();
    project(&mut x);
    let mut fx = f(&x);
    let mut evals = 1;
    let mut step = opts.initial_step;

    for _ in 0..=opts.max_restarts {
        if evals >= opts.max_evals {
            break;
        }
        let (xb, fb, used) = run_simplex(&f, &project, &x, step, opts, opts.max_evals - evals);
        evals += used;
        let improved = fb < fx - opts.f_tol;
        if fb <= fx {
            x = xb;
            fx = fb;
        }
        if !improved {
            break;
        }
        // Later restarts only need to escape a flattened simplex.
        step = (step * 0.5).max(1e-4);
    }
    NelderMeadResult { x, f: fx, evals }
}

fn run_simplex<F, P>(
    f: &F,
    project: &P,
    start: &[f64],
    step: f64,
    opts: &NelderMeadOptions,
    budget: usize,
) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64,
    P: Fn(&mut [f64]),
{
    let d = start.len();
    let evals = Cell::new(0usize);
    let eval = |p: &[f64]| {
        evals.set(evals.get() + 1);
        f(p)
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(start.to_vec());
    for i in 0..d {
        let mut v = start.to_vec();
        v[i] = if v[i] + step <= 1.0 {
            v[i] + step
        } else {
            v[i] - step
        };
        project(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut order: Vec<usize> = (0..=d).collect();
    let mut centroid = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut trial2 = vec![0.0; d];

    loop {
        // Stable sort keeps the ordering (and hence the run) deterministic.
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[d], order[d - 1]);

        let spread = values[worst] - values[best];
        let diameter = simplex
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (spread <= opts.f_tol && diameter <= opts.x_tol)
            || evals.get() >= budget
            || diameter == 0.0
        {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..d] {
            for (c, v) in centroid.iter_mut().zip(&simplex[i]) {
                *c += v / d as f64;
            }
        }
        let along = |t: f64, out: &mut Vec<f64>| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(&simplex[worst]) {
                *o = c + t * (c - w);
            }
            project(out);
        };

        along(REFLECT, &mut trial);
        let f_r = eval(&trial);
        if f_r < values[best] {
            along(EXPAND, &mut trial2);
            let f_e = eval(&trial2);
            if f_e < f_r {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = f_e;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = f_r;
            }
            continue;
        }
        if f_r < values[second] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = f_r;
            continue;
        }
        let (t, threshold) = if f_r < values[worst] {
            (CONTRACT * REFLECT, f_r)
        } else {
            (-CONTRACT, values[worst])
        };
        along(t, &mut trial2);
        let f_c = eval(&trial2);
        if f_c < threshold {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = f_c;
            continue;
        }
        let anchor = simplex[best].clone();
        for &i in &order[1..] {
            for (v, a) in simplex[i].iter_mut().zip(&anchor) {
                *v = a + SHRINK * (*v - a);
            }
            project(&mut simplex[i]);
            values[i] = eval(&simplex[i]);
        }
    }

    let best = (0..=d)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    (simplex[best].clone(), values[best], evals.get())
}

pub fn clamp_unit(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = if v.is_finite() {
            v.clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
}
