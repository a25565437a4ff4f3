//! Limited-memory BFGS with a backtracking (Armijo) line search.
//!
//! Every accepted step satisfies sufficient decrease, so the objective trace
//! is monotone non-increasing from the starting point.

use std::collections::VecDeque;

use super::MinimizerSettings;

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Infinity norm of the gradient at `x`.
    pub gradient_norm: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start and after every accepted step.
    pub trace: Vec<f64>,
}

fn inf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` from `x0`. `f(x, grad)` returns the value and writes the
/// gradient into `grad`.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, settings: &MinimizerSettings) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; dim];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    let mut trace = vec![fx];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let memory = settings.memory_depth.max(1);
    let mut iterations = 0;

    let mut x_new = vec![0.0; dim];
    let mut g_new = vec![0.0; dim];

    loop {
        if dim == 0 || inf_norm(&g) <= settings.gradient_tolerance {
            return Minimum {
                x,
                value: fx,
                gradient_norm: inf_norm(&g),
                evaluations,
                iterations,
                converged: true,
                trace,
            };
        }
        if evaluations >= settings.max_evaluations {
            break;
        }

        let mut d = two_loop(&g, &history);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) || !slope.is_finite() {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        // Without curvature information the first step is normalized.
        let mut t = if history.is_empty() {
            (1.0 / d.iter().map(|v| v * v).sum::<f64>().sqrt()).min(1.0)
        } else {
            1.0
        };

        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..dim {
                x_new[i] = x[i] + t * d[i];
            }
            f_new = f(&x_new, &mut g_new);
            evaluations += 1;
            if f_new.is_finite() && f_new <= fx + ARMIJO_C1 * t * slope {
                accepted = true;
                break;
            }
            if evaluations >= settings.max_evaluations {
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No representable decrease along the search direction.
            if !history.is_empty() {
                history.clear();
                continue;
            }
            break;
        }

        let s: Vec<f64> = (0..dim).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..dim).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        iterations += 1;
        trace.push(fx);
    }

    let gradient_norm = inf_norm(&g);
    Minimum {
        x,
        value: fx,
        gradient_norm,
        evaluations,
        iterations,
        converged: gradient_norm <= settings.gradient_tolerance,
        trace,
    }
}

/// Quasi-Newton direction `-H g` with `H_0 = (s'y / y'y) I`.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let scale = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= scale);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
