//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop once `‖∇f‖_∞` falls below this.
    pub grad_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 100,
            grad_tol: 1e-6,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

/// Minimizes `f`, which returns the value and writes the gradient.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut history = vec![fx];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        if g.iter().fold(0.0_f64, |m, v| m.max(v.abs())) < opts.grad_tol {
            converged = true;
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = mem.back().map_or(
            1.0 / g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0),
            |(s, y, _)| dot(s, y) / dot(y, y),
        );
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut dg = dot(&d, &g);
        if dg >= 0.0 {
            // not a descent direction; restart from steepest descent
            mem.clear();
            d = g.iter().map(|v| -v).collect();
            dg = dot(&d, &g);
        }

        let Some((step, f_new, g_new)) = line_search(&mut f, &x, fx, dg, &d, opts) else {
            break;
        };
        let x_new = axpy(&x, step, &d);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        let decrease = fx - f_new;
        x = x_new;
        g = g_new;
        fx = f_new;
        history.push(fx);
        iterations += 1;
        if decrease <= 1e-15 * fx.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    LbfgsResult {
        x,
        f: fx,
        iterations,
        history,
        converged,
    }
}

/// Strong-Wolfe bracketing and zoom. Returns the accepted step with its
/// value and gradient.
fn line_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    dg0: f64,
    d: &[f64],
    opts: &LbfgsOptions,
) -> Option<(f64, f64, Vec<f64>)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut eval = |a: f64| -> (f64, f64, Vec<f64>) {
        let mut g = vec![0.0; x.len()];
        let fa = f(&axpy(x, a, d), &mut g);
        let dga = dot(&g, d);
        (fa, dga, g)
    };
    let mut a_prev = 0.0;
    let mut f_prev = f0;
    let mut dg_prev = dg0;
    let mut a = 1.0;
    for i in 0..opts.max_line_search {
        let (fa, dga, g) = eval(a);
        if !fa.is_finite() {
            a = a_prev + (a - a_prev) / 2.0;
            continue;
        }
        if fa > f0 + opts.c1 * a * dg0 || (i > 0 && fa >= f_prev) {
            return zoom(
                &mut eval,
                f0,
                dg0,
                (a_prev, f_prev, dg_prev),
                (a, fa, dga),
                opts,
            );
        }
        if dga.abs() <= -opts.c2 * dg0 {
            return Some((a, fa, g));
        }
        if dga >= 0.0 {
            return zoom(
                &mut eval,
                f0,
                dg0,
                (a, fa, dga),
                (a_prev, f_prev, dg_prev),
                opts,
            );
        }
        a_prev = a;
        f_prev = fa;
        dg_prev = dga;
        a *= 2.0;
    }
    None
}

fn zoom<E>(
    eval: &mut E,
    f0: f64,
    dg0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    opts: &LbfgsOptions,
) -> Option<(f64, f64, Vec<f64>)>
where
    E: FnMut(f64) -> (f64, f64, Vec<f64>),
{
    for _ in 0..opts.max_line_search {
        // safeguarded quadratic interpolation from the low end
        let (a_lo, f_lo, dg_lo) = lo;
        let (a_hi, f_hi, _) = hi;
        let width = a_hi - a_lo;
        let denom = 2.0 * (f_hi - f_lo - dg_lo * width);
        let mut a = if denom > 0.0 {
            a_lo - dg_lo * width * width / denom
        } else {
            a_lo + width / 2.0
        };
        let (min, max) = if a_lo < a_hi {
            (a_lo, a_hi)
        } else {
            (a_hi, a_lo)
        };
        let margin = 0.1 * (max - min);
        if !(a > min + margin && a < max - margin) {
            a = a_lo + width / 2.0;
        }
        if (max - min) < 1e-16 {
            break;
        }
        let (fa, dga, g) = eval(a);
        if fa > f0 + opts.c1 * a * dg0 || fa >= f_lo {
            hi = (a, fa, dga);
        } else {
            if dga.abs() <= -opts.c2 * dg0 {
                return Some((a, fa, g));
            }
            if dga * (a_hi - a_lo) >= 0.0 {
                hi = lo;
            }
            lo = (a, fa, dga);
        }
    }
    // fall back to the best sufficient-decrease point found
    let (a_lo, f_lo, _) = lo;
    if a_lo > 0.0 && f_lo < f0 {
        let (fa, _, g) = eval(a_lo);
        return Some((a_lo, fa, g));
    }
    None
}
